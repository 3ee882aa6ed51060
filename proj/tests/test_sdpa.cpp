#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>

#include "homsos/sdp.hpp"
#include "homsos/sos_program.hpp"
#include "oracles.hpp"

using namespace homsos;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "homsos_test_sdpa";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

SdpProblem scalar(double rhs) {
    SdpProblem p;
    p.blocks = {1};
    p.equalities.push_back({{{0, 0, 0, 1.0}}, {}, rhs});
    return p;
}

// Canonical content of one row: summed coefficients keyed by position.
using RowKey = std::tuple<int, int, int, int>;  // kind (0 block, 1 free), block/index, row, col
std::map<RowKey, double> canon(const Equality& e) {
    std::map<RowKey, double> out;
    for (const auto& b : e.entries) out[{0, b.block, b.row, b.col}] += b.value;
    for (const auto& f : e.free) out[{1, f.index, 0, 0}] += f.value;
    for (auto it = out.begin(); it != out.end();) it = it->second == 0.0 ? out.erase(it) : std::next(it);
    return out;
}

}  // namespace

TEST_CASE("1x1 export") {
    const fs::path p = scratch("one.dat-s");
    export_sdpa(scalar(1.0), p);
    CHECK(slurp(p) == "1\n1\n1\n1.0\n1 1 1 1 1.0\n");
    CHECK_THROWS_WITH_AS(export_sdpa(SdpProblem{}, scratch("none.dat-s")), "nothing to export", std::invalid_argument);
}

TEST_CASE("free scalars are split into a diagonal pair block") {
    SdpProblem q;
    q.blocks = {2};
    q.nfree = 1;
    q.equalities.push_back({{{0, 1, 0, 0.5}}, {{0, 2.0}}, 3.0});
    const fs::path p = scratch("split.dat-s");
    export_sdpa(q, p);
    const std::string text = slurp(p);
    CHECK(text.find("* homsos-free-split 1\n") == 0);
    CHECK(text.find("\n2 -2\n") != std::string::npos);
    CHECK(text.find("1 2 1 1 2.0\n1 2 2 2 -2.0\n") != std::string::npos);
    const SdpProblem back = import_sdpa(p);
    CHECK(back.blocks == q.blocks);
    CHECK(back.nfree == 1);
    CHECK(canon(back.equalities[0]) == canon(q.equalities[0]));
    CHECK(back.equalities[0].rhs == 3.0);
}

TEST_CASE("round trip over compiled programs") {
    struct Case {
        const char* file;
        int d, s;
        Mode mode;
    };
    for (const Case c : {Case{"torus.txt", 2, 2, Mode::Polynomial}, Case{"curves.txt", 3, 3, Mode::Semialgebraic},
                         Case{"ovals.txt", 3, 4, Mode::Polynomial}, Case{"motzkin.txt", 2, 2, Mode::Polynomial}}) {
        const std::string file = c.file;
        CAPTURE(file);
        const SdpProblem a = compile_to_sdp(build_program(parse_problem(oracle::read_problem(c.file)), c.d, c.s, c.mode));
        const fs::path p = scratch(file + ".dat-s");
        export_sdpa(a, p);
        const SdpProblem b = import_sdpa(p);
        CHECK(b.blocks == a.blocks);
        CHECK(b.nfree == a.nfree);
        CHECK(b.total_psd_dim() == a.total_psd_dim());
        REQUIRE(b.equalities.size() == a.equalities.size());
        for (std::size_t k = 0; k < a.equalities.size(); ++k) {
            CHECK(b.equalities[k].rhs == a.equalities[k].rhs);
            CHECK(canon(b.equalities[k]) == canon(a.equalities[k]));
        }
    }
}

TEST_CASE("solution written in SDPA output style imports") {
    // The shape an external solver prints, with its own spacing and extra keys.
    const fs::path sol = scratch("external.out");
    spit(sol,
         "SDPA start at ...\n"
         "phase.value  = pdOPT\n"
         "   Iteration = 12\n"
         "objValPrimal = +0.0000000000000000e+00\n"
         "xVec = \n{+1.000000000000000e+00}\n"
         "xMat = \n{\n{ {+0.000000000000000e+00 } }\n}\n"
         "yMat = \n{\n{ {+1.000000000000000e+00 } }\n}\n");
    const SdpSolution s = import_solution(sol, scalar(1.0));
    CHECK(s.status == SdpStatus::Feasible);
    CHECK(s.primal_residual <= 1e-8);
    CHECK(s.gram[0](0, 0) == 1.0);

    // Infeasible side: a pUNBD phase is trusted only with a valid ray.
    spit(sol, "phase.value = pUNBD\nxVec = {-1.0}\nyMat = {{{0.0}}}\n");
    const SdpSolution bad = import_solution(sol, scalar(-1.0));
    CHECK(bad.status == SdpStatus::Infeasible);
    spit(sol, "phase.value = pUNBD\nxVec = {1.0}\nyMat = {{{0.0}}}\n");
    CHECK(import_solution(sol, scalar(-1.0)).status == SdpStatus::Unknown);

    // A reported success that does not satisfy the data is not believed.
    spit(sol, "phase.value = pdOPT\nxVec = {1.0}\nyMat = {{{2.0}}}\n");
    CHECK(import_solution(sol, scalar(1.0)).status == SdpStatus::Unknown);
}

TEST_CASE("embedded solutions survive export and import") {
    for (double rhs : {1.0, -1.0}) {
        const SdpProblem p = scalar(rhs);
        const SdpSolution s = solve(p);
        const fs::path out = scratch("embedded.out");
        export_sdpa_solution(p, s, out);
        CHECK(import_solution(out, p).status == s.status);
    }
    const SdpProblem t = compile_to_sdp(build_program(parse_problem(oracle::read_problem("torus.txt")), 2, 2, Mode::Polynomial));
    const SdpSolution s = solve(t);
    REQUIRE(s.status == SdpStatus::Feasible);
    const fs::path out = scratch("torus.out");
    export_sdpa_solution(t, s, out);
    const SdpSolution back = import_solution(out, t);
    CHECK(back.status == SdpStatus::Feasible);
    CHECK(back.primal_residual <= 1e-8);
}

TEST_CASE("malformed files") {
    const fs::path p = scratch("bad.dat-s");
    spit(p, "1\n1\n1\n1.0\n1 1 1");
    CHECK_THROWS_WITH(import_sdpa(p), doctest::Contains("at byte"));
    spit(p, "1\n1\n1\n1.0\n1 1 1 1 x\n");
    CHECK_THROWS_WITH(import_sdpa(p), doctest::Contains("parse error"));
    spit(p, "1\n1\n1\n1.0\n1 1 3 1 1.0\n");
    CHECK_THROWS_WITH(import_sdpa(p), doctest::Contains("out of range"));
    CHECK_THROWS(import_sdpa(scratch("missing.dat-s")));

    const fs::path sol = scratch("bad.out");
    spit(sol, "phase.value = pdOPT\nxVec = {1.0, 2.0}\nyMat = {{{1.0}}}\n");
    CHECK_THROWS_WITH(import_solution(sol, scalar(1.0)), doctest::Contains("structural mismatch"));
    spit(sol, "phase.value = pdOPT\nxVec = {1.0}\nyMat = {{{1.0, 0.0}}}\n");
    CHECK_THROWS_WITH(import_solution(sol, scalar(1.0)), doctest::Contains("structural mismatch"));
    spit(sol, "phase.value = pdOPT\nxVec = {1.0}\nyMat = {{{1.0}}");
    CHECK_THROWS_WITH(import_solution(sol, scalar(1.0)), doctest::Contains("at byte"));
}

TEST_CASE("infeasibility certificates are independent of row scaling") {
    // x^2 - 1 is not a sum of squares.
    SdpProblem p;
    p.blocks = {2};
    p.equalities.push_back({{{0, 0, 0, 1.0}}, {}, -1.0});
    p.equalities.push_back({{{0, 1, 0, 1.0}}, {}, 0.0});
    p.equalities.push_back({{{0, 1, 1, 1.0}}, {}, 1.0});
    const SdpSolution s = solve(p);
    REQUIRE(s.status == SdpStatus::Infeasible);
    CHECK(check_infeasibility_certificate(p, s.y, 1e-6).valid);

    SdpProblem scaled = p;
    for (auto& e : scaled.equalities) {
        e.rhs *= 1e3;
        for (auto& b : e.entries) b.value *= 1e3;
    }
    const SdpSolution t = solve(scaled);
    CHECK(t.status == SdpStatus::Infeasible);
    CHECK(check_infeasibility_certificate(scaled, t.y, 1e-6).valid);
    // The original ray certifies the scaled system after undoing the scale.
    CHECK(check_infeasibility_certificate(scaled, s.y / 1e3, 1e-6).valid);
}
