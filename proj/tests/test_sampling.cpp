#include <doctest.h>

#include <cmath>
#include <numbers>

#include "homsos/sampling.hpp"
#include "oracles.hpp"

using namespace homsos;

namespace {

ProblemInstance problem(const std::string& name) { return parse_problem(oracle::read_problem(name)); }

Clause clause(const std::string& text, const VarTable& t) { return parse_bool_expr(text, t).to_dnf().clauses.at(0); }

Interpolant constant(const ProblemInstance& inst, int c) {
    Interpolant h;
    h.table = inst.table;
    h.shared = inst.shared;
    h.value.h1 = Polynomial(c);
    return h;
}

}  // namespace

TEST_CASE("acceptance rate of a disk") {
    const VarTable t{{"x", "y"}};
    const std::vector<VarId> vars{0, 1};
    SampleBox box;
    box.fallback = {-2.0, 2.0};
    const ClauseSamples s = sample_clause(clause("1 - x^2 - y^2 >= 0", t), vars, 2, 20000, box, 7);
    CHECK(s.points.size() == 20000);
    CHECK_FALSE(s.boundary_fallback);
    CHECK(s.acceptance == doctest::Approx(std::numbers::pi / 16.0).epsilon(0.05));
    for (const auto& p : s.points) CHECK(p[0] * p[0] + p[1] * p[1] <= 1.0);
}

TEST_CASE("trivial clauses") {
    const VarTable t{{"x"}};
    const std::vector<VarId> vars{0};
    const ClauseSamples all = sample_clause(clause("1 >= 0", t), vars, 1, 100, {}, 1);
    CHECK(all.acceptance == 1.0);
    CHECK_THROWS_WITH_AS(sample_clause(clause("-1 >= 0", t), vars, 1, 100, {}, 1), "no samples found", SampleError);
    CHECK_THROWS_WITH_AS(sample_clause(clause("x >= 20", t), vars, 1, 100, {}, 1), "no samples found", SampleError);
    CHECK_THROWS_WITH_AS(sample_clause(clause("x^2 + 1 <= 0", t), vars, 1, 100, {}, 1), "no samples found",
                         SampleError);
    CHECK_THROWS_AS(sample_clause(clause("x >= 0", t), vars, 1, 0, {}, 1), std::invalid_argument);
}

TEST_CASE("clause box") {
    const ProblemInstance torus = problem("torus.txt");
    const SampleBox b = clause_box(torus.psi.clauses[0], {});
    const VarTable& t = torus.table;
    CHECK(b.get(*t.find("R")) == Interval{4.0, 6.0});
    CHECK(b.get(*t.find("r")) == Interval{0.5, 1.0});
    CHECK(b.get(*t.find("x")) == Interval{-10.0, 10.0});

    const VarTable u{{"x"}};
    SampleBox narrow;
    narrow.fallback = {-1.0, 1.0};
    const SampleBox c = clause_box(clause("2*x - 1 >= 0 & 3 - x >= 0", u), narrow);
    CHECK(c.get(0) == Interval{0.5, 1.0});
}

TEST_CASE("private coordinates are sampled but not reported") {
    const ProblemInstance torus = problem("torus.txt");
    std::vector<VarId> vars = torus.shared;
    vars.insert(vars.end(), torus.psi_private.begin(), torus.psi_private.end());
    const ClauseSamples s = sample_clause(torus.psi.clauses[0], vars, torus.table.size(), 500, {}, 3);
    const VarId R = *torus.table.find("R");
    for (const auto& p : s.points) {
        CHECK(torus.psi.clauses[0].contains(p));
        CHECK(p[R] >= 4.0);
        CHECK(p[R] <= 6.0);
    }

    Interpolant neg = parse_interpolant(oracle::read_problem("torus_hp.txt"), torus);
    neg.value.h1 = -neg.value.h1;
    VerifyOptions o;
    o.samples = 200;
    const SampleReport r = verify(neg, torus, o);
    REQUIRE_FALSE(r.violations.empty());
    for (const auto& v : r.violations) CHECK(v.point.size() == 3);
}

TEST_CASE("h ignores private coordinates") {
    const ProblemInstance torus = problem("torus.txt");
    const Interpolant hp = parse_interpolant(oracle::read_problem("torus_hp.txt"), torus);
    std::vector<VarId> vars = torus.shared;
    vars.insert(vars.end(), torus.psi_private.begin(), torus.psi_private.end());
    const ClauseSamples s = sample_clause(torus.psi.clauses[0], vars, torus.table.size(), 200, {}, 9);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> jitter(0.0, 5.0);
    for (auto p : s.points) {
        const double before = hp.evaluate_full(p);
        for (VarId v : torus.psi_private) p[v] += jitter(rng);
        CHECK(hp.evaluate_full(p) == before);
    }
}

TEST_CASE("more samples do not overturn a pass") {
    const ProblemInstance torus = problem("torus.txt");
    const Interpolant hp = parse_interpolant(oracle::read_problem("torus_hp.txt"), torus);
    VerifyOptions o;
    for (int n : {250, 500, 1000, 2000}) {
        o.samples = n;
        CHECK(verify(hp, torus, o).pass);
    }
}

TEST_CASE("verification verdicts") {
    const ProblemInstance torus = problem("torus.txt");
    const Interpolant hp = parse_interpolant(oracle::read_problem("torus_hp.txt"), torus);
    VerifyOptions o;
    o.samples = 2000;
    const SampleReport good = verify(hp, torus, o);
    CHECK(good.pass);
    CHECK(good.violation_count == 0);
    CHECK(good.n_phi == 2000);
    CHECK(good.n_psi == 2000);
    CHECK(good.min_on_phi > 0.0);
    CHECK(good.max_on_psi < 0.0);

    Interpolant neg = hp;
    neg.value.h1 = -neg.value.h1;
    o.max_listed = 5;
    const SampleReport bad = verify(neg, torus, o);
    CHECK_FALSE(bad.pass);
    CHECK(bad.violation_count == 4000);
    CHECK(bad.violations.size() == 5);
    CHECK(bad.text(torus.table, torus.shared).find("FAIL") != std::string::npos);

    // A clause with no points constrains nothing.
    const ProblemInstance mz = problem("motzkin.txt");
    const SampleReport vac = verify(constant(mz, 1), mz, o);
    CHECK(vac.pass);
    CHECK(vac.n_psi == 0);
    CHECK(std::isinf(vac.max_on_psi));
    REQUIRE(vac.clauses.size() == 2);
    CHECK(vac.clauses[1].note == "no samples found");
    CHECK_FALSE(verify(constant(mz, 0), mz, o).pass);
}

TEST_CASE("sampling is deterministic in the seed") {
    const ProblemInstance ovals = problem("ovals.txt");
    const Interpolant h = constant(ovals, 1);
    VerifyOptions o;
    o.samples = 500;
    o.box.fallback = {-3.0, 3.0};
    const auto a = verify(h, ovals, o).json(ovals.table, ovals.shared).dump();
    CHECK(a == verify(h, ovals, o).json(ovals.table, ovals.shared).dump());

    const VarTable t{{"x", "y"}};
    const std::vector<VarId> vars{0, 1};
    const Clause c = clause("4 - x^2 - y^2 >= 0", t);
    const ClauseSamples one = sample_clause(c, vars, 2, 1000, {}, 11);
    const ClauseSamples two = sample_clause(c, vars, 2, 2000, {}, 11);
    const ClauseSamples other = sample_clause(c, vars, 2, 1000, {}, 12);
    for (std::size_t k = 0; k < 1000; ++k) CHECK(two.points[k] == one.points[k]);
    CHECK(other.points[0] != one.points[0]);
}

TEST_CASE("thin sets fall back to boundary chords") {
    const VarTable t{{"x", "y"}};
    const std::vector<VarId> vars{0, 1};
    SampleBox box;
    box.fallback = {-1.1, 1.1};
    const Clause ring = clause("x^2 + y^2 - 1 >= 0 & 1.0001 - x^2 - y^2 >= 0", t);
    const ClauseSamples s = sample_clause(ring, vars, 2, 1000, box, 5);
    CHECK(s.boundary_fallback);
    CHECK(s.points.size() == 1000);
    CHECK(s.acceptance < 1e-3);
    for (const auto& p : s.points) CHECK(ring.contains(p));
}

TEST_CASE("report formats") {
    const ProblemInstance torus = problem("torus.txt");
    const Interpolant hp = parse_interpolant(oracle::read_problem("torus_hp.txt"), torus);
    VerifyOptions o;
    o.samples = 100;
    const SampleReport r = verify(hp, torus, o);
    const auto j = r.json(torus.table, torus.shared);
    CHECK(j["verdict"] == "PASS");
    CHECK(j["n_phi"] == 100);
    CHECK(j["clauses"].size() == 2);
    CHECK(r.text(torus.table, torus.shared).find("PASS") != std::string::npos);
}
