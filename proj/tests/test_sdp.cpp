#include <algorithm>
#include <random>

#include "doctest.h"
#include "homsos/sdp.hpp"

using namespace homsos;

namespace {

SdpProblem scalar_problem(double rhs) {
    SdpProblem p;
    p.blocks = {1};
    p.equalities.push_back({{{0, 0, 0, 1.0}}, {}, rhs});
    return p;
}

// Gram program for a univariate quadratic c0 + c1 x + c2 x^2 over the basis (1, x).
SdpProblem quadratic_sos(double c0, double c1, double c2) {
    SdpProblem p;
    p.blocks = {2};
    p.equalities.push_back({{{0, 0, 0, 1.0}}, {}, c0});
    p.equalities.push_back({{{0, 1, 0, 1.0}}, {}, c1});
    p.equalities.push_back({{{0, 1, 1, 1.0}}, {}, c2});
    return p;
}

}  // namespace

TEST_CASE("scalar equalities") {
    auto ok = solve(scalar_problem(1.0));
    CHECK(ok.status == SdpStatus::Feasible);
    CHECK(ok.gram[0](0, 0) == doctest::Approx(1.0).epsilon(1e-8));

    auto bad = solve(scalar_problem(-1.0));
    REQUIRE(bad.status == SdpStatus::Infeasible);
    auto chk = check_infeasibility_certificate(scalar_problem(-1.0), bad.y, 1e-6);
    CHECK(chk.valid);
}

TEST_CASE("univariate quadratics") {
    CHECK(solve(quadratic_sos(1, 0, 1)).status == SdpStatus::Feasible);
    CHECK(solve(quadratic_sos(1, 1.9, 1)).status == SdpStatus::Feasible);
    CHECK(solve(quadratic_sos(-1, 0, 1)).status == SdpStatus::Infeasible);
    CHECK(solve(quadratic_sos(1, 2.2, 1)).status == SdpStatus::Infeasible);
}

TEST_CASE("free scalars") {
    SdpProblem p = scalar_problem(-1.0);
    p.nfree = 1;
    p.equalities[0].free.push_back({0, 1.0});
    auto sol = solve(p);
    REQUIRE(sol.status == SdpStatus::Feasible);
    CHECK(sol.primal_residual <= 1e-8);

    // Free scalars that cannot absorb the violation.
    SdpProblem q;
    q.blocks = {1};
    q.nfree = 1;
    q.equalities.push_back({{{0, 0, 0, 1.0}}, {{0, 1.0}}, 0.0});
    q.equalities.push_back({{}, {{0, 1.0}}, 1.0});
    q.equalities.push_back({{{0, 0, 0, 1.0}}, {}, 0.5});
    CHECK(solve(q).status == SdpStatus::Infeasible);
}

TEST_CASE("objective is minimised") {
    // min X11 s.t. X00 = 1, X10 = 1: optimum 1.
    SdpProblem p;
    p.blocks = {2};
    p.equalities.push_back({{{0, 0, 0, 1.0}}, {}, 1.0});
    p.equalities.push_back({{{0, 1, 0, 1.0}}, {}, 2.0});
    p.objective.push_back({0, 1, 1, 1.0});
    auto sol = solve(p);
    REQUIRE(sol.status == SdpStatus::Feasible);
    CHECK(sol.gram[0](1, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("random feasible systems are recognised") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 6, m = 12;
        Eigen::MatrixXd R(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) R(i, j) = g(rng);
        const Eigen::MatrixXd X0 = R * R.transpose();
        SdpProblem p;
        p.blocks = {n, 2};
        p.nfree = 2;
        for (int i = 0; i < m; ++i) {
            Equality eq;
            double rhs = 0.0;
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c <= r; ++c) {
                    if (std::uniform_real_distribution<>(0, 1)(rng) < 0.5) continue;
                    const double v = g(rng);
                    eq.entries.push_back({0, r, c, v});
                    rhs += (r == c ? 1.0 : 2.0) * v * X0(r, c);
                }
            }
            eq.entries.push_back({1, 0, 0, 1.0});
            rhs += 1.0;
            eq.free.push_back({i % 2, g(rng)});
            eq.rhs = rhs;
            p.equalities.push_back(eq);
        }
        auto sol = solve(p);
        CHECK(sol.status == SdpStatus::Feasible);
        CHECK(sol.primal_residual <= 1e-8);
    }
}

TEST_CASE("entry order and split duplicates do not change the run") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> g;
    const int n = 5;
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = g(rng);
    const Eigen::MatrixXd X0 = R * R.transpose();
    SdpProblem p;
    p.blocks = {n};
    p.nfree = 1;
    for (int i = 0; i < 9; ++i) {
        Equality eq;
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c <= r; ++c) {
                const double v = g(rng);
                eq.entries.push_back({0, r, c, v});
                eq.rhs += (r == c ? 1.0 : 2.0) * v * X0(r, c);
            }
        }
        eq.free.push_back({0, 1.0});
        p.equalities.push_back(eq);
    }
    SdpProblem q = p;
    for (auto& eq : q.equalities) {
        std::shuffle(eq.entries.begin(), eq.entries.end(), rng);
        eq.free = {{0, 0.25}, {0, 0.75}};
    }
    const SdpSolution a = solve(p), b = solve(q);
    CHECK(a.status == SdpStatus::Feasible);
    CHECK(b.status == a.status);
    CHECK(b.iterations == a.iterations);
    REQUIRE(b.gram.size() == a.gram.size());
    CHECK((b.gram[0] - a.gram[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("status is invariant under row scaling") {
    for (double scale : {1e-3, 1e3}) {
        SdpProblem a = quadratic_sos(1, 1.9, 1);
        SdpProblem b = quadratic_sos(1, 2.2, 1);
        for (auto* p : {&a, &b}) {
            for (auto& eq : p->equalities) {
                for (auto& e : eq.entries) e.value *= scale;
                eq.rhs *= scale;
            }
        }
        CHECK(solve(a).status == SdpStatus::Feasible);
        CHECK(solve(b).status == SdpStatus::Infeasible);
    }
}

TEST_CASE("limits and malformed input") {
    SdpProblem p;
    p.blocks = {1001};
    p.equalities.push_back({{{0, 0, 0, 1.0}}, {}, 1.0});
    CHECK_THROWS_WITH_AS(solve(p), doctest::Contains("dimension limit exceeded"), std::invalid_argument);
    SdpProblem q = scalar_problem(1.0);
    q.equalities[0].entries[0].block = 3;
    CHECK_THROWS_AS(solve(q), std::invalid_argument);
    SdpProblem r = scalar_problem(1.0);
    r.equalities.push_back({{}, {}, 2.0});
    CHECK(solve(r).status == SdpStatus::Infeasible);
}
