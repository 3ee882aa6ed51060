#include <doctest.h>

#include "homsos/formula.hpp"
#include "homsos/polynomial.hpp"
#include "oracles.hpp"

using namespace homsos;

namespace {

struct Vars {
    VarTable t{{"x0", "x1", "x2"}};
    Polynomial p(const std::string& s) const { return parse_polynomial(s, t); }
};

}  // namespace

TEST_CASE("evaluate") {
    Vars v;
    const std::vector<double> one{0.0, 1.0, 1.0};
    CHECK(evaluate(v.p("x1^3 + 2*x1*x2 + 3*x2 + 4"), v.t, one) == 10.0);
    CHECK(evaluate(Polynomial(), v.t, one) == 0.0);
    CHECK(evaluate(v.p("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1"), v.t, one) == 0.0);
    CHECK_THROWS_AS(evaluate(v.p("x1"), v.t, std::vector<double>{1.0}), std::invalid_argument);

    const std::vector<Rational> q{0, Rational(1, 3), Rational(-2, 5)};
    CHECK(evaluate_exact(v.p("x1*x2 + 1/2"), q) == Rational(1, 2) - Rational(2, 15));
}

TEST_CASE("homogenize") {
    Vars v;
    CHECK(homogenize(v.p("x1^3 + 2*x1*x2 + 3*x2 + 4"), 0) == v.p("x1^3 + 2*x0*x1*x2 + 3*x0^2*x2 + 4*x0^3"));
    CHECK(homogenize(v.p("5"), 0) == v.p("5"));
    CHECK(homogenize(v.p("x1^2 + x2"), 0) == v.p("x1^2 + x0*x2"));
    CHECK_THROWS_WITH_AS(homogenize(Polynomial(), 0), doctest::Contains("zero polynomial"), std::invalid_argument);
    CHECK_THROWS_AS(homogenize(v.p("x0 + x1"), 0), std::invalid_argument);
    CHECK(homogenize(v.p("x1 + 1"), 0, 3) == v.p("x1*x0^2 + x0^3"));
}

TEST_CASE("top_part") {
    Vars v;
    CHECK(top_part(v.p("x1^2 + 2*x1*x2 + 3*x2^2 + 4*x1 + 5*x2")) == v.p("x1^2 + 2*x1*x2 + 3*x2^2"));
    CHECK(top_part(v.p("x1^2 + x1*x2")) == v.p("x1^2 + x1*x2"));
    CHECK(top_part(v.p("4*x1 + 5")) == v.p("4*x1"));
    CHECK_THROWS_AS(top_part(Polynomial()), std::invalid_argument);
}

TEST_CASE("projective substitution") {
    Vars v;
    const std::vector<VarId> shared{1};
    auto ps = [&](const std::string& s) { return projective_substitute(v.p(s), 0, shared); };
    CHECK(ps("x0").h1 == Polynomial(1));
    CHECK(ps("x0").h2.is_zero());
    CHECK(ps("x1").h1 == v.p("x1"));
    CHECK(ps("x1").h2.is_zero());
    const auto s = ps("x0 + x1^2");
    CHECK(s.h1 == v.p("x1^2"));
    CHECK(s.h2 == Polynomial(1));
    CHECK_THROWS_AS(ps("0"), std::invalid_argument);
    CHECK_THROWS_AS(ps("x2"), std::invalid_argument);

    // Spot-check x0 + x1^2 against the substitution itself.
    for (double x : {-2.5, -0.3, 0.0, 1.0, 7.0}) {
        const double direct = oracle::projective_direct(v.p("x0 + x1^2"), 0, shared, {x});
        CHECK(eval_sqrtpair(s, shared, std::vector<double>{x}) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("eval_sqrtpair") {
    Vars v;
    const std::vector<VarId> shared{1};
    CHECK(eval_sqrtpair({v.p("x1^2"), Polynomial(1)}, shared, std::vector<double>{0.0}) == 1.0);
    CHECK(eval_sqrtpair({Polynomial(Rational(7, 2)), Polynomial()}, shared, std::vector<double>{3.0}) == 3.5);
    CHECK(eval_sqrtpair({Polynomial(), Polynomial(1)}, shared, std::vector<double>{1.0}) ==
          doctest::Approx(1.41421356).epsilon(1e-8));
    CHECK_THROWS_AS(eval_sqrtpair({Polynomial(), Polynomial(1)}, shared, std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
}

TEST_CASE("homogenize then dehomogenize is the identity (exact)") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> num(-20, 20), den(1, 7);
    for (int trial = 0; trial < 200; ++trial) {
        const Polynomial f = oracle::random_poly(rng, {1, 2}, 5, 6);
        const Polynomial fh = homogenize(f, 0);
        CHECK(fh.is_homogeneous());
        CHECK(fh.degree() == f.degree());
        for (const auto& [m, c] : fh.terms()) CHECK(static_cast<int>(m.degree()) == f.degree());
        const std::vector<Rational> pt{1, oracle::q(num(rng), den(rng)), oracle::q(num(rng), den(rng))};
        CHECK(evaluate_exact(fh, pt) == evaluate_exact(f, pt));
        CHECK(fh.substitute(0, 1) == f);
    }
}

TEST_CASE("top_part is multiplicative") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const Polynomial p = oracle::random_poly(rng, {0, 1, 2}, 4, 5);
        const Polynomial q = oracle::random_poly(rng, {0, 1, 2}, 4, 5);
        CHECK(top_part(p * q) == top_part(p) * top_part(q));
    }
}

TEST_CASE("exact arithmetic") {
    Vars v;
    const Polynomial a = v.p("1/3*x1 + 0.1");
    CHECK((a * a) == v.p("1/9*x1^2 + 1/15*x1 + 1/100"));
    CHECK((a - a).is_zero());
    CHECK((a - a).degree() == Polynomial::kZeroDegree);
    CHECK(parse_decimal("0.9025") == oracle::q(9025, 10000));
    CHECK(rational_from_double(0.1) == Rational(1, 10));
    CHECK(v.p("(x1 + x2)^2").derivative(1) == v.p("2*x1 + 2*x2"));
}

TEST_CASE("canonical rendering") {
    Vars v;
    CHECK(render(v.p("4 + 3*x2 + 2*x1*x2 + x1^3"), v.t) == "x1^3 + 2*x1*x2 + 3*x2 + 4");
    CHECK(render(v.p("-x1 - 1/2"), v.t) == "-x1 - 1/2");
    CHECK(render(Polynomial(), v.t) == "0");
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const Polynomial p = oracle::random_poly(rng, {0, 1, 2}, 4, 6);
        CHECK(parse_polynomial(render(p, v.t), v.t) == p);
    }
}

TEST_CASE("grlex order") {
    GrlexLess less;
    const Monomial one, x0 = Monomial::variable(0), x1 = Monomial::variable(1);
    CHECK(less(one, x1));
    CHECK(less(x1, x0));
    CHECK(less(x0, x1 * x1));
    CHECK(less(x0 * x1, x0 * x0));
    CHECK_FALSE(less(x0, x0));
}

TEST_CASE("projective substitution agrees with direct substitution on random input") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> coord(0.0, 3.0);
    const VarTable t{{"x0", "a", "b"}};
    const std::vector<VarId> shared{1, 2};
    for (int trial = 0; trial < 50; ++trial) {
        Polynomial g = homogenize(oracle::random_poly(rng, {1, 2}, 4, 5), 0);
        if (trial % 2) g *= Polynomial::variable(0);
        const SqrtPair h = projective_substitute(g, 0, shared);
        for (int k = 0; k < 20; ++k) {
            const std::vector<double> x{coord(rng), coord(rng)};
            const double direct = oracle::projective_direct(g, 0, shared, x);
            const double scale = oracle::projective_scale(g, 0, shared, x);
            CHECK(std::abs(eval_sqrtpair(h, shared, x) - direct) <= 1e-10 * std::max(1.0, scale));
        }
    }
}
