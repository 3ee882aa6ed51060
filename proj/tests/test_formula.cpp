#include <doctest.h>

#include "homsos/formula.hpp"
#include "oracles.hpp"

using namespace homsos;

namespace {

Polynomial P(const std::string& s, const VarTable& t) { return parse_polynomial(s, t); }

std::string random_comparison(std::mt19937_64& rng, const VarTable& t) {
    static const char* ops[] = {">=", "<=", "="};
    const Polynomial a = oracle::random_poly(rng, {0, 1}, 2, 3);
    const Polynomial b = oracle::random_poly(rng, {0, 1}, 1, 2);
    return render(a, t) + " " + ops[rng() % 3] + " " + render(b, t);
}

std::string random_expr(std::mt19937_64& rng, const VarTable& t, int depth) {
    if (depth == 0 || rng() % 3 == 0) return random_comparison(rng, t);
    const char* op = rng() % 2 ? " & " : " | ";
    std::string out = "(" + random_expr(rng, t, depth - 1);
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < n; ++k) out += op + random_expr(rng, t, depth - 1);
    return out + ")";
}

}  // namespace

TEST_CASE("problem files parse") {
    const ProblemInstance curves = parse_problem(oracle::read_problem("curves.txt"));
    CHECK(curves.shared.size() == 2);
    CHECK(curves.phi.clauses.size() == 1);
    CHECK(curves.phi.clauses[0].atoms.size() == 2);
    CHECK(curves.phi.clauses[0].atoms[0].poly == P("8*x*y - (x^2 - y^3)^2", curves.table));

    const ProblemInstance ovals = parse_problem(oracle::read_problem("ovals.txt"));
    CHECK(ovals.phi.clauses.size() == 3);
    CHECK(ovals.psi.clauses.size() == 3);
    CHECK(ovals.phi.clauses[1].atoms[0].poly.coefficient(Monomial()) == oracle::q(9025, 10000) - 1);

    const ProblemInstance torus = parse_problem(oracle::read_problem("torus.txt"));
    CHECK(torus.shared.size() == 3);
    CHECK(torus.psi_private.size() == 2);
    CHECK(torus.phi_private.empty());
    // "6 >= R >= 4" becomes two atoms, likewise for r.
    CHECK(torus.psi.clauses[0].atoms.size() == 5);
    const VarTable& t = torus.table;
    CHECK(torus.psi.clauses[0].atoms[1].poly == P("6 - R", t));
    CHECK(torus.psi.clauses[0].atoms[2].poly == P("R - 4", t));
    CHECK(torus.psi.clauses[0].atoms[3].poly == P("1 - r", t));
    CHECK(torus.psi.clauses[0].atoms[4].poly == P("r - 0.5", t));

    const ProblemInstance motzkin = parse_problem(oracle::read_problem("motzkin.txt"));
    CHECK(motzkin.phi.clauses[0].atoms[0].poly == Polynomial(1));
    CHECK(motzkin.psi.clauses[0].atoms[0].poly == Polynomial(-1));
}

TEST_CASE("equalities lower to two inequalities") {
    const ProblemInstance p = parse_problem("shared x, y;\nphi := x^2 + y^2 = 1;\npsi := x <= -2;\n");
    REQUIRE(p.phi.clauses[0].atoms.size() == 2);
    CHECK(p.phi.clauses[0].atoms[0].poly == P("x^2 + y^2 - 1", p.table));
    CHECK(p.phi.clauses[0].atoms[1].poly == P("1 - x^2 - y^2", p.table));
    CHECK(p.psi.clauses[0].atoms[0].poly == P("-2 - x", p.table));
}

TEST_CASE("parse errors carry a position") {
    auto err = [](const std::string& text) -> ParseError {
        try {
            parse_problem(text);
        } catch (const ParseError& e) {
            return e;
        }
        FAIL("no error for: " << text);
        return ParseError("", 0, 0);
    };
    const ParseError strict = err("shared x;\nphi := x > 0;\npsi := x <= -1;\n");
    CHECK(std::string(strict.what()).find("strict inequalities unsupported") != std::string::npos);
    CHECK(strict.line() == 2);
    CHECK(strict.column() == 10);

    const ParseError unknown = err("shared x;\nphi := x >= 0;\npsi :=  q <= -1;\n");
    CHECK(unknown.line() == 3);
    CHECK(unknown.column() == 9);
    CHECK(std::string(unknown.what()).find("unknown variable 'q'") != std::string::npos);

    CHECK(std::string(err("shared x;\nphi := x >= 0;\n").what()).find("missing 'psi") != std::string::npos);
    CHECK(std::string(err("shared x;\nphi := x^1.5 >= 0;\npsi := x <= 0;\n").what()).find("exponent") !=
          std::string::npos);
    CHECK(std::string(err("shared x;\nphi := x/x >= 0;\npsi := x <= 0;\n").what()).find("division") !=
          std::string::npos);
    CHECK(std::string(err("shared x;\nphi_only x;\nphi := x >= 0;\npsi := x <= 0;\n").what())
              .find("two partitions") != std::string::npos);
}

TEST_CASE("partition invariants") {
    // psi may not mention phi's private variable.
    CHECK_THROWS_AS(parse_problem("shared x;\nphi_only y;\nphi := x + y >= 0;\npsi := y <= 0;\n"), std::exception);
    ProblemInstance ok = parse_problem("shared x;\nphi_only y;\nphi := x + y >= 0;\npsi := x <= -1;\n");
    CHECK_NOTHROW(ok.validate());
    ok.psi.clauses[0].atoms[0].poly += Polynomial::variable(ok.phi_private[0]);
    CHECK_THROWS_AS(ok.validate(), std::invalid_argument);
    ok = parse_problem("shared x;\nphi := x >= 0;\npsi := x <= -1;\n");
    ok.phi.clauses.clear();
    CHECK_THROWS_AS(ok.validate(), std::invalid_argument);
}

TEST_CASE("decimal literals are exact") {
    const VarTable t{{"x"}};
    CHECK(P("0.1 + 0.2", t) == Polynomial(oracle::q(3, 10)));
    CHECK(P("1e-3", t) == Polynomial(oracle::q(1, 1000)));
    CHECK(P("2.5*x/4", t) == Polynomial::term(oracle::q(5, 8), Monomial::variable(0)));
}

TEST_CASE("render then parse is the identity") {
    for (const char* name : {"curves.txt", "ovals.txt", "torus.txt", "motzkin.txt"}) {
        const ProblemInstance a = parse_problem(oracle::read_problem(name));
        const std::string text = render_problem(a);
        const ProblemInstance b = parse_problem(text);
        CHECK(render_problem(b) == text);
        CHECK(b.table.names() == a.table.names());
        REQUIRE(b.phi.clauses.size() == a.phi.clauses.size());
        for (std::size_t k = 0; k < a.phi.clauses.size(); ++k) {
            for (std::size_t i = 0; i < a.phi.clauses[k].atoms.size(); ++i) {
                CHECK(b.phi.clauses[k].atoms[i].poly == a.phi.clauses[k].atoms[i].poly);
            }
        }
    }
}

TEST_CASE("DNF agrees with the expression tree") {
    std::mt19937_64 rng(21);
    const VarTable t{{"a", "b"}};
    std::uniform_int_distribution<int> coord(-6, 6);
    for (int trial = 0; trial < 200; ++trial) {
        const std::string text = random_expr(rng, t, 3);
        const BoolExpr e = parse_bool_expr(text, t);
        const Formula f = e.to_dnf();
        for (int k = 0; k < 50; ++k) {
            // Half-integer grid points hit equalities often enough to matter.
            const std::vector<double> pt{coord(rng) / 2.0, coord(rng) / 2.0};
            CHECK_MESSAGE(e.evaluate(pt) == f.contains(pt), text);
        }
    }
}

TEST_CASE("clause extension") {
    const ProblemInstance p = parse_problem("shared x;\nphi_only y;\nphi := x - y^2 >= 0 & y >= 0;\npsi := x <= -1;\n");
    VarTable t = p.table;
    ExtensionVars ev;
    ev.x0 = t.add_fresh("x0");
    ev.w = t.add_fresh("w");
    ev.shared = p.shared;
    ev.private_vars = p.phi_private;

    const auto tags = [](const std::vector<Generator>& g) {
        std::vector<MultiplierKind> out;
        for (const auto& x : g) out.push_back(x.kind);
        return out;
    };
    using K = MultiplierKind;
    const auto poly = clause_extension(p.phi.clauses[0], Mode::Polynomial, ev);
    CHECK(tags(poly) == std::vector<K>{K::Sos, K::Sos, K::Sos, K::Free});
    CHECK(poly[2].poly == Polynomial::variable(ev.x0));
    CHECK(poly[3].poly == P("x0^2 + x^2 + y^2 - 1", t));

    const auto semi = clause_extension(p.phi.clauses[0], Mode::Semialgebraic, ev);
    CHECK(tags(semi) == std::vector<K>{K::Sos, K::Sos, K::Sos, K::Sos, K::Free, K::Free});
    CHECK(semi[3].poly == Polynomial::variable(ev.w));
    CHECK(semi[4].poly == P("x0^2 + x^2 + w^2 + y^2 - 1", t));
    CHECK(semi[5].poly == P("x0^2 + x^2 - w^2", t));

    CHECK(clause_extension(p.phi.clauses[0], Mode::Archimedean, ev).size() == 2);
}

TEST_CASE("modes") {
    CHECK(parse_mode("poly") == Mode::Polynomial);
    CHECK(parse_mode("semialg") == Mode::Semialgebraic);
    CHECK(parse_mode("archimedean") == Mode::Archimedean);
    CHECK_THROWS_AS(parse_mode("sos"), std::invalid_argument);
    CHECK(std::string(to_string(Mode::Semialgebraic)) == "semialg");
}
