#include "homsos/formula.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

namespace homsos {

bool Clause::contains(std::span<const double> point, double slack) const {
    return std::all_of(atoms.begin(), atoms.end(),
                       [&](const Atom& a) { return evaluate(a.poly, point) >= -slack; });
}

bool Formula::contains(std::span<const double> point, double slack) const {
    return std::any_of(clauses.begin(), clauses.end(),
                       [&](const Clause& c) { return c.contains(point, slack); });
}

ParseError::ParseError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

bool BoolExpr::evaluate(std::span<const double> point) const {
    switch (kind) {
        case Kind::Atoms:
            return std::all_of(atoms.begin(), atoms.end(),
                               [&](const Atom& a) { return homsos::evaluate(a.poly, point) >= 0.0; });
        case Kind::And:
            return std::all_of(children.begin(), children.end(),
                               [&](const BoolExpr& c) { return c.evaluate(point); });
        case Kind::Or:
            return std::any_of(children.begin(), children.end(),
                               [&](const BoolExpr& c) { return c.evaluate(point); });
    }
    return false;
}

Formula BoolExpr::to_dnf() const {
    Formula out;
    switch (kind) {
        case Kind::Atoms:
            out.clauses.push_back(Clause{atoms});
            break;
        case Kind::Or:
            for (const auto& c : children) {
                auto sub = c.to_dnf();
                out.clauses.insert(out.clauses.end(), sub.clauses.begin(), sub.clauses.end());
            }
            break;
        case Kind::And: {
            out.clauses.push_back(Clause{});
            for (const auto& c : children) {
                auto sub = c.to_dnf();
                std::vector<Clause> next;
                for (const auto& left : out.clauses) {
                    for (const auto& right : sub.clauses) {
                        Clause merged = left;
                        merged.atoms.insert(merged.atoms.end(), right.atoms.begin(), right.atoms.end());
                        next.push_back(std::move(merged));
                    }
                }
                out.clauses = std::move(next);
            }
            break;
        }
    }
    return out;
}

namespace {

enum class Tok { Ident, Number, Sym, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t line;
    std::size_t column;
    std::size_t offset;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    std::size_t line = 1, col = 1, i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < text.size()) {
        const char ch = text[i];
        if (ch == '#') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            advance(1);
            continue;
        }
        Token t{Tok::Sym, "", line, col, i};
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            t.kind = Tok::Ident;
            t.text = text.substr(i, j - i);
            out.push_back(t);
            advance(j - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || (ch == '.' && i + 1 < text.size() &&
                                                             std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i;
            while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
            if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
                    while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
                    j = k;
                }
            }
            t.kind = Tok::Number;
            t.text = text.substr(i, j - i);
            out.push_back(t);
            advance(j - i);
            continue;
        }
        static const char* two_char[] = {":=", ">=", "<=", "==", "&&", "||"};
        bool matched = false;
        for (const char* sym : two_char) {
            if (text.compare(i, 2, sym) == 0) {
                t.text = sym;
                if (t.text == "==") t.text = "=";
                if (t.text == "&&") t.text = "&";
                if (t.text == "||") t.text = "|";
                out.push_back(t);
                advance(2);
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string("+-*/^()&|;=<>,").find(ch) != std::string::npos) {
            t.text = std::string(1, ch);
            out.push_back(t);
            advance(1);
            continue;
        }
        throw ParseError(std::string("unexpected character '") + ch + "'", line, col);
    }
    out.push_back(Token{Tok::End, "", line, col, i});
    return out;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, const VarTable* table) : toks_(std::move(tokens)), table_(table) {}

    const Token& peek() const { return toks_[pos_]; }
    bool at_sym(const char* s) const { return peek().kind == Tok::Sym && peek().text == s; }
    bool at_end() const { return peek().kind == Tok::End; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().column); }

    void expect(const char* s) {
        if (!at_sym(s)) fail(std::string("expected '") + s + "'" + found());
        ++pos_;
    }

    std::string found() const {
        if (at_end()) return " but reached end of input";
        return " but found '" + peek().text + "'";
    }

    std::string ident() {
        if (peek().kind != Tok::Ident) fail("expected identifier" + found());
        return toks_[pos_++].text;
    }

    void set_table(const VarTable* t) { table_ = t; }

    // poly := sum
    Polynomial poly() {
        Polynomial acc = product();
        while (at_sym("+") || at_sym("-")) {
            const bool minus = at_sym("-");
            ++pos_;
            Polynomial rhs = product();
            if (minus) {
                acc -= rhs;
            } else {
                acc += rhs;
            }
        }
        return acc;
    }

    Polynomial product() {
        Polynomial acc = unary();
        while (at_sym("*") || at_sym("/")) {
            const bool divide = at_sym("/");
            const Token op = peek();
            ++pos_;
            Polynomial rhs = unary();
            if (divide) {
                if (!rhs.is_constant() || rhs.is_zero()) {
                    throw ParseError("division is only allowed by a nonzero constant", op.line, op.column);
                }
                const Rational inv = 1 / rhs.coefficient(Monomial{});
                acc *= Polynomial(inv);
            } else {
                acc *= rhs;
            }
        }
        return acc;
    }

    Polynomial unary() {
        if (at_sym("-")) {
            ++pos_;
            return -unary();
        }
        if (at_sym("+")) {
            ++pos_;
            return unary();
        }
        return power();
    }

    Polynomial power() {
        Polynomial base = primary();
        if (at_sym("^")) {
            ++pos_;
            if (peek().kind != Tok::Number || peek().text.find_first_of(".eE") != std::string::npos) {
                fail("exponent must be a nonnegative integer literal" + found());
            }
            const unsigned long e = std::stoul(toks_[pos_++].text);
            if (e > 64) fail("exponent too large");
            return base.pow(static_cast<unsigned>(e));
        }
        return base;
    }

    Polynomial primary() {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            ++pos_;
            return Polynomial(parse_decimal(t.text));
        }
        if (t.kind == Tok::Ident) {
            auto id = table_->find(t.text);
            if (!id) fail("unknown variable '" + t.text + "'");
            ++pos_;
            return Polynomial::variable(*id);
        }
        if (at_sym("(")) {
            ++pos_;
            Polynomial inner = poly();
            expect(")");
            return inner;
        }
        fail("expected a polynomial expression" + found());
    }

    // comparison chain: poly (op poly)+
    BoolExpr comparison() {
        std::vector<Polynomial> operands{poly()};
        std::vector<std::string> ops;
        while (at_sym(">=") || at_sym("<=") || at_sym("=") || at_sym(">") || at_sym("<")) {
            if (at_sym(">") || at_sym("<")) fail("strict inequalities unsupported");
            ops.push_back(peek().text);
            ++pos_;
            operands.push_back(poly());
        }
        if (ops.empty()) fail("expected a comparison ('>=', '<=' or '=')" + found());
        BoolExpr e;
        e.kind = BoolExpr::Kind::Atoms;
        for (std::size_t k = 0; k < ops.size(); ++k) {
            const Polynomial diff = operands[k] - operands[k + 1];
            if (ops[k] == ">=") {
                e.atoms.push_back(Atom{diff});
            } else if (ops[k] == "<=") {
                e.atoms.push_back(Atom{-diff});
            } else {
                e.atoms.push_back(Atom{diff});
                e.atoms.push_back(Atom{-diff});
            }
        }
        return e;
    }

    BoolExpr bool_or() {
        BoolExpr first = bool_and();
        if (!at_sym("|")) return first;
        BoolExpr e;
        e.kind = BoolExpr::Kind::Or;
        e.children.push_back(std::move(first));
        while (at_sym("|")) {
            ++pos_;
            e.children.push_back(bool_and());
        }
        return e;
    }

    BoolExpr bool_and() {
        BoolExpr first = bool_primary();
        if (!at_sym("&")) return first;
        BoolExpr e;
        e.kind = BoolExpr::Kind::And;
        e.children.push_back(std::move(first));
        while (at_sym("&")) {
            ++pos_;
            e.children.push_back(bool_primary());
        }
        return e;
    }

    // A '(' may open either a parenthesised boolean expression or a polynomial;
    // try the comparison reading first and fall back to the grouping.
    BoolExpr bool_primary() {
        const std::size_t start = pos_;
        if (!at_sym("(")) return comparison();
        std::optional<ParseError> first_error;
        try {
            return comparison();
        } catch (const ParseError& err) {
            if (std::string(err.what()).find("strict inequalities") != std::string::npos) throw;
            first_error = err;
        }
        const std::size_t failed_at = pos_;
        pos_ = start;
        ++pos_;
        try {
            BoolExpr inner = bool_or();
            expect(")");
            return inner;
        } catch (const ParseError& err) {
            // Report whichever reading got further.
            if (pos_ >= failed_at) throw;
            throw *first_error;
        }
    }

    std::size_t pos_ = 0;

private:
    std::vector<Token> toks_;
    const VarTable* table_;
};

std::string atom_text(const Atom& a, const VarTable& table) { return render(a.poly, table) + " >= 0"; }

}  // namespace

ProblemInstance parse_problem(const std::string& text) {
    Parser p(tokenize(text), nullptr);
    ProblemInstance inst;
    std::vector<std::pair<std::string, std::vector<VarId>*>> partitions = {
        {"shared", &inst.shared}, {"phi_only", &inst.phi_private}, {"psi_only", &inst.psi_private}};
    std::optional<BoolExpr> phi, psi;
    std::set<std::string> declared;

    // Declarations may appear in any order but must precede their use, so
    // formula statements are parsed against the table as it stands.
    while (!p.at_end()) {
        const Token head = p.peek();
        const std::string word = p.ident();
        auto part = std::find_if(partitions.begin(), partitions.end(),
                                 [&](const auto& e) { return e.first == word; });
        if (part != partitions.end()) {
            while (!p.at_sym(";")) {
                const Token vt = p.peek();
                const std::string name = p.ident();
                if (declared.count(name)) {
                    throw ParseError("variable '" + name + "' declared in two partitions", vt.line, vt.column);
                }
                declared.insert(name);
                part->second->push_back(inst.table.add(name));
                if (p.at_sym(",")) ++p.pos_;
            }
            p.expect(";");
            continue;
        }
        if (word == "phi" || word == "psi") {
            p.expect(":=");
            p.set_table(&inst.table);
            BoolExpr e = p.bool_or();
            p.expect(";");
            auto& slot = word == "phi" ? phi : psi;
            if (slot) throw ParseError(word + " defined twice", head.line, head.column);
            slot = std::move(e);
            continue;
        }
        throw ParseError("unknown statement '" + word + "'", head.line, head.column);
    }
    const Token& end = p.peek();
    if (!phi) throw ParseError("missing 'phi := ...;'", end.line, end.column);
    if (!psi) throw ParseError("missing 'psi := ...;'", end.line, end.column);
    inst.phi = phi->to_dnf();
    inst.psi = psi->to_dnf();
    inst.validate();
    return inst;
}

BoolExpr parse_bool_expr(const std::string& text, const VarTable& table) {
    Parser p(tokenize(text), &table);
    BoolExpr e = p.bool_or();
    if (p.at_sym(";")) ++p.pos_;
    if (!p.at_end()) p.fail("trailing input");
    return e;
}

Polynomial parse_polynomial(const std::string& text, const VarTable& table) {
    Parser p(tokenize(text), &table);
    Polynomial poly = p.poly();
    if (p.at_sym(";")) ++p.pos_;
    if (!p.at_end()) p.fail("trailing input" + p.found());
    return poly;
}

void ProblemInstance::validate() const {
    auto in = [](const std::vector<VarId>& v, VarId id) { return std::find(v.begin(), v.end(), id) != v.end(); };
    for (VarId id = 0; id < table.size(); ++id) {
        const int count = int(in(shared, id)) + int(in(phi_private, id)) + int(in(psi_private, id));
        if (count > 1) throw std::invalid_argument("variable '" + table.name(id) + "' declared in two partitions");
    }
    auto check = [&](const Formula& f, const std::vector<VarId>& priv, const char* which) {
        if (f.clauses.empty()) throw std::invalid_argument(std::string(which) + " has no clauses");
        for (const auto& c : f.clauses) {
            if (c.atoms.empty()) throw std::invalid_argument(std::string(which) + " has an empty clause");
            for (const auto& a : c.atoms) {
                for (VarId v : a.poly.variables()) {
                    if (v >= table.size()) throw std::invalid_argument("variable index out of range");
                    if (!in(shared, v) && !in(priv, v)) {
                        throw std::invalid_argument(std::string(which) + " uses variable '" + table.name(v) +
                                                    "' outside its partition");
                    }
                }
            }
        }
    };
    check(phi, phi_private, "phi");
    check(psi, psi_private, "psi");
}

std::string render_formula(const Formula& f, const VarTable& table) {
    std::string out;
    for (std::size_t k = 0; k < f.clauses.size(); ++k) {
        if (k > 0) out += " | ";
        out += "(";
        const auto& atoms = f.clauses[k].atoms;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (i > 0) out += " & ";
            out += atom_text(atoms[i], table);
        }
        out += ")";
    }
    return out;
}

std::string render_problem(const ProblemInstance& inst) {
    std::string out;
    auto decl = [&](const char* kw, const std::vector<VarId>& ids) {
        if (ids.empty()) return;
        out += kw;
        for (VarId v : ids) out += " " + inst.table.name(v);
        out += ";\n";
    };
    decl("shared", inst.shared);
    decl("phi_only", inst.phi_private);
    decl("psi_only", inst.psi_private);
    out += "phi := " + render_formula(inst.phi, inst.table) + ";\n";
    out += "psi := " + render_formula(inst.psi, inst.table) + ";\n";
    return out;
}

const char* to_string(Mode m) {
    switch (m) {
        case Mode::Polynomial: return "poly";
        case Mode::Semialgebraic: return "semialg";
        case Mode::Archimedean: return "archimedean";
    }
    return "?";
}

Mode parse_mode(const std::string& text) {
    if (text == "poly" || text == "polynomial") return Mode::Polynomial;
    if (text == "semialg" || text == "semialgebraic") return Mode::Semialgebraic;
    if (text == "archimedean" || text == "arch") return Mode::Archimedean;
    throw std::invalid_argument("unknown mode '" + text + "'");
}

std::vector<Generator> clause_extension(const Clause& clause, Mode mode, const ExtensionVars& vars) {
    std::vector<Generator> gens;
    for (const auto& a : clause.atoms) gens.push_back(Generator{a.poly, MultiplierKind::Sos});
    if (mode == Mode::Archimedean) return gens;

    const Polynomial x0 = Polynomial::variable(vars.x0);
    const Polynomial x0sq = Polynomial::term(1, Monomial::variable(vars.x0, 2));
    const Polynomial xnorm = squared_norm(vars.shared);
    const Polynomial pnorm = squared_norm(vars.private_vars);
    gens.push_back(Generator{x0, MultiplierKind::Sos});
    if (mode == Mode::Polynomial) {
        gens.push_back(Generator{x0sq + xnorm + pnorm - Polynomial(1), MultiplierKind::Free});
        return gens;
    }
    const Polynomial w = Polynomial::variable(vars.w);
    const Polynomial wsq = Polynomial::term(1, Monomial::variable(vars.w, 2));
    gens.push_back(Generator{w, MultiplierKind::Sos});
    gens.push_back(Generator{x0sq + xnorm + wsq + pnorm - Polynomial(1), MultiplierKind::Free});
    gens.push_back(Generator{x0sq + xnorm - wsq, MultiplierKind::Free});
    return gens;
}

}  // namespace homsos
