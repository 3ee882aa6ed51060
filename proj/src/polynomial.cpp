#include "homsos/polynomial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace homsos {

VarTable::VarTable(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (names_[i] == names_[j]) throw std::invalid_argument("duplicate variable '" + names_[i] + "'");
        }
    }
}

VarId VarTable::add(const std::string& name) {
    if (auto id = find(name)) return *id;
    names_.push_back(name);
    return static_cast<VarId>(names_.size() - 1);
}

VarId VarTable::add_fresh(const std::string& stem) {
    std::string candidate = stem;
    while (find(candidate)) candidate += "_";
    names_.push_back(candidate);
    return static_cast<VarId>(names_.size() - 1);
}

std::optional<VarId> VarTable::find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<VarId>(it - names_.begin());
}

// ---------------------------------------------------------------------------

Monomial::Monomial(std::vector<std::uint32_t> exponents) : exps_(std::move(exponents)) { trim(); }

Monomial Monomial::variable(VarId v, std::uint32_t power) {
    std::vector<std::uint32_t> e(v + 1, 0);
    e[v] = power;
    return Monomial(std::move(e));
}

void Monomial::trim() {
    while (!exps_.empty() && exps_.back() == 0) exps_.pop_back();
    degree_ = 0;
    for (auto e : exps_) degree_ += e;
}

Monomial Monomial::operator*(const Monomial& other) const {
    std::vector<std::uint32_t> e(std::max(exps_.size(), other.exps_.size()), 0);
    for (std::size_t i = 0; i < exps_.size(); ++i) e[i] += exps_[i];
    for (std::size_t i = 0; i < other.exps_.size(); ++i) e[i] += other.exps_[i];
    Monomial m;
    m.exps_ = std::move(e);
    m.degree_ = degree_ + other.degree_;
    return m;
}

double Monomial::evaluate(std::span<const double> point) const {
    double v = 1.0;
    for (std::size_t i = 0; i < exps_.size(); ++i) {
        for (std::uint32_t k = 0; k < exps_[i]; ++k) v *= point[i];
    }
    return v;
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    const std::size_t n = std::max(a.span(), b.span());
    for (std::size_t i = 0; i < n; ++i) {
        const auto ea = a.exponent(static_cast<VarId>(i));
        const auto eb = b.exponent(static_cast<VarId>(i));
        if (ea != eb) return ea < eb;
    }
    return false;
}

// ---------------------------------------------------------------------------

Polynomial::Polynomial(const Rational& c) {
    if (c != 0) terms_.emplace(Monomial{}, c);
}

Polynomial Polynomial::variable(VarId v) { return term(1, Monomial::variable(v)); }

Polynomial Polynomial::term(const Rational& c, const Monomial& m) {
    Polynomial p;
    p.add_term(c, m);
    return p;
}

bool Polynomial::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_one());
}

int Polynomial::degree() const {
    if (terms_.empty()) return kZeroDegree;
    return static_cast<int>(terms_.rbegin()->first.degree());
}

bool Polynomial::is_homogeneous() const {
    if (terms_.empty()) return true;
    return terms_.begin()->first.degree() == terms_.rbegin()->first.degree();
}

Rational Polynomial::coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Rational(0) : it->second;
}

std::vector<VarId> Polynomial::variables() const {
    std::vector<bool> seen(span(), false);
    for (const auto& [m, c] : terms_) {
        for (std::size_t i = 0; i < m.span(); ++i) {
            if (m.exponent(static_cast<VarId>(i)) > 0) seen[i] = true;
        }
    }
    std::vector<VarId> out;
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i]) out.push_back(static_cast<VarId>(i));
    }
    return out;
}

std::size_t Polynomial::span() const {
    std::size_t s = 0;
    for (const auto& [m, c] : terms_) s = std::max(s, m.span());
    return s;
}

void Polynomial::add_term(const Rational& c, const Monomial& m) {
    if (c == 0) return;
    auto [it, inserted] = terms_.emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0) terms_.erase(it);
    }
}

Polynomial Polynomial::operator-() const {
    Polynomial r = *this;
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
    for (const auto& [m, c] : other.terms_) add_term(c, m);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
    for (const auto& [m, c] : other.terms_) add_term(-c, m);
    return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial r;
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) r.add_term(ca * cb, ma * mb);
    }
    return r;
}

Polynomial& Polynomial::operator*=(const Polynomial& other) {
    *this = *this * other;
    return *this;
}

Polynomial Polynomial::pow(unsigned e) const {
    Polynomial result(1);
    Polynomial base = *this;
    while (e > 0) {
        if (e & 1u) result *= base;
        e >>= 1u;
        if (e > 0) base *= base;
    }
    return result;
}

Polynomial Polynomial::derivative(VarId v) const {
    Polynomial r;
    for (const auto& [m, c] : terms_) {
        const auto e = m.exponent(v);
        if (e == 0) continue;
        auto exps = m.exponents();
        exps[v] -= 1;
        r.add_term(c * e, Monomial(std::move(exps)));
    }
    return r;
}

Polynomial Polynomial::substitute(VarId v, const Rational& value) const {
    Polynomial r;
    for (const auto& [m, c] : terms_) {
        const auto e = m.exponent(v);
        if (e == 0) {
            r.add_term(c, m);
            continue;
        }
        auto exps = m.exponents();
        exps[v] = 0;
        Rational factor = 1;
        for (std::uint32_t k = 0; k < e; ++k) factor *= value;
        r.add_term(c * factor, Monomial(std::move(exps)));
    }
    return r;
}

double Polynomial::max_abs_coefficient() const {
    double best = 0.0;
    for (const auto& [m, c] : terms_) best = std::max(best, std::abs(c.get_d()));
    return best;
}

// ---------------------------------------------------------------------------

double evaluate(const Polynomial& p, std::span<const double> point) {
    if (p.span() > point.size()) throw std::invalid_argument("evaluate: point has too few coordinates");
    double acc = 0.0;
    for (const auto& [m, c] : p.terms()) acc += c.get_d() * m.evaluate(point);
    return acc;
}

double evaluate(const Polynomial& p, const VarTable& table, std::span<const double> point) {
    if (point.size() != table.size()) {
        throw std::invalid_argument("evaluate: point dimension " + std::to_string(point.size()) +
                                    " does not match variable table size " + std::to_string(table.size()));
    }
    return evaluate(p, point);
}

Rational evaluate_exact(const Polynomial& p, std::span<const Rational> point) {
    if (p.span() > point.size()) throw std::invalid_argument("evaluate_exact: point has too few coordinates");
    Rational acc = 0;
    for (const auto& [m, c] : p.terms()) {
        Rational v = c;
        for (std::size_t i = 0; i < m.span(); ++i) {
            for (std::uint32_t k = 0; k < m.exponent(static_cast<VarId>(i)); ++k) v *= point[i];
        }
        acc += v;
    }
    return acc;
}

Polynomial homogenize(const Polynomial& f, VarId x0) {
    if (f.is_zero()) throw std::invalid_argument("homogenize: the zero polynomial has no degree");
    return homogenize(f, x0, f.degree());
}

Polynomial homogenize(const Polynomial& f, VarId x0, int target) {
    if (f.is_zero()) throw std::invalid_argument("homogenize: the zero polynomial has no degree");
    if (target < f.degree()) throw std::invalid_argument("homogenize: target degree below deg(f)");
    Polynomial r;
    for (const auto& [m, c] : f.terms()) {
        if (m.exponent(x0) != 0) throw std::invalid_argument("homogenize: polynomial already contains x0");
        const auto pad = static_cast<std::uint32_t>(target) - m.degree();
        r.add_term(c, pad == 0 ? m : m * Monomial::variable(x0, pad));
    }
    return r;
}

Polynomial top_part(const Polynomial& p) {
    if (p.is_zero()) throw std::invalid_argument("top_part: the zero polynomial has no degree");
    const auto d = static_cast<std::uint32_t>(p.degree());
    Polynomial r;
    for (const auto& [m, c] : p.terms()) {
        if (m.degree() == d) r.add_term(c, m);
    }
    return r;
}

Polynomial squared_norm(std::span<const VarId> vars) {
    Polynomial r;
    for (VarId v : vars) r.add_term(1, Monomial::variable(v, 2));
    return r;
}

SqrtPair projective_substitute(const Polynomial& g, VarId x0, std::span<const VarId> shared) {
    if (g.is_zero()) throw std::invalid_argument("projective_substitute: zero polynomial");
    for (VarId v : g.variables()) {
        if (v != x0 && std::find(shared.begin(), shared.end(), v) == shared.end()) {
            throw std::invalid_argument("projective_substitute: variable outside x0 and the shared set");
        }
    }
    const auto deg = static_cast<std::uint32_t>(g.degree());
    const Polynomial one_plus_norm = Polynomial(1) + squared_norm(shared);

    // Powers of (1 + |x|^2) are reused across terms.
    std::vector<Polynomial> powers{Polynomial(1)};
    SqrtPair out;
    for (const auto& [m, c] : g.terms()) {
        const auto gap = deg - m.degree();
        const auto k = gap / 2;
        while (powers.size() <= k) powers.push_back(powers.back() * one_plus_norm);
        auto exps = m.exponents();
        if (x0 < exps.size()) exps[x0] = 0;
        Polynomial t = Polynomial::term(c, Monomial(std::move(exps))) * powers[k];
        if (gap % 2 == 0) {
            out.h1 += t;
        } else {
            out.h2 += t;
        }
    }
    return out;
}

double eval_sqrtpair(const SqrtPair& h, std::span<const VarId> shared, std::span<const double> point) {
    if (point.size() != shared.size()) {
        throw std::invalid_argument("eval_sqrtpair: point dimension does not match the shared variable count");
    }
    std::size_t span = std::max(h.h1.span(), h.h2.span());
    for (VarId v : shared) span = std::max<std::size_t>(span, v + 1);
    std::vector<double> full(span, 0.0);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < shared.size(); ++i) {
        full[shared[i]] = point[i];
        norm2 += point[i] * point[i];
    }
    for (VarId v : h.h1.variables()) {
        if (std::find(shared.begin(), shared.end(), v) == shared.end()) {
            throw std::invalid_argument("eval_sqrtpair: h1 uses a non-shared variable");
        }
    }
    for (VarId v : h.h2.variables()) {
        if (std::find(shared.begin(), shared.end(), v) == shared.end()) {
            throw std::invalid_argument("eval_sqrtpair: h2 uses a non-shared variable");
        }
    }
    double value = evaluate(h.h1, full);
    if (!h.h2.is_zero()) value += std::sqrt(norm2 + 1.0) * evaluate(h.h2, full);
    return value;
}

// ---------------------------------------------------------------------------

std::string render(const Rational& q) {
    Rational c = q;
    c.canonicalize();
    return c.get_str();
}

std::string render(const Monomial& m, const VarTable& table) {
    if (m.is_one()) return "1";
    std::string out;
    for (std::size_t i = 0; i < m.span(); ++i) {
        const auto e = m.exponent(static_cast<VarId>(i));
        if (e == 0) continue;
        if (!out.empty()) out += "*";
        out += table.name(static_cast<VarId>(i));
        if (e > 1) out += "^" + std::to_string(e);
    }
    return out;
}

std::string render(const Polynomial& p, const VarTable& table) {
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [m, c] = *it;
        const bool negative = sgn(c) < 0;
        const Rational mag = negative ? Rational(-c) : c;
        if (first) {
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        first = false;
        if (m.is_one()) {
            out += render(mag);
        } else if (mag == 1) {
            out += render(m, table);
        } else {
            out += render(mag) + "*" + render(m, table);
        }
    }
    return out;
}

Rational parse_decimal(const std::string& text) {
    std::string digits;
    std::size_t frac = 0;
    bool seen_dot = false;
    bool negative = false;
    std::size_t i = 0;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        negative = text[i] == '-';
        ++i;
    }
    std::size_t exp_pos = text.find_first_of("eE", i);
    const std::string mantissa = text.substr(i, exp_pos == std::string::npos ? std::string::npos : exp_pos - i);
    for (char ch : mantissa) {
        if (ch == '.') {
            if (seen_dot) throw std::invalid_argument("malformed decimal '" + text + "'");
            seen_dot = true;
        } else if (ch >= '0' && ch <= '9') {
            digits += ch;
            if (seen_dot) ++frac;
        } else {
            throw std::invalid_argument("malformed decimal '" + text + "'");
        }
    }
    if (digits.empty()) throw std::invalid_argument("malformed decimal '" + text + "'");
    long exponent = -static_cast<long>(frac);
    if (exp_pos != std::string::npos) exponent += std::stol(text.substr(exp_pos + 1));
    mpz_class num(digits, 10);
    mpz_class scale = 1;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    Rational r = exponent >= 0 ? Rational(num * scale) : Rational(num, scale);
    r.canonicalize();
    return negative ? Rational(-r) : r;
}

Rational rational_from_double(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("rational_from_double: non-finite value");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return parse_decimal(std::string(buf, res.ptr));
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace homsos
