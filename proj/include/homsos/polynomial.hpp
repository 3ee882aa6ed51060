#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace homsos {

using Rational = mpq_class;
using VarId = std::uint32_t;

/// Ordered list of variable names. A VarId is an index into this table.
class VarTable {
public:
    VarTable() = default;
    explicit VarTable(std::vector<std::string> names);

    /// Adds `name`, or returns the existing id if already present.
    VarId add(const std::string& name);
    /// Adds a variable whose name does not clash with existing ones, starting from `stem`.
    VarId add_fresh(const std::string& stem);

    std::optional<VarId> find(const std::string& name) const;
    const std::string& name(VarId id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
};

/// Exponent vector with trailing zeros trimmed, so that monomials built over
/// tables of different sizes compare equal when they denote the same product.
class Monomial {
public:
    Monomial() = default;
    explicit Monomial(std::vector<std::uint32_t> exponents);

    static Monomial variable(VarId v, std::uint32_t power = 1);

    std::uint32_t exponent(VarId v) const { return v < exps_.size() ? exps_[v] : 0; }
    std::uint32_t degree() const { return degree_; }
    bool is_one() const { return exps_.empty(); }
    /// One past the largest variable index that occurs.
    std::size_t span() const { return exps_.size(); }
    const std::vector<std::uint32_t>& exponents() const { return exps_; }

    Monomial operator*(const Monomial& other) const;
    bool operator==(const Monomial& other) const { return exps_ == other.exps_; }

    double evaluate(std::span<const double> point) const;

private:
    void trim();

    std::vector<std::uint32_t> exps_;
    std::uint32_t degree_ = 0;
};

/// Graded lexicographic order: total degree first, ties broken by comparing
/// exponents of variable 0, then 1, and so on (larger exponent is larger).
struct GrlexLess {
    bool operator()(const Monomial& a, const Monomial& b) const;
};

class Polynomial {
public:
    using TermMap = std::map<Monomial, Rational, GrlexLess>;

    /// Sentinel degree of the zero polynomial.
    static constexpr int kZeroDegree = -1;

    Polynomial() = default;
    Polynomial(const Rational& c);  // NOLINT: constants convert implicitly
    Polynomial(int c) : Polynomial(Rational(c)) {}  // NOLINT

    static Polynomial variable(VarId v);
    static Polynomial term(const Rational& c, const Monomial& m);

    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    /// Total degree, or kZeroDegree for the zero polynomial.
    int degree() const;
    bool is_homogeneous() const;
    std::size_t size() const { return terms_.size(); }
    const TermMap& terms() const { return terms_; }
    Rational coefficient(const Monomial& m) const;
    /// Variables that occur with nonzero exponent, in increasing order.
    std::vector<VarId> variables() const;
    /// One past the largest variable index that occurs.
    std::size_t span() const;

    void add_term(const Rational& c, const Monomial& m);

    Polynomial operator-() const;
    Polynomial& operator+=(const Polynomial& other);
    Polynomial& operator-=(const Polynomial& other);
    Polynomial& operator*=(const Polynomial& other);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    bool operator==(const Polynomial& other) const { return terms_ == other.terms_; }

    Polynomial pow(unsigned e) const;
    /// Partial derivative with respect to `v`.
    Polynomial derivative(VarId v) const;
    /// Replaces variable `v` by the constant `value`.
    Polynomial substitute(VarId v, const Rational& value) const;

    double max_abs_coefficient() const;

private:
    TermMap terms_;
};

/// A value h1(x) + sqrt(|x|^2 + 1) * h2(x); a plain polynomial when h2 == 0.
struct SqrtPair {
    Polynomial h1;
    Polynomial h2;
};

/// Floating-point evaluation. Every variable of `p` must index into `point`.
double evaluate(const Polynomial& p, std::span<const double> point);
/// As above, but additionally requires `point.size() == table.size()`.
double evaluate(const Polynomial& p, const VarTable& table, std::span<const double> point);
/// Exact evaluation at a rational point.
Rational evaluate_exact(const Polynomial& p, std::span<const Rational> point);

/// x0^deg(f) * f(x / x0). Rejects the zero polynomial and f containing x0.
Polynomial homogenize(const Polynomial& f, VarId x0);
/// Homogenizes to a prescribed degree `target >= deg(f)`.
Polynomial homogenize(const Polynomial& f, VarId x0, int target);
/// Sum of the terms of maximal total degree. Rejects the zero polynomial.
Polynomial top_part(const Polynomial& p);

/// Rewrites sqrt(|x|^2+1)^deg(g) * g(1/sqrt(|x|^2+1), x/sqrt(|x|^2+1)) as
/// h1 + sqrt(|x|^2+1) * h2, where x are the `shared` variables.
SqrtPair projective_substitute(const Polynomial& g, VarId x0, std::span<const VarId> shared);

/// h1(p) + sqrt(|p|^2 + 1) * h2(p), where `shared[i]` is the variable set to `point[i]`.
double eval_sqrtpair(const SqrtPair& h, std::span<const VarId> shared, std::span<const double> point);

/// Sum of squares of the given variables.
Polynomial squared_norm(std::span<const VarId> vars);

std::string render(const Rational& q);
/// Canonical text: grlex-descending terms, exact rational coefficients, `*` and `^`.
std::string render(const Polynomial& p, const VarTable& table);
std::string render(const Monomial& m, const VarTable& table);

/// Exact rational from a decimal literal such as "0.9025" or "-12".
Rational parse_decimal(const std::string& text);
/// Exact rational equal to the shortest decimal that round-trips `v`.
Rational rational_from_double(double v);
/// Shortest decimal text that round-trips `v`.
std::string format_double(double v);

}  // namespace homsos
