#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "homsos/polynomial.hpp"

namespace homsos {

/// poly >= 0. Strict inequalities are not representable.
struct Atom {
    Polynomial poly;
};

/// Conjunction of atoms: a closed basic semialgebraic set.
struct Clause {
    std::vector<Atom> atoms;

    bool contains(std::span<const double> point, double slack = 0.0) const;
};

/// Disjunction of clauses.
struct Formula {
    std::vector<Clause> clauses;

    bool contains(std::span<const double> point, double slack = 0.0) const;
};

struct ProblemInstance {
    VarTable table;
    std::vector<VarId> shared;       // x
    std::vector<VarId> phi_private;  // y
    std::vector<VarId> psi_private;  // z
    Formula phi;
    Formula psi;

    /// Throws std::invalid_argument if the partition invariants do not hold.
    void validate() const;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Boolean structure as written, before lowering to DNF.
struct BoolExpr {
    enum class Kind { Atoms, And, Or };
    Kind kind = Kind::Atoms;
    std::vector<Atom> atoms;  // Kind::Atoms: conjunction produced by one comparison
    std::vector<BoolExpr> children;

    bool evaluate(std::span<const double> point) const;
    Formula to_dnf() const;
};

/// Parses the problem file format (declarations plus `phi :=` and `psi :=`).
ProblemInstance parse_problem(const std::string& text);
/// Parses a single boolean expression over the variables of `table`.
BoolExpr parse_bool_expr(const std::string& text, const VarTable& table);
/// Parses a polynomial expression over the variables of `table`.
Polynomial parse_polynomial(const std::string& text, const VarTable& table);

/// Canonical text form that parse_problem accepts.
std::string render_problem(const ProblemInstance& instance);
std::string render_formula(const Formula& f, const VarTable& table);

enum class Mode { Polynomial, Semialgebraic, Archimedean };

const char* to_string(Mode m);
Mode parse_mode(const std::string& text);

enum class MultiplierKind { Sos, Free };

struct Generator {
    Polynomial poly;
    MultiplierKind kind;
};

/// Variables needed to append the auxiliary generators of a clause.
struct ExtensionVars {
    VarId x0;
    VarId w;                          // used in semialgebraic mode only
    std::vector<VarId> shared;        // x
    std::vector<VarId> private_vars;  // y for phi clauses, z for psi clauses
};

/// Generators of an (already homogenized) clause followed by the auxiliary
/// generators of the mode: x0 and the unit sphere in polynomial mode; x0, w,
/// the sphere including w^2, and x0^2 + |x|^2 - w^2 in semialgebraic mode.
/// Archimedean mode appends nothing.
std::vector<Generator> clause_extension(const Clause& clause, Mode mode, const ExtensionVars& vars);

}  // namespace homsos
