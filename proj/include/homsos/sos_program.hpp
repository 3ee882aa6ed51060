#pragma once

#include <optional>
#include <string>
#include <vector>

#include "homsos/formula.hpp"
#include "homsos/polynomial.hpp"
#include "homsos/sdp.hpp"

namespace homsos {

/// All monomials in `vars` of total degree <= maxdeg: ascending degree, and
/// within one degree the variable listed first carries the highest power.
std::vector<Monomial> monomial_basis(std::span<const VarId> vars, int maxdeg);

/// Unknown coefficients of h (polynomial / archimedean) or of h1 and h2
/// (semialgebraic), each over `monomials`.
struct Template {
    std::vector<VarId> shared;
    int degree = 0;
    std::vector<Monomial> monomials;  // over shared variables, |alpha| <= degree
    bool has_h2 = false;
    /// When set the template has no unknowns and this polynomial is h.
    std::optional<Polynomial> fixed;

    int size() const;  // number of unknown coefficients
};

struct MultiplierSlot {
    MultiplierKind kind = MultiplierKind::Sos;
    Polynomial generator;
    std::vector<Monomial> basis;
    /// Block index (Sos) or first free scalar (Free) in the compiled SDP.
    int index = 0;
};

/// sign * l~ - margin * x0^D + epsilon = sum_k slot_k * generator_k.
/// Slot 0 is the plain SOS term with generator 1.
struct SosIdentity {
    int sign = 1;
    int clause = 0;
    std::vector<VarId> vars;  // every variable the identity may contain
    std::vector<MultiplierSlot> slots;
    /// Coefficient of template unknown j in sign * l~, homogenized.
    std::vector<Polynomial> template_terms;
    /// Known part of the left side (margin, epsilon, fixed target).
    Polynomial constant;
};

struct SosProgram {
    Mode mode = Mode::Polynomial;
    VarTable table;  // instance variables plus x0 (and w)
    VarId x0 = 0;
    VarId w = 0;
    int order = 0;
    Rational margin;
    Rational epsilon;
    Template tmpl;
    std::vector<SosIdentity> identities;
    std::vector<int> blocks;  // sizes of SOS slots in compile order
    int nfree = 0;            // template unknowns first, then Free slots

    /// Degree of the homogenized left side: d, or d + 1 with the w term.
    int homogeneous_degree() const;
};

struct BuildOptions {
    Rational margin = 1;
    Rational epsilon = 0;
    /// Replaces the template by a known h (representability experiments).
    std::optional<Polynomial> fixed_target;
};

/// Throws std::invalid_argument when 2s is smaller than d or than the degree
/// of a generator.
SosProgram build_program(const ProblemInstance& instance, int d, int s, Mode mode, const BuildOptions& opts = {});

/// Re-indexes blocks and free scalars after identities have been removed.
void relayout(SosProgram& program);

SdpProblem compile_to_sdp(const SosProgram& program);

/// One identity per line in canonical rendering.
std::string dump(const SosProgram& program);

}  // namespace homsos
