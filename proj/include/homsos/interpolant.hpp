#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "homsos/formula.hpp"
#include "homsos/polynomial.hpp"
#include "homsos/sdp.hpp"
#include "homsos/sos_program.hpp"

namespace homsos {

enum class InterpolantKind { Polynomial, Semialgebraic };

/// h(x) = h1(x) + sqrt(|x|^2 + 1) * h2(x) over the shared variables; h2 is
/// zero for a polynomial interpolant.
struct Interpolant {
    InterpolantKind kind = InterpolantKind::Polynomial;
    VarTable table;
    std::vector<VarId> shared;
    SqrtPair value;
    /// Factor applied to the raw template coefficients.
    double scale = 1.0;

    /// `point` lists values of the shared variables in `shared` order.
    double evaluate(std::span<const double> point) const;
    /// `point` is indexed by VarId of `table` (private coordinates are ignored).
    double evaluate_full(std::span<const double> point) const;
};

struct SlotValue {
    MultiplierKind kind = MultiplierKind::Sos;
    Eigen::MatrixXd gram;    // Sos
    Eigen::VectorXd coeffs;  // Free
};

struct Certificate {
    std::vector<std::vector<SlotValue>> identities;  // parallel to SosProgram::identities
    Rational margin;
    Rational epsilon;
    double scale = 1.0;
};

/// Reads h from the template scalars, rescales h and the multipliers so that
/// the largest coefficient of h has magnitude 1.
std::pair<Interpolant, Certificate> extract(const SdpSolution& sol, const SosProgram& prog);

/// Largest coefficient mismatch over all identities, divided by the largest
/// coefficient magnitude on either side.
double certificate_residual(const Certificate& cert, const SosProgram& prog, const Interpolant& interp);

/// Canonical file form: `shared ...;` then `h := ...;` or `h1 := ...; h2 := ...;`.
std::string render_interpolant(const Interpolant& interp);
/// Parses the file form against the shared variables of `instance`.
Interpolant parse_interpolant(const std::string& text, const ProblemInstance& instance);
/// Coefficients printed with 8 significant digits.
std::string display(const Polynomial& p, const VarTable& table);

/// Hex SHA-256.
std::string sha256_hex(std::string_view data);
/// Digest of the canonical rendering of the instance.
std::string problem_digest(const ProblemInstance& instance);

struct ProgramSpec {
    Mode mode = Mode::Polynomial;
    int degree = 0;
    int order = 0;
    BuildOptions options;
};

nlohmann::json certificate_to_json(const Certificate& cert, const SosProgram& prog, const Interpolant& interp,
                                   const ProgramSpec& spec, const ProblemInstance& instance);

struct LoadedCertificate {
    ProgramSpec spec;
    SosProgram program;
    Certificate certificate;
};

/// Rebuilds the program named in the document and reads the multipliers back.
/// Throws std::invalid_argument for a malformed document or a digest mismatch.
LoadedCertificate certificate_from_json(const nlohmann::json& doc, const ProblemInstance& instance);

}  // namespace homsos
