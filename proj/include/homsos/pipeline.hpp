#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "homsos/formula.hpp"
#include "homsos/interpolant.hpp"
#include "homsos/sampling.hpp"
#include "homsos/sdp.hpp"
#include "homsos/sos_program.hpp"

namespace homsos {

enum ExitCode { kExitVerified = 0, kExitError = 1, kExitExhausted = 2 };

struct RunConfig {
    std::string input;
    Mode mode = Mode::Polynomial;
    int degree = -1;
    int max_degree = -1;  // < 0: same as degree
    int order = -1;       // < 0: smallest order the template degree allows
    int max_order = -1;   // < 0: order if given, else two above the first order
    std::string margin = "1";
    std::string epsilon = "0";
    std::string target;  // fixed h for representability runs; empty for a template
    std::string solver = "embedded";
    std::uint64_t seed = 1;
    int samples = 10000;
    std::vector<std::string> box;  // "LO:HI" or "VAR=LO:HI"
    std::string out;               // artifact prefix; empty writes nothing
    SolverSettings settings;

    nlohmann::json to_json() const;
};

/// Reads `--box` specs against the variables of `table`.
SampleBox parse_box(const std::vector<std::string>& specs, const VarTable& table);

/// Orders tried for degree d, in escalation order.
std::vector<int> orders_for(const RunConfig& cfg, int d);

struct Attempt {
    int degree = 0;
    int order = 0;
    std::string outcome;
    std::string detail;
    int blocks = 0;
    int psd_dim = 0;
    int equalities = 0;
    int nfree = 0;
    int iterations = 0;
    double primal_residual = 0.0;
    double certificate_residual = -1.0;
    double seconds = 0.0;  // wall clock, kept out of the reports

    nlohmann::json to_json() const;
};

struct SynthResult {
    int exit_code = kExitExhausted;
    std::vector<Attempt> attempts;
    std::optional<Interpolant> interpolant;
    std::optional<nlohmann::json> certificate;
    std::optional<SampleReport> verification;
    nlohmann::json report;
    std::string report_text;
    std::vector<std::string> exported;  // SDPA files written by the export solver
};

/// Escalates over (d, s): larger s first at a fixed d, then the next d. Stops
/// at the first interpolant whose certificate residual is at most
/// 10 * feas_tol and which passes the sample check.
SynthResult run_synth(const ProblemInstance& instance, const std::string& input_text, const RunConfig& cfg);

/// Writes prefix.interp, prefix.cert.json, prefix.report.json and prefix.report.txt.
void write_artifacts(const SynthResult& result, const std::string& prefix);

struct CheckResult {
    SampleReport report;
    std::optional<double> certificate_residual;
    bool pass = false;
    nlohmann::json json;
    std::string text;
};

CheckResult run_check(const ProblemInstance& instance, const Interpolant& interp, const std::string& interp_text,
                      const nlohmann::json* certificate, const VerifyOptions& opts, double feas_tol = 1e-8);

struct PlotOptions {
    int resolution = 400;
    SampleBox box;
    std::map<VarId, double> fixed;
    std::uint64_t seed = 1;
    int private_draws = 24;
};

struct PlotGrid {
    int resolution = 0;
    VarId xvar = 0;
    VarId yvar = 0;
    Interval xr, yr;
    // Row-major, row 0 at the lowest y.
    std::vector<char> phi, psi, positive;
    std::string svg;
};

/// Rasterises the projections of phi and psi and the sign of h over a grid
/// on the two shared variables left free by `fixed`.
PlotGrid render_plot(const ProblemInstance& instance, const Interpolant& interp, const PlotOptions& opts);

}  // namespace homsos
