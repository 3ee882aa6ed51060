#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "homsos/formula.hpp"
#include "homsos/interpolant.hpp"

namespace homsos {

using Interval = std::pair<double, double>;

/// Per-variable sampling window; variables without an entry use `fallback`.
struct SampleBox {
    Interval fallback{-10.0, 10.0};
    std::map<VarId, Interval> bounds;

    Interval get(VarId v) const;
};

/// Tightens `box` with bounds read off univariate linear atoms such as 6 - R >= 0.
SampleBox clause_box(const Clause& clause, const SampleBox& box);

struct ClauseSamples {
    std::vector<std::vector<double>> points;  // indexed by VarId; unsampled coordinates are 0
    std::uint64_t draws = 0;
    double acceptance = 0.0;
    bool boundary_fallback = false;
    SampleBox box;
};

struct SampleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform rejection sampling of the variables `vars` inside the clause box;
/// thin sets are topped up by sampling chords through accepted points with a
/// bias toward the boundary. Throws SampleError("no samples found") when
/// nothing is accepted within max(10^6, 200 n) draws.
ClauseSamples sample_clause(const Clause& clause, std::span<const VarId> vars, std::size_t table_size, int n,
                            const SampleBox& box, std::uint64_t seed);

struct Violation {
    std::string side;  // "phi" or "psi"
    int clause = 0;
    std::vector<double> point;  // shared coordinates
    double value = 0.0;
};

struct ClauseReport {
    std::string side;
    int clause = 0;
    int samples = 0;
    double acceptance = 0.0;
    bool boundary_fallback = false;
    std::string note;
};

struct SampleReport {
    int n_phi = 0;
    int n_psi = 0;
    double min_on_phi = 0.0;  // +inf without samples
    double max_on_psi = 0.0;  // -inf without samples
    std::size_t violation_count = 0;
    std::vector<Violation> violations;  // first few only
    std::vector<ClauseReport> clauses;
    SampleBox box;
    double pos_tol = 1e-7;
    bool pass = false;

    std::string text(const VarTable& table, const std::vector<VarId>& shared) const;
    nlohmann::json json(const VarTable& table, const std::vector<VarId>& shared) const;
};

struct VerifyOptions {
    int samples = 10000;  // per clause
    SampleBox box;
    std::uint64_t seed = 1;
    double pos_tol = 1e-7;
    std::size_t max_listed = 20;
};

SampleReport verify(const Interpolant& interp, const ProblemInstance& instance, const VerifyOptions& opts);

}  // namespace homsos
