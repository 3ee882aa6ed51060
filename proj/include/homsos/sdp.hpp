#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace homsos {

/// Entry of a symmetric block matrix, stored lower-triangular (row >= col).
/// An off-diagonal entry stands for both (row, col) and (col, row).
struct BlockEntry {
    int block;
    int row;
    int col;
    double value;
};

struct FreeEntry {
    int index;
    double value;
};

/// sum_b <A_b, X_b> + sum_k a_k f_k = rhs
struct Equality {
    std::vector<BlockEntry> entries;
    std::vector<FreeEntry> free;
    double rhs = 0.0;
};

/// Minimise <C, X> + c_f . f subject to the equalities, X_b PSD, f free.
struct SdpProblem {
    std::vector<int> blocks;
    int nfree = 0;
    std::vector<Equality> equalities;
    std::vector<BlockEntry> objective;
    std::vector<double> objective_free;  // empty or size nfree

    int total_psd_dim() const;
    /// Throws std::invalid_argument if an entry references an undeclared block or scalar.
    void validate() const;
};

enum class SdpStatus { Feasible, Infeasible, Unknown };

const char* to_string(SdpStatus s);

struct SolverSettings {
    double feas_tol = 1e-8;
    double psd_tol = 1e-8;
    double cert_tol = 1e-6;
    int max_iterations = 200;
    int max_psd_dim = 1000;
    int max_equalities = 20000;
    bool verbose = false;
};

struct SdpSolution {
    SdpStatus status = SdpStatus::Unknown;
    std::vector<Eigen::MatrixXd> gram;
    Eigen::VectorXd free;
    /// Dual multipliers; for Infeasible, normalised so that rhs . y = 1.
    Eigen::VectorXd y;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    std::vector<double> min_eigenvalue;
    int iterations = 0;
    std::string message;
};

/// Dense primal-dual interior-point method on the homogeneous self-dual
/// embedding, HKM search direction, Mehrotra predictor-corrector.
SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings = {});

/// max_i |<A_i, X> + a_i . f - b_i|, computed directly from the data.
double primal_residual(const SdpProblem& problem, const std::vector<Eigen::MatrixXd>& gram,
                       const Eigen::VectorXd& free);

/// sum_i y_i A_i restricted to each block, as dense symmetric matrices.
std::vector<Eigen::MatrixXd> adjoint(const SdpProblem& problem, const Eigen::VectorXd& y);

struct CertificateCheck {
    bool valid = false;
    double rhs_dot = 0.0;          // b . y before normalisation
    double min_eigenvalue = 0.0;   // of -A^*(y) after normalising b . y = 1
    double free_violation = 0.0;   // max |(B^T y)_k| after normalisation
};

/// Checks y as a Farkas certificate of primal infeasibility: -A^*(y) PSD,
/// B^T y = 0 and b . y > 0, each to `tol` after scaling to b . y = 1.
CertificateCheck check_infeasibility_certificate(const SdpProblem& problem, const Eigen::VectorXd& y,
                                                 double tol);

// SDPA sparse format ---------------------------------------------------------

/// Writes `.dat-s`. Free scalars become a trailing diagonal block holding the
/// pair (f+, f-) for each scalar; a comment line records the split.
void export_sdpa(const SdpProblem& problem, const std::filesystem::path& path);
/// Reads `.dat-s`. When the split comment is present the trailing diagonal
/// block is merged back into free scalars; any other diagonal block becomes
/// 1x1 PSD blocks.
SdpProblem import_sdpa(const std::filesystem::path& path);

/// Writes the solution in SDPA output style (`xVec`, `xMat`, `yMat`).
void export_sdpa_solution(const SdpProblem& problem, const SdpSolution& solution,
                          const std::filesystem::path& path);
/// Reads an SDPA output file for the exported form of `problem`, merges split
/// free pairs and recomputes every metric from the data.
SdpSolution import_solution(const std::filesystem::path& path, const SdpProblem& problem,
                            const SolverSettings& settings = {});

}  // namespace homsos
