#include <map>
#include <tuple>
#include "homsos/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace homsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::Feasible: return "FEASIBLE";
        case SdpStatus::Infeasible: return "INFEASIBLE";
        case SdpStatus::Unknown: return "UNKNOWN";
    }
    return "?";
}

int SdpProblem::total_psd_dim() const { return std::accumulate(blocks.begin(), blocks.end(), 0); }

void SdpProblem::validate() const {
    auto check_entry = [&](const BlockEntry& e) {
        if (e.block < 0 || e.block >= static_cast<int>(blocks.size())) {
            throw std::invalid_argument("entry references undeclared block " + std::to_string(e.block));
        }
        const int n = blocks[e.block];
        if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n) throw std::invalid_argument("entry outside its block");
        if (e.row < e.col) throw std::invalid_argument("block entries must be lower-triangular");
    };
    for (int n : blocks) {
        if (n <= 0) throw std::invalid_argument("block dimensions must be positive");
    }
    for (const auto& eq : equalities) {
        for (const auto& e : eq.entries) check_entry(e);
        for (const auto& f : eq.free) {
            if (f.index < 0 || f.index >= nfree) throw std::invalid_argument("entry references undeclared free scalar");
        }
    }
    for (const auto& e : objective) check_entry(e);
    if (!objective_free.empty() && static_cast<int>(objective_free.size()) != nfree) {
        throw std::invalid_argument("objective_free size does not match nfree");
    }
}

namespace {

// Sorted, merged copy: the iterates then do not depend on
// the order entries were listed in (an exported and re-imported problem
// solves exactly like the original).
std::vector<BlockEntry> canonical_entries(const std::vector<BlockEntry>& in) {
    std::map<std::tuple<int, int, int>, double> acc;
    for (const auto& e : in) acc[{e.block, e.row, e.col}] += e.value;
    std::vector<BlockEntry> out;
    for (const auto& [k, v] : acc) {
        if (v != 0.0) out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
    }
    return out;
}

SdpProblem canonical(const SdpProblem& p) {
    SdpProblem out = p;
    for (auto& eq : out.equalities) {
        eq.entries = canonical_entries(eq.entries);
        std::map<int, double> acc;
        for (const auto& f : eq.free) acc[f.index] += f.value;
        eq.free.clear();
        for (const auto& [i, v] : acc) {
            if (v != 0.0) eq.free.push_back({i, v});
        }
    }
    out.objective = canonical_entries(p.objective);
    return out;
}

double sym_inner(const BlockEntry& e, const MatrixXd& Z) {
    if (e.row == e.col) return e.value * Z(e.row, e.col);
    return e.value * (Z(e.row, e.col) + Z(e.col, e.row));
}

void add_sym(MatrixXd& Z, int r, int c, double v) {
    Z(r, c) += v;
    if (r != c) Z(c, r) += v;
}

double frob(const MatrixXd& a, const MatrixXd& b) { return (a.array() * b.array()).sum(); }

double min_eig(const MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// Largest step a with X + a dX PSD (infinity if unbounded).
double max_step(const MatrixXd& X, const MatrixXd& dX) {
    Eigen::LLT<MatrixXd> llt(X);
    if (llt.info() != Eigen::Success) return 0.0;
    MatrixXd L = llt.matrixL();
    MatrixXd T = L.triangularView<Eigen::Lower>().solve(dX);
    T = L.triangularView<Eigen::Lower>().solve(T.transpose()).transpose();
    T = 0.5 * (T + T.transpose());
    const double lmin = min_eig(T);
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

struct RowEntry {
    int row;
    int p;
    int q;
    double v;
};

// Coefficient entries of one PSD block, grouped by row.
struct BlockData {
    int n = 0;
    std::vector<int> rows;
    std::vector<std::vector<RowEntry>> entries;  // parallel to rows
};

struct Component {
    std::vector<int> rows;
    std::vector<int> blocks;
    std::vector<int> cols;  // free scalars touched by these rows
    MatrixXd M;
    Eigen::LLT<MatrixXd> llt;
    MatrixXd B;  // rows x cols
    MatrixXd Z;  // M^{-1} B
};

class Kkt {
public:
    Kkt(const std::vector<BlockData>& blocks, const std::vector<std::vector<FreeEntry>>& free_rows, int m, int nfree)
        : blocks_(blocks), m_(m), nfree_(nfree) {
        // Rows sharing a block are coupled through M; split into components.
        std::vector<int> parent(m);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        for (const auto& b : blocks_) {
            for (std::size_t k = 1; k < b.rows.size(); ++k) parent[find(b.rows[k])] = find(b.rows[0]);
        }
        std::vector<int> comp_of_root(m, -1);
        comp_of_row_.assign(m, -1);
        local_.assign(m, -1);
        for (int i = 0; i < m; ++i) {
            const int r = find(i);
            if (comp_of_root[r] < 0) {
                comp_of_root[r] = static_cast<int>(comps_.size());
                comps_.emplace_back();
            }
            auto& c = comps_[comp_of_root[r]];
            comp_of_row_[i] = comp_of_root[r];
            local_[i] = static_cast<int>(c.rows.size());
            c.rows.push_back(i);
        }
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            if (blocks_[b].rows.empty()) continue;
            comps_[comp_of_row_[blocks_[b].rows[0]]].blocks.push_back(static_cast<int>(b));
        }
        for (auto& c : comps_) {
            std::vector<int> cols;
            for (int i : c.rows) {
                for (const auto& f : free_rows[i]) cols.push_back(f.index);
            }
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
            c.cols = cols;
            c.B = MatrixXd::Zero(static_cast<int>(c.rows.size()), static_cast<int>(cols.size()));
            for (std::size_t li = 0; li < c.rows.size(); ++li) {
                for (const auto& f : free_rows[c.rows[li]]) {
                    const auto pos = std::lower_bound(cols.begin(), cols.end(), f.index) - cols.begin();
                    c.B(static_cast<int>(li), static_cast<int>(pos)) += f.value;
                }
            }
        }
    }

    // Assembles M_ij = tr(A_i X A_j Sinv) and factors the saddle-point system.
    bool factor(const std::vector<MatrixXd>& X, const std::vector<MatrixXd>& Sinv) {
        for (auto& c : comps_) {
            const int mk = static_cast<int>(c.rows.size());
            c.M = MatrixXd::Zero(mk, mk);
            for (int b : c.blocks) {
                const auto& bd = blocks_[b];
                MatrixXd W(bd.n, bd.n);
                for (std::size_t a = 0; a < bd.rows.size(); ++a) {
                    W.setZero();
                    for (const auto& e : bd.entries[a]) {
                        W.noalias() += e.v * X[b].col(e.p) * Sinv[b].row(e.q);
                        if (e.p != e.q) W.noalias() += e.v * X[b].col(e.q) * Sinv[b].row(e.p);
                    }
                    const int li = local_[bd.rows[a]];
                    for (std::size_t a2 = a; a2 < bd.rows.size(); ++a2) {
                        double acc = 0.0;
                        for (const auto& e : bd.entries[a2]) {
                            acc += e.p == e.q ? e.v * W(e.p, e.p) : e.v * (W(e.p, e.q) + W(e.q, e.p));
                        }
                        const int lj = local_[bd.rows[a2]];
                        c.M(li, lj) += acc;
                        if (a2 != a) c.M(lj, li) += acc;
                    }
                }
            }
            c.M = 0.5 * (c.M + c.M.transpose());
            const double scale = std::max(1.0, c.M.diagonal().cwiseAbs().maxCoeff());
            for (int i = 0; i < mk; ++i) {
                if (c.M(i, i) <= 0.0) c.M(i, i) = 1e-10 * scale;
            }
            double reg = 0.0;
            for (int attempt = 0; attempt < 6; ++attempt) {
                MatrixXd Mr = c.M;
                if (reg > 0.0) Mr.diagonal().array() += reg;
                c.llt.compute(Mr);
                if (c.llt.info() == Eigen::Success) break;
                reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
                if (attempt == 5) return false;
            }
            if (!c.cols.empty()) c.Z = c.llt.solve(c.B);
        }
        if (nfree_ > 0) {
            MatrixXd F = MatrixXd::Zero(nfree_, nfree_);
            for (const auto& c : comps_) {
                if (c.cols.empty()) continue;
                const MatrixXd part = c.B.transpose() * c.Z;
                for (std::size_t a = 0; a < c.cols.size(); ++a) {
                    for (std::size_t b = 0; b < c.cols.size(); ++b) {
                        F(c.cols[a], c.cols[b]) += part(static_cast<int>(a), static_cast<int>(b));
                    }
                }
            }
            F = 0.5 * (F + F.transpose());
            const double scale = std::max(1e-300, F.diagonal().cwiseAbs().maxCoeff());
            F.diagonal().array() += 1e-14 * scale;
            F_ = F;
            ldlt_.compute(F);
            if (ldlt_.info() != Eigen::Success) return false;
        }
        return true;
    }

    // Solves [M B; B^T 0] [dy; df] = [r1; r2] with two refinement sweeps.
    void solve(const VectorXd& r1, const VectorXd& r2, const std::vector<std::vector<FreeEntry>>& free_rows,
               VectorXd& dy, VectorXd& df) const {
        raw_solve(r1, r2, dy, df);
        for (int sweep = 0; sweep < 2; ++sweep) {
            VectorXd e1 = r1, e2 = r2;
            apply(free_rows, dy, df, e1, e2);
            VectorXd cy, cf;
            raw_solve(e1, e2, cy, cf);
            dy += cy;
            df += cf;
        }
    }

private:
    // e1 -= M dy + B df, e2 -= B^T dy
    void apply(const std::vector<std::vector<FreeEntry>>& free_rows, const VectorXd& dy, const VectorXd& df,
               VectorXd& e1, VectorXd& e2) const {
        for (const auto& c : comps_) {
            VectorXd local(static_cast<int>(c.rows.size()));
            for (std::size_t li = 0; li < c.rows.size(); ++li) local(static_cast<int>(li)) = dy(c.rows[li]);
            const VectorXd mv = c.M * local;
            for (std::size_t li = 0; li < c.rows.size(); ++li) e1(c.rows[li]) -= mv(static_cast<int>(li));
        }
        for (int i = 0; i < m_; ++i) {
            for (const auto& f : free_rows[i]) {
                e1(i) -= f.value * df(f.index);
                e2(f.index) -= f.value * dy(i);
            }
        }
    }

    void raw_solve(const VectorXd& r1, const VectorXd& r2, VectorXd& dy, VectorXd& df) const {
        dy = VectorXd::Zero(m_);
        df = VectorXd::Zero(nfree_);
        std::vector<VectorXd> t(comps_.size());
        VectorXd rhs_f = -r2;
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            const auto& c = comps_[k];
            VectorXd local(static_cast<int>(c.rows.size()));
            for (std::size_t li = 0; li < c.rows.size(); ++li) local(static_cast<int>(li)) = r1(c.rows[li]);
            t[k] = c.llt.solve(local);
            if (!c.cols.empty()) {
                const VectorXd bt = c.B.transpose() * t[k];
                for (std::size_t a = 0; a < c.cols.size(); ++a) rhs_f(c.cols[a]) += bt(static_cast<int>(a));
            }
        }
        if (nfree_ > 0) df = ldlt_.solve(rhs_f);
        for (std::size_t k = 0; k < comps_.size(); ++k) {
            const auto& c = comps_[k];
            VectorXd local = t[k];
            if (!c.cols.empty()) {
                VectorXd dfl(static_cast<int>(c.cols.size()));
                for (std::size_t a = 0; a < c.cols.size(); ++a) dfl(static_cast<int>(a)) = df(c.cols[a]);
                local -= c.Z * dfl;
            }
            for (std::size_t li = 0; li < c.rows.size(); ++li) dy(c.rows[li]) = local(static_cast<int>(li));
        }
    }

    const std::vector<BlockData>& blocks_;
    int m_;
    int nfree_;
    std::vector<Component> comps_;
    std::vector<int> comp_of_row_;
    std::vector<int> local_;
    MatrixXd F_;
    Eigen::LDLT<MatrixXd> ldlt_;
};

// Row-scaled copy of the data with per-block access.
struct Scaled {
    int m = 0;
    int nfree = 0;
    int N = 0;
    std::vector<int> dims;
    std::vector<double> row_scale;
    VectorXd b;
    std::vector<BlockData> blocks;
    std::vector<std::vector<FreeEntry>> free_rows;
    std::vector<MatrixXd> C;
    VectorXd cf;
    bool has_objective = false;

    explicit Scaled(const SdpProblem& p) {
        m = static_cast<int>(p.equalities.size());
        nfree = p.nfree;
        dims = p.blocks;
        N = p.total_psd_dim();
        row_scale.assign(m, 1.0);
        b = VectorXd::Zero(m);
        blocks.resize(dims.size());
        for (std::size_t k = 0; k < dims.size(); ++k) blocks[k].n = dims[k];
        free_rows.resize(m);
        for (int i = 0; i < m; ++i) {
            const auto& eq = p.equalities[i];
            double mx = 0.0;
            for (const auto& e : eq.entries) mx = std::max(mx, std::abs(e.value));
            for (const auto& f : eq.free) mx = std::max(mx, std::abs(f.value));
            const double s = mx > 0.0 ? 1.0 / mx : 1.0;
            row_scale[i] = s;
            b(i) = eq.rhs * s;
            for (const auto& e : eq.entries) {
                if (e.value == 0.0) continue;
                auto& bd = blocks[e.block];
                if (bd.rows.empty() || bd.rows.back() != i) {
                    bd.rows.push_back(i);
                    bd.entries.emplace_back();
                }
                bd.entries.back().push_back(RowEntry{i, e.row, e.col, e.value * s});
            }
            for (const auto& f : eq.free) {
                if (f.value != 0.0) free_rows[i].push_back(FreeEntry{f.index, f.value * s});
            }
        }
        C.resize(dims.size());
        for (std::size_t k = 0; k < dims.size(); ++k) C[k] = MatrixXd::Zero(dims[k], dims[k]);
        for (const auto& e : p.objective) {
            add_sym(C[e.block], e.row, e.col, e.value);
            has_objective = has_objective || e.value != 0.0;
        }
        cf = VectorXd::Zero(nfree);
        for (std::size_t k = 0; k < p.objective_free.size(); ++k) {
            cf(static_cast<int>(k)) = p.objective_free[k];
            has_objective = has_objective || p.objective_free[k] != 0.0;
        }
    }

    // A(Z) + B f for general (not necessarily symmetric) block matrices Z.
    VectorXd apply(const std::vector<MatrixXd>& Z, const VectorXd* f) const {
        VectorXd out = VectorXd::Zero(m);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const auto& bd = blocks[k];
            for (std::size_t a = 0; a < bd.rows.size(); ++a) {
                double acc = 0.0;
                for (const auto& e : bd.entries[a]) {
                    acc += e.p == e.q ? e.v * Z[k](e.p, e.p) : e.v * (Z[k](e.p, e.q) + Z[k](e.q, e.p));
                }
                out(bd.rows[a]) += acc;
            }
        }
        if (f != nullptr) {
            for (int i = 0; i < m; ++i) {
                for (const auto& e : free_rows[i]) out(i) += e.value * (*f)(e.index);
            }
        }
        return out;
    }

    std::vector<MatrixXd> adjoint(const VectorXd& y) const {
        std::vector<MatrixXd> out(blocks.size());
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            out[k] = MatrixXd::Zero(dims[k], dims[k]);
            const auto& bd = blocks[k];
            for (std::size_t a = 0; a < bd.rows.size(); ++a) {
                const double yi = y(bd.rows[a]);
                if (yi == 0.0) continue;
                for (const auto& e : bd.entries[a]) add_sym(out[k], e.p, e.q, yi * e.v);
            }
        }
        return out;
    }

    VectorXd free_adjoint(const VectorXd& y) const {
        VectorXd out = VectorXd::Zero(nfree);
        for (int i = 0; i < m; ++i) {
            for (const auto& e : free_rows[i]) out(e.index) += e.value * y(i);
        }
        return out;
    }
};

struct Direction {
    std::vector<MatrixXd> dX, dS;
    VectorXd dy, df;
    double dtau = 0.0, dkappa = 0.0;
};

}  // namespace

double primal_residual(const SdpProblem& problem, const std::vector<MatrixXd>& gram, const VectorXd& free) {
    double worst = 0.0;
    for (const auto& eq : problem.equalities) {
        double acc = -eq.rhs;
        for (const auto& e : eq.entries) acc += sym_inner(e, gram[e.block]);
        for (const auto& f : eq.free) acc += f.value * free(f.index);
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

std::vector<MatrixXd> adjoint(const SdpProblem& problem, const VectorXd& y) {
    std::vector<MatrixXd> out(problem.blocks.size());
    for (std::size_t k = 0; k < problem.blocks.size(); ++k) {
        out[k] = MatrixXd::Zero(problem.blocks[k], problem.blocks[k]);
    }
    for (std::size_t i = 0; i < problem.equalities.size(); ++i) {
        for (const auto& e : problem.equalities[i].entries) {
            add_sym(out[e.block], e.row, e.col, y(static_cast<int>(i)) * e.value);
        }
    }
    return out;
}

CertificateCheck check_infeasibility_certificate(const SdpProblem& problem, const VectorXd& y, double tol) {
    CertificateCheck out;
    if (y.size() != static_cast<int>(problem.equalities.size())) return out;
    double by = 0.0;
    for (std::size_t i = 0; i < problem.equalities.size(); ++i) by += problem.equalities[i].rhs * y(static_cast<int>(i));
    out.rhs_dot = by;
    if (!(by > 0.0) || !std::isfinite(by)) return out;
    const VectorXd yn = y / by;
    const auto Aty = adjoint(problem, yn);
    out.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& m : Aty) out.min_eigenvalue = std::min(out.min_eigenvalue, min_eig(-m));
    if (Aty.empty()) out.min_eigenvalue = 0.0;
    VectorXd bty = VectorXd::Zero(problem.nfree);
    for (std::size_t i = 0; i < problem.equalities.size(); ++i) {
        for (const auto& f : problem.equalities[i].free) bty(f.index) += f.value * yn(static_cast<int>(i));
    }
    out.free_violation = problem.nfree > 0 ? bty.cwiseAbs().maxCoeff() : 0.0;
    out.valid = out.min_eigenvalue >= -tol && out.free_violation <= tol && std::isfinite(out.min_eigenvalue);
    return out;
}

SdpSolution solve(const SdpProblem& input, const SolverSettings& settings) {
    input.validate();
    const SdpProblem problem = canonical(input);
    if (problem.total_psd_dim() > settings.max_psd_dim) {
        throw std::invalid_argument("dimension limit exceeded: total PSD dimension " +
                                    std::to_string(problem.total_psd_dim()) + " > " +
                                    std::to_string(settings.max_psd_dim));
    }
    if (static_cast<int>(problem.equalities.size()) > settings.max_equalities) {
        throw std::invalid_argument("dimension limit exceeded: " + std::to_string(problem.equalities.size()) +
                                    " equalities > " + std::to_string(settings.max_equalities));
    }

    const Scaled d(problem);
    const int nb = static_cast<int>(d.dims.size());
    SdpSolution sol;

    // A row with no coefficients and a nonzero right-hand side is infeasible
    // on its own; e_i (signed) is a certificate.
    for (int i = 0; i < d.m; ++i) {
        const auto& eq = problem.equalities[i];
        const bool empty = std::all_of(eq.entries.begin(), eq.entries.end(), [](auto& e) { return e.value == 0.0; }) &&
                           std::all_of(eq.free.begin(), eq.free.end(), [](auto& f) { return f.value == 0.0; });
        if (empty && eq.rhs != 0.0) {
            VectorXd y = VectorXd::Zero(d.m);
            y(i) = eq.rhs > 0 ? 1.0 : -1.0;
            auto chk = check_infeasibility_certificate(problem, y, settings.cert_tol);
            sol.status = SdpStatus::Infeasible;
            sol.y = y / chk.rhs_dot;
            sol.message = "equality " + std::to_string(i) + " has no coefficients but a nonzero right-hand side";
            for (int k = 0; k < nb; ++k) sol.gram.push_back(MatrixXd::Zero(d.dims[k], d.dims[k]));
            sol.free = VectorXd::Zero(d.nfree);
            return sol;
        }
    }

    std::vector<MatrixXd> X(nb), S(nb), Sinv(nb);
    for (int k = 0; k < nb; ++k) {
        X[k] = MatrixXd::Identity(d.dims[k], d.dims[k]);
        S[k] = MatrixXd::Identity(d.dims[k], d.dims[k]);
    }
    VectorXd y = VectorXd::Zero(d.m), f = VectorXd::Zero(d.nfree);
    double tau = 1.0, kappa = 1.0;

    Kkt kkt(d.blocks, d.free_rows, d.m, d.nfree);
    const VectorXd row_scale = Eigen::Map<const VectorXd>(d.row_scale.data(), d.m);

    auto finish_feasible = [&](int it) {
        sol.status = SdpStatus::Feasible;
        sol.iterations = it;
        sol.gram.resize(nb);
        for (int k = 0; k < nb; ++k) sol.gram[k] = X[k] / tau;
        sol.free = f / tau;
        sol.y = y.cwiseProduct(row_scale) / tau;
    };

    // Projection onto the affine constraints in the metric of W: dX = W A*(w) W.
    // With W null the metric is the current iterate, refactored every round
    // and damped to stay inside the cone, so nearly shut directions barely move.
    // Rounds are kept while they stay PSD and improve.
    auto project = [&](std::vector<MatrixXd>& gram, VectorXd& free, const std::vector<MatrixXd>* fixed, double& res) {
        Kkt proj(d.blocks, d.free_rows, d.m, d.nfree);
        if (fixed && !proj.factor(*fixed, *fixed)) return;
        for (int round = 0; round < 40 && res > 0.01 * settings.feas_tol; ++round) {
            if (!fixed && !proj.factor(gram, gram)) return;
            const std::vector<MatrixXd>& W = fixed ? *fixed : gram;
            const VectorXd r = d.b - d.apply(gram, &free);
            VectorXd w, df;
            proj.solve(r, VectorXd::Zero(d.nfree), d.free_rows, w, df);
            const auto Aw = d.adjoint(w);
            std::vector<MatrixXd> dX(nb);
            double t = 1.0;
            for (int k = 0; k < nb; ++k) {
                dX[k] = W[k] * Aw[k] * W[k];
                dX[k] = 0.5 * (dX[k] + dX[k].transpose());
                if (!fixed) t = std::min(t, 0.95 * max_step(gram[k], dX[k]));
            }
            if (!(t > 0.0)) break;
            std::vector<MatrixXd> trial(nb);
            for (int k = 0; k < nb; ++k) trial[k] = gram[k] + t * dX[k];
            const VectorXd trial_f = free + t * df;
            if (!trial_f.allFinite()) break;
            const double after = primal_residual(problem, trial, trial_f);
            if (!(after < 0.9 * res)) break;
            double worst = std::numeric_limits<double>::infinity();
            for (int k = 0; k < nb; ++k) worst = std::min(worst, min_eig(trial[k]));
            if (settings.verbose) {
                std::fprintf(stderr, "     polish %d: step %5.3f, residual %9.3e -> %9.3e, min eig %9.3e\n", round, t, res,
                             after, worst);
            }
            if (worst < -settings.psd_tol) break;
            gram = std::move(trial);
            free = trial_f;
            res = after;
        }
    };
    auto polish = [&](std::vector<MatrixXd>& gram, VectorXd& free) {
        double res = primal_residual(problem, gram, free);
        if (d.m == 0 || res == 0.0) return res;
        project(gram, free, nullptr, res);
        double scale = 0.0;
        for (int k = 0; k < nb; ++k) scale = std::max(scale, gram[k].diagonal().maxCoeff());
        // Leftover residual may need directions the current iterate has nearly shut.
        for (double delta : {1e-6, 1e-4, 1e-2, 1.0}) {
            if (res <= settings.feas_tol) break;
            std::vector<MatrixXd> W = gram;
            for (int k = 0; k < nb; ++k) W[k].diagonal().array() += delta * std::max(scale, 1.0);
            project(gram, free, &W, res);
        }
        return res;
    };
    const double bmax = d.m > 0 ? Eigen::Map<const VectorXd>(d.b.data(), d.m).cwiseQuotient(row_scale).cwiseAbs().maxCoeff() : 0.0;

    for (int it = 0; it <= settings.max_iterations; ++it) {
        const VectorXd AX = d.apply(X, &f);
        const VectorXd Rp = AX - tau * d.b;
        std::vector<MatrixXd> Rd = d.adjoint(y);
        for (int k = 0; k < nb; ++k) Rd[k] += S[k] - tau * d.C[k];
        const VectorXd Rf = d.free_adjoint(y) - tau * d.cf;
        double cx = d.cf.dot(f), xs = 0.0;
        for (int k = 0; k < nb; ++k) {
            cx += frob(d.C[k], X[k]);
            xs += frob(X[k], S[k]);
        }
        const double by = d.b.dot(y);
        const double Rg = cx - by + kappa;
        const double mu = (xs + tau * kappa) / (d.N + 1);

        const double pres = d.m > 0 ? (Rp.cwiseQuotient(row_scale)).cwiseAbs().maxCoeff() / tau : 0.0;
        double dres = 0.0;
        for (int k = 0; k < nb; ++k) dres = std::max(dres, Rd[k].cwiseAbs().maxCoeff() / tau);
        if (d.nfree > 0) dres = std::max(dres, Rf.cwiseAbs().maxCoeff() / tau);

        if (settings.verbose) {
            double xn = 0.0;
            for (int k = 0; k < nb; ++k) xn = std::max(xn, X[k].trace());
            const double fn = d.nfree > 0 ? f.cwiseAbs().maxCoeff() : 0.0;
            std::fprintf(stderr, "%3d  mu=%9.3e  tau=%9.3e  kappa=%9.3e  pres=%9.3e  dres=%9.3e  by=%9.3e  |X|=%9.3e  |f|=%9.3e\n",
                         it, mu, tau, kappa, pres, dres, by, xn / tau, fn / tau);
        }

        bool converged = pres <= settings.feas_tol;
        if (converged && d.has_objective) {
            const double gap = std::abs(cx - by) / tau;
            converged = dres <= settings.feas_tol && gap <= settings.feas_tol * (1.0 + std::abs(cx / tau));
        }
        if (converged) {
            finish_feasible(it);
            break;
        }
        if (!d.has_objective && pres <= 0.1 * (1.0 + bmax)) {
            std::vector<MatrixXd> G(nb);
            for (int k = 0; k < nb; ++k) G[k] = X[k] / tau;
            VectorXd fv = f / tau;
            if (polish(G, fv) <= settings.feas_tol) {
                finish_feasible(it);
                sol.gram = std::move(G);
                sol.free = std::move(fv);
                sol.message = "projected onto the affine constraints";
                break;
            }
        }
        if (by > 0.0) {
            const VectorXd ycand = y.cwiseProduct(row_scale);
            const auto chk = check_infeasibility_certificate(problem, ycand, settings.cert_tol);
            if (chk.valid) {
                sol.status = SdpStatus::Infeasible;
                sol.iterations = it;
                sol.y = ycand / chk.rhs_dot;
                sol.gram.resize(nb);
                for (int k = 0; k < nb; ++k) sol.gram[k] = X[k] / tau;
                sol.free = f / tau;
                sol.message = "infeasibility certificate verified";
                break;
            }
        }
        if (it == settings.max_iterations) {
            sol.message = "iteration limit reached";
            break;
        }
        if (!(mu > 1e-300) || !std::isfinite(mu) || tau < 1e-300) {
            sol.message = "numerical breakdown: complementarity underflow";
            break;
        }

        bool ok = true;
        for (int k = 0; k < nb && ok; ++k) {
            Eigen::LLT<MatrixXd> llt(S[k]);
            if (llt.info() != Eigen::Success) {
                ok = false;
                break;
            }
            Sinv[k] = llt.solve(MatrixXd::Identity(d.dims[k], d.dims[k]));
            Sinv[k] = 0.5 * (Sinv[k] + Sinv[k].transpose());
        }
        if (!ok || !kkt.factor(X, Sinv)) {
            sol.message = "numerical breakdown: factorization failed";
            break;
        }

        // Coefficient of dtau in the reduced system and its objective pieces.
        std::vector<MatrixXd> XCS(nb);
        double h1 = 0.0;
        for (int k = 0; k < nb; ++k) {
            XCS[k] = X[k] * d.C[k] * Sinv[k];
            h1 += frob(d.C[k], XCS[k]);
        }
        const VectorXd g = d.apply(XCS, nullptr);
        VectorXd uy, uf;
        kkt.solve(d.b + g, d.cf, d.free_rows, uy, uf);

        auto direction = [&](double eta, const std::vector<MatrixXd>& Rc, double r_tk) {
            Direction dir;
            std::vector<MatrixXd> T(nb);
            double h0 = 0.0;
            for (int k = 0; k < nb; ++k) {
                T[k] = X[k] * Rd[k] * Sinv[k];
                h0 += frob(d.C[k], Rc[k]) + eta * frob(d.C[k], T[k]);
            }
            const VectorXd r1 = -eta * Rp - d.apply(Rc, nullptr) - eta * d.apply(T, nullptr);
            const VectorXd r2 = -eta * Rf;
            VectorXd py, pf;
            kkt.solve(r1, r2, d.free_rows, py, pf);
            const VectorXd gb = g - d.b;
            const double num = -eta * Rg - h0 - gb.dot(py) - d.cf.dot(pf) - r_tk / tau;
            const double den = gb.dot(uy) - h1 + d.cf.dot(uf) - kappa / tau;
            dir.dtau = num / den;
            dir.dy = py + dir.dtau * uy;
            dir.df = pf + dir.dtau * uf;
            const auto Ady = d.adjoint(dir.dy);
            dir.dS.resize(nb);
            dir.dX.resize(nb);
            for (int k = 0; k < nb; ++k) {
                dir.dS[k] = -eta * Rd[k] - Ady[k] + dir.dtau * d.C[k];
                dir.dS[k] = 0.5 * (dir.dS[k] + dir.dS[k].transpose());
                MatrixXd dx = Rc[k] - X[k] * dir.dS[k] * Sinv[k];
                dir.dX[k] = 0.5 * (dx + dx.transpose());
            }
            dir.dkappa = (r_tk - kappa * dir.dtau) / tau;
            return dir;
        };

        auto step_length = [&](const Direction& dir) {
            double a = std::numeric_limits<double>::infinity();
            for (int k = 0; k < nb; ++k) {
                a = std::min(a, max_step(X[k], dir.dX[k]));
                a = std::min(a, max_step(S[k], dir.dS[k]));
            }
            if (dir.dtau < 0) a = std::min(a, -tau / dir.dtau);
            if (dir.dkappa < 0) a = std::min(a, -kappa / dir.dkappa);
            return a;
        };

        // Predictor.
        std::vector<MatrixXd> Rc(nb);
        for (int k = 0; k < nb; ++k) Rc[k] = -X[k];
        const Direction aff = direction(1.0, Rc, -tau * kappa);
        if (!aff.dy.allFinite() || !std::isfinite(aff.dtau)) {
            sol.message = "numerical breakdown: non-finite search direction";
            break;
        }
        const double a_aff = std::min(1.0, step_length(aff));
        double mu_aff = (tau + a_aff * aff.dtau) * (kappa + a_aff * aff.dkappa);
        for (int k = 0; k < nb; ++k) mu_aff += frob(X[k] + a_aff * aff.dX[k], S[k] + a_aff * aff.dS[k]);
        mu_aff /= (d.N + 1);
        const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

        // Corrector.
        for (int k = 0; k < nb; ++k) Rc[k] = sigma * mu * Sinv[k] - X[k] - aff.dX[k] * aff.dS[k] * Sinv[k];
        const Direction dir = direction(1.0 - sigma, Rc, sigma * mu - tau * kappa - aff.dtau * aff.dkappa);
        if (!dir.dy.allFinite() || !std::isfinite(dir.dtau)) {
            sol.message = "numerical breakdown: non-finite search direction";
            break;
        }
        const double alpha = std::min(1.0, 0.98 * step_length(dir));
        if (settings.verbose) std::fprintf(stderr, "     sigma=%9.3e  alpha_aff=%9.3e  alpha=%9.3e\n", sigma, a_aff, alpha);
        if (!(alpha > 1e-12)) {
            sol.message = "numerical breakdown: step length collapsed";
            break;
        }
        for (int k = 0; k < nb; ++k) {
            X[k] += alpha * dir.dX[k];
            S[k] += alpha * dir.dS[k];
        }
        y += alpha * dir.dy;
        f += alpha * dir.df;
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        sol.iterations = it + 1;
    }

    if (sol.status == SdpStatus::Unknown && sol.gram.empty()) {
        sol.gram.resize(nb);
        for (int k = 0; k < nb; ++k) sol.gram[k] = X[k] / tau;
        sol.free = f / tau;
        sol.y = y.cwiseProduct(row_scale);
    }

    if (sol.status == SdpStatus::Feasible) polish(sol.gram, sol.free);

    sol.primal_residual = primal_residual(problem, sol.gram, sol.free);
    sol.min_eigenvalue.clear();
    for (const auto& g : sol.gram) sol.min_eigenvalue.push_back(min_eig(g));
    if (sol.status == SdpStatus::Feasible) {
        // Feasibility claims are re-checked against the raw data.
        const double worst = sol.min_eigenvalue.empty()
                                 ? 0.0
                                 : *std::min_element(sol.min_eigenvalue.begin(), sol.min_eigenvalue.end());
        if (sol.primal_residual > settings.feas_tol || worst < -settings.psd_tol) {
            sol.status = SdpStatus::Unknown;
            sol.message = "iterate failed the independent feasibility re-check";
        }
    }
    {
        const auto Aty = adjoint(problem, sol.y);
        double worst = 0.0;
        for (int k = 0; k < nb; ++k) {
            MatrixXd r = Aty[k];
            for (const auto& e : problem.objective) {
                if (e.block == k) add_sym(r, e.row, e.col, -e.value);
            }
            // The implied dual slack is -r; its negative part is the dual violation.
            worst = std::max(worst, std::max(0.0, min_eig(r)));
        }
        sol.dual_residual = worst;
    }
    return sol;
}

}  // namespace homsos
