#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <string_view>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "homsos/polynomial.hpp"
#include "homsos/sdp.hpp"

// Our X is the SDPA dual variable Y: F_i = A_i, c_i = b_i, F0 = -C.

namespace homsos {

namespace {

constexpr const char* kSplitTag = "homsos-free-split";

std::string num(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Token {
    enum Kind { Number, Open, Close, Word, End } kind;
    std::string text;
    std::size_t offset;
};

// Splits SDPA text into numbers, words and braces, remembering byte offsets.
// Commas and parentheses are separators; '*' and '"' start comment lines.
class Lexer {
public:
    Lexer(const std::string& text, std::string where) : text_(text), where_(std::move(where)) {}

    Token next() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if ((c == '*' || c == '"') && at_line_start()) {
                const auto eol = text_.find('\n', pos_);
                comments_.push_back(text_.substr(pos_ + 1, eol == std::string::npos ? std::string::npos : eol - pos_ - 1));
                pos_ = eol == std::string::npos ? text_.size() : eol + 1;
            } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')') {
                ++pos_;
            } else {
                break;
            }
        }
        if (pos_ >= text_.size()) return {Token::End, "", pos_};
        const std::size_t at = pos_;
        if (text_[pos_] == '{') return {Token::Open, std::string(1, text_[pos_++]), at};
        if (text_[pos_] == '}') return {Token::Close, std::string(1, text_[pos_++]), at};
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               std::string_view(",(){}").find(text_[pos_]) == std::string_view::npos) {
            ++pos_;
        }
        std::string word = text_.substr(at, pos_ - at);
        char* endp = nullptr;
        std::strtod(word.c_str(), &endp);
        const bool numeric = endp == word.c_str() + word.size() && !word.empty() &&
                             word.find_first_of("0123456789") != std::string::npos;
        return {numeric ? Token::Number : Token::Word, std::move(word), at};
    }

    double number(const char* what) {
        const Token t = next();
        if (t.kind == Token::End) fail(t.offset, std::string("unexpected end of file reading ") + what);
        if (t.kind != Token::Number) fail(t.offset, std::string("expected a number for ") + what + ", found '" + t.text + "'");
        return std::stod(t.text);
    }

    int integer(const char* what) {
        const std::size_t at = pos_;
        const double v = number(what);
        if (v != std::floor(v) || std::abs(v) > 1e9) fail(at, std::string("expected an integer for ") + what);
        return static_cast<int>(v);
    }

    [[noreturn]] void fail(std::size_t offset, const std::string& msg) const {
        throw std::runtime_error("parse error in " + where_ + " at byte " + std::to_string(offset) + ": " + msg);
    }

    void seek(std::size_t pos) { pos_ = pos; }
    std::size_t pos() const { return pos_; }
    const std::vector<std::string>& comments() const { return comments_; }
    const std::string& where() const { return where_; }

private:
    bool at_line_start() const {
        std::size_t i = pos_;
        while (i > 0 && (text_[i - 1] == ' ' || text_[i - 1] == '\t')) --i;
        return i == 0 || text_[i - 1] == '\n';
    }

    const std::string& text_;
    std::string where_;
    std::size_t pos_ = 0;
    std::vector<std::string> comments_;
};

// Nested brace lists as written in SDPA output files.
struct Node {
    bool leaf = false;
    double value = 0.0;
    std::size_t offset = 0;
    std::vector<Node> items;
};

Node read_list(Lexer& lx, const char* what) {
    Token t = lx.next();
    if (t.kind == Token::End) lx.fail(t.offset, std::string("unexpected end of file in ") + what);
    if (t.kind != Token::Open) lx.fail(t.offset, std::string("expected '{' in ") + what);
    Node node;
    node.offset = t.offset;
    for (;;) {
        const std::size_t save = lx.pos();
        t = lx.next();
        if (t.kind == Token::End) lx.fail(t.offset, std::string("unexpected end of file in ") + what);
        if (t.kind == Token::Close) return node;
        if (t.kind == Token::Open) {
            lx.seek(save);
            node.items.push_back(read_list(lx, what));
        } else if (t.kind == Token::Number) {
            node.items.push_back(Node{true, std::stod(t.text), t.offset, {}});
        } else {
            lx.fail(t.offset, std::string("unexpected '") + t.text + "' in " + what);
        }
    }
}

std::size_t find_key(const std::string& text, const std::string& key, const std::string& where) {
    const auto pos = text.find(key);
    if (pos == std::string::npos) {
        throw std::runtime_error("parse error in " + where + " at byte " + std::to_string(text.size()) + ": missing '" +
                                 key + "'");
    }
    const auto eq = text.find('=', pos);
    if (eq == std::string::npos) {
        throw std::runtime_error("parse error in " + where + " at byte " + std::to_string(text.size()) +
                                 ": missing '=' after '" + key + "'");
    }
    return eq + 1;
}

[[noreturn]] void mismatch(const std::string& where, const std::string& msg) {
    throw std::runtime_error("structural mismatch in " + where + ": " + msg);
}

}  // namespace

void export_sdpa(const SdpProblem& problem, const std::filesystem::path& path) {
    problem.validate();
    if (problem.blocks.empty() && problem.nfree == 0) throw std::invalid_argument("nothing to export");
    auto out = open_out(path);
    const int m = static_cast<int>(problem.equalities.size());
    const int nb = static_cast<int>(problem.blocks.size());
    if (problem.nfree > 0) {
        out << "* " << kSplitTag << " " << problem.nfree << "\n";
        out << "* free scalar k is the pair (f+, f-) at diagonal positions 2k+1, 2k+2 of the last block\n";
    }
    out << m << "\n";
    out << nb + (problem.nfree > 0 ? 1 : 0) << "\n";
    for (int k = 0; k < nb; ++k) out << (k ? " " : "") << problem.blocks[k];
    if (problem.nfree > 0) out << (nb ? " " : "") << -2 * problem.nfree;
    out << "\n";
    for (int i = 0; i < m; ++i) out << (i ? " " : "") << num(problem.equalities[i].rhs);
    out << "\n";

    auto write_entries = [&](int mat, const std::vector<BlockEntry>& entries, double sign) {
        // Merge duplicates so each (block, i, j) appears once.
        std::map<std::tuple<int, int, int>, double> merged;
        for (const auto& e : entries) merged[{e.block, e.col, e.row}] += e.value;
        for (const auto& [key, v] : merged) {
            if (v == 0.0) continue;
            const auto [b, i, j] = key;
            out << mat << " " << b + 1 << " " << i + 1 << " " << j + 1 << " " << num(sign * v) << "\n";
        }
    };
    auto write_free = [&](int mat, const std::vector<FreeEntry>& free, double sign) {
        std::map<int, double> merged;
        for (const auto& f : free) merged[f.index] += f.value;
        for (const auto& [k, v] : merged) {
            if (v == 0.0) continue;
            out << mat << " " << nb + 1 << " " << 2 * k + 1 << " " << 2 * k + 1 << " " << num(sign * v) << "\n";
            out << mat << " " << nb + 1 << " " << 2 * k + 2 << " " << 2 * k + 2 << " " << num(-sign * v) << "\n";
        }
    };

    write_entries(0, problem.objective, -1.0);
    if (!problem.objective_free.empty()) {
        std::vector<FreeEntry> cf;
        for (int k = 0; k < problem.nfree; ++k) cf.push_back({k, problem.objective_free[k]});
        write_free(0, cf, -1.0);
    }
    for (int i = 0; i < m; ++i) {
        write_entries(i + 1, problem.equalities[i].entries, 1.0);
        write_free(i + 1, problem.equalities[i].free, 1.0);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

SdpProblem import_sdpa(const std::filesystem::path& path) {
    const std::string text = slurp(path);
    Lexer lx(text, path.string());
    const int m = lx.integer("the constraint count");
    const int nblocks = lx.integer("the block count");
    if (m < 0 || nblocks < 0) lx.fail(0, "negative sizes");
    int split = -1;
    for (const auto& c : lx.comments()) {
        std::istringstream cs(c);
        std::string tag;
        if (cs >> tag && tag == kSplitTag) cs >> split;
    }
    std::vector<int> structure(nblocks);
    for (auto& s : structure) {
        const std::size_t at = lx.pos();
        s = lx.integer("the block structure");
        if (s == 0) lx.fail(at, "zero block size");
    }
    std::vector<double> c(m);
    for (auto& v : c) v = lx.number("the objective vector");

    // Map SDPA blocks onto ours.
    SdpProblem p;
    struct Target {
        bool diagonal = false;
        bool free_split = false;
        int first = 0;  // first of our block indices (diagonal) or the block index
        int size = 0;
    };
    std::vector<Target> targets(nblocks);
    for (int k = 0; k < nblocks; ++k) {
        const int s = structure[k];
        Target t;
        t.size = std::abs(s);
        if (s < 0 && k == nblocks - 1 && split > 0 && t.size == 2 * split) {
            t.diagonal = true;
            t.free_split = true;
            p.nfree = split;
        } else if (s < 0) {
            t.diagonal = true;
            t.first = static_cast<int>(p.blocks.size());
            for (int j = 0; j < t.size; ++j) p.blocks.push_back(1);
        } else {
            t.first = static_cast<int>(p.blocks.size());
            p.blocks.push_back(s);
        }
        targets[k] = t;
    }
    p.equalities.resize(m);
    for (int i = 0; i < m; ++i) p.equalities[i].rhs = c[i];

    // Split pairs accumulate as f = f+ - f-; both halves must agree.
    std::map<std::pair<int, int>, std::pair<double, double>> split_acc;
    for (;;) {
        const Token t = lx.next();
        if (t.kind == Token::End) break;
        if (t.kind != Token::Number) lx.fail(t.offset, "expected an entry line, found '" + t.text + "'");
        lx.seek(t.offset);
        const int mat = lx.integer("the matrix index");
        const int blk = lx.integer("the block index") - 1;
        int i = lx.integer("the row index") - 1;
        int j = lx.integer("the column index") - 1;
        const double v = lx.number("the entry value");
        if (mat < 0 || mat > m || blk < 0 || blk >= nblocks) lx.fail(t.offset, "entry index out of range");
        const auto& tg = targets[blk];
        if (i < 0 || j < 0 || i >= tg.size || j >= tg.size) lx.fail(t.offset, "entry position out of range");
        if (i < j) std::swap(i, j);
        const double sign = mat == 0 ? -1.0 : 1.0;
        if (tg.diagonal && i != j) lx.fail(t.offset, "off-diagonal entry in a diagonal block");
        if (tg.free_split) {
            auto& acc = split_acc[{mat, i / 2}];
            (i % 2 == 0 ? acc.first : acc.second) += sign * v;
            continue;
        }
        const BlockEntry e = tg.diagonal ? BlockEntry{tg.first + i, 0, 0, sign * v} : BlockEntry{tg.first, i, j, sign * v};
        if (mat == 0) {
            p.objective.push_back(e);
        } else {
            p.equalities[mat - 1].entries.push_back(e);
        }
    }
    for (const auto& [key, pm] : split_acc) {
        const auto [mat, k] = key;
        if (pm.first != -pm.second) {
            throw std::runtime_error("free-split pair " + std::to_string(k) + " is not antisymmetric in " + lx.where());
        }
        if (mat == 0) {
            if (p.objective_free.empty()) p.objective_free.assign(p.nfree, 0.0);
            p.objective_free[k] += pm.first;
        } else {
            p.equalities[mat - 1].free.push_back({k, pm.first});
        }
    }
    p.validate();
    return p;
}

void export_sdpa_solution(const SdpProblem& problem, const SdpSolution& solution,
                          const std::filesystem::path& path) {
    auto out = open_out(path);
    const int nb = static_cast<int>(problem.blocks.size());
    double obj = 0.0;
    for (const auto& e : problem.objective) {
        const auto& G = solution.gram[e.block];
        obj += e.row == e.col ? e.value * G(e.row, e.col) : 2.0 * e.value * G(e.row, e.col);
    }
    for (std::size_t k = 0; k < problem.objective_free.size() && k < static_cast<std::size_t>(solution.free.size()); ++k) {
        obj += problem.objective_free[k] * solution.free(static_cast<int>(k));
    }
    const char* phase = solution.status == SdpStatus::Feasible     ? "pdFEAS"
                        : solution.status == SdpStatus::Infeasible ? "pUNBD"
                                                                   : "noINFO";
    out << "phase.value  = " << phase << "\n";
    out << "objValDual   = " << num(-obj) << "\n";
    out << "xVec = \n{";
    for (int i = 0; i < solution.y.size(); ++i) out << (i ? "," : "") << num(solution.y(i));
    out << "}\n";

    auto write_blocks = [&](const char* name, auto&& block_of, auto&& split_of) {
        out << name << " = \n{\n";
        for (int k = 0; k < nb; ++k) {
            const Eigen::MatrixXd M = block_of(k);
            out << "{";
            for (int r = 0; r < M.rows(); ++r) {
                out << (r ? "," : "") << "{";
                for (int c = 0; c < M.cols(); ++c) out << (c ? "," : "") << num(M(r, c));
                out << "}";
            }
            out << "}\n";
        }
        if (problem.nfree > 0) {
            out << "{";
            for (int k = 0; k < problem.nfree; ++k) {
                const auto [pos, neg] = split_of(k);
                out << (k ? "," : "") << num(pos) << "," << num(neg);
            }
            out << "}\n";
        }
        out << "}\n";
    };
    // xMat is the SDPA primal slack, i.e. our dual slack C - A^*(y).
    const auto Aty = adjoint(problem, solution.y.size() ? solution.y : Eigen::VectorXd::Zero(problem.equalities.size()));
    write_blocks(
        "xMat",
        [&](int k) {
            Eigen::MatrixXd S = -Aty[k];
            for (const auto& e : problem.objective) {
                if (e.block != k) continue;
                S(e.row, e.col) += e.value;
                if (e.row != e.col) S(e.col, e.row) += e.value;
            }
            return S;
        },
        [&](int) { return std::pair<double, double>{0.0, 0.0}; });
    write_blocks(
        "yMat", [&](int k) { return solution.gram[k]; },
        [&](int k) {
            const double f = solution.free.size() > k ? solution.free(k) : 0.0;
            return std::pair<double, double>{std::max(f, 0.0), std::max(-f, 0.0)};
        });
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

SdpSolution import_solution(const std::filesystem::path& path, const SdpProblem& problem,
                            const SolverSettings& settings) {
    const std::string text = slurp(path);
    const std::string where = path.string();
    Lexer lx(text, where);
    SdpSolution sol;
    std::string phase = "noINFO";
    if (const auto pos = text.find("phase.value"); pos != std::string::npos) {
        lx.seek(find_key(text, "phase.value", where));
        phase = lx.next().text;
    }
    const int m = static_cast<int>(problem.equalities.size());
    lx.seek(find_key(text, "xVec", where));
    const Node xvec = read_list(lx, "xVec");
    if (static_cast<int>(xvec.items.size()) != m) {
        mismatch(where, "xVec has " + std::to_string(xvec.items.size()) + " entries, expected " + std::to_string(m));
    }
    sol.y = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
        if (!xvec.items[i].leaf) mismatch(where, "xVec is not a flat list");
        sol.y(i) = xvec.items[i].value;
    }

    lx.seek(find_key(text, "yMat", where));
    const Node ymat = read_list(lx, "yMat");
    const std::size_t nb = problem.blocks.size();
    const std::size_t expected = nb + (problem.nfree > 0 ? 1 : 0);
    if (ymat.items.size() != expected) {
        mismatch(where, "yMat has " + std::to_string(ymat.items.size()) + " blocks, expected " + std::to_string(expected));
    }
    for (std::size_t k = 0; k < nb; ++k) {
        const int n = problem.blocks[k];
        const Node& blk = ymat.items[k];
        const auto bad = [&] { mismatch(where, "yMat block " + std::to_string(k + 1) + " is not " + std::to_string(n) + "x" + std::to_string(n)); };
        if (blk.leaf || static_cast<int>(blk.items.size()) != n) bad();
        Eigen::MatrixXd G(n, n);
        for (int r = 0; r < n; ++r) {
            const Node& row = blk.items[r];
            if (row.leaf || static_cast<int>(row.items.size()) != n) bad();
            for (int c = 0; c < n; ++c) {
                if (!row.items[c].leaf) bad();
                G(r, c) = row.items[c].value;
            }
        }
        sol.gram.push_back(0.5 * (G + G.transpose()));
    }
    sol.free = Eigen::VectorXd::Zero(problem.nfree);
    if (problem.nfree > 0) {
        const Node& diag = ymat.items[nb];
        if (diag.leaf || static_cast<int>(diag.items.size()) != 2 * problem.nfree) {
            mismatch(where, "free-split block does not hold " + std::to_string(2 * problem.nfree) + " values");
        }
        for (int k = 0; k < problem.nfree; ++k) sol.free(k) = diag.items[2 * k].value - diag.items[2 * k + 1].value;
    }

    sol.primal_residual = primal_residual(problem, sol.gram, sol.free);
    double worst = 0.0;
    for (const auto& G : sol.gram) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
        const double l = G.rows() ? es.eigenvalues()(0) : 0.0;
        sol.min_eigenvalue.push_back(l);
        worst = std::min(worst, l);
    }
    sol.status = SdpStatus::Unknown;
    if ((phase == "pdFEAS" || phase == "dFEAS" || phase == "pdOPT") && sol.primal_residual <= settings.feas_tol &&
        worst >= -settings.psd_tol) {
        sol.status = SdpStatus::Feasible;
    } else if (phase == "pUNBD" || phase == "dINF" || phase == "pFEAS_dINF") {
        const auto chk = check_infeasibility_certificate(problem, sol.y, settings.cert_tol);
        if (chk.valid) {
            sol.status = SdpStatus::Infeasible;
            sol.y /= chk.rhs_dot;
        }
    }
    sol.message = "imported (" + phase + ")";
    return sol;
}

}  // namespace homsos
