#include "homsos/sampling.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <random>

namespace homsos {

Interval SampleBox::get(VarId v) const {
    auto it = bounds.find(v);
    return it == bounds.end() ? fallback : it->second;
}

SampleBox clause_box(const Clause& clause, const SampleBox& box) {
    SampleBox out = box;
    for (const auto& atom : clause.atoms) {
        const auto vars = atom.poly.variables();
        if (vars.size() != 1 || atom.poly.degree() != 1) continue;
        const VarId v = vars[0];
        const double a = atom.poly.coefficient(Monomial::variable(v)).get_d();
        const double b = atom.poly.coefficient(Monomial()).get_d();
        Interval iv = out.get(v);
        if (a > 0) {
            iv.first = std::max(iv.first, -b / a);
        } else {
            iv.second = std::min(iv.second, -b / a);
        }
        out.bounds[v] = iv;
    }
    return out;
}

ClauseSamples sample_clause(const Clause& clause, std::span<const VarId> vars, std::size_t table_size, int n,
                            const SampleBox& box, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("sample_clause: n must be positive");
    ClauseSamples out;
    out.box = clause_box(clause, box);
    for (const auto& atom : clause.atoms) {
        if (atom.poly.is_constant() && atom.poly.coefficient(Monomial()) < 0) throw SampleError("no samples found");
    }
    std::vector<Interval> iv;
    for (VarId v : vars) {
        iv.push_back(out.box.get(v));
        if (!(iv.back().first <= iv.back().second)) throw SampleError("no samples found");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::uint64_t budget = std::max<std::uint64_t>(1000000, 200ULL * static_cast<std::uint64_t>(n));
    std::vector<double> p(table_size, 0.0);
    while (out.points.size() < static_cast<std::size_t>(n) && out.draws < budget) {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            p[vars[i]] = iv[i].first + (iv[i].second - iv[i].first) * unit(rng);
        }
        ++out.draws;
        if (clause.contains(p)) out.points.push_back(p);
    }
    out.acceptance = static_cast<double>(out.points.size()) / static_cast<double>(out.draws);
    if (out.points.empty()) throw SampleError("no samples found");
    if (out.points.size() == static_cast<std::size_t>(n)) return out;

    // Thin set: walk chords through accepted points and draw near their ends.
    out.boundary_fallback = true;
    const std::size_t seeds = out.points.size();
    std::normal_distribution<double> gauss;
    auto inside = [&](const std::vector<double>& q) {
        for (std::size_t i = 0; i < vars.size(); ++i) {
            if (q[vars[i]] < iv[i].first || q[vars[i]] > iv[i].second) return false;
        }
        return clause.contains(q);
    };
    double diameter = 0.0;
    for (const auto& b : iv) diameter = std::max(diameter, b.second - b.first);
    std::uint64_t attempts = 0;
    std::vector<double> dir(table_size, 0.0), q;
    while (out.points.size() < static_cast<std::size_t>(n) && attempts++ < budget) {
        const auto& base = out.points[static_cast<std::size_t>(unit(rng) * static_cast<double>(seeds)) % seeds];
        double norm = 0.0;
        for (VarId v : vars) {
            dir[v] = gauss(rng);
            norm += dir[v] * dir[v];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        auto at = [&](double t) {
            q = base;
            for (VarId v : vars) q[v] += sign * t * dir[v] / norm;
            return inside(q);
        };
        double lo = 0.0, hi = diameter / 64.0;
        while (hi <= diameter && at(hi)) {
            lo = hi;
            hi *= 2.0;
        }
        for (int k = 0; k < 40; ++k) {
            const double mid = 0.5 * (lo + hi);
            (at(mid) ? lo : hi) = mid;
        }
        const double u = unit(rng);
        if (at(lo * (1.0 - u * u))) out.points.push_back(q);
    }
    return out;
}

SampleReport verify(const Interpolant& interp, const ProblemInstance& instance, const VerifyOptions& opts) {
    struct Job {
        const Clause* clause;
        std::string side;
        int index;
        std::vector<VarId> vars;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    std::uint64_t counter = 0;
    auto add = [&](const Formula& f, const char* side, const std::vector<VarId>& priv) {
        for (std::size_t k = 0; k < f.clauses.size(); ++k) {
            std::vector<VarId> vars = instance.shared;
            vars.insert(vars.end(), priv.begin(), priv.end());
            jobs.push_back(Job{&f.clauses[k], side, static_cast<int>(k), std::move(vars), opts.seed ^ counter++});
        }
    };
    add(instance.phi, "phi", instance.phi_private);
    add(instance.psi, "psi", instance.psi_private);

    std::vector<std::future<ClauseSamples>> futures;
    for (const auto& job : jobs) {
        futures.push_back(std::async(std::launch::async, [&instance, &opts, &job] {
            return sample_clause(*job.clause, job.vars, instance.table.size(), opts.samples, opts.box, job.seed);
        }));
    }

    SampleReport rep;
    rep.box = opts.box;
    rep.pos_tol = opts.pos_tol;
    rep.min_on_phi = std::numeric_limits<double>::infinity();
    rep.max_on_psi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& job = jobs[j];
        ClauseReport cr{job.side, job.index, 0, 0.0, false, ""};
        ClauseSamples s;
        try {
            s = futures[j].get();
        } catch (const SampleError& e) {
            cr.note = e.what();
            rep.clauses.push_back(cr);
            continue;
        }
        cr.samples = static_cast<int>(s.points.size());
        cr.acceptance = s.acceptance;
        cr.boundary_fallback = s.boundary_fallback;
        const bool phi = job.side == "phi";
        for (const auto& p : s.points) {
            const double h = interp.evaluate_full(p);
            const bool bad = phi ? !(h > opts.pos_tol) : !(h < -opts.pos_tol);
            if (phi) {
                rep.min_on_phi = std::min(rep.min_on_phi, h);
            } else {
                rep.max_on_psi = std::max(rep.max_on_psi, h);
            }
            if (!bad) continue;
            ++rep.violation_count;
            if (rep.violations.size() < opts.max_listed) {
                std::vector<double> x;
                for (VarId v : instance.shared) x.push_back(p[v]);
                rep.violations.push_back(Violation{job.side, job.index, std::move(x), h});
            }
        }
        (phi ? rep.n_phi : rep.n_psi) += cr.samples;
        rep.clauses.push_back(cr);
    }
    rep.pass = rep.min_on_phi > opts.pos_tol && rep.max_on_psi < -opts.pos_tol;
    return rep;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8g", v);
    return buf;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

std::string SampleReport::text(const VarTable& table, const std::vector<VarId>& shared) const {
    std::string out;
    out += "verdict: " + std::string(pass ? "PASS" : "FAIL") + " (pos_tol " + num(pos_tol) + ")\n";
    out += "phi samples: " + std::to_string(n_phi) + ", min h = " + (n_phi ? num(min_on_phi) : "n/a") + "\n";
    out += "psi samples: " + std::to_string(n_psi) + ", max h = " + (n_psi ? num(max_on_psi) : "n/a") + "\n";
    for (const auto& c : clauses) {
        out += "  " + c.side + "[" + std::to_string(c.clause) + "]: " + std::to_string(c.samples) + " points, acceptance " +
               num(c.acceptance) + (c.boundary_fallback ? ", boundary fallback" : "") +
               (c.note.empty() ? "" : ", " + c.note) + "\n";
    }
    out += "violations: " + std::to_string(violation_count) + "\n";
    for (const auto& v : violations) {
        out += "  " + v.side + "[" + std::to_string(v.clause) + "] at (";
        for (std::size_t i = 0; i < v.point.size(); ++i) {
            out += (i ? ", " : "") + table.name(shared[i]) + "=" + num(v.point[i]);
        }
        out += "): h = " + num(v.value) + "\n";
    }
    return out;
}

nlohmann::json SampleReport::json(const VarTable& table, const std::vector<VarId>& shared) const {
    using nlohmann::json;
    json j;
    j["verdict"] = pass ? "PASS" : "FAIL";
    j["pos_tol"] = pos_tol;
    j["n_phi"] = n_phi;
    j["n_psi"] = n_psi;
    j["min_on_phi"] = finite_or_null(min_on_phi);
    j["max_on_psi"] = finite_or_null(max_on_psi);
    json b;
    b["default"] = {box.fallback.first, box.fallback.second};
    for (const auto& [v, iv] : box.bounds) b[table.name(v)] = {iv.first, iv.second};
    j["box"] = b;
    json cs = json::array();
    for (const auto& c : clauses) {
        cs.push_back({{"side", c.side},
                      {"clause", c.clause},
                      {"samples", c.samples},
                      {"acceptance", c.acceptance},
                      {"boundary_fallback", c.boundary_fallback},
                      {"note", c.note}});
    }
    j["clauses"] = cs;
    j["violation_count"] = violation_count;
    json vs = json::array();
    for (const auto& v : violations) {
        json pt;
        for (std::size_t i = 0; i < v.point.size(); ++i) pt[table.name(shared[i])] = v.point[i];
        vs.push_back({{"side", v.side}, {"clause", v.clause}, {"point", pt}, {"value", v.value}});
    }
    j["violations"] = vs;
    return j;
}

}  // namespace homsos
