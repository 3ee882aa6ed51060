#include "homsos/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace homsos {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Interval parse_interval(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("box interval '" + text + "' is not LO:HI");
    const double lo = parse_decimal(text.substr(0, colon)).get_d();
    const double hi = parse_decimal(text.substr(colon + 1)).get_d();
    if (!(lo < hi)) throw std::invalid_argument("empty box interval '" + text + "'");
    return {lo, hi};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string interp_display(const Interpolant& interp) {
    if (interp.kind == InterpolantKind::Polynomial) return "h = " + display(interp.value.h1, interp.table) + "\n";
    return "h1 = " + display(interp.value.h1, interp.table) + "\nh2 = " + display(interp.value.h2, interp.table) +
           "\nh = h1 + sqrt(|x|^2 + 1) * h2\n";
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["input"] = input;
    j["mode"] = to_string(mode);
    j["degree"] = degree;
    j["max_degree"] = max_degree < 0 ? degree : max_degree;
    j["order"] = order;
    j["max_order"] = max_order;
    j["margin"] = margin;
    j["epsilon"] = epsilon;
    j["target"] = target;
    j["solver"] = solver;
    j["seed"] = seed;
    j["samples"] = samples;
    j["box"] = box;
    j["out"] = out;
    j["feas_tol"] = settings.feas_tol;
    j["psd_tol"] = settings.psd_tol;
    j["max_iterations"] = settings.max_iterations;
    return j;
}

SampleBox parse_box(const std::vector<std::string>& specs, const VarTable& table) {
    SampleBox box;
    for (const auto& spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            box.fallback = parse_interval(spec);
            continue;
        }
        const std::string name = spec.substr(0, eq);
        const auto id = table.find(name);
        if (!id) throw std::invalid_argument("box names unknown variable '" + name + "'");
        box.bounds[*id] = parse_interval(spec.substr(eq + 1));
    }
    return box;
}

std::vector<int> orders_for(const RunConfig& cfg, int d) {
    const int hom = cfg.mode == Mode::Semialgebraic ? d + 1 : d;
    const int first = cfg.order >= 0 ? cfg.order : (hom + 1) / 2;
    const int last = cfg.max_order >= 0 ? cfg.max_order : (cfg.order >= 0 ? cfg.order : first + 2);
    std::vector<int> out;
    for (int s = first; s <= last; ++s) out.push_back(s);
    return out;
}

nlohmann::json Attempt::to_json() const {
    nlohmann::json j{{"degree", degree}, {"order", order}, {"outcome", outcome}, {"detail", detail}};
    if (blocks || equalities) {
        j["blocks"] = blocks;
        j["psd_dim"] = psd_dim;
        j["equalities"] = equalities;
        j["free"] = nfree;
        j["iterations"] = iterations;
        j["primal_residual"] = primal_residual;
    }
    if (certificate_residual >= 0) j["certificate_residual"] = certificate_residual;
    return j;
}

SynthResult run_synth(const ProblemInstance& instance, const std::string& input_text, const RunConfig& cfg) {
    if (cfg.degree < 0) throw std::invalid_argument("--degree is required");
    if (cfg.solver != "embedded" && cfg.solver != "sdpa-export") {
        throw std::invalid_argument("unknown solver '" + cfg.solver + "'");
    }
    BuildOptions opts;
    opts.margin = parse_decimal(cfg.margin);
    opts.epsilon = parse_decimal(cfg.epsilon);
    if (!cfg.target.empty()) opts.fixed_target = parse_polynomial(cfg.target, instance.table);
    VerifyOptions vopts;
    vopts.samples = cfg.samples;
    vopts.seed = cfg.seed;
    vopts.box = parse_box(cfg.box, instance.table);
    const int dmax = cfg.max_degree < 0 ? cfg.degree : cfg.max_degree;
    const double res_bound = 10.0 * cfg.settings.feas_tol;

    SynthResult result;
    std::optional<std::pair<int, int>> found;
    for (int d = cfg.degree; d <= dmax && !found; ++d) {
        for (int s : orders_for(cfg, d)) {
            Attempt at;
            at.degree = d;
            at.order = s;
            const auto t0 = std::chrono::steady_clock::now();
            SosProgram prog;
            try {
                prog = build_program(instance, d, s, cfg.mode, opts);
            } catch (const std::invalid_argument& e) {
                at.outcome = "skipped";
                at.detail = e.what();
                result.attempts.push_back(at);
                continue;
            }
            const SdpProblem sdp = compile_to_sdp(prog);
            at.blocks = static_cast<int>(sdp.blocks.size());
            at.psd_dim = sdp.total_psd_dim();
            at.equalities = static_cast<int>(sdp.equalities.size());
            at.nfree = sdp.nfree;
            if (cfg.solver == "sdpa-export") {
                std::string stem = cfg.out.empty() ? std::filesystem::path(cfg.input).stem().string() : cfg.out;
                const std::string path = stem + ".d" + std::to_string(d) + ".s" + std::to_string(s) + ".dat-s";
                export_sdpa(sdp, path);
                result.exported.push_back(path);
                at.outcome = "exported";
                at.detail = path;
                at.seconds = seconds_since(t0);
                result.attempts.push_back(at);
                continue;
            }
            const SdpSolution sol = solve(sdp, cfg.settings);
            at.iterations = sol.iterations;
            at.primal_residual = sol.primal_residual;
            at.outcome = to_string(sol.status);
            at.detail = sol.message;
            if (sol.status != SdpStatus::Feasible) {
                at.seconds = seconds_since(t0);
                result.attempts.push_back(at);
                continue;
            }
            std::optional<std::pair<Interpolant, Certificate>> ex;
            try {
                ex = extract(sol, prog);
            } catch (const std::runtime_error& e) {
                at.outcome = "degenerate";
                at.detail = e.what();
                at.seconds = seconds_since(t0);
                result.attempts.push_back(at);
                continue;
            }
            auto& [interp, cert] = *ex;
            at.certificate_residual = certificate_residual(cert, prog, interp);
            if (!(at.certificate_residual <= res_bound)) {
                at.outcome = "rejected";
                at.detail = "certificate residual above " + format_double(res_bound);
                at.seconds = seconds_since(t0);
                result.attempts.push_back(at);
                continue;
            }
            SampleReport rep = verify(interp, instance, vopts);
            at.seconds = seconds_since(t0);
            if (!rep.pass) {
                at.outcome = "rejected";
                at.detail = "sample check failed with " + std::to_string(rep.violation_count) + " violations";
                result.attempts.push_back(at);
                continue;
            }
            at.outcome = "verified";
            result.attempts.push_back(at);
            result.certificate = certificate_to_json(cert, prog, interp, ProgramSpec{cfg.mode, d, s, opts}, instance);
            result.interpolant = std::move(interp);
            result.verification = std::move(rep);
            found = std::make_pair(d, s);
            break;
        }
    }
    result.exit_code = found ? kExitVerified : kExitExhausted;

    auto& j = result.report;
    j["tool"] = "homsos synth";
    j["config"] = cfg.to_json();
    j["input_digest"] = sha256_hex(input_text);
    j["problem_digest"] = problem_digest(instance);
    j["attempts"] = nlohmann::json::array();
    for (const auto& a : result.attempts) j["attempts"].push_back(a.to_json());
    j["result"] = found ? "verified" : (cfg.solver == "sdpa-export" ? "exported" : "exhausted");
    std::ostringstream txt;
    txt << "input " << cfg.input << " (sha256 " << j["input_digest"].get<std::string>() << ")\n";
    txt << "mode " << to_string(cfg.mode) << ", margin " << cfg.margin << ", epsilon " << cfg.epsilon << "\n";
    for (const auto& a : result.attempts) {
        txt << "d=" << a.degree << " s=" << a.order << ": " << a.outcome;
        if (a.blocks || a.equalities) {
            txt << " [" << a.blocks << " blocks, psd " << a.psd_dim << ", " << a.equalities << " equalities, " << a.nfree
                << " free]";
        }
        if (!a.detail.empty()) txt << " " << a.detail;
        txt << "\n";
    }
    if (found) {
        j["degree"] = found->first;
        j["order"] = found->second;
        j["interpolant"] = render_interpolant(*result.interpolant);
        j["certificate_residual"] = result.attempts.back().certificate_residual;
        j["verification"] = result.verification->json(instance.table, instance.shared);
        txt << interp_display(*result.interpolant);
        txt << "certificate residual " << format_double(result.attempts.back().certificate_residual) << "\n";
        txt << result.verification->text(instance.table, instance.shared);
    } else {
        txt << (cfg.solver == "sdpa-export" ? "exported; solve externally and use check\n" : "search exhausted\n");
    }
    result.report_text = txt.str();
    return result;
}

void write_artifacts(const SynthResult& result, const std::string& prefix) {
    write_file(prefix + ".report.json", result.report.dump(2) + "\n");
    write_file(prefix + ".report.txt", result.report_text);
    if (result.interpolant) write_file(prefix + ".interp", render_interpolant(*result.interpolant));
    if (result.certificate) write_file(prefix + ".cert.json", result.certificate->dump(1) + "\n");
}

CheckResult run_check(const ProblemInstance& instance, const Interpolant& interp, const std::string& interp_text,
                      const nlohmann::json* certificate, const VerifyOptions& opts, double feas_tol) {
    CheckResult out;
    out.report = verify(interp, instance, opts);
    out.pass = out.report.pass;
    if (certificate) {
        const auto loaded = certificate_from_json(*certificate, instance);
        if (certificate->at("interpolant").get<std::string>() != render_interpolant(interp)) {
            throw std::invalid_argument("certificate was issued for a different interpolant");
        }
        out.certificate_residual = certificate_residual(loaded.certificate, loaded.program, interp);
        out.pass = out.pass && *out.certificate_residual <= 10.0 * feas_tol;
    }
    auto& j = out.json;
    j["tool"] = "homsos check";
    j["interpolant_digest"] = sha256_hex(interp_text);
    j["problem_digest"] = problem_digest(instance);
    j["seed"] = opts.seed;
    j["samples"] = opts.samples;
    j["verification"] = out.report.json(instance.table, instance.shared);
    if (out.certificate_residual) j["certificate_residual"] = *out.certificate_residual;
    j["verdict"] = out.pass ? "PASS" : "FAIL";
    out.text = interp_display(interp) + out.report.text(instance.table, instance.shared);
    if (out.certificate_residual) out.text += "certificate residual " + format_double(*out.certificate_residual) + "\n";
    out.text += std::string("overall: ") + (out.pass ? "PASS" : "FAIL") + "\n";
    return out;
}

PlotGrid render_plot(const ProblemInstance& instance, const Interpolant& interp, const PlotOptions& opts) {
    std::vector<VarId> free_shared;
    for (VarId v : instance.shared) {
        if (!opts.fixed.count(v)) free_shared.push_back(v);
    }
    if (free_shared.size() != 2) {
        throw std::invalid_argument("plot needs exactly two shared variables left free, found " +
                                    std::to_string(free_shared.size()) + " (fix the others with --fix)");
    }
    if (opts.resolution < 1) throw std::invalid_argument("plot resolution must be positive");
    PlotGrid g;
    g.resolution = opts.resolution;
    g.xvar = free_shared[0];
    g.yvar = free_shared[1];
    g.xr = opts.box.get(g.xvar);
    g.yr = opts.box.get(g.yvar);
    if (!(g.xr.first < g.xr.second) || !(g.yr.first < g.yr.second)) throw std::invalid_argument("empty plot box");
    const int n = opts.resolution;
    g.phi.assign(static_cast<std::size_t>(n) * n, 0);
    g.psi.assign(g.phi.size(), 0);
    g.positive.assign(g.phi.size(), 0);

    std::vector<double> base(instance.table.size(), 0.0);
    for (const auto& [v, val] : opts.fixed) base[v] = val;

    // Private coordinates that are not fixed are drawn per cell from the clause box.
    auto side = [&](const Formula& f, const std::vector<VarId>& priv, std::vector<char>& mask, std::uint64_t salt) {
        std::vector<VarId> loose;
        for (VarId v : priv) {
            if (!opts.fixed.count(v)) loose.push_back(v);
        }
        std::mt19937_64 rng(opts.seed ^ salt);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<SampleBox> boxes;
        for (const auto& c : f.clauses) boxes.push_back(clause_box(c, opts.box));
        const int draws = loose.empty() ? 1 : opts.private_draws;
        std::vector<double> p = base;
        for (int r = 0; r < n; ++r) {
            p[g.yvar] = g.yr.first + (g.yr.second - g.yr.first) * (r + 0.5) / n;
            for (int c = 0; c < n; ++c) {
                p[g.xvar] = g.xr.first + (g.xr.second - g.xr.first) * (c + 0.5) / n;
                bool hit = false;
                for (std::size_t k = 0; k < f.clauses.size() && !hit; ++k) {
                    for (int t = 0; t < draws && !hit; ++t) {
                        for (VarId v : loose) {
                            const auto iv = boxes[k].get(v);
                            p[v] = iv.first + (iv.second - iv.first) * unit(rng);
                        }
                        hit = f.clauses[k].contains(p);
                    }
                }
                mask[static_cast<std::size_t>(r) * n + c] = hit;
            }
        }
    };
    side(instance.phi, instance.phi_private, g.phi, 0x9e3779b97f4a7c15ULL);
    side(instance.psi, instance.psi_private, g.psi, 0xc2b2ae3d27d4eb4fULL);
    {
        std::vector<double> p = base;
        for (int r = 0; r < n; ++r) {
            p[g.yvar] = g.yr.first + (g.yr.second - g.yr.first) * (r + 0.5) / n;
            for (int c = 0; c < n; ++c) {
                p[g.xvar] = g.xr.first + (g.xr.second - g.xr.first) * (c + 0.5) / n;
                g.positive[static_cast<std::size_t>(r) * n + c] = interp.evaluate_full(p) > 0.0;
            }
        }
    }

    const double px = 400.0 / n;
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\" "
           "shape-rendering=\"crispEdges\">\n";
    svg << "<title>" << instance.table.name(g.xvar) << " in [" << fmt(g.xr.first) << ", " << fmt(g.xr.second) << "], "
        << instance.table.name(g.yvar) << " in [" << fmt(g.yr.first) << ", " << fmt(g.yr.second) << "]</title>\n";
    auto layer = [&](const char* id, const char* fill, double opacity, auto&& on) {
        svg << "<g id=\"" << id << "\" fill=\"" << fill << "\" fill-opacity=\"" << opacity << "\">\n";
        for (int r = 0; r < n; ++r) {
            const double top = (n - 1 - r) * px;
            for (int c = 0; c < n;) {
                if (!on(static_cast<std::size_t>(r) * n + c)) {
                    ++c;
                    continue;
                }
                int e = c;
                while (e < n && on(static_cast<std::size_t>(r) * n + e)) ++e;
                svg << "<rect x=\"" << fmt(c * px) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt((e - c) * px)
                    << "\" height=\"" << fmt(px) << "\"/>\n";
                c = e;
            }
        }
        svg << "</g>\n";
    };
    layer("h-positive", "#add8e6", 1.0, [&](std::size_t i) { return g.positive[i] != 0; });
    layer("h-negative", "#ffff00", 1.0, [&](std::size_t i) { return g.positive[i] == 0; });
    layer("phi", "#008000", 0.6, [&](std::size_t i) { return g.phi[i] != 0; });
    layer("psi", "#ff0000", 0.6, [&](std::size_t i) { return g.psi[i] != 0; });
    svg << "</svg>\n";
    g.svg = svg.str();
    return g;
}

}  // namespace homsos
