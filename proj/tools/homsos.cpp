// homsos: interpolant synthesis from the command line.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "homsos/pipeline.hpp"

using namespace homsos;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

std::map<VarId, double> parse_fixes(const std::vector<std::string>& specs, const VarTable& table) {
    std::map<VarId, double> out;
    for (const auto& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--fix expects VAR=VAL, got '" + s + "'");
        const auto id = table.find(s.substr(0, eq));
        if (!id) throw std::invalid_argument("--fix names unknown variable '" + s.substr(0, eq) + "'");
        out[*id] = parse_decimal(s.substr(eq + 1)).get_d();
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interpolants for polynomial formulas over unbounded domains via homogenized SOS programs"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string mode = "poly";
    auto* synth = app.add_subcommand("synth", "search (d, s) for a verified interpolant");
    synth->add_option("input", cfg.input, "problem file")->required();
    synth->add_option("--mode", mode, "poly, semialg or archimedean")->capture_default_str();
    synth->add_option("--degree", cfg.degree, "template degree d")->required();
    synth->add_option("--max-degree", cfg.max_degree, "largest d to try");
    synth->add_option("--order", cfg.order, "first relaxation order s");
    synth->add_option("--max-order", cfg.max_order, "largest s to try");
    synth->add_option("--margin", cfg.margin, "margin mu")->capture_default_str();
    synth->add_option("--epsilon", cfg.epsilon, "epsilon")->capture_default_str();
    synth->add_option("--target", cfg.target, "fixed h instead of a template");
    synth->add_option("--solver", cfg.solver, "embedded or sdpa-export")->capture_default_str();
    synth->add_option("--seed", cfg.seed, "sampling seed")->capture_default_str();
    synth->add_option("--samples", cfg.samples, "samples per clause")->capture_default_str();
    synth->add_option("--box", cfg.box, "LO:HI or VAR=LO:HI, repeatable");
    synth->add_option("--out", cfg.out, "artifact prefix");
    synth->add_option("--feas-tol", cfg.settings.feas_tol, "solver feasibility tolerance")->capture_default_str();
    synth->add_option("--max-iterations", cfg.settings.max_iterations, "solver iteration cap")->capture_default_str();
    synth->add_flag("--verbose", cfg.settings.verbose, "solver trace on stderr");

    std::string interp_path, problem_path, cert_path, check_out;
    VerifyOptions vopts;
    std::vector<std::string> box;
    auto* check = app.add_subcommand("check", "sample-verify an interpolant file");
    check->add_option("interpolant", interp_path, "interpolant file")->required();
    check->add_option("problem", problem_path, "problem file")->required();
    check->add_option("--certificate", cert_path, "certificate JSON from synth");
    check->add_option("--samples", vopts.samples, "samples per clause")->capture_default_str();
    check->add_option("--seed", vopts.seed, "sampling seed")->capture_default_str();
    check->add_option("--box", box, "LO:HI or VAR=LO:HI, repeatable");
    check->add_option("--out", check_out, "report prefix");

    PlotOptions popts;
    std::string svg_path;
    std::vector<std::string> fixes;
    auto* plot = app.add_subcommand("plot", "SVG portrait of phi, psi and the sign of h");
    plot->add_option("problem", problem_path, "problem file")->required();
    plot->add_option("interpolant", interp_path, "interpolant file")->required();
    plot->add_option("--out", svg_path, "SVG path")->required();
    plot->add_option("--resolution", popts.resolution, "grid cells per side")->capture_default_str();
    plot->add_option("--box", box, "LO:HI or VAR=LO:HI, repeatable");
    plot->add_option("--fix", fixes, "VAR=VAL, repeatable");
    plot->add_option("--seed", popts.seed, "seed for private coordinates")->capture_default_str();

    RunConfig xcfg;
    std::string xmode = "poly", sdpa_out;
    auto* xport = app.add_subcommand("export-sdpa", "write the SDP of one (d, s) in SDPA sparse format");
    xport->add_option("problem", problem_path, "problem file")->required();
    xport->add_option("--mode", xmode, "poly, semialg or archimedean")->capture_default_str();
    xport->add_option("--degree", xcfg.degree, "template degree d")->required();
    xport->add_option("--order", xcfg.order, "relaxation order s");
    xport->add_option("--margin", xcfg.margin, "margin mu")->capture_default_str();
    xport->add_option("--epsilon", xcfg.epsilon, "epsilon")->capture_default_str();
    xport->add_option("--target", xcfg.target, "fixed h instead of a template");
    xport->add_option("--out", sdpa_out, ".dat-s path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*synth) {
            cfg.mode = parse_mode(mode);
            const std::string text = read_file(cfg.input);
            const ProblemInstance inst = parse_problem(text);
            const SynthResult r = run_synth(inst, text, cfg);
            std::cout << r.report_text;
            for (const auto& a : r.attempts) {
                if (a.seconds > 0) std::printf("time d=%d s=%d: %.3f s\n", a.degree, a.order, a.seconds);
            }
            if (!cfg.out.empty()) write_artifacts(r, cfg.out);
            return r.exit_code;
        }
        if (*check) {
            const std::string ptext = read_file(problem_path);
            const ProblemInstance inst = parse_problem(ptext);
            const std::string itext = read_file(interp_path);
            const Interpolant interp = parse_interpolant(itext, inst);
            vopts.box = parse_box(box, inst.table);
            std::optional<nlohmann::json> cert;
            if (!cert_path.empty()) {
                try {
                    cert = nlohmann::json::parse(read_file(cert_path));
                } catch (const nlohmann::json::parse_error& e) {
                    throw std::invalid_argument(std::string("malformed certificate: ") + e.what());
                }
            }
            const CheckResult r = run_check(inst, interp, itext, cert ? &*cert : nullptr, vopts);
            std::cout << r.text;
            if (!check_out.empty()) {
                write_file(check_out + ".report.json", r.json.dump(2) + "\n");
                write_file(check_out + ".report.txt", r.text);
            }
            return r.pass ? kExitVerified : kExitExhausted;
        }
        if (*plot) {
            const ProblemInstance inst = parse_problem(read_file(problem_path));
            const Interpolant interp = parse_interpolant(read_file(interp_path), inst);
            popts.box = parse_box(box, inst.table);
            popts.fixed = parse_fixes(fixes, inst.table);
            const PlotGrid g = render_plot(inst, interp, popts);
            write_file(svg_path, g.svg);
            std::cout << "wrote " << svg_path << " (" << g.resolution << "x" << g.resolution << " over "
                      << inst.table.name(g.xvar) << ", " << inst.table.name(g.yvar) << ")\n";
            return kExitVerified;
        }
        if (*xport) {
            xcfg.mode = parse_mode(xmode);
            const ProblemInstance inst = parse_problem(read_file(problem_path));
            BuildOptions opts;
            opts.margin = parse_decimal(xcfg.margin);
            opts.epsilon = parse_decimal(xcfg.epsilon);
            if (!xcfg.target.empty()) opts.fixed_target = parse_polynomial(xcfg.target, inst.table);
            // Without --order, take the smallest order the generators allow.
            int s = orders_for(xcfg, xcfg.degree).front();
            std::optional<SosProgram> built;
            for (int tries = 0; !built; ++tries) {
                try {
                    built = build_program(inst, xcfg.degree, s, xcfg.mode, opts);
                } catch (const std::invalid_argument&) {
                    if (xcfg.order >= 0 || tries >= 8) throw;
                    ++s;
                }
            }
            const SosProgram& prog = *built;
            const SdpProblem sdp = compile_to_sdp(prog);
            if (sdpa_out.empty()) sdpa_out = std::filesystem::path(problem_path).stem().string() + ".dat-s";
            export_sdpa(sdp, sdpa_out);
            std::cout << "d=" << xcfg.degree << " s=" << s << ": " << sdp.blocks.size() << " blocks, psd "
                      << sdp.total_psd_dim() << ", " << sdp.equalities.size() << " equalities, " << sdp.nfree
                      << " free -> " << sdpa_out << "\n";
            return kExitVerified;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
