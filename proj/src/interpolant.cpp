#include "homsos/interpolant.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <openssl/evp.h>

namespace homsos {

namespace {

using Coeffs = std::map<Monomial, double, GrlexLess>;

void add_scaled(Coeffs& acc, const Polynomial& p, double factor) {
    for (const auto& [m, c] : p.terms()) acc[m] += factor * c.get_d();
}

// sign * l~ (or sign * h in archimedean mode) for the given interpolant.
Polynomial lifted(const SosProgram& prog, const Interpolant& interp) {
    if (prog.mode == Mode::Archimedean) return interp.value.h1;
    const int D = prog.homogeneous_degree();
    Polynomial out;
    if (!interp.value.h1.is_zero()) out += homogenize(interp.value.h1, prog.x0, D);
    if (prog.mode == Mode::Semialgebraic && !interp.value.h2.is_zero()) {
        out += Polynomial::variable(prog.w) * homogenize(interp.value.h2, prog.x0, D - 1);
    }
    return out;
}

Polynomial known_part(const SosProgram& prog, const Rational& margin, const Rational& epsilon) {
    if (prog.mode == Mode::Archimedean) return Polynomial(-1);
    return Polynomial(epsilon) -
           Polynomial(margin) * Polynomial::term(1, Monomial::variable(prog.x0, prog.homogeneous_degree()));
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

double Interpolant::evaluate(std::span<const double> point) const { return eval_sqrtpair(value, shared, point); }

double Interpolant::evaluate_full(std::span<const double> point) const {
    std::vector<double> x(shared.size());
    for (std::size_t i = 0; i < shared.size(); ++i) x[i] = point[shared[i]];
    return evaluate(x);
}

std::pair<Interpolant, Certificate> extract(const SdpSolution& sol, const SosProgram& prog) {
    if (sol.status != SdpStatus::Feasible) {
        throw std::invalid_argument(std::string("extract: solution status is ") + to_string(sol.status));
    }
    if (static_cast<int>(sol.gram.size()) != static_cast<int>(prog.blocks.size()) || sol.free.size() != prog.nfree) {
        throw std::invalid_argument("extract: solution shape does not match the program");
    }
    const auto& monos = prog.tmpl.monomials;
    const int nm = static_cast<int>(monos.size());

    double cmax = 0.0;
    if (prog.tmpl.fixed) {
        cmax = prog.tmpl.fixed->max_abs_coefficient();
    } else {
        for (int j = 0; j < prog.tmpl.size(); ++j) cmax = std::max(cmax, std::abs(sol.free(j)));
    }
    if (!(cmax >= 1e-6)) throw std::runtime_error("degenerate (near-zero) interpolant; increase margin μ");
    const double scale = 1.0 / cmax;

    Interpolant interp;
    interp.kind = prog.mode == Mode::Semialgebraic ? InterpolantKind::Semialgebraic : InterpolantKind::Polynomial;
    interp.table = prog.table;
    interp.shared = prog.tmpl.shared;
    interp.scale = scale;
    if (prog.tmpl.fixed) {
        for (const auto& [m, c] : prog.tmpl.fixed->terms()) {
            interp.value.h1.add_term(rational_from_double(c.get_d() * scale), m);
        }
    } else {
        for (int j = 0; j < nm; ++j) interp.value.h1.add_term(rational_from_double(sol.free(j) * scale), monos[j]);
        if (prog.tmpl.has_h2) {
            for (int j = 0; j < nm; ++j) {
                interp.value.h2.add_term(rational_from_double(sol.free(nm + j) * scale), monos[j]);
            }
        }
    }

    Certificate cert;
    cert.margin = prog.margin;
    cert.epsilon = prog.epsilon;
    cert.scale = scale;
    for (const auto& id : prog.identities) {
        std::vector<SlotValue> slots;
        for (const auto& slot : id.slots) {
            SlotValue v;
            v.kind = slot.kind;
            if (slot.kind == MultiplierKind::Sos) {
                v.gram = sol.gram[slot.index] * scale;
            } else {
                v.coeffs = sol.free.segment(slot.index, static_cast<int>(slot.basis.size())) * scale;
            }
            slots.push_back(std::move(v));
        }
        cert.identities.push_back(std::move(slots));
    }
    return {std::move(interp), std::move(cert)};
}

double certificate_residual(const Certificate& cert, const SosProgram& prog, const Interpolant& interp) {
    if (cert.identities.size() != prog.identities.size()) {
        throw std::invalid_argument("certificate_residual: identity count mismatch");
    }
    const Polynomial l = lifted(prog, interp);
    const Polynomial known = known_part(prog, cert.margin, cert.epsilon);
    double worst = 0.0;
    for (std::size_t k = 0; k < prog.identities.size(); ++k) {
        const auto& id = prog.identities[k];
        const auto& vals = cert.identities[k];
        if (vals.size() != id.slots.size()) throw std::invalid_argument("certificate_residual: slot count mismatch");

        Coeffs lhs, rhs;
        add_scaled(lhs, l, id.sign);
        add_scaled(lhs, known, cert.scale);
        for (std::size_t j = 0; j < id.slots.size(); ++j) {
            const auto& slot = id.slots[j];
            const auto& v = vals[j];
            const int n = static_cast<int>(slot.basis.size());
            if (v.kind != slot.kind) throw std::invalid_argument("certificate_residual: slot kind mismatch");
            if (slot.kind == MultiplierKind::Sos) {
                if (v.gram.rows() != n || v.gram.cols() != n) {
                    throw std::invalid_argument("certificate_residual: Gram matrix size mismatch");
                }
                Coeffs sigma;
                for (int a = 0; a < n; ++a) {
                    for (int b = 0; b < n; ++b) {
                        if (v.gram(a, b) != 0.0) sigma[slot.basis[a] * slot.basis[b]] += v.gram(a, b);
                    }
                }
                for (const auto& [m, c] : sigma) {
                    for (const auto& [g, gc] : slot.generator.terms()) rhs[m * g] += c * gc.get_d();
                }
            } else {
                if (v.coeffs.size() != n) throw std::invalid_argument("certificate_residual: coefficient count mismatch");
                for (int a = 0; a < n; ++a) {
                    for (const auto& [g, gc] : slot.generator.terms()) rhs[slot.basis[a] * g] += v.coeffs(a) * gc.get_d();
                }
            }
        }
        double mag = 0.0, diff = 0.0;
        for (const auto& [m, c] : lhs) mag = std::max(mag, std::abs(c));
        for (const auto& [m, c] : rhs) mag = std::max(mag, std::abs(c));
        for (const auto& [m, c] : rhs) lhs[m] -= c;
        for (const auto& [m, c] : lhs) diff = std::max(diff, std::abs(c));
        if (mag > 0.0) worst = std::max(worst, diff / mag);
    }
    return worst;
}

std::string render_interpolant(const Interpolant& interp) {
    std::string out = "shared";
    for (std::size_t i = 0; i < interp.shared.size(); ++i) {
        out += (i ? ", " : " ") + interp.table.name(interp.shared[i]);
    }
    out += ";\n";
    if (interp.kind == InterpolantKind::Polynomial) {
        out += "h := " + render(interp.value.h1, interp.table) + ";\n";
    } else {
        out += "h1 := " + render(interp.value.h1, interp.table) + ";\n";
        out += "h2 := " + render(interp.value.h2, interp.table) + ";\n";
    }
    return out;
}

Interpolant parse_interpolant(const std::string& text, const ProblemInstance& instance) {
    std::string body;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        body += line.substr(0, line.find('#'));
        body += '\n';
    }
    Interpolant interp;
    interp.table = instance.table;
    interp.shared = instance.shared;
    bool have_h = false, have_h1 = false, have_h2 = false;
    std::istringstream stmts(body);
    for (std::string stmt; std::getline(stmts, stmt, ';');) {
        stmt = trim(stmt);
        if (stmt.empty()) continue;
        if (stmt.rfind("shared", 0) == 0) {
            std::string names = stmt.substr(6);
            for (char& ch : names) {
                if (ch == ',') ch = ' ';
            }
            std::istringstream ns(names);
            for (std::string name; ns >> name;) {
                auto id = instance.table.find(name);
                if (!id || std::find(instance.shared.begin(), instance.shared.end(), *id) == instance.shared.end()) {
                    throw std::invalid_argument("interpolant declares '" + name + "', which is not a shared variable");
                }
            }
            continue;
        }
        const auto eq = stmt.find(":=");
        if (eq == std::string::npos) throw std::invalid_argument("interpolant: expected 'name := polynomial;'");
        const std::string name = trim(stmt.substr(0, eq));
        Polynomial p;
        try {
            p = parse_polynomial(stmt.substr(eq + 2), instance.table);
        } catch (const ParseError& e) {
            throw std::invalid_argument("interpolant " + name + ": " + e.what());
        }
        for (VarId v : p.variables()) {
            if (std::find(instance.shared.begin(), instance.shared.end(), v) == instance.shared.end()) {
                throw std::invalid_argument("interpolant uses non-shared variable '" + instance.table.name(v) + "'");
            }
        }
        if (name == "h") {
            interp.value.h1 = p;
            have_h = true;
        } else if (name == "h1") {
            interp.value.h1 = p;
            have_h1 = true;
        } else if (name == "h2") {
            interp.value.h2 = p;
            have_h2 = true;
        } else {
            throw std::invalid_argument("interpolant: unknown name '" + name + "'");
        }
    }
    if (have_h == (have_h1 || have_h2)) throw std::invalid_argument("interpolant: give either h or h1 and h2");
    interp.kind = have_h ? InterpolantKind::Polynomial : InterpolantKind::Semialgebraic;
    return interp;
}

std::string display(const Polynomial& p, const VarTable& table) {
    if (p.is_zero()) return "0";
    std::string out;
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [m, c] = *it;
        const double v = c.get_d();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.8g", std::abs(v));
        if (out.empty()) {
            if (v < 0) out += "-";
        } else {
            out += v < 0 ? " - " : " + ";
        }
        if (m.is_one()) {
            out += buf;
        } else {
            out += (std::abs(v) == 1.0 ? "" : std::string(buf) + "*") + render(m, table);
        }
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string problem_digest(const ProblemInstance& instance) { return sha256_hex(render_problem(instance)); }

nlohmann::json certificate_to_json(const Certificate& cert, const SosProgram& prog, const Interpolant& interp,
                                   const ProgramSpec& spec, const ProblemInstance& instance) {
    using nlohmann::json;
    const auto& t = prog.table;
    json doc;
    doc["format"] = "homsos-certificate-1";
    doc["problem_digest"] = problem_digest(instance);
    doc["mode"] = to_string(spec.mode);
    doc["degree"] = spec.degree;
    doc["order"] = spec.order;
    doc["margin"] = render(cert.margin);
    doc["epsilon"] = render(cert.epsilon);
    doc["scale"] = cert.scale;
    doc["fixed_target"] = spec.options.fixed_target ? json(render(*spec.options.fixed_target, instance.table)) : json();
    doc["interpolant"] = render_interpolant(interp);
    json ids = json::array();
    for (std::size_t k = 0; k < prog.identities.size(); ++k) {
        const auto& id = prog.identities[k];
        json jid;
        jid["side"] = id.sign == 1 ? "phi" : "psi";
        jid["clause"] = id.clause;
        json slots = json::array();
        for (std::size_t j = 0; j < id.slots.size(); ++j) {
            const auto& slot = id.slots[j];
            const auto& v = cert.identities[k][j];
            json js;
            js["kind"] = slot.kind == MultiplierKind::Sos ? "sos" : "free";
            js["generator"] = render(slot.generator, t);
            json basis = json::array();
            for (const auto& m : slot.basis) basis.push_back(render(m, t));
            js["basis"] = std::move(basis);
            if (slot.kind == MultiplierKind::Sos) {
                json rows = json::array();
                for (int a = 0; a < v.gram.rows(); ++a) {
                    json row = json::array();
                    for (int b = 0; b <= a; ++b) row.push_back(v.gram(a, b));
                    rows.push_back(std::move(row));
                }
                js["gram_lower"] = std::move(rows);
            } else {
                json cs = json::array();
                for (int a = 0; a < v.coeffs.size(); ++a) cs.push_back(v.coeffs(a));
                js["coefficients"] = std::move(cs);
            }
            slots.push_back(std::move(js));
        }
        jid["slots"] = std::move(slots);
        ids.push_back(std::move(jid));
    }
    doc["identities"] = std::move(ids);
    return doc;
}

LoadedCertificate certificate_from_json(const nlohmann::json& doc, const ProblemInstance& instance) {
    LoadedCertificate out;
    try {
        if (doc.at("format").get<std::string>() != "homsos-certificate-1") {
            throw std::invalid_argument("malformed certificate: unknown format");
        }
        if (doc.at("problem_digest").get<std::string>() != problem_digest(instance)) {
            throw std::invalid_argument("certificate belongs to a different problem (digest mismatch)");
        }
        out.spec.mode = parse_mode(doc.at("mode").get<std::string>());
        out.spec.degree = doc.at("degree").get<int>();
        out.spec.order = doc.at("order").get<int>();
        out.spec.options.margin = Rational(doc.at("margin").get<std::string>());
        out.spec.options.epsilon = Rational(doc.at("epsilon").get<std::string>());
        out.spec.options.margin.canonicalize();
        out.spec.options.epsilon.canonicalize();
        if (!doc.at("fixed_target").is_null()) {
            out.spec.options.fixed_target = parse_polynomial(doc.at("fixed_target").get<std::string>(), instance.table);
        }
        out.program = build_program(instance, out.spec.degree, out.spec.order, out.spec.mode, out.spec.options);
        const auto& prog = out.program;
        auto& cert = out.certificate;
        cert.margin = prog.margin;
        cert.epsilon = prog.epsilon;
        cert.scale = doc.at("scale").get<double>();
        const auto& ids = doc.at("identities");
        if (ids.size() != prog.identities.size()) throw std::invalid_argument("malformed certificate: identity count");
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const auto& id = prog.identities[k];
            const auto& slots = ids[k].at("slots");
            if (slots.size() != id.slots.size()) throw std::invalid_argument("malformed certificate: slot count");
            std::vector<SlotValue> vals;
            for (std::size_t j = 0; j < slots.size(); ++j) {
                const auto& slot = id.slots[j];
                const auto& js = slots[j];
                const auto& basis = js.at("basis");
                const int n = static_cast<int>(slot.basis.size());
                if (static_cast<int>(basis.size()) != n) throw std::invalid_argument("malformed certificate: basis size");
                for (int a = 0; a < n; ++a) {
                    if (basis[a].get<std::string>() != render(slot.basis[a], prog.table)) {
                        throw std::invalid_argument("malformed certificate: basis monomial mismatch");
                    }
                }
                SlotValue v;
                v.kind = slot.kind;
                if (slot.kind == MultiplierKind::Sos) {
                    const auto& rows = js.at("gram_lower");
                    if (static_cast<int>(rows.size()) != n) throw std::invalid_argument("malformed certificate: Gram size");
                    v.gram = Eigen::MatrixXd::Zero(n, n);
                    for (int a = 0; a < n; ++a) {
                        if (static_cast<int>(rows[a].size()) != a + 1) {
                            throw std::invalid_argument("malformed certificate: Gram row length");
                        }
                        for (int b = 0; b <= a; ++b) v.gram(a, b) = v.gram(b, a) = rows[a][b].get<double>();
                    }
                } else {
                    const auto& cs = js.at("coefficients");
                    if (static_cast<int>(cs.size()) != n) throw std::invalid_argument("malformed certificate: coefficient count");
                    v.coeffs.resize(n);
                    for (int a = 0; a < n; ++a) v.coeffs(a) = cs[a].get<double>();
                }
                vals.push_back(std::move(v));
            }
            cert.identities.push_back(std::move(vals));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed certificate: ") + e.what());
    }
    return out;
}

}  // namespace homsos
