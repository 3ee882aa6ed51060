#include "homsos/sos_program.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

namespace homsos {

namespace {

void enumerate(std::span<const VarId> vars, std::size_t pos, int remaining, std::vector<std::uint32_t>& exps,
               std::vector<Monomial>& out) {
    if (pos + 1 == vars.size()) {
        exps[vars[pos]] = static_cast<std::uint32_t>(remaining);
        out.emplace_back(exps);
        exps[vars[pos]] = 0;
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        exps[vars[pos]] = static_cast<std::uint32_t>(e);
        enumerate(vars, pos + 1, remaining - e, exps, out);
    }
    exps[vars[pos]] = 0;
}

bool trivially_true(const Polynomial& p) { return p.is_constant() && p.coefficient(Monomial()) >= 0; }

Polynomial x0_power(VarId x0, int k) { return Polynomial::term(1, Monomial::variable(x0, static_cast<std::uint32_t>(k))); }

}  // namespace

std::vector<Monomial> monomial_basis(std::span<const VarId> vars, int maxdeg) {
    if (maxdeg < 0) throw std::invalid_argument("monomial_basis: negative degree");
    std::vector<Monomial> out;
    if (vars.empty()) {
        out.emplace_back();
        return out;
    }
    VarId top = 0;
    for (VarId v : vars) top = std::max(top, v);
    std::vector<std::uint32_t> exps(top + 1, 0);
    for (int deg = 0; deg <= maxdeg; ++deg) enumerate(vars, 0, deg, exps, out);
    return out;
}

int Template::size() const {
    if (fixed) return 0;
    return static_cast<int>(monomials.size()) * (has_h2 ? 2 : 1);
}

int SosProgram::homogeneous_degree() const { return mode == Mode::Semialgebraic ? tmpl.degree + 1 : tmpl.degree; }

SosProgram build_program(const ProblemInstance& instance, int d, int s, Mode mode, const BuildOptions& opts) {
    instance.validate();
    if (d < 0 || s < 0) throw std::invalid_argument("degree and order must be nonnegative");
    if (2 * s < d) {
        throw std::invalid_argument("relaxation order too small: 2s = " + std::to_string(2 * s) + " < d = " +
                                    std::to_string(d));
    }
    SosProgram prog;
    prog.mode = mode;
    prog.order = s;
    prog.table = instance.table;
    prog.margin = mode == Mode::Archimedean ? Rational(1) : opts.margin;
    prog.epsilon = mode == Mode::Archimedean ? Rational(0) : opts.epsilon;
    prog.tmpl.shared = instance.shared;
    prog.tmpl.degree = d;
    prog.tmpl.monomials = monomial_basis(instance.shared, d);
    prog.tmpl.has_h2 = mode == Mode::Semialgebraic;
    const bool homogeneous = mode != Mode::Archimedean;
    if (homogeneous) prog.x0 = prog.table.add_fresh("x0");
    if (mode == Mode::Semialgebraic) prog.w = prog.table.add_fresh("w");
    const int D = prog.homogeneous_degree();
    if (2 * s < D) {
        throw std::invalid_argument("relaxation order too small: homogenized template degree " + std::to_string(D) +
                                    " > 2s = " + std::to_string(2 * s));
    }

    if (opts.fixed_target) {
        if (mode == Mode::Semialgebraic) throw std::invalid_argument("a fixed target requires polynomial or archimedean mode");
        for (VarId v : opts.fixed_target->variables()) {
            if (std::find(instance.shared.begin(), instance.shared.end(), v) == instance.shared.end()) {
                throw std::invalid_argument("fixed target uses non-shared variable '" + instance.table.name(v) + "'");
            }
        }
        if (opts.fixed_target->degree() > d) throw std::invalid_argument("fixed target degree exceeds d");
        prog.tmpl.fixed = *opts.fixed_target;
    }

    // Template unknowns as homogeneous forms (sign applied per identity).
    std::vector<Polynomial> unknown_forms;
    if (!prog.tmpl.fixed) {
        for (const auto& m : prog.tmpl.monomials) {
            Polynomial t = Polynomial::term(1, m);
            if (homogeneous) t *= x0_power(prog.x0, D - static_cast<int>(m.degree()));
            unknown_forms.push_back(t);
        }
        if (prog.tmpl.has_h2) {
            for (const auto& m : prog.tmpl.monomials) {
                Polynomial t = Polynomial::term(1, m) * Polynomial::variable(prog.w);
                t *= x0_power(prog.x0, D - 1 - static_cast<int>(m.degree()));
                unknown_forms.push_back(t);
            }
        }
    }
    Polynomial fixed_form;
    if (prog.tmpl.fixed) {
        fixed_form = homogeneous ? (prog.tmpl.fixed->is_zero() ? Polynomial() : homogenize(*prog.tmpl.fixed, prog.x0, D))
                                 : *prog.tmpl.fixed;
    }

    auto add_side = [&](const Formula& formula, int sign, const std::vector<VarId>& private_vars) {
        for (std::size_t k = 0; k < formula.clauses.size(); ++k) {
            SosIdentity id;
            id.sign = sign;
            id.clause = static_cast<int>(k);
            if (homogeneous) id.vars.push_back(prog.x0);
            id.vars.insert(id.vars.end(), instance.shared.begin(), instance.shared.end());
            id.vars.insert(id.vars.end(), private_vars.begin(), private_vars.end());
            if (mode == Mode::Semialgebraic) id.vars.push_back(prog.w);

            Clause lifted;
            for (const auto& atom : formula.clauses[k].atoms) {
                if (trivially_true(atom.poly)) continue;
                lifted.atoms.push_back(Atom{homogeneous ? homogenize(atom.poly, prog.x0) : atom.poly});
            }
            const auto gens = clause_extension(lifted, mode, ExtensionVars{prog.x0, prog.w, instance.shared, private_vars});

            const std::vector<Monomial> sigma0 = monomial_basis(id.vars, s);
            id.slots.push_back(MultiplierSlot{MultiplierKind::Sos, Polynomial(1), sigma0, 0});
            for (const auto& g : gens) {
                const int gd = g.poly.degree();
                if (gd > 2 * s) {
                    throw std::invalid_argument(std::string(homogeneous ? "homogenized generator" : "generator") +
                                                " degree " + std::to_string(gd) + " > 2s = " + std::to_string(2 * s));
                }
                const int bd = g.kind == MultiplierKind::Sos ? (2 * s - gd) / 2 : 2 * s - gd;
                id.slots.push_back(MultiplierSlot{g.kind, g.poly, monomial_basis(id.vars, bd), 0});
            }

            for (const auto& t : unknown_forms) id.template_terms.push_back(sign == 1 ? t : -t);
            if (homogeneous) {
                id.constant = Polynomial(prog.epsilon) - Polynomial(prog.margin) * x0_power(prog.x0, D);
            } else {
                id.constant = Polynomial(-1);
            }
            if (prog.tmpl.fixed) id.constant += sign == 1 ? fixed_form : -fixed_form;
            prog.identities.push_back(std::move(id));
        }
    };
    add_side(instance.phi, 1, instance.phi_private);
    add_side(instance.psi, -1, instance.psi_private);
    relayout(prog);
    return prog;
}

void relayout(SosProgram& program) {
    program.blocks.clear();
    program.nfree = program.tmpl.size();
    for (auto& id : program.identities) {
        for (auto& slot : id.slots) {
            if (slot.kind == MultiplierKind::Sos) {
                slot.index = static_cast<int>(program.blocks.size());
                program.blocks.push_back(static_cast<int>(slot.basis.size()));
            } else {
                slot.index = program.nfree;
                program.nfree += static_cast<int>(slot.basis.size());
            }
        }
    }
}

SdpProblem compile_to_sdp(const SosProgram& program) {
    SdpProblem p;
    p.blocks = program.blocks;
    p.nfree = program.nfree;
    for (const auto& id : program.identities) {
        std::map<Monomial, Equality, GrlexLess> rows;
        std::map<Monomial, Rational, GrlexLess> rhs;
        for (const auto& slot : id.slots) {
            const auto& basis = slot.basis;
            const int n = static_cast<int>(basis.size());
            if (slot.kind == MultiplierKind::Sos) {
                for (int a = 0; a < n; ++a) {
                    for (int b = 0; b <= a; ++b) {
                        const Monomial vv = basis[a] * basis[b];
                        for (const auto& [m, c] : slot.generator.terms()) {
                            rows[vv * m].entries.push_back(BlockEntry{slot.index, a, b, c.get_d()});
                        }
                    }
                }
            } else {
                for (int a = 0; a < n; ++a) {
                    for (const auto& [m, c] : slot.generator.terms()) {
                        rows[basis[a] * m].free.push_back(FreeEntry{slot.index + a, c.get_d()});
                    }
                }
            }
        }
        // The unknown part of the left side moves to the right with its sign flipped.
        for (std::size_t j = 0; j < id.template_terms.size(); ++j) {
            for (const auto& [m, c] : id.template_terms[j].terms()) {
                rows[m].free.push_back(FreeEntry{static_cast<int>(j), -c.get_d()});
            }
        }
        for (const auto& [m, c] : id.constant.terms()) {
            rows[m];
            rhs[m] += c;
        }
        for (auto& [m, eq] : rows) {
            auto it = rhs.find(m);
            eq.rhs = it == rhs.end() ? 0.0 : it->second.get_d();
            p.equalities.push_back(std::move(eq));
        }
    }
    return p;
}

std::string dump(const SosProgram& program) {
    const auto& t = program.table;
    std::ostringstream out;
    out << "mode " << to_string(program.mode) << ", d = " << program.tmpl.degree << ", s = " << program.order
        << ", margin " << render(program.margin) << ", epsilon " << render(program.epsilon) << "\n";
    if (program.tmpl.fixed) {
        out << "h = " << render(*program.tmpl.fixed, t) << "\n";
    } else {
        out << "template: " << program.tmpl.size() << " unknowns over monomials of degree <= " << program.tmpl.degree
            << (program.tmpl.has_h2 ? " (h1 and h2)" : "") << "\n";
    }
    for (std::size_t k = 0; k < program.identities.size(); ++k) {
        const auto& id = program.identities[k];
        out << (id.sign == 1 ? "phi" : "psi") << "[" << id.clause << "]: " << (id.sign == 1 ? "+" : "-")
            << (program.mode == Mode::Semialgebraic ? "l~" : "h~");
        if (!id.constant.is_zero()) out << " + (" << render(id.constant, t) << ")";
        out << " =";
        for (std::size_t j = 0; j < id.slots.size(); ++j) {
            const auto& slot = id.slots[j];
            const int deg = slot.basis.empty() ? 0 : static_cast<int>(slot.basis.back().degree());
            out << (j ? " +" : "") << " " << (slot.kind == MultiplierKind::Sos ? "sos" : "free") << "[" << slot.basis.size()
                << ", deg " << deg << "]";
            if (j > 0) out << "*(" << render(slot.generator, t) << ")";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace homsos
