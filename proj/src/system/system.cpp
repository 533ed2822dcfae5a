#include <stdexcept>

#include "json.hpp"
#include "rdsym/system.hpp"

namespace rdsym {

namespace {

Expr sym(const std::string &s) { return Expr::symbol(s); }

Expr laplacian_jet(int dep, const JetContext &ctx) {
    Expr s;
    for (int i = 0; i < ctx.m; ++i) {
        Jet j{dep, 0, std::vector<int>(ctx.m, 0)};
        j.xs[i] = 2;
        s += jet_symbol(j, ctx);
    }
    return s;
}

Expr laplacian(const Expr &e, int m) {
    Expr s;
    for (int i = 0; i < m; ++i) s += differentiate(e, "x" + std::to_string(i + 1), 2);
    return s;
}

// u f_u + v f_v
Expr euler(const Expr &f) { return sym("u") * differentiate(f, "u") + sym("v") * differentiate(f, "v"); }

Expr dt(const Expr &e) { return differentiate(e, "t"); }

void require_triangular(const RDSystem &s, bool nonzero_a, const char *op) {
    if (s.family != Family::TriangularA) throw std::invalid_argument(std::string(op) + " needs the triangular family");
    if (nonzero_a && s.a.is_zero()) throw std::invalid_argument(std::string(op) + " needs a != 0");
}

bool vanishes(const Expr &e) { return equivalent(e, Expr()).status == EqualityStatus::Equal; }

}  // namespace

RDSystem RDSystem::triangular(int m, Expr a, Expr f1, Expr f2) {
    RDSystem s;
    s.m = m;
    s.family = Family::TriangularA;
    s.a = std::move(a);
    s.f1 = std::move(f1);
    s.f2 = std::move(f2);
    return s;
}

RDSystem RDSystem::drift(int m, Expr p, Expr f1, Expr f2) {
    RDSystem s;
    s.m = m;
    s.family = Family::NilpotentDrift;
    s.p = std::move(p);
    s.f1 = std::move(f1);
    s.f2 = std::move(f2);
    return s;
}

RDSystem RDSystem::general(int m, std::array<std::array<Expr, 2>, 2> A, Expr f1, Expr f2) {
    RDSystem s;
    s.m = m;
    s.family = Family::GeneralA;
    s.A = std::move(A);
    s.f1 = std::move(f1);
    s.f2 = std::move(f2);
    return s;
}

JetContext RDSystem::context() const {
    JetContext c;
    c.m = m;
    return c;
}

std::array<std::array<Expr, 2>, 2> RDSystem::diffusion() const {
    switch (family) {
    case Family::TriangularA:
        return {{{a, Expr()}, {Expr(1), a}}};
    case Family::GeneralA:
        return A;
    default:
        return {{{Expr(), Expr()}, {Expr(1), Expr()}}};
    }
}

std::array<Expr, 2> RDSystem::rhs(const JetContext &ctx) const {
    Expr lu = laplacian_jet(0, ctx), lv = laplacian_jet(1, ctx);
    if (family == Family::NilpotentDrift) {
        Jet vm{1, 0, std::vector<int>(ctx.m, 0)};
        vm.xs[ctx.m - 1] = 1;
        return {f1 + p * jet_symbol(vm, ctx), f2 + lu};
    }
    auto D = diffusion();
    return {f1 + D[0][0] * lu + D[0][1] * lv, f2 + D[1][0] * lu + D[1][1] * lv};
}

RDSystem substitute(const RDSystem &s, const Binding &b) {
    RDSystem r = s;
    r.a = substitute(s.a, b);
    r.p = substitute(s.p, b);
    for (auto &row : r.A)
        for (auto &e : row) e = substitute(e, b);
    r.f1 = substitute(s.f1, b);
    r.f2 = substitute(s.f2, b);
    for (auto &c : r.constraints) c = substitute(c, b);
    return r;
}

DriftNormalization drift_normalize(const std::vector<Expr> &p) {
    const std::size_t m = p.size();
    DriftNormalization out;
    Expr norm2;
    for (const auto &c : p) norm2 += c * c;
    out.rotation.assign(m, std::vector<Expr>(m, Expr()));
    for (std::size_t i = 0; i < m; ++i) out.rotation[i][i] = Expr(1);
    if (norm2.is_zero()) {
        out.degenerate = true;
        return out;
    }
    out.p = sqrt(norm2);
    // Householder reflection across w = p - |p| e_m.
    std::vector<Expr> w = p;
    w[m - 1] -= out.p;
    Expr ww;
    for (const auto &c : w) ww += c * c;
    if (ww.is_zero()) return out;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) out.rotation[i][j] -= Expr(2) * w[i] * w[j] / ww;
    return out;
}

SymmetryResidual symmetry_residual(const RDSystem &s, const Generator &x) {
    JetContext ctx = s.context();
    auto R = s.rhs(ctx);
    auto pr = prolong(x, 2, ctx);
    SymmetryResidual out;
    for (int a = 0; a < 2; ++a) {
        Jet ut{a, 1, std::vector<int>(ctx.m, 0)};
        out.raw[a] = apply(pr, jet_symbol(ut, ctx) - R[a], ctx);
    }

    std::map<Jet, Expr> memo;
    std::function<Expr(const Expr &)> eliminate;
    std::function<Expr(const Jet &)> value = [&](const Jet &j) -> Expr {
        if (j.t == 0) return jet_symbol(j, ctx);
        auto it = memo.find(j);
        if (it != memo.end()) return it->second;
        Expr v;
        Jet parent = j;
        int dir = ctx.m - 1;
        while (dir >= 0 && parent.xs[dir] == 0) --dir;
        if (dir >= 0) {
            --parent.xs[dir];
            v = eliminate(total_derivative(value(parent), dir, ctx));
        } else if (j.t == 1) {
            v = R[j.dep];
        } else {
            --parent.t;
            v = eliminate(total_derivative(value(parent), -1, ctx));
        }
        memo.emplace(j, v);
        return v;
    };
    eliminate = [&](const Expr &e) {
        Binding b;
        for (const auto &name : free_symbols(e)) {
            auto j = parse_jet(name, ctx);
            if (j && j->t > 0) b.bind(name, value(*j));
        }
        return b.empty() ? e : substitute(e, b);
    };
    for (int a = 0; a < 2; ++a)
        for (const auto &name : free_symbols(out.raw[a])) {
            auto j = parse_jet(name, ctx);
            if (j && j->t > 0) out.elimination.bind(name, value(*j));
        }
    for (int a = 0; a < 2; ++a) out.reduced[a] = substitute(out.raw[a], out.elimination);
    return out;
}

const char *to_string(Verdict v) {
    switch (v) {
    case Verdict::Holds:
        return "holds";
    case Verdict::Fails:
        return "fails";
    default:
        return "undecided";
    }
}

SymmetryReport is_symmetry(const RDSystem &s, const Generator &x, const EqualityOptions &opt) {
    SymmetryReport rep;
    rep.detail = symmetry_residual(s, x);
    rep.verdict = Verdict::Holds;
    for (int a = 0; a < 2; ++a) {
        auto r = equivalent(rep.detail.reduced[a], Expr(), opt);
        rep.residual[a] = r.difference;
        if (static_cast<int>(r.path) > static_cast<int>(rep.path)) rep.path = r.path;
        if (r.status == EqualityStatus::NotEqual) {
            rep.verdict = Verdict::Fails;
            if (r.counterexample) rep.counterexample = r.counterexample;
        } else if (r.status == EqualityStatus::Undecided && rep.verdict == Verdict::Holds) {
            rep.verdict = Verdict::Undecided;
        }
    }
    return rep;
}

Real numeric_crosscheck(const SymmetryResidual &r, std::uint64_t seed, int points) {
    std::set<std::string> syms;
    for (const auto &e : r.raw)
        for (const auto &s : free_symbols(e)) syms.insert(s);
    for (const auto &[k, v] : r.elimination.symbols) {
        syms.erase(k);
        for (const auto &s : free_symbols(v)) syms.insert(s);
    }
    std::mt19937_64 rng(seed);
    Real worst = 0;
    int done = 0, failures = 0;
    while (done < points) {
        NumericPoint p;
        for (const auto &s : syms) p.values[s] = random_rational(rng, 0, 2, 9) + Rational(1, 3);
        p.oracle = smooth_oracle(seed + 101u * static_cast<std::uint64_t>(done));
        try {
            for (const auto &[k, v] : r.elimination.symbols) p.reals[k] = eval_at(v, p).real();
            for (const auto &e : r.raw) {
                Real v = abs(eval_at(e, p).real());
                if (v > worst) worst = v;
            }
            ++done;
        } catch (const DomainError &) {
            if (++failures > 200) throw;
        }
    }
    return worst;
}

std::array<Expr, 2> classifying_residual_main(const RDSystem &s, const Expr &C1, const Expr &C2, const Expr &B1,
                                              const Expr &B2, const Expr &mu) {
    require_triangular(s, false, "classifying_residual_main");
    Expr u = sym("u"), v = sym("v");
    auto op = [&](const Expr &f) {
        return C1 * euler(f) + C2 * u * differentiate(f, "v") + B1 * differentiate(f, "u") + B2 * differentiate(f, "v");
    };
    Expr e1 = (mu + C1) * s.f1 + dt(C1) * u + dt(B1) - s.a * laplacian(B1, s.m) - op(s.f1);
    Expr e2 = (mu + C1) * s.f2 + C2 * s.f1 + dt(C2) * u + dt(C1) * v + dt(B2) - s.a * laplacian(B2, s.m) -
              laplacian(B1, s.m) - op(s.f2);
    return {e1, e2};
}

namespace {

Expr galilei_phi(const RDSystem &s, const FullSymmetryData &d) {
    Expr t = sym("t"), xsq, phi;
    for (int i = 0; i < s.m; ++i) {
        Expr xi = sym("x" + std::to_string(i + 1));
        xsq += xi * xi;
        if (!d.sigma.empty()) phi += d.sigma[i] * xi / Expr(2);
        if (!d.omega.empty()) phi += d.gamma * exp(d.gamma * t) * d.omega[i] * xi / Expr(2);
    }
    return phi + d.lambda * xsq / Expr(2);
}

}  // namespace

std::array<Expr, 2> classifying_residual_full(const RDSystem &s, const FullSymmetryData &d) {
    require_triangular(s, true, "classifying_residual_full");
    Expr u = sym("u"), v = sym("v"), t = sym("t");
    const Expr &a = s.a;
    Expr phi = galilei_phi(s, d);
    Expr lt = d.lambda * Expr(s.m) * t;
    std::array<Expr, 2> f{s.f1, s.f2}, U{u, v};
    std::array<Expr, 2> Ainv_f{s.f1 / a, s.f2 / a - s.f1 / (a * a)};
    std::array<Expr, 2> Ainv_U{u / a, v / a - u / (a * a)};
    std::array<Expr, 2> N_f{Expr(), s.f1}, N_U{Expr(), u};
    std::array<Expr, 2> diff{dt(d.B1) - a * laplacian(d.B1, s.m),
                             dt(d.B2) - laplacian(d.B1, s.m) - a * laplacian(d.B2, s.m)};
    auto op = [&](const Expr &g) {
        Expr gu = differentiate(g, "u"), gv = differentiate(g, "v");
        return d.B1 * gu + d.B2 * gv + (d.C1 + lt) * euler(g) + d.C2 * u * gv + phi * (u / a * gu + (v / a - u / (a * a)) * gv);
    };
    std::array<Expr, 2> out;
    for (int k = 0; k < 2; ++k)
        out[k] = (d.mu + d.lambda * Expr(s.m + 4) * t + d.C1) * f[k] + phi * Ainv_f[k] + d.C2 * N_f[k] +
                 dt(d.C1) * U[k] + dt(phi) * Ainv_U[k] + dt(d.C2) * N_U[k] + diff[k] - op(f[k]);
    return out;
}

Generator full_symmetry_generator(const RDSystem &s, const FullSymmetryData &d) {
    JetContext ctx = s.context();
    OperatorParams prm{{"a", s.a}, {"gamma", d.gamma}};
    Generator g = d.mu * named_operator("D", prm, ctx);
    if (!d.lambda.is_zero()) g = g + d.lambda * named_operator("K", prm, ctx);
    for (int i = 0; i < s.m; ++i) {
        std::string k = std::to_string(i + 1);
        if (!d.sigma.empty() && !d.sigma[i].is_zero()) g = g + d.sigma[i] * named_operator("G" + k, prm, ctx);
        if (!d.omega.empty() && !d.omega[i].is_zero()) g = g + d.omega[i] * named_operator("Gh" + k, prm, ctx);
    }
    g.pi[0] += d.C1 * sym("u") + d.B1;
    g.pi[1] += d.C1 * sym("v") + d.C2 * sym("u") + d.B2;
    return g;
}

std::array<Expr, 2> classifying_residual_drift(const RDSystem &s, const Expr &F, const Expr &B1, const Expr &B2,
                                               const Expr &mu) {
    if (s.family != Family::NilpotentDrift) throw std::invalid_argument("classifying_residual_drift needs the drift family");
    if (s.p != Expr(1)) throw std::invalid_argument("drift must be normalized to p = 1");
    Expr u = sym("u"), v = sym("v");
    std::string xm = "x" + std::to_string(s.m);
    auto op = [&](const Expr &f) {
        return B1 * differentiate(f, "u") + B2 * differentiate(f, "v") + F * u * differentiate(f, "u") +
               (F + mu) * v * differentiate(f, "v");
    };
    Expr e1 = (Expr(3) * mu + F) * s.f1 + dt(F) * u + dt(B1) - s.p * differentiate(B2, xm) - op(s.f1);
    Expr e2 = (Expr(4) * mu + F) * s.f2 + dt(F) * v + dt(B2) - laplacian(B1, s.m) - op(s.f2);
    return {e1, e2};
}

namespace {

void require_nilpotent(const RDSystem &s) {
    bool ok = (s.family == Family::TriangularA && s.a.is_zero()) || (s.family == Family::NilpotentDrift && s.p.is_zero());
    if (!ok) throw std::invalid_argument("classifying_residual_a0 needs a = 0 or p = 0");
}

Expr divergence(const std::vector<Expr> &h) {
    Expr d;
    for (std::size_t i = 0; i < h.size(); ++i) d += differentiate(h[i], "x" + std::to_string(i + 1));
    return d;
}

// Antiderivative in t of sums of c t^k and c exp(q t + r) terms.
Expr integrate_t(const Expr &e) {
    Expr out;
    for (const auto &term : e.terms()) {
        Expr te = Expr::from_terms({term});
        if (!depends_on(te, "t")) {
            out += te * sym("t");
            continue;
        }
        Expr rest = Expr(term.coef);
        std::optional<Rational> power;
        std::optional<Expr> rate;
        for (const auto &f : term.mono) {
            Expr fe = Expr::from_terms({Term{Rational(1), {f}}});
            if (!depends_on(fe, "t")) {
                rest *= fe;
            } else if (f.atom->kind == AtomKind::Symbol && f.exponent > 0 && f.exponent.get_den() == 1 && !power) {
                power = f.exponent;
            } else if (f.atom->kind == AtomKind::Exp && !rate) {
                Expr q = differentiate(f.atom->args[0], "t");
                if (depends_on(q, "t")) throw std::invalid_argument("cannot integrate " + to_string(te) + " in t");
                rate = q;
                rest *= fe;
            } else {
                throw std::invalid_argument("cannot integrate " + to_string(te) + " in t");
            }
        }
        if (power && rate) throw std::invalid_argument("cannot integrate " + to_string(te) + " in t");
        if (power)
            out += rest * pow(sym("t"), *power + 1) / Expr(*power + 1);
        else
            out += rest / *rate;
    }
    return out;
}

}  // namespace

std::array<Expr, 2> classifying_residual_a0(const RDSystem &s, const NilpotentSymmetryData &d) {
    require_nilpotent(s);
    JetContext ctx = s.context();
    auto h = h_field_components(d.h, ctx);
    Expr div = divergence(h);
    Expr u = sym("u"), v = sym("v");
    int m = s.m;
    auto op = [&](const Expr &f) {
        Expr fu = differentiate(f, "u"), fv = differentiate(f, "v");
        return d.B1 * fu + d.B2 * fv + d.B3 * u * fv + (d.N + Expr(m - 2) * div) * u * fu +
               (d.M + Expr(m + 2) * div) * v * fv;
    };
    // B2 and B3 may depend on u; their time derivatives are total along u_t = f1.
    Expr B2t = dt(d.B2) + differentiate(d.B2, "u") * s.f1;
    Expr B3u = d.B3 + u * differentiate(d.B3, "u");
    Expr e1 = (d.alpha + Expr(2) * d.N - d.M + Expr(m - 2) * div) * s.f1 + dt(d.N) * u + dt(d.B1) - op(s.f1);
    Expr e2 = (d.alpha + d.N + Expr(m + 2) * div) * s.f2 + B3u * s.f1 + dt(d.M) * v + dt(d.B3) * u + B2t -
              laplacian(d.B1, m) + Expr(2 - m) * laplacian(div, m) * u - op(s.f2);
    return {e1, e2};
}

Generator nilpotent_symmetry_generator(const RDSystem &s, const NilpotentSymmetryData &d) {
    require_nilpotent(s);
    JetContext ctx = s.context();
    int m = s.m;
    Generator g = d.alpha * named_operator("D", {}, ctx);
    g.eta += integrate_t(d.N - d.M);
    auto h = h_field_components(d.h, ctx);
    Expr div = divergence(h);
    for (int i = 0; i < m; ++i) g.xi[i] += Expr(2 * m) * h[i];
    Expr u = sym("u"), v = sym("v");
    g.pi[0] += (d.N + Expr(m - 2) * div) * u + d.B1;
    g.pi[1] += (d.M + Expr(m + 2) * div) * v + d.B2 + d.B3 * u;
    return g;
}

const char *to_string(Extension e) {
    switch (e) {
    case Extension::Galilei:
        return "galilei";
    case Extension::ExpGalilei:
        return "exp_galilei";
    default:
        return "conformal";
    }
}

ExtensionResult extension_check(const RDSystem &s) {
    require_triangular(s, true, "extension_check");
    ExtensionResult out;
    const Expr &a = s.a;
    Expr u = sym("u");
    out.linear = s.f1.is_zero() && s.f2.is_zero();
    auto galop = [&](const Expr &f) { return a * euler(f) - u * differentiate(f, "v"); };
    Expr g1 = a * s.f1 - galop(s.f1);
    Expr g2 = a * s.f2 - s.f1 - galop(s.f2);
    bool galilei = vanishes(g1) && vanishes(g2);
    if (galilei) out.holds.insert(Extension::Galilei);
    // g1 = -a gamma u, g2 = gamma (u - a v) for a nonzero constant gamma.
    Expr gamma = normalize(-g1 / (a * u));
    bool constant = !gamma.is_zero();
    for (const char *v : {"u", "v", "t", "x1", "x2", "x3"}) constant = constant && !depends_on(gamma, v);
    if (constant && vanishes(g2 - gamma * (u - a * sym("v")))) {
        out.holds.insert(Extension::ExpGalilei);
        out.gamma = gamma;
    }
    if (galilei) {
        Expr m(s.m);
        if (vanishes((m + Expr(4)) * s.f1 - m * euler(s.f1)) && vanishes((m + Expr(4)) * s.f2 - m * euler(s.f2)))
            out.holds.insert(Extension::Conformal);
    }
    return out;
}

namespace {

Expr json_expr(const nlohmann::json &j) {
    if (j.is_number_integer()) return Expr(j.get<long>());
    if (j.is_number()) return parse(j.dump());
    return parse(j.get<std::string>());
}

}  // namespace

RDSystem system_from_json(std::string_view text) {
    auto j = nlohmann::json::parse(text);
    int m = j.at("m").get<int>();
    const auto &fam = j.at("family");
    std::string kind = fam.at("kind").get<std::string>();
    Expr f1 = json_expr(j.at("f1")), f2 = json_expr(j.at("f2"));
    RDSystem s;
    if (kind == "triangular") {
        s = RDSystem::triangular(m, json_expr(fam.at("a")), f1, f2);
    } else if (kind == "drift") {
        const auto &p = fam.at("p");
        if (p.is_array()) {
            std::vector<Expr> pv;
            for (const auto &c : p) pv.push_back(json_expr(c));
            if (static_cast<int>(pv.size()) != m) throw std::invalid_argument("drift vector must have m entries");
            auto n = drift_normalize(pv);
            s = n.degenerate ? RDSystem::triangular(m, Expr(), f1, f2) : RDSystem::drift(m, n.p, f1, f2);
        } else {
            s = RDSystem::drift(m, json_expr(p), f1, f2);
        }
    } else if (kind == "general") {
        const auto &A = fam.at("A");
        std::array<std::array<Expr, 2>, 2> M;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) M[r][c] = json_expr(A.at(r).at(c));
        s = RDSystem::general(m, M, f1, f2);
    } else {
        throw std::invalid_argument("unknown family kind " + kind);
    }
    if (j.contains("constraints"))
        for (const auto &c : j["constraints"]) s.constraints.push_back(json_expr(c));
    if (j.contains("params")) {
        Binding b;
        for (auto &[k, v] : j["params"].items())
            if (!(v.is_string() && v.get<std::string>() == "symbolic")) b.bind(k, json_expr(v));
        s = substitute(s, b);
    }
    return s;
}

std::string to_json(const RDSystem &s, int indent) {
    nlohmann::json j;
    j["m"] = s.m;
    switch (s.family) {
    case Family::TriangularA:
        j["family"] = {{"kind", "triangular"}, {"a", to_string(s.a)}};
        break;
    case Family::NilpotentDrift:
        j["family"] = {{"kind", "drift"}, {"p", to_string(s.p)}};
        break;
    case Family::GeneralA:
        j["family"] = {{"kind", "general"},
                       {"A", {{to_string(s.A[0][0]), to_string(s.A[0][1])}, {to_string(s.A[1][0]), to_string(s.A[1][1])}}}};
        break;
    }
    j["f1"] = to_string(s.f1);
    j["f2"] = to_string(s.f2);
    j["constraints"] = nlohmann::json::array();
    for (const auto &c : s.constraints) j["constraints"].push_back(to_string(c));
    return j.dump(indent);
}

}  // namespace rdsym
