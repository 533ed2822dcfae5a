#include "rdsym/equiv.hpp"

#include "json.hpp"
#include "rdsym/numeric.hpp"

namespace rdsym {

EquivTransform EquivTransform::linear(Expr K1, Expr K2, Expr lambda, Expr b1, Expr b2) {
    EquivTransform t;
    t.kind = EquivKind::Linear;
    t.params = {{"K1", K1}, {"K2", K2}, {"lambda", lambda}, {"b1", b1}, {"b2", b2}};
    return t;
}

EquivTransform EquivTransform::identity() { return linear(Expr(1), Expr(), Expr(1), Expr(), Expr()); }

EquivTransform EquivTransform::aet(int index, std::map<std::string, Expr> params) {
    if (index < 1 || index > 11) throw std::invalid_argument("AET index must be 1..11");
    EquivTransform t;
    t.kind = EquivKind::AET;
    t.index = index;
    t.params = std::move(params);
    return t;
}

EquivTransform EquivTransform::vshift(Expr phi) {
    EquivTransform t;
    t.kind = EquivKind::VShift;
    t.phi = std::move(phi);
    return t;
}

EquivTransform EquivTransform::vshift_full(Expr phi) {
    EquivTransform t;
    t.kind = EquivKind::VShiftFull;
    t.phi = std::move(phi);
    return t;
}

Expr EquivTransform::param(const std::string &name) const {
    auto it = params.find(name);
    return it == params.end() ? Expr::symbol(name) : it->second;
}

std::string to_string(const EquivTransform &t) {
    std::string out;
    switch (t.kind) {
    case EquivKind::Linear:
        out = "linear";
        break;
    case EquivKind::AET:
        out = "aet" + std::to_string(t.index);
        break;
    case EquivKind::VShift:
        return "vshift(" + to_string(t.phi) + ")";
    case EquivKind::VShiftFull:
        return "vshift_full(" + to_string(t.phi) + ")";
    }
    out += "(";
    bool first = true;
    for (const auto &[k, v] : t.params) {
        out += (first ? "" : ", ") + k + "=" + to_string(v);
        first = false;
    }
    return out + ")";
}

namespace {

const char *kind_name(EquivKind k) {
    switch (k) {
    case EquivKind::Linear:
        return "linear";
    case EquivKind::AET:
        return "aet";
    case EquivKind::VShift:
        return "vshift";
    default:
        return "vshift_full";
    }
}

Expr json_expr(const nlohmann::json &j) { return j.is_string() ? parse(j.get<std::string>()) : parse(j.dump()); }

Expr x_squared(const JetContext &ctx) {
    Expr r;
    for (int i = 0; i < ctx.m; ++i) r += pow(Expr::symbol(ctx.x(i)), Rational(2));
    return r;
}

Expr laplacian(const Expr &e, const JetContext &ctx) {
    Expr r;
    for (int i = 0; i < ctx.m; ++i) r += total_derivative(total_derivative(e, i, ctx), i, ctx);
    return r;
}

void require_triangular(const RDSystem &s) {
    if (s.family != Family::TriangularA)
        throw InapplicableTransform("equivalence transformations need the triangular family");
}

bool vanishes(const Expr &e) { return equivalent(e, Expr()).status == EqualityStatus::Equal; }

}  // namespace

EquivTransform equiv_from_json(std::string_view text) {
    auto j = nlohmann::json::parse(text);
    std::string kind = j.at("kind").get<std::string>();
    std::map<std::string, Expr> params;
    if (j.contains("params"))
        for (const auto &[k, v] : j.at("params").items()) params[k] = json_expr(v);
    if (kind == "linear") {
        EquivTransform t = EquivTransform::identity();
        for (const auto &[k, v] : params) {
            if (!t.params.count(k)) throw std::invalid_argument("unknown linear parameter " + k);
            t.params[k] = v;
        }
        return t;
    }
    if (kind == "aet") {
        EquivTransform t = EquivTransform::aet(j.at("index").get<int>(), params);
        if (j.contains("phi")) t.phi = json_expr(j.at("phi"));
        return t;
    }
    if (kind == "vshift") return EquivTransform::vshift(json_expr(j.at("phi")));
    if (kind == "vshift_full") return EquivTransform::vshift_full(json_expr(j.at("phi")));
    throw std::invalid_argument("unknown transform kind " + kind);
}

std::string to_json(const EquivTransform &t, int indent) {
    nlohmann::json j;
    j["kind"] = kind_name(t.kind);
    if (t.kind == EquivKind::AET) j["index"] = t.index;
    nlohmann::json p = nlohmann::json::object();
    for (const auto &[k, v] : t.params) p[k] = to_string(v);
    j["params"] = p;
    if (t.kind != EquivKind::Linear && !t.phi.is_zero()) j["phi"] = to_string(t.phi);
    return j.dump(indent);
}

std::array<Expr, 2> substitution(const EquivTransform &t, const JetContext &ctx) {
    Expr u = Expr::symbol(ctx.deps[0]), v = Expr::symbol(ctx.deps[1]), T = Expr::symbol("t");
    Expr half(Rational(1, 2));
    switch (t.kind) {
    case EquivKind::Linear:
        throw std::invalid_argument("linear transforms also rescale t and x");
    case EquivKind::VShift:
    case EquivKind::VShiftFull:
        return {u, v + t.phi};
    case EquivKind::AET:
        break;
    }
    auto P = [&](const char *n) { return t.param(n); };
    Expr x2 = x_squared(ctx);
    switch (t.index) {
    case 1:
        return {exp(P("omega") * T) * u, exp(P("omega") * T) * v};
    case 2:
        return {u + P("omega") * T + P("mu") * x2, v};
    case 3:
        return {u, v + P("rho") * T + P("mu") * x2};
    case 4:
        return {u + P("rho") * T, v * exp(P("rho") * T)};
    case 5:
        return {u, v + P("rho") * T * u};
    case 6:
        return {exp(P("omega") * T) * u, v + P("kappa") * T * u + P("rho") * half * T * T};
    case 7:
        return {u, v - P("rho") * T * u + P("rho") * P("lambda") * half * T * T};
    case 8:
        return {exp(P("rho") * T) * u, exp(P("rho") * T) * (v + P("epsilon") * half * T * T * u)};
    case 9:
        // rho^2 in the last term; the linear-in-rho form leaves t in f
        return {u + P("rho") * T, v + P("rho") * T * u + P("rho") * P("rho") * half * T * T};
    case 10:
        return {exp(P("omega") * T) * u, exp(P("omega") * T) * (v - P("omega") * T * u)};
    default:
        return {u, v + t.phi};
    }
}

ChangeResult change_variables(const RDSystem &s, const std::array<Expr, 2> &uv) {
    require_triangular(s);
    JetContext ctx = s.context();
    const std::string &un = ctx.deps[0], &vn = ctx.deps[1];
    const Expr &U = uv[0], &V = uv[1];
    Binding old;
    old.bind(un, U).bind(vn, V);
    Expr f1 = substitute(s.f1, old), f2 = substitute(s.f2, old);
    Expr r1 = s.a * laplacian(U, ctx) + f1 - differentiate(U, "t");
    Expr r2 = laplacian(U, ctx) + s.a * laplacian(V, ctx) + f2 - differentiate(V, "t");
    Expr Uu = differentiate(U, un), Uv = differentiate(U, vn), Vu = differentiate(V, un), Vv = differentiate(V, vn);
    Expr det = normalize(Uu * Vv - Uv * Vu);
    if (det.is_zero()) throw InapplicableTransform("change of variables is degenerate");
    Expr ut = (Vv * r1 - Uv * r2) / det, vt = (Uu * r2 - Vu * r1) / det;
    Jet uxx{0, 0, std::vector<int>(ctx.m, 0)};
    Expr lu, lv;
    for (int i = 0; i < ctx.m; ++i) {
        Jet j = uxx;
        j.xs[i] = 2;
        lu += jet_symbol(j, ctx);
        j.dep = 1;
        lv += jet_symbol(j, ctx);
    }
    ChangeResult out;
    out.f = {normalize(ut - s.a * lu), normalize(vt - lu - s.a * lv)};
    std::set<std::string> seen;
    for (const auto &f : out.f)
        for (const auto &sym : free_symbols(f)) {
            bool bad = sym == "t";
            for (int i = 0; i < ctx.m; ++i) bad = bad || sym == ctx.x(i);
            if (auto j = parse_jet(sym, ctx); j && j->order() > 0) bad = true;
            if (bad && seen.insert(sym).second) out.stray.push_back(sym);
        }
    out.point = out.stray.empty();
    return out;
}

RDSystem apply_equiv(const RDSystem &s, const EquivTransform &t) {
    require_triangular(s);
    JetContext ctx = s.context();
    RDSystem r = s;
    if (t.kind == EquivKind::Linear) {
        Expr K1 = t.param("K1"), K2 = t.param("K2"), lam = t.param("lambda");
        if (normalize(K1).is_zero() || normalize(lam).is_zero())
            throw InapplicableTransform("linear transform needs K1 != 0 and lambda != 0");
        Expr u = Expr::symbol(ctx.deps[0]), v = Expr::symbol(ctx.deps[1]);
        Expr uo = (u - t.param("b1")) / K1;
        Expr vo = (v - K2 * uo - t.param("b2")) / K1;
        Binding old;
        old.bind(ctx.deps[0], uo).bind(ctx.deps[1], vo);
        Expr l2 = lam * lam;
        r.f1 = normalize(l2 * K1 * substitute(s.f1, old));
        r.f2 = normalize(l2 * (K1 * substitute(s.f2, old) + K2 * substitute(s.f1, old)));
        return r;
    }
    bool a_zero = normalize(s.a).is_zero();
    if (t.kind == EquivKind::VShift) {
        if (!a_zero) throw InapplicableTransform("v -> v + Phi(u) needs a = 0");
        for (const auto &sym : free_symbols(t.phi)) {
            bool bad = sym == "t" || (parse_jet(sym, ctx).has_value() && sym != ctx.deps[0]);
            for (int i = 0; i < ctx.m; ++i) bad = bad || sym == ctx.x(i);
            if (bad) throw InapplicableTransform("Phi must be a function of u only");
        }
    }
    if (t.kind == EquivKind::VShiftFull || (t.kind == EquivKind::AET && t.index == 11)) {
        auto c = check_eqv3_admissible(s, t.phi);
        if (!c.preconditions) throw InapplicableTransform(c.violated);
        if (!c.admissible) throw InapplicableTransform("Phi violates the admissibility system");
    }
    auto ch = change_variables(s, substitution(t, ctx));
    if (!ch.point) {
        std::string msg = "result is not a point nonlinearity; depends on";
        for (const auto &sym : ch.stray) msg += " " + sym;
        throw InapplicableTransform(msg);
    }
    r.f1 = ch.f[0];
    r.f2 = ch.f[1];
    return r;
}

bool preserves_class(const RDSystem &s, const EquivTransform &t) {
    try {
        apply_equiv(s, t);
        return true;
    } catch (const InapplicableTransform &) {
        return false;
    }
}

EquivTransform inverse(const EquivTransform &t) {
    if (t.kind != EquivKind::Linear) throw std::invalid_argument("inverse is implemented for linear transforms");
    Expr K1 = t.param("K1"), K2 = t.param("K2"), b1 = t.param("b1"), b2 = t.param("b2");
    Expr k1sq = K1 * K1;
    return EquivTransform::linear(Expr(1) / K1, -K2 / k1sq, Expr(1) / t.param("lambda"), -b1 / K1,
                                  K2 * b1 / k1sq - b2 / K1);
}

Eqv3Check check_eqv3_admissible(const RDSystem &s, const Expr &phi) {
    Eqv3Check out;
    auto fail = [&](const char *why) {
        out.preconditions = false;
        out.violated = why;
        return out;
    };
    if (s.family != Family::TriangularA) return fail("needs the triangular family");
    if (!normalize(s.a).is_zero()) return fail("needs a = 0");
    JetContext ctx = s.context();
    const std::string &un = ctx.deps[0], &vn = ctx.deps[1];
    if (!vanishes(differentiate(s.f1, vn))) return fail("f1 depends on v");
    Expr g = normalize(differentiate(s.f2, vn));
    if (!vanishes(differentiate(g, vn))) return fail("f2 is not linear in v");
    if (depends_on(phi, vn)) return fail("Phi depends on v");
    Expr pt = differentiate(phi, "t");
    out.residuals.push_back(normalize(g * pt - differentiate(pt, "t") - s.f1 * differentiate(pt, un)));
    for (int k = 0; k < ctx.m; ++k) {
        Expr px = differentiate(phi, ctx.x(k));
        out.residuals.push_back(normalize(g * px - differentiate(px, "t") - s.f1 * differentiate(px, un)));
    }
    out.admissible = true;
    for (const auto &r : out.residuals) out.admissible = out.admissible && vanishes(r);
    return out;
}

Generator pushforward(const Generator &g, const EquivTransform &t, const JetContext &ctx) {
    if (t.kind != EquivKind::Linear) throw std::invalid_argument("pushforward is implemented for linear transforms");
    Expr K1 = t.param("K1"), K2 = t.param("K2"), lam = t.param("lambda");
    Generator n = g;
    n.eta = g.eta / (lam * lam);
    for (auto &x : n.xi) x = x / lam;
    n.pi[0] = K1 * g.pi[0];
    n.pi[1] = K1 * g.pi[1] + K2 * g.pi[0];
    Expr u = Expr::symbol(ctx.deps[0]), v = Expr::symbol(ctx.deps[1]);
    Expr uo = (u - t.param("b1")) / K1;
    Binding old;
    old.bind("t", lam * lam * Expr::symbol("t"));
    for (int i = 0; i < ctx.m; ++i) old.bind(ctx.x(i), lam * Expr::symbol(ctx.x(i)));
    old.bind(ctx.deps[0], uo).bind(ctx.deps[1], (v - K2 * uo - t.param("b2")) / K1);
    return normalize(substitute(n, old));
}

}  // namespace rdsym
