#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "json.hpp"
#include "rdsym/jet.hpp"

namespace rdsym {

std::vector<std::string> JetContext::base_symbols() const {
    std::vector<std::string> out{"t"};
    for (int i = 0; i < m; ++i) out.push_back(x(i));
    out.insert(out.end(), deps.begin(), deps.end());
    return out;
}

int Jet::order() const {
    int n = t;
    for (int k : xs) n += k;
    return n;
}

bool Jet::operator<(const Jet &o) const {
    if (order() != o.order()) return order() < o.order();
    if (dep != o.dep) return dep < o.dep;
    if (t != o.t) return t > o.t;
    return xs > o.xs;
}

std::string jet_name(const Jet &j, const JetContext &ctx) {
    std::string s = ctx.deps.at(j.dep);
    if (j.order() == 0) return s;
    s += "_";
    for (int i = 0; i < j.t; ++i) s += "t";
    for (std::size_t i = 0; i < j.xs.size(); ++i)
        for (int k = 0; k < j.xs[i]; ++k) s += ctx.x(static_cast<int>(i));
    return s;
}

std::optional<Jet> parse_jet(const std::string &name, const JetContext &ctx) {
    for (std::size_t d = 0; d < ctx.deps.size(); ++d) {
        const std::string &base = ctx.deps[d];
        if (name.compare(0, base.size(), base) != 0) continue;
        Jet j{static_cast<int>(d), 0, std::vector<int>(ctx.m, 0)};
        if (name.size() == base.size()) return j;
        if (name[base.size()] != '_' || name.size() == base.size() + 1) continue;
        std::size_t i = base.size() + 1;
        bool ok = true;
        while (i < name.size() && ok) {
            if (name[i] == 't') {
                // time derivatives come first
                if (j.order() != j.t) ok = false;
                ++j.t;
                ++i;
            } else if (name[i] == 'x') {
                std::size_t k = i + 1;
                while (k < name.size() && std::isdigit(static_cast<unsigned char>(name[k]))) ++k;
                if (k == i + 1) {
                    ok = false;
                    break;
                }
                int idx = std::stoi(name.substr(i + 1, k - i - 1));
                if (idx < 1 || idx > ctx.m) {
                    ok = false;
                    break;
                }
                ++j.xs[idx - 1];
                i = k;
            } else {
                ok = false;
            }
        }
        if (ok && jet_name(j, ctx) == name) return j;
    }
    return std::nullopt;
}

Expr jet_symbol(const Jet &j, const JetContext &ctx) { return Expr::symbol(jet_name(j, ctx)); }

Jet extend(Jet j, int direction) {
    if (direction < 0)
        ++j.t;
    else
        ++j.xs.at(direction);
    return j;
}

std::vector<Jet> jets_up_to(int n, const JetContext &ctx) {
    std::vector<Jet> out;
    for (std::size_t d = 0; d < ctx.deps.size(); ++d) {
        std::vector<Jet> layer{Jet{static_cast<int>(d), 0, std::vector<int>(ctx.m, 0)}};
        out.push_back(layer[0]);
        for (int k = 1; k <= n; ++k) {
            std::vector<Jet> next;
            for (const auto &j : layer)
                for (int dir = -1; dir < ctx.m; ++dir) {
                    Jet e = extend(j, dir);
                    bool seen = false;
                    for (const auto &q : next) seen = seen || q == e;
                    if (!seen) next.push_back(e);
                }
            out.insert(out.end(), next.begin(), next.end());
            layer = std::move(next);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Expr total_derivative(const Expr &e, int direction, const JetContext &ctx) {
    Expr out = differentiate(e, direction < 0 ? "t" : ctx.x(direction));
    for (const auto &s : free_symbols(e)) {
        auto j = parse_jet(s, ctx);
        if (!j) continue;
        Jet n = extend(*j, direction);
        if (n.order() > ctx.max_order)
            throw OrderOverflow("total derivative of " + s + " exceeds jet order " + std::to_string(ctx.max_order));
        out += jet_symbol(n, ctx) * differentiate(e, s);
    }
    return out;
}

Generator Generator::zero(const JetContext &ctx) {
    Generator g;
    g.xi.assign(ctx.m, Expr());
    g.pi.assign(ctx.deps.size(), Expr());
    return g;
}

bool Generator::is_zero() const {
    if (!eta.is_zero()) return false;
    for (const auto &c : xi)
        if (!c.is_zero()) return false;
    for (const auto &c : pi)
        if (!c.is_zero()) return false;
    return true;
}

namespace {

template <class F>
Generator zip(const Generator &a, const Generator &b, F f) {
    Generator g;
    g.eta = f(a.eta, b.eta);
    for (std::size_t i = 0; i < a.xi.size(); ++i) g.xi.push_back(f(a.xi[i], b.xi[i]));
    for (std::size_t i = 0; i < a.pi.size(); ++i) g.pi.push_back(f(a.pi[i], b.pi[i]));
    return g;
}

template <class F>
Generator map_coeffs(const Generator &a, F f) {
    Generator g;
    g.eta = f(a.eta);
    for (const auto &c : a.xi) g.xi.push_back(f(c));
    for (const auto &c : a.pi) g.pi.push_back(f(c));
    return g;
}

}  // namespace

Generator operator+(const Generator &a, const Generator &b) {
    return zip(a, b, [](const Expr &x, const Expr &y) { return x + y; });
}

Generator operator-(const Generator &a, const Generator &b) {
    return zip(a, b, [](const Expr &x, const Expr &y) { return x - y; });
}

Generator operator*(const Expr &c, const Generator &g) {
    return map_coeffs(g, [&](const Expr &x) { return c * x; });
}

bool operator==(const Generator &a, const Generator &b) { return (a - b).is_zero(); }

Expr apply(const Generator &g, const Expr &e, const JetContext &ctx) {
    Expr out = g.eta * differentiate(e, "t");
    for (int i = 0; i < ctx.m; ++i) out += g.xi[i] * differentiate(e, ctx.x(i));
    for (std::size_t a = 0; a < g.pi.size(); ++a) out -= g.pi[a] * differentiate(e, ctx.deps[a]);
    return out;
}

Generator commutator(const Generator &x, const Generator &y, const JetContext &ctx) {
    Generator g;
    g.eta = apply(x, y.eta, ctx) - apply(y, x.eta, ctx);
    for (int i = 0; i < ctx.m; ++i) g.xi.push_back(apply(x, y.xi[i], ctx) - apply(y, x.xi[i], ctx));
    for (std::size_t a = 0; a < x.pi.size(); ++a)
        g.pi.push_back(apply(x, y.pi[a], ctx) - apply(y, x.pi[a], ctx));
    return g;
}

Generator substitute(const Generator &g, const Binding &b) {
    return map_coeffs(g, [&](const Expr &x) { return substitute(x, b); });
}

Generator normalize(const Generator &g) {
    return map_coeffs(g, [](const Expr &x) { return normalize(x); });
}

std::string to_string(const Generator &g, const JetContext &ctx) {
    std::string out;
    auto put = [&](Expr c, const std::string &d) {
        if (c.is_zero()) return;
        bool neg = c.size() == 1 && c.terms()[0].coef < 0;
        if (neg) c = -c;
        if (out.empty())
            out += neg ? "-" : "";
        else
            out += neg ? " - " : " + ";
        if (c == Expr(1))
            out += d;
        else if (c.size() > 1)
            out += "(" + to_string(c) + ")*" + d;
        else
            out += to_string(c) + "*" + d;
    };
    put(g.eta, "d_t");
    for (int i = 0; i < ctx.m; ++i) put(g.xi[i], "d_" + ctx.x(i));
    for (std::size_t a = 0; a < g.pi.size(); ++a) put(-g.pi[a], "d_" + ctx.deps[a]);
    return out.empty() ? "0" : out;
}

std::string to_json(const Generator &g, int indent) {
    nlohmann::json j;
    j["eta"] = to_string(g.eta);
    j["xi"] = nlohmann::json::array();
    for (const auto &c : g.xi) j["xi"].push_back(to_string(c));
    j["pi"] = nlohmann::json::array();
    for (const auto &c : g.pi) j["pi"].push_back(to_string(c));
    return j.dump(indent);
}

Generator generator_from_json(std::string_view text, const JetContext &ctx) {
    auto j = nlohmann::json::parse(text);
    Generator g = Generator::zero(ctx);
    if (j.contains("eta")) g.eta = parse(j["eta"].get<std::string>());
    if (j.contains("xi")) {
        if (j["xi"].size() != static_cast<std::size_t>(ctx.m)) throw std::invalid_argument("xi must have m entries");
        for (int i = 0; i < ctx.m; ++i) g.xi[i] = parse(j["xi"][i].get<std::string>());
    }
    if (j.contains("pi")) {
        if (j["pi"].size() != ctx.deps.size()) throw std::invalid_argument("pi must have one entry per dependent variable");
        for (std::size_t a = 0; a < ctx.deps.size(); ++a) g.pi[a] = parse(j["pi"][a].get<std::string>());
    }
    return g;
}

ProlongedGenerator prolong(const Generator &g, int order, const JetContext &ctx) {
    if (order > ctx.max_order) throw OrderOverflow("prolongation order exceeds jet order");
    ProlongedGenerator p{g, {}};
    std::vector<std::vector<Expr>> dxi(ctx.m + 1);
    std::vector<Expr> deta(ctx.m + 1);
    for (int dir = -1; dir < ctx.m; ++dir) {
        deta[dir + 1] = total_derivative(g.eta, dir, ctx);
        for (int k = 0; k < ctx.m; ++k) dxi[dir + 1].push_back(total_derivative(g.xi[k], dir, ctx));
    }
    for (const auto &j : jets_up_to(order, ctx)) {
        if (j.order() == 0) {
            p.phi[j] = g.phi0(j.dep);
            continue;
        }
        Jet parent = j;
        int dir;
        if (j.t > 0) {
            --parent.t;
            dir = -1;
        } else {
            dir = ctx.m - 1;
            while (parent.xs[dir] == 0) --dir;
            --parent.xs[dir];
        }
        Expr phi = total_derivative(p.phi.at(parent), dir, ctx);
        phi -= deta[dir + 1] * jet_symbol(extend(parent, -1), ctx);
        for (int k = 0; k < ctx.m; ++k) phi -= dxi[dir + 1][k] * jet_symbol(extend(parent, k), ctx);
        p.phi[j] = phi;
    }
    return p;
}

Expr apply(const ProlongedGenerator &p, const Expr &e, const JetContext &ctx) {
    Expr out = p.base.eta * differentiate(e, "t");
    for (int i = 0; i < ctx.m; ++i) out += p.base.xi[i] * differentiate(e, ctx.x(i));
    for (const auto &s : free_symbols(e)) {
        auto j = parse_jet(s, ctx);
        if (!j) continue;
        auto it = p.phi.find(*j);
        if (it == p.phi.end()) throw OrderOverflow("prolongation does not reach " + s);
        out += it->second * differentiate(e, s);
    }
    return out;
}

namespace {

const Expr &param(const OperatorParams &params, const std::string &name, const std::string &op) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument(op + " needs parameter " + name);
    return it->second;
}

int index_suffix(const std::string &name, std::size_t start, const JetContext &ctx) {
    if (start >= name.size()) throw std::invalid_argument("missing index in operator " + name);
    int k = std::stoi(name.substr(start));
    if (k < 1 || k > ctx.m) throw std::invalid_argument("index out of range in operator " + name);
    return k - 1;
}

Expr xsq(const JetContext &ctx) {
    Expr s;
    for (int i = 0; i < ctx.m; ++i) s += Expr::symbol(ctx.x(i)) * Expr::symbol(ctx.x(i));
    return s;
}

Generator euler(const JetContext &ctx) {
    Generator g = Generator::zero(ctx);
    for (std::size_t a = 0; a < ctx.deps.size(); ++a) g.pi[a] = -Expr::symbol(ctx.deps[a]);
    return g;
}

Generator conformal(const Expr &a, const JetContext &ctx) {
    if (a.is_zero()) throw std::invalid_argument("K requires a != 0");
    Expr t = Expr::symbol("t");
    Generator g = Generator::zero(ctx);
    g.eta = Expr(2) * t * t;
    for (int i = 0; i < ctx.m; ++i) g.xi[i] = Expr(2) * t * Expr::symbol(ctx.x(i));
    return g - (xsq(ctx) / Expr(2)) * galilei_dilation(a, ctx) - (Expr(ctx.m) * t) * euler(ctx);
}

}  // namespace

Generator galilei_dilation(const Expr &a, const JetContext &ctx) {
    if (a.is_zero()) throw std::invalid_argument("Galilei operators require a != 0");
    Expr u = Expr::symbol(ctx.deps[0]), v = Expr::symbol(ctx.deps[1]);
    Generator g = Generator::zero(ctx);
    g.pi[0] = -(u / a);
    g.pi[1] = -(v / a - u / (a * a));
    return g;
}

std::vector<Expr> h_field_components(const OperatorParams &params, const JetContext &ctx) {
    std::vector<Expr> h;
    if (ctx.m <= 2) {
        for (int i = 0; i < ctx.m; ++i) h.push_back(param(params, "H" + std::to_string(i + 1), "H"));
        if (ctx.m == 2) {
            Expr h1x1 = differentiate(h[0], "x1"), h1x2 = differentiate(h[0], "x2");
            Expr h2x1 = differentiate(h[1], "x1"), h2x2 = differentiate(h[1], "x2");
            if (!normalize(h1x1 - h2x2).is_zero() || !normalize(h1x2 + h2x1).is_zero())
                throw std::invalid_argument("H1, H2 violate the Cauchy-Riemann conditions");
        }
        return h;
    }
    Expr lx;
    std::vector<Expr> l;
    for (int i = 0; i < ctx.m; ++i) {
        l.push_back(param(params, "l" + std::to_string(i + 1), "H"));
        lx += l[i] * Expr::symbol(ctx.x(i));
    }
    for (int i = 0; i < ctx.m; ++i) h.push_back(Expr(2) * lx * Expr::symbol(ctx.x(i)) - xsq(ctx) * l[i]);
    return h;
}

Generator named_operator(const std::string &name, const OperatorParams &params, const JetContext &ctx) {
    Expr t = Expr::symbol("t");
    Generator g = Generator::zero(ctx);
    if (name == "P0") {
        g.eta = Expr(1);
        return g;
    }
    if (name == "D") {
        g.eta = t;
        for (int i = 0; i < ctx.m; ++i) g.xi[i] = Expr::symbol(ctx.x(i)) / Expr(2);
        return g;
    }
    if (name == "Dt") {
        g.eta = Expr(3) * t;
        for (int i = 0; i < ctx.m; ++i) g.xi[i] = Expr(2) * Expr::symbol(ctx.x(i));
        g.pi[1] = Expr::symbol(ctx.deps[1]);
        return g;
    }
    if (name == "K") return conformal(param(params, "a", name), ctx);
    if (name == "Kt") {
        const Expr &lam = param(params, "lambda", name);
        const Expr &p = param(params, "p", name);
        Expr u = Expr::symbol(ctx.deps[0]), v = Expr::symbol(ctx.deps[1]);
        Generator extra = Generator::zero(ctx);
        extra.pi[0] = -(t * p * u);
        extra.pi[1] = -(t * (Expr(2) - lam) * v + u);
        return conformal(param(params, "a", name), ctx) + (Expr(1) / (lam - Expr(1))) * extra;
    }
    if (name == "H") {
        auto h = h_field_components(params, ctx);
        Expr div;
        for (int i = 0; i < ctx.m; ++i) {
            g.xi[i] = Expr(2 * ctx.m) * h[i];
            div += differentiate(h[i], ctx.x(i));
        }
        g.pi[0] = Expr(ctx.m - 2) * div * Expr::symbol(ctx.deps[0]);
        g.pi[1] = Expr(ctx.m + 2) * div * Expr::symbol(ctx.deps[1]);
        return g;
    }
    if (name.size() >= 2 && name[0] == 'P') {
        g.xi[index_suffix(name, 1, ctx)] = Expr(1);
        return g;
    }
    if (name.size() == 3 && name[0] == 'J') {
        int k = index_suffix(name.substr(0, 2), 1, ctx), l = index_suffix(name, 2, ctx);
        g.xi[l] += Expr::symbol(ctx.x(k));
        g.xi[k] -= Expr::symbol(ctx.x(l));
        return g;
    }
    if (name.rfind("Gh", 0) == 0) {
        int k = index_suffix(name, 2, ctx);
        const Expr &gamma = param(params, "gamma", name);
        Expr xk = Expr::symbol(ctx.x(k));
        g.xi[k] = Expr(1);
        g = g - (gamma * xk / Expr(2)) * galilei_dilation(param(params, "a", name), ctx);
        return exp(gamma * t) * g;
    }
    if (name.size() >= 2 && name[0] == 'G') {
        int k = index_suffix(name, 1, ctx);
        g.xi[k] = t;
        return g - (Expr::symbol(ctx.x(k)) / Expr(2)) * galilei_dilation(param(params, "a", name), ctx);
    }
    throw std::invalid_argument("unknown operator " + name);
}

}  // namespace rdsym
