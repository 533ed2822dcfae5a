#pragma once

// Jet space over (t, x1..xm) with dependent variables u, v; point generators
// and their prolongations.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdsym/expr.hpp"

namespace rdsym {

class OrderOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct JetContext {
    int m = 1;
    int max_order = 4;
    std::vector<std::string> deps{"u", "v"};

    std::string x(int i) const { return "x" + std::to_string(i + 1); }  // 0-based
    std::vector<std::string> base_symbols() const;                   // t, x1.., deps
};

// A derivative u^a_J: `t` time derivatives, `xs[i]` derivatives in x_{i+1}.
struct Jet {
    int dep = 0;
    int t = 0;
    std::vector<int> xs;

    int order() const;
    bool operator<(const Jet &o) const;
    bool operator==(const Jet &o) const = default;
};

// u, u_t, u_x1x2, v_tx1x1, ...
std::string jet_name(const Jet &j, const JetContext &ctx);
std::optional<Jet> parse_jet(const std::string &name, const JetContext &ctx);
Expr jet_symbol(const Jet &j, const JetContext &ctx);
// Jet obtained by one more derivative: direction -1 is t, i >= 0 is x_{i+1}.
Jet extend(Jet j, int direction);
// All jets of order <= n, sorted.
std::vector<Jet> jets_up_to(int n, const JetContext &ctx);

// Total derivative; direction -1 is t.  Throws OrderOverflow if a jet of
// order above ctx.max_order would be produced.
Expr total_derivative(const Expr &e, int direction, const JetContext &ctx);

// X = eta d_t + xi^k d_{x_k} - pi^1 d_u - pi^2 d_v.
struct Generator {
    Expr eta;
    std::vector<Expr> xi;
    std::vector<Expr> pi;

    static Generator zero(const JetContext &ctx);
    // Coefficient of d_{u^a}, i.e. -pi^a.
    Expr phi0(int a) const { return -pi[a]; }
    bool is_zero() const;

    friend Generator operator+(const Generator &a, const Generator &b);
    friend Generator operator-(const Generator &a, const Generator &b);
    friend Generator operator*(const Expr &c, const Generator &g);
    friend bool operator==(const Generator &a, const Generator &b);
};

// Applies X as a derivation on functions of (t, x, u, v).
Expr apply(const Generator &g, const Expr &e, const JetContext &ctx);
Generator commutator(const Generator &x, const Generator &y, const JetContext &ctx);
Generator substitute(const Generator &g, const Binding &b);
Generator normalize(const Generator &g);
std::string to_string(const Generator &g, const JetContext &ctx);
// {"eta": "...", "xi": [...], "pi": [..., ...]}
std::string to_json(const Generator &g, int indent = -1);
Generator generator_from_json(std::string_view text, const JetContext &ctx);

struct ProlongedGenerator {
    Generator base;
    std::map<Jet, Expr> phi;  // coefficient of d/du^a_J
};

ProlongedGenerator prolong(const Generator &g, int order, const JetContext &ctx);
// pr X applied to a function of t, x and jets.
Expr apply(const ProlongedGenerator &p, const Expr &e, const JetContext &ctx);

// Parameters for named operators: scalars a, gamma, lambda, p; H1..Hm for
// the H-field with m <= 2; l1..lm for m > 2.
using OperatorParams = std::map<std::string, Expr>;

// P0, P<k>, J<k><l>, D, K, G<k>, Gh<k>, Dt, Kt, H.  Indices are 1-based.
Generator named_operator(const std::string &name, const OperatorParams &params, const JetContext &ctx);
// The Galilei-type dilation L = (1/a)(u d_u + v d_v) - (1/a^2) u d_v.
Generator galilei_dilation(const Expr &a, const JetContext &ctx);
// Spatial vector field H^k and its divergence for the H-field operator.
std::vector<Expr> h_field_components(const OperatorParams &params, const JetContext &ctx);

}  // namespace rdsym
