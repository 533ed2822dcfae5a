#pragma once

// Equivalence transformations of the triangular systems.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdsym/system.hpp"

namespace rdsym {

class InapplicableTransform : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EquivKind { Linear, AET, VShift, VShiftFull };

struct EquivTransform {
    EquivKind kind = EquivKind::Linear;
    // Linear: K1, K2, lambda, b1, b2.  AET: omega, mu, rho, kappa, lambda, epsilon.
    std::map<std::string, Expr> params;
    int index = 0;  // AET row 1..11
    Expr phi;       // VShift: function of u; VShiftFull: function of u, t, x

    static EquivTransform linear(Expr K1, Expr K2, Expr lambda, Expr b1, Expr b2);
    static EquivTransform identity();
    static EquivTransform aet(int index, std::map<std::string, Expr> params = {});
    static EquivTransform vshift(Expr phi);
    static EquivTransform vshift_full(Expr phi);

    Expr param(const std::string &name) const;  // symbolic placeholder when absent
};

std::string to_string(const EquivTransform &t);
EquivTransform equiv_from_json(std::string_view text);
std::string to_json(const EquivTransform &t, int indent = -1);

// Old dependent variables in terms of new ones (t and x unchanged).
// Undefined for Linear, which also rescales t and x.
std::array<Expr, 2> substitution(const EquivTransform &t, const JetContext &ctx);

struct ChangeResult {
    std::array<Expr, 2> f;                 // new right-hand sides
    bool point = true;                     // f depends on (u, v) and parameters only
    std::vector<std::string> stray;        // offending symbols when not point
};

// Rewrites S under u = U(u, v, t, x), v = V(u, v, t, x).
ChangeResult change_variables(const RDSystem &s, const std::array<Expr, 2> &uv);

// Throws InapplicableTransform when the family or the result is outside the class.
RDSystem apply_equiv(const RDSystem &s, const EquivTransform &t);
bool preserves_class(const RDSystem &s, const EquivTransform &t);

EquivTransform inverse(const EquivTransform &t);  // Linear only

struct Eqv3Check {
    bool preconditions = true;
    std::string violated;        // first failed precondition
    std::vector<Expr> residuals;  // t-equation, then one per x_k
    bool admissible = false;
};
Eqv3Check check_eqv3_admissible(const RDSystem &s, const Expr &phi);

// Generator in the new variables of a Linear transform.
Generator pushforward(const Generator &g, const EquivTransform &t, const JetContext &ctx);

}  // namespace rdsym
