#pragma once

// Two-component reaction-diffusion systems and their symmetry tests.

#include <array>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rdsym/jet.hpp"
#include "rdsym/numeric.hpp"

namespace rdsym {

enum class Family {
    TriangularA,     // u_t - a Lap u = f1,  v_t - Lap u - a Lap v = f2
    NilpotentDrift,  // u_t - p v_{x_m} = f1,  v_t - Lap u = f2
    GeneralA,        // u^a_t - A^{ab} Lap u^b = f^a
};

struct RDSystem {
    int m = 1;
    Family family = Family::TriangularA;
    Expr a;                                 // TriangularA
    Expr p;                                 // NilpotentDrift, already normalized
    std::array<std::array<Expr, 2>, 2> A;   // GeneralA
    Expr f1, f2;
    std::vector<Expr> constraints;          // expressions required to be nonzero

    static RDSystem triangular(int m, Expr a, Expr f1, Expr f2);
    static RDSystem drift(int m, Expr p, Expr f1, Expr f2);
    static RDSystem general(int m, std::array<std::array<Expr, 2>, 2> A, Expr f1, Expr f2);

    JetContext context() const;
    // Diffusion matrix for TriangularA and GeneralA.
    std::array<std::array<Expr, 2>, 2> diffusion() const;
    // Right-hand sides: u^a_t = rhs[a].
    std::array<Expr, 2> rhs(const JetContext &ctx) const;
};

RDSystem substitute(const RDSystem &s, const Binding &b);

struct DriftNormalization {
    std::vector<std::vector<Expr>> rotation;  // x' = R x
    Expr p;
    bool degenerate = false;  // zero drift: the nilpotent a = 0 triangular case
};

// Orthogonal change of spatial variables taking p to (0, ..., 0, |p|).
DriftNormalization drift_normalize(const std::vector<Expr> &p);

struct SymmetryResidual {
    std::array<Expr, 2> raw;      // pr X applied to u^a_t - rhs^a, before reduction
    Binding elimination;          // t-jets in terms of spatial jets
    std::array<Expr, 2> reduced;  // raw with t-jets eliminated
};

SymmetryResidual symmetry_residual(const RDSystem &s, const Generator &x);

enum class Verdict { Holds, Fails, Undecided };
const char *to_string(Verdict v);

struct SymmetryReport {
    std::array<Expr, 2> residual;
    Verdict verdict = Verdict::Undecided;
    DecisionPath path = DecisionPath::Normalize;
    std::optional<NumericPoint> counterexample;
    SymmetryResidual detail;
};

SymmetryReport is_symmetry(const RDSystem &s, const Generator &x, const EqualityOptions &opt = {});

// Largest |raw residual| over `points` random points of the solution
// manifold: spatial jets and parameters sampled, t-jets fixed by the system.
Real numeric_crosscheck(const SymmetryResidual &r, std::uint64_t seed, int points = 20);

// Residuals lhs - rhs of the classifying equations.
std::array<Expr, 2> classifying_residual_main(const RDSystem &s, const Expr &C1, const Expr &C2, const Expr &B1,
                                              const Expr &B2, const Expr &mu);

struct FullSymmetryData {
    Expr lambda, mu, gamma;
    std::vector<Expr> sigma, omega;  // length m; empty means zero
    Expr C1, C2, B1, B2;
};
std::array<Expr, 2> classifying_residual_full(const RDSystem &s, const FullSymmetryData &d);
// Full-shape generator built from the same data, for cross-validation.
Generator full_symmetry_generator(const RDSystem &s, const FullSymmetryData &d);

std::array<Expr, 2> classifying_residual_drift(const RDSystem &s, const Expr &F, const Expr &B1, const Expr &B2,
                                               const Expr &mu);

struct NilpotentSymmetryData {
    Expr alpha, N, M;
    OperatorParams h;  // H1..Hm (m <= 2) or l1..lm (m > 2)
    Expr B1, B2, B3;
};
std::array<Expr, 2> classifying_residual_a0(const RDSystem &s, const NilpotentSymmetryData &d);
Generator nilpotent_symmetry_generator(const RDSystem &s, const NilpotentSymmetryData &d);

enum class Extension { Galilei, ExpGalilei, Conformal };
const char *to_string(Extension e);

struct ExtensionResult {
    std::set<Extension> holds;
    std::optional<Expr> gamma;  // the exponent for ExpGalilei
    bool linear = false;        // f1 = f2 = 0
};
ExtensionResult extension_check(const RDSystem &s);

// {m, family: {kind, a | p | A}, f1, f2, params: {name: value | "symbolic"}, constraints: [...]}
RDSystem system_from_json(std::string_view text);
std::string to_json(const RDSystem &s, int indent = -1);

}  // namespace rdsym
