#pragma once

// 3x3 matrix picture of the linear part C^1 (u d_u + v d_v) + C^2 u d_v +
// B^1 d_u + B^2 d_v of main symmetries.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rdsym/jet.hpp"

namespace rdsym {

using Mat3 = std::array<std::array<Expr, 3>, 3>;

Mat3 mat_identity();
Mat3 operator*(const Mat3 &a, const Mat3 &b);
Mat3 operator+(const Mat3 &a, const Mat3 &b);
Mat3 operator-(const Mat3 &a, const Mat3 &b);
Mat3 operator*(const Expr &c, const Mat3 &a);
bool operator==(const Mat3 &a, const Mat3 &b);
Mat3 bracket(const Mat3 &a, const Mat3 &b);

// rows (0,0,0), (nu1, mu1, 0), (nu2, mu2, mu1)
struct NMatrix {
    Expr nu1, nu2, mu1, mu2;

    Mat3 mat() const;
    static NMatrix from_mat(const Mat3 &m);  // throws if the pattern is violated
    static bool has_pattern(const Mat3 &m);
    friend bool operator==(const NMatrix &a, const NMatrix &b);
};

// rows (1,0,0), (b1, K1, 0), (b2, K2, K1)
struct UMatrix {
    Expr b1, b2, K1, K2;

    static UMatrix identity();
    Mat3 mat() const;
    Mat3 inverse() const;          // exact inverse
    Mat3 printed_inverse() const;  // the closed form as printed; equals inverse() when K1 = 1
    UMatrix operator*(const UMatrix &o) const;
};

NMatrix conjugate(const NMatrix &g, const UMatrix &U);

enum class CanonicalLabel { G1, G2, G3, G4, G5, G6, G2Tilde, Zero };
const char *to_string(CanonicalLabel l);

struct CanonicalForm {
    bool decided = true;
    std::vector<std::string> case_split;  // branch conditions when undecided
    CanonicalLabel label = CanonicalLabel::Zero;
    NMatrix canonical;
    UMatrix witness;
    Expr scale;
    std::optional<Expr> invariant;  // mu2/mu1 for the g4 family
    std::optional<Expr> g2_lambda;  // nu1/nu2 when a g2(lambda) presentation exists
};

// Classification under g -> s U g U^{-1}.  Witness: scale * U g U^{-1} = canonical.
CanonicalForm canonical_form(const NMatrix &g);
NMatrix named_matrix(CanonicalLabel l, const Expr &param = Expr());  // param: lambda for g2, c for g4

// g^22 u d_u + g^33 v d_v + g^32 u d_v + g^21 d_u + g^31 d_v
Generator realize(const NMatrix &g, const JetContext &ctx);

struct AlgebraPresentation {
    std::string name;
    std::vector<NMatrix> basis;                   // may be empty for vector-field-only entries
    std::vector<Generator> realization;           // vector fields
    std::vector<std::string> realization_text;    // operator templates for display
    // nonzero brackets [e_i, e_j] (i < j, 0-based) as coefficient vectors, as stated
    std::map<std::pair<int, int>, std::vector<Rational>> stated;
};

std::vector<std::string> algebra_names();
AlgebraPresentation algebra_catalog(const std::string &name, const JetContext &ctx);

// Coefficients c with target = sum c_k basis_k, all constants, or nullopt.
std::optional<std::vector<Rational>> decompose(const Mat3 &target, const std::vector<Mat3> &basis);
std::optional<std::vector<Rational>> decompose(const Generator &target, const std::vector<Generator> &basis);

struct ClosureReport {
    bool closed = true;
    std::map<std::pair<int, int>, std::vector<Rational>> constants;  // nonzero brackets
    std::vector<std::pair<int, int>> open;                           // brackets outside the span
};
ClosureReport closure_check(const std::vector<Mat3> &basis);
ClosureReport closure_check(const std::vector<Generator> &basis, const JetContext &ctx);

enum class EigenCase { DistinctReal, Repeated, Complex };
const char *to_string(EigenCase c);

struct FundamentalPair {
    bool decided = true;
    std::vector<std::string> case_split;
    EigenCase eigen = EigenCase::Repeated;
    Expr F1, G1, F2, G2;  // columns of exp(M t), M = [[lambda, alpha], [sigma, gamma]]
};

// Solutions of F_t = lambda F + alpha G, G_t = sigma F + gamma G.
FundamentalPair fundamental_pair(const Expr &lambda, const Expr &alpha, const Expr &sigma, const Expr &gamma,
                                 std::optional<EigenCase> assume = std::nullopt);

std::string mat_to_json(const Mat3 &m);
Mat3 mat_from_json(std::string_view text);

}  // namespace rdsym
