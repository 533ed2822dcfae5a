#pragma once

// High-precision evaluation of expressions and the layered equality decision.

#include <boost/multiprecision/mpfr.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include "rdsym/expr.hpp"

namespace rdsym {

// 110 significant decimal digits; all reported errors are far below 1e-30.
using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<110>>;

struct Value {
    std::variant<Rational, Real> v;

    bool exact() const { return std::holds_alternative<Rational>(v); }
    Real real() const;
    std::string str(int digits = 30) const;
};

// Supplies values (and partial derivatives) of opaque functions at a point.
using FuncOracle = std::function<Real(const std::string &name, const std::vector<int> &orders,
                                      const std::vector<Real> &args)>;

// A deterministic smooth stand-in for arbitrary functions: a short sum of
// exponentials whose coefficients are derived from the function name and a
// seed.  Distinct derivative orders are mutually consistent.
FuncOracle smooth_oracle(std::uint64_t seed);

struct NumericPoint {
    std::map<std::string, Rational> values;
    std::map<std::string, Real> reals;  // consulted when a symbol has no exact value
    FuncOracle oracle;  // may be empty when no opaque functions occur
};

// Exact when only rational operations occur, otherwise a 110-digit value.
// Throws DomainError naming the offending subexpression.
Value eval_at(const Expr &e, const NumericPoint &p);
// eval_at with symbolic values: every free symbol must bind to a rational.
Value eval_at(const Expr &e, const Binding &point, FuncOracle oracle = {});

enum class EqualityStatus { Equal, NotEqual, Undecided };
enum class DecisionPath { Normalize, Expand, Numeric };

struct EqualityReport {
    EqualityStatus status = EqualityStatus::Undecided;
    DecisionPath path = DecisionPath::Normalize;
    int samples = 0;                         // numeric samples that agreed
    std::optional<NumericPoint> counterexample;
    Expr difference;                         // normalized e1 - e2

    explicit operator bool() const { return status == EqualityStatus::Equal; }
};

struct EqualityOptions {
    int samples = 32;
    int max_resamples = 256;
    std::uint64_t seed = 0x5eed;
};

// (1) normal form of the difference is zero; (2) deep re-normalization;
// (3) randomized evaluation.  NotEqual is sound; Equal after the numeric
// layer holds with probability 1 - O(samples * 1e-60) over the random draw.
EqualityReport equivalent(const Expr &a, const Expr &b, const EqualityOptions &opt = {});

const char *to_string(EqualityStatus s);
const char *to_string(DecisionPath p);

// Random rational in [lo, hi] with denominator in 1..den.
Rational random_rational(std::mt19937_64 &rng, long lo, long hi, long den);

}  // namespace rdsym
