#pragma once

// Exact symbolic expressions in a canonical sum-of-products normal form.
//
// An Expr is an immutable, always-normalized polynomial whose monomials are
// products of atoms raised to rational powers.  Atoms are symbols, prime
// surds, and the kernels exp, ln, sin, cos, opaque functions and reciprocals
// of irreducible polynomial denominators.  Symbolic exponents are carried as
// exp(e*ln(b)); rational multiples of ln(atom) are folded back into powers.

#include <gmpxx.h>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rdsym {

using Rational = mpq_class;

class Expr;
struct Atom;
using AtomPtr = std::shared_ptr<const Atom>;

struct Factor {
    AtomPtr atom;
    Rational exponent;
};
using Monomial = std::vector<Factor>;

struct Term {
    Rational coef;
    Monomial mono;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string &msg);
    std::size_t offset() const { return offset_; }
    const std::vector<std::string> &expected() const { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

class DomainError : public std::runtime_error {
public:
    DomainError(const std::string &msg, std::string subexpr)
        : std::runtime_error(msg + ": " + subexpr), subexpr_(std::move(subexpr)) {}
    const std::string &subexpression() const { return subexpr_; }

private:
    std::string subexpr_;
};

// A rewrite rule for an opaque kernel: the first derivative with respect to
// argument `index` is replaced by `rhs(args)`.  Arguments of a ruled kernel
// must be distinct plain symbols.  Every rewritten atom has zero order in
// `index`, so repeated differentiation terminates.
struct KernelRule : std::enable_shared_from_this<KernelRule> {
    std::size_t index = 0;
    std::function<Expr(std::span<const Expr>, const std::shared_ptr<const KernelRule> &)> rhs;
};
using KernelRulePtr = std::shared_ptr<const KernelRule>;

enum class AtomKind { Symbol, Surd, Exp, Ln, Sin, Cos, Func, Recip };

class Expr {
public:
    Expr();  // zero
    Expr(long v);
    Expr(const Rational &q);
    static Expr symbol(std::string name);
    static Expr from_terms(std::vector<Term> terms);  // normalizes

    const std::vector<Term> &terms() const { return *terms_; }
    bool is_zero() const { return terms_->empty(); }
    bool is_rational() const;
    std::optional<Rational> as_rational() const;
    // Single symbol with exponent 1 and coefficient 1.
    std::optional<std::string> as_symbol() const;
    std::size_t size() const { return terms_->size(); }
    std::size_t hash() const { return hash_; }

    friend Expr operator+(const Expr &a, const Expr &b);
    friend Expr operator-(const Expr &a, const Expr &b);
    friend Expr operator*(const Expr &a, const Expr &b);
    friend Expr operator/(const Expr &a, const Expr &b);
    friend Expr operator-(const Expr &a);
    Expr &operator+=(const Expr &o) { return *this = *this + o; }
    Expr &operator-=(const Expr &o) { return *this = *this - o; }
    Expr &operator*=(const Expr &o) { return *this = *this * o; }

    // Structural identity of normal forms.
    friend bool operator==(const Expr &a, const Expr &b);
    friend bool operator!=(const Expr &a, const Expr &b) { return !(a == b); }

    std::string str() const;

private:
    explicit Expr(std::shared_ptr<const std::vector<Term>> t);
    std::shared_ptr<const std::vector<Term>> terms_;
    std::size_t hash_ = 0;
};

struct Atom {
    AtomKind kind;
    std::string name;          // Symbol, Func
    mpz_class prime;           // Surd
    std::vector<Expr> args;    // kernels: one argument; Func: any number
    std::vector<int> orders;   // Func: partial derivative orders per argument
    KernelRulePtr rule;        // Func only; ignored by comparison
    std::size_t hash = 0;
};

int compare(const Expr &a, const Expr &b);
int compare(const AtomPtr &a, const AtomPtr &b);
int compare(const Monomial &a, const Monomial &b);

struct ExprLess {
    bool operator()(const Expr &a, const Expr &b) const { return compare(a, b) < 0; }
};

// Kernels and powers.
Expr exp(const Expr &a);
Expr ln(const Expr &a);
Expr sin(const Expr &a);
Expr cos(const Expr &a);
Expr pow(const Expr &base, const Expr &exponent);
Expr pow(const Expr &base, const Rational &exponent);
Expr sqrt(const Expr &a);
// Opaque function application F(args) with optional derivative orders.
Expr func(std::string name, std::vector<Expr> args, std::vector<int> orders = {},
          KernelRulePtr rule = nullptr);

// Re-runs canonicalization of every atom bottom-up.  Idempotent.
Expr normalize(const Expr &e);

Expr differentiate(const Expr &e, const std::string &symbol);
Expr differentiate(const Expr &e, const std::string &symbol, int times);

// Value bound to an opaque kernel: body in terms of formal parameter symbols.
struct KernelValue {
    std::vector<std::string> formals;
    Expr body;
};

struct Binding {
    std::map<std::string, Expr> symbols;
    std::map<std::string, KernelValue> kernels;

    Binding &bind(const std::string &s, Expr v) {
        symbols[s] = std::move(v);
        return *this;
    }
    bool empty() const { return symbols.empty() && kernels.empty(); }
};

// Simultaneous, capture-free substitution followed by normalization.
Expr substitute(const Expr &e, const Binding &b);

// Free symbol names (including symbols inside kernel arguments).
std::set<std::string> free_symbols(const Expr &e);
// Names of opaque functions applied anywhere in e.
std::set<std::string> function_names(const Expr &e);
bool has_kernels(const Expr &e);  // anything beyond symbols and surds
bool depends_on(const Expr &e, const std::string &symbol);

// Coefficient of symbol^power when e is treated as polynomial in `symbol`
// (other occurrences inside kernels are not extracted).
Expr coefficient(const Expr &e, const std::string &symbol, int power);
// Splits e by monomial pattern in the listed symbols: map from the exponent
// vector to the coefficient.  Kernels depending on the symbols are rejected.
std::map<std::vector<Rational>, Expr> collect(const Expr &e, const std::vector<std::string> &symbols);

Expr parse(std::string_view text);
std::string to_string(const Expr &e);

// The smallest term of e by (atom count, printed length); used to report a
// minimal failing monomial.
Expr minimal_term(const Expr &e);

}  // namespace rdsym
