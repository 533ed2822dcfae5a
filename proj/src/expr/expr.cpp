#include "rdsym/expr.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_map>

namespace rdsym {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hash_rational(const Rational &q) {
    return mix(std::hash<std::string>{}(q.get_num().get_str()),
               std::hash<std::string>{}(q.get_den().get_str()));
}

int cmp_rational(const Rational &a, const Rational &b) {
    int c = cmp(a, b);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

AtomPtr finish_atom(Atom a) {
    std::size_t h = std::hash<int>{}(static_cast<int>(a.kind));
    h = mix(h, std::hash<std::string>{}(a.name));
    if (a.kind == AtomKind::Surd) h = mix(h, std::hash<std::string>{}(a.prime.get_str()));
    for (const auto &x : a.args) h = mix(h, x.hash());
    for (int o : a.orders) h = mix(h, static_cast<std::size_t>(o) * 131u);
    a.hash = h;
    return std::make_shared<const Atom>(std::move(a));
}

AtomPtr make_symbol_atom(std::string name) {
    Atom a{AtomKind::Symbol, std::move(name), {}, {}, {}, nullptr, 0};
    return finish_atom(std::move(a));
}

AtomPtr make_unary_atom(AtomKind k, Expr arg) {
    Atom a{k, {}, {}, {std::move(arg)}, {}, nullptr, 0};
    return finish_atom(std::move(a));
}

AtomPtr make_surd_atom(const mpz_class &p) {
    Atom a{AtomKind::Surd, {}, p, {}, {}, nullptr, 0};
    return finish_atom(std::move(a));
}

Expr atom_expr(const AtomPtr &a, const Rational &e = 1) {
    return Expr::from_terms({Term{Rational(1), Monomial{Factor{a, e}}}});
}

// Trial-division factorization; a residue that is not fully factored is
// treated as a single base (arithmetic stays exact, canonicity may weaken).
std::vector<std::pair<mpz_class, unsigned long>> factorize(mpz_class n) {
    std::vector<std::pair<mpz_class, unsigned long>> out;
    if (n < 0) n = -n;
    for (unsigned long p = 2; p < 100000 && mpz_class(p) * p <= n; ++p) {
        unsigned long k = 0;
        while (n % p == 0) {
            n /= p;
            ++k;
        }
        if (k) out.emplace_back(mpz_class(p), k);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

Rational rational_int_pow(const Rational &base, long k) {
    Rational r = 1;
    Rational b = base;
    bool neg = k < 0;
    unsigned long n = static_cast<unsigned long>(neg ? -k : k);
    while (n) {
        if (n & 1u) r *= b;
        b *= b;
        n >>= 1u;
    }
    if (neg) r = 1 / r;
    return r;
}

bool is_integer(const Rational &q) { return q.get_den() == 1; }

mpz_class floor_of(const Rational &q) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return f;
}

// Positive rational raised to a rational power: coefficient times surd factors.
Expr rational_pow(const Rational &c, const Rational &q) {
    if (is_integer(q)) return Expr(rational_int_pow(c, q.get_num().get_si()));
    if (c <= 0) throw DomainError("fractional power of non-positive constant", c.get_str());
    Monomial mono;
    Rational coef = 1;
    auto add = [&](const mpz_class &p, const Rational &e) {
        mpz_class fl = floor_of(e);
        Rational frac = e - Rational(fl);
        coef *= rational_int_pow(Rational(p), fl.get_si());
        if (frac != 0) mono.push_back(Factor{make_surd_atom(p), frac});
    };
    for (auto &[p, k] : factorize(c.get_num())) add(p, Rational(static_cast<long>(k)) * q);
    for (auto &[p, k] : factorize(c.get_den())) add(p, -Rational(static_cast<long>(k)) * q);
    std::sort(mono.begin(), mono.end(),
              [](const Factor &a, const Factor &b) { return compare(a.atom, b.atom) < 0; });
    return Expr::from_terms({Term{coef, std::move(mono)}});
}

struct MonoLess {
    bool operator()(const Monomial &a, const Monomial &b) const { return compare(a, b) < 0; }
};

void sort_and_merge(std::vector<Term> &terms) {
    std::sort(terms.begin(), terms.end(),
              [](const Term &a, const Term &b) { return compare(a.mono, b.mono) < 0; });
    std::vector<Term> out;
    out.reserve(terms.size());
    for (auto &t : terms) {
        if (!out.empty() && compare(out.back().mono, t.mono) == 0) {
            out.back().coef += t.coef;
        } else {
            if (!out.empty() && out.back().coef == 0) out.pop_back();
            out.push_back(std::move(t));
        }
    }
    if (!out.empty() && out.back().coef == 0) out.pop_back();
    terms = std::move(out);
}

void emit(Rational coef, Monomial m, std::vector<Term> &out);

// Multiply two canonical terms, appending canonical terms to out.
void multiply_terms(const Term &a, const Term &b, std::vector<Term> &out) {
    Monomial m;
    m.reserve(a.mono.size() + b.mono.size());
    std::size_t i = 0, j = 0;
    while (i < a.mono.size() || j < b.mono.size()) {
        if (j == b.mono.size()) {
            m.push_back(a.mono[i++]);
        } else if (i == a.mono.size()) {
            m.push_back(b.mono[j++]);
        } else {
            int c = compare(a.mono[i].atom, b.mono[j].atom);
            if (c < 0) {
                m.push_back(a.mono[i++]);
            } else if (c > 0) {
                m.push_back(b.mono[j++]);
            } else {
                m.push_back(Factor{a.mono[i].atom, a.mono[i].exponent + b.mono[j].exponent});
                ++i;
                ++j;
            }
        }
    }
    emit(a.coef * b.coef, std::move(m), out);
}

// Canonicalizes a sorted monomial: drops zero powers, merges exponentials,
// folds integral surd powers, reduces cos^2 and expands negative reciprocal
// powers.
void emit(Rational coef, Monomial m, std::vector<Term> &out) {
    if (coef == 0) return;
    Monomial clean;
    clean.reserve(m.size());
    std::vector<Term> extra{Term{Rational(1), {}}};
    bool has_extra = false;
    std::vector<const Factor *> exps;
    bool exp_special = false;
    for (auto &f : m) {
        if (f.exponent == 0) continue;
        switch (f.atom->kind) {
        case AtomKind::Exp:
            if (f.exponent != 1) exp_special = true;
            exps.push_back(&f);
            clean.push_back(f);
            break;
        case AtomKind::Surd: {
            mpz_class fl = floor_of(f.exponent);
            if (fl != 0) {
                coef *= rational_int_pow(Rational(f.atom->prime), fl.get_si());
                f.exponent -= Rational(fl);
            }
            if (f.exponent != 0) clean.push_back(f);
            break;
        }
        case AtomKind::Cos:
            if (is_integer(f.exponent) && f.exponent >= 2) {
                long e = f.exponent.get_num().get_si();
                long k = e / 2;
                if (e % 2) clean.push_back(Factor{f.atom, Rational(1)});
                Expr s = sin(f.atom->args[0]);
                Expr one_minus = Expr(1) - s * s;
                Expr acc = Expr::from_terms(extra);
                for (long r = 0; r < k; ++r) acc = acc * one_minus;
                extra = acc.terms();
                has_extra = true;
            } else {
                clean.push_back(f);
            }
            break;
        case AtomKind::Recip:
            if (f.exponent < 0) {
                Expr p = pow(f.atom->args[0], -f.exponent);
                extra = (Expr::from_terms(extra) * p).terms();
                has_extra = true;
            } else {
                clean.push_back(f);
            }
            break;
        default:
            clean.push_back(f);
        }
    }
    if (exps.size() > 1 || exp_special) {
        Expr exp_total;
        for (const Factor *f : exps) exp_total += f->atom->args[0] * Expr(f->exponent);
        clean.erase(std::remove_if(clean.begin(), clean.end(),
                                   [](const Factor &f) { return f.atom->kind == AtomKind::Exp; }),
                    clean.end());
        extra = (Expr::from_terms(extra) * exp(exp_total)).terms();
        has_extra = true;
    }
    if (!has_extra) {
        out.push_back(Term{std::move(coef), std::move(clean)});
        return;
    }
    Term base{std::move(coef), std::move(clean)};
    for (const auto &t : extra) multiply_terms(base, t, out);
}

}  // namespace

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected, const std::string &msg)
    : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset_(offset),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------------------------
// Comparison

int compare(const Monomial &a, const Monomial &b) {
    std::size_t n = std::min(a.size(), b.size());
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (std::size_t i = 0; i < n; ++i) {
        int c = compare(a[i].atom, b[i].atom);
        if (c) return c;
        c = cmp_rational(a[i].exponent, b[i].exponent);
        if (c) return -c;
    }
    return 0;
}

int compare(const AtomPtr &a, const AtomPtr &b) {
    if (a.get() == b.get()) return 0;
    if (a->kind != b->kind) return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
    switch (a->kind) {
    case AtomKind::Symbol: {
        int c = a->name.compare(b->name);
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case AtomKind::Surd: {
        int c = cmp(a->prime, b->prime);
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case AtomKind::Func: {
        int c = a->name.compare(b->name);
        if (c) return c < 0 ? -1 : 1;
        if (a->orders != b->orders) return a->orders < b->orders ? -1 : 1;
        if (a->args.size() != b->args.size()) return a->args.size() < b->args.size() ? -1 : 1;
        for (std::size_t i = 0; i < a->args.size(); ++i) {
            int d = compare(a->args[i], b->args[i]);
            if (d) return d;
        }
        return 0;
    }
    default:
        return compare(a->args[0], b->args[0]);
    }
}

int compare(const Expr &a, const Expr &b) {
    if (&a.terms() == &b.terms()) return 0;
    const auto &ta = a.terms();
    const auto &tb = b.terms();
    std::size_t n = std::min(ta.size(), tb.size());
    for (std::size_t i = 0; i < n; ++i) {
        int c = compare(ta[i].mono, tb[i].mono);
        if (c) return c;
        c = cmp_rational(ta[i].coef, tb[i].coef);
        if (c) return c;
    }
    if (ta.size() != tb.size()) return ta.size() < tb.size() ? -1 : 1;
    return 0;
}

bool operator==(const Expr &a, const Expr &b) {
    if (a.hash_ != b.hash_) return false;
    return compare(a, b) == 0;
}

// ---------------------------------------------------------------------------
// Construction

Expr::Expr(std::shared_ptr<const std::vector<Term>> t) : terms_(std::move(t)) {
    std::size_t h = 7;
    for (const auto &term : *terms_) {
        h = mix(h, hash_rational(term.coef));
        for (const auto &f : term.mono) {
            h = mix(h, f.atom->hash);
            h = mix(h, hash_rational(f.exponent));
        }
    }
    hash_ = h;
}

Expr::Expr() : Expr(std::make_shared<const std::vector<Term>>()) {}

Expr::Expr(long v) : Expr(Rational(v)) {}

Expr::Expr(const Rational &q)
    : Expr(q == 0 ? std::make_shared<const std::vector<Term>>()
                  : std::make_shared<const std::vector<Term>>(std::vector<Term>{Term{q, {}}})) {}

Expr Expr::symbol(std::string name) { return atom_expr(make_symbol_atom(std::move(name))); }

Expr Expr::from_terms(std::vector<Term> terms) {
    sort_and_merge(terms);
    return Expr(std::make_shared<const std::vector<Term>>(std::move(terms)));
}

bool Expr::is_rational() const {
    return terms_->empty() || (terms_->size() == 1 && (*terms_)[0].mono.empty());
}

std::optional<Rational> Expr::as_rational() const {
    if (terms_->empty()) return Rational(0);
    if (terms_->size() == 1 && (*terms_)[0].mono.empty()) return (*terms_)[0].coef;
    return std::nullopt;
}

std::optional<std::string> Expr::as_symbol() const {
    if (terms_->size() != 1) return std::nullopt;
    const auto &t = (*terms_)[0];
    if (t.coef != 1 || t.mono.size() != 1 || t.mono[0].exponent != 1 ||
        t.mono[0].atom->kind != AtomKind::Symbol)
        return std::nullopt;
    return t.mono[0].atom->name;
}

Expr operator+(const Expr &a, const Expr &b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    std::vector<Term> out;
    out.reserve(a.size() + b.size());
    const auto &ta = a.terms();
    const auto &tb = b.terms();
    std::size_t i = 0, j = 0;
    while (i < ta.size() || j < tb.size()) {
        if (j == tb.size()) {
            out.push_back(ta[i++]);
        } else if (i == ta.size()) {
            out.push_back(tb[j++]);
        } else {
            int c = compare(ta[i].mono, tb[j].mono);
            if (c < 0) {
                out.push_back(ta[i++]);
            } else if (c > 0) {
                out.push_back(tb[j++]);
            } else {
                Rational s = ta[i].coef + tb[j].coef;
                if (s != 0) out.push_back(Term{s, ta[i].mono});
                ++i;
                ++j;
            }
        }
    }
    return Expr(std::make_shared<const std::vector<Term>>(std::move(out)));
}

Expr operator-(const Expr &a) {
    std::vector<Term> out = a.terms();
    for (auto &t : out) t.coef = -t.coef;
    return Expr(std::make_shared<const std::vector<Term>>(std::move(out)));
}

Expr operator-(const Expr &a, const Expr &b) { return a + (-b); }

Expr operator*(const Expr &a, const Expr &b) {
    if (a.is_zero() || b.is_zero()) return Expr();
    if (auto q = a.as_rational(); q && *q == 1) return b;
    if (auto q = b.as_rational(); q && *q == 1) return a;
    std::vector<Term> out;
    out.reserve(a.size() * b.size());
    for (const auto &x : a.terms())
        for (const auto &y : b.terms()) multiply_terms(x, y, out);
    return Expr::from_terms(std::move(out));
}

Expr operator/(const Expr &a, const Expr &b) {
    if (b.is_zero()) throw DomainError("division by zero", to_string(a));
    return a * pow(b, Rational(-1));
}

// ---------------------------------------------------------------------------
// Kernels

Expr exp(const Expr &a) {
    std::vector<Term> rest;
    Expr pulled(1);
    for (const auto &t : a.terms()) {
        if (t.mono.size() == 1 && t.mono[0].atom->kind == AtomKind::Ln && t.mono[0].exponent == 1) {
            const Expr &x = t.mono[0].atom->args[0];
            if (x.size() == 1 || is_integer(t.coef)) {
                pulled = pulled * pow(x, t.coef);
                continue;
            }
        }
        rest.push_back(t);
    }
    if (rest.empty()) return pulled;
    Expr arg = Expr::from_terms(std::move(rest));
    return pulled * atom_expr(make_unary_atom(AtomKind::Exp, std::move(arg)));
}

Expr ln(const Expr &a) {
    if (a.is_zero()) throw DomainError("logarithm of zero", "0");
    if (a.size() == 1) {
        const Term &t = a.terms()[0];
        if (t.coef < 0) return atom_expr(make_unary_atom(AtomKind::Ln, a));
        Expr out;
        if (t.coef != 1) {
            for (auto &[p, k] : factorize(t.coef.get_num()))
                out += Expr(static_cast<long>(k)) * atom_expr(make_unary_atom(AtomKind::Ln, Expr(Rational(p))));
            for (auto &[p, k] : factorize(t.coef.get_den()))
                out -= Expr(static_cast<long>(k)) * atom_expr(make_unary_atom(AtomKind::Ln, Expr(Rational(p))));
        }
        for (const auto &f : t.mono) {
            Expr e(f.exponent);
            switch (f.atom->kind) {
            case AtomKind::Exp:
                out += e * f.atom->args[0];
                break;
            case AtomKind::Surd:
                out += e * atom_expr(make_unary_atom(AtomKind::Ln, Expr(Rational(f.atom->prime))));
                break;
            case AtomKind::Recip:
                out -= e * ln(f.atom->args[0]);
                break;
            default:
                out += e * atom_expr(make_unary_atom(AtomKind::Ln, atom_expr(f.atom)));
            }
        }
        return out;
    }
    Rational lead = a.terms()[0].coef;
    Rational c = lead < 0 ? Rational(-lead) : lead;
    Expr scaled = c == 1 ? a : a * Expr(Rational(1) / c);
    Expr out = atom_expr(make_unary_atom(AtomKind::Ln, scaled));
    if (c != 1) out += ln(Expr(c));
    return out;
}

namespace {
bool leading_negative(const Expr &a) { return !a.is_zero() && a.terms()[0].coef < 0; }
}  // namespace

Expr sin(const Expr &a) {
    if (a.is_zero()) return Expr();
    if (leading_negative(a)) return -atom_expr(make_unary_atom(AtomKind::Sin, -a));
    return atom_expr(make_unary_atom(AtomKind::Sin, a));
}

Expr cos(const Expr &a) {
    if (a.is_zero()) return Expr(1);
    if (leading_negative(a)) return atom_expr(make_unary_atom(AtomKind::Cos, -a));
    return atom_expr(make_unary_atom(AtomKind::Cos, a));
}

Expr pow(const Expr &base, const Rational &q) {
    if (q == 0) return Expr(1);
    if (q == 1) return base;
    if (base.is_zero()) {
        if (q > 0) return Expr();
        throw DomainError("division by zero", "0");
    }
    if (base.size() == 1) {
        const Term &t = base.terms()[0];
        Expr coef;
        if (t.coef < 0 && !is_integer(q)) {
            if (t.mono.empty()) throw DomainError("fractional power of negative constant", t.coef.get_str());
            // (-c*M)^q for non-integer q: keep the whole base under exp(q*ln(.)).
            return exp(Expr(q) * ln(base));
        }
        coef = rational_pow(t.coef, q);
        Monomial m;
        m.reserve(t.mono.size());
        for (const auto &f : t.mono) m.push_back(Factor{f.atom, f.exponent * q});
        std::vector<Term> out;
        emit(Rational(1), std::move(m), out);
        return coef * Expr::from_terms(std::move(out));
    }
    if (is_integer(q)) {
        long k = q.get_num().get_si();
        if (k > 0) {
            Expr r(1), b = base;
            unsigned long n = static_cast<unsigned long>(k);
            while (n) {
                if (n & 1u) r = r * b;
                n >>= 1u;
                if (n) b = b * b;
            }
            return r;
        }
        Rational lead = base.terms()[0].coef;
        Expr monic = base * Expr(Rational(1) / lead);
        Expr rec = atom_expr(make_unary_atom(AtomKind::Recip, monic), Rational(-k));
        return Expr(rational_int_pow(lead, k)) * rec;
    }
    return exp(Expr(q) * ln(base));
}

Expr pow(const Expr &base, const Expr &exponent) {
    if (auto q = exponent.as_rational()) return pow(base, *q);
    if (auto b = base.as_rational(); b && *b == 1) return Expr(1);
    return exp(exponent * ln(base));
}

Expr sqrt(const Expr &a) { return pow(a, Rational(1, 2)); }

Expr func(std::string name, std::vector<Expr> args, std::vector<int> orders, KernelRulePtr rule) {
    if (orders.empty()) orders.assign(args.size(), 0);
    if (orders.size() != args.size()) throw std::invalid_argument("func: orders/args size mismatch");
    Atom a{AtomKind::Func, std::move(name), {}, std::move(args), std::move(orders), std::move(rule), 0};
    return atom_expr(finish_atom(std::move(a)));
}

// ---------------------------------------------------------------------------
// Traversals

namespace {

void collect_symbols(const Expr &e, std::set<std::string> &out, std::set<std::string> *funcs) {
    for (const auto &t : e.terms())
        for (const auto &f : t.mono) {
            const Atom &a = *f.atom;
            if (a.kind == AtomKind::Symbol) out.insert(a.name);
            if (a.kind == AtomKind::Func && funcs) funcs->insert(a.name);
            for (const auto &x : a.args) collect_symbols(x, out, funcs);
        }
}

bool atom_depends(const Atom &a, const std::string &s);

bool expr_depends(const Expr &e, const std::string &s) {
    for (const auto &t : e.terms())
        for (const auto &f : t.mono)
            if (atom_depends(*f.atom, s)) return true;
    return false;
}

bool atom_depends(const Atom &a, const std::string &s) {
    if (a.kind == AtomKind::Symbol) return a.name == s;
    for (const auto &x : a.args)
        if (expr_depends(x, s)) return true;
    return false;
}

}  // namespace

std::set<std::string> free_symbols(const Expr &e) {
    std::set<std::string> out;
    collect_symbols(e, out, nullptr);
    return out;
}

std::set<std::string> function_names(const Expr &e) {
    std::set<std::string> syms, funcs;
    collect_symbols(e, syms, &funcs);
    return funcs;
}

bool has_kernels(const Expr &e) {
    for (const auto &t : e.terms())
        for (const auto &f : t.mono)
            if (f.atom->kind != AtomKind::Symbol && f.atom->kind != AtomKind::Surd) return true;
    return false;
}

bool depends_on(const Expr &e, const std::string &symbol) { return expr_depends(e, symbol); }

// ---------------------------------------------------------------------------
// Differentiation

namespace {

struct AtomKey {
    const Atom *p;
    bool operator==(const AtomKey &o) const { return p == o.p; }
};
struct AtomKeyHash {
    std::size_t operator()(const AtomKey &k) const { return std::hash<const void *>{}(k.p); }
};

class Differ {
public:
    explicit Differ(const std::string &s) : s_(s) {}

    Expr run(const Expr &e) {
        std::vector<Term> acc;
        for (const auto &t : e.terms()) {
            for (std::size_t i = 0; i < t.mono.size(); ++i) {
                const Factor &f = t.mono[i];
                const Expr &da = atom(f.atom);
                if (da.is_zero()) continue;
                Monomial m = t.mono;
                m[i].exponent -= 1;
                std::vector<Term> head;
                emit(t.coef * f.exponent, std::move(m), head);
                for (const auto &h : head)
                    for (const auto &d : da.terms()) multiply_terms(h, d, acc);
            }
        }
        return Expr::from_terms(std::move(acc));
    }

private:
    const Expr &atom(const AtomPtr &a) {
        auto it = memo_.find(AtomKey{a.get()});
        if (it != memo_.end()) return it->second;
        Expr d = compute(a);
        return memo_.emplace(AtomKey{a.get()}, std::move(d)).first->second;
    }

    Expr compute(const AtomPtr &ap) {
        const Atom &a = *ap;
        switch (a.kind) {
        case AtomKind::Symbol:
            return a.name == s_ ? Expr(1) : Expr();
        case AtomKind::Surd:
            return Expr();
        case AtomKind::Exp: {
            Expr d = run(a.args[0]);
            return d.is_zero() ? d : d * atom_expr(ap);
        }
        case AtomKind::Ln: {
            Expr d = run(a.args[0]);
            return d.is_zero() ? d : d * pow(a.args[0], Rational(-1));
        }
        case AtomKind::Sin: {
            Expr d = run(a.args[0]);
            return d.is_zero() ? d : d * cos(a.args[0]);
        }
        case AtomKind::Cos: {
            Expr d = run(a.args[0]);
            return d.is_zero() ? d : -(d * sin(a.args[0]));
        }
        case AtomKind::Recip: {
            Expr d = run(a.args[0]);
            return d.is_zero() ? d : -(d * atom_expr(ap, 2));
        }
        case AtomKind::Func: {
            Expr out;
            for (std::size_t k = 0; k < a.args.size(); ++k) {
                Expr d = run(a.args[k]);
                if (d.is_zero()) continue;
                out += d * func_partial(a, k);
            }
            return out;
        }
        }
        return Expr();
    }

    std::string s_;
    std::unordered_map<AtomKey, Expr, AtomKeyHash> memo_;

public:
    static Expr func_partial(const Atom &a, std::size_t k) {
        if (a.rule && a.rule->index == k) {
            Expr val = a.rule->rhs(a.args, a.rule);
            for (std::size_t j = 0; j < a.args.size(); ++j) {
                if (a.orders[j] == 0) continue;
                auto sym = a.args[j].as_symbol();
                if (!sym) throw std::logic_error("kernel rule requires plain symbol arguments: " + a.name);
                val = differentiate(val, *sym, a.orders[j]);
            }
            return val;
        }
        std::vector<int> o = a.orders;
        ++o[k];
        return func(a.name, a.args, std::move(o), a.rule);
    }
};

}  // namespace

Expr differentiate(const Expr &e, const std::string &symbol) { return Differ(symbol).run(e); }

Expr differentiate(const Expr &e, const std::string &symbol, int times) {
    Expr r = e;
    for (int i = 0; i < times && !r.is_zero(); ++i) r = differentiate(r, symbol);
    return r;
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

class Substituter {
public:
    explicit Substituter(const Binding &b) : b_(b) {}

    Expr run(const Expr &e) {
        std::vector<Term> acc;
        for (const auto &t : e.terms()) {
            Expr prod(t.coef);
            for (const auto &f : t.mono) {
                prod = prod * pow(atom(f.atom), f.exponent);
                if (prod.is_zero()) break;
            }
            acc.insert(acc.end(), prod.terms().begin(), prod.terms().end());
        }
        return Expr::from_terms(std::move(acc));
    }

private:
    const Expr &atom(const AtomPtr &a) {
        auto it = memo_.find(AtomKey{a.get()});
        if (it != memo_.end()) return it->second;
        Expr v = compute(*a, a);
        return memo_.emplace(AtomKey{a.get()}, std::move(v)).first->second;
    }

    Expr compute(const Atom &a, const AtomPtr &ap) {
        switch (a.kind) {
        case AtomKind::Symbol: {
            auto it = b_.symbols.find(a.name);
            return it != b_.symbols.end() ? it->second : atom_expr(ap);
        }
        case AtomKind::Surd:
            return rational_pow(Rational(a.prime), Rational(1));
        case AtomKind::Exp:
            return exp(run(a.args[0]));
        case AtomKind::Ln:
            return ln(run(a.args[0]));
        case AtomKind::Sin:
            return sin(run(a.args[0]));
        case AtomKind::Cos:
            return cos(run(a.args[0]));
        case AtomKind::Recip:
            return pow(run(a.args[0]), Rational(-1));
        case AtomKind::Func: {
            std::vector<Expr> args;
            args.reserve(a.args.size());
            for (const auto &x : a.args) args.push_back(run(x));
            auto kit = b_.kernels.find(a.name);
            if (kit == b_.kernels.end()) return func(a.name, std::move(args), a.orders, a.rule);
            const KernelValue &kv = kit->second;
            if (kv.formals.size() != args.size())
                throw std::invalid_argument("kernel binding arity mismatch for " + a.name);
            Expr body = kv.body;
            for (std::size_t j = 0; j < args.size(); ++j) body = differentiate(body, kv.formals[j], a.orders[j]);
            Binding inner;
            for (std::size_t j = 0; j < args.size(); ++j) inner.symbols[kv.formals[j]] = args[j];
            return substitute(body, inner);
        }
        }
        return atom_expr(ap);
    }

    const Binding &b_;
    std::unordered_map<AtomKey, Expr, AtomKeyHash> memo_;
};

}  // namespace

Expr substitute(const Expr &e, const Binding &b) { return Substituter(b).run(e); }

Expr normalize(const Expr &e) { return substitute(e, Binding{}); }

Expr coefficient(const Expr &e, const std::string &symbol, int power) {
    auto parts = collect(e, {symbol});
    auto it = parts.find({Rational(power)});
    return it == parts.end() ? Expr() : it->second;
}

std::map<std::vector<Rational>, Expr> collect(const Expr &e, const std::vector<std::string> &symbols) {
    std::map<std::vector<Rational>, std::vector<Term>> acc;
    for (const auto &t : e.terms()) {
        std::vector<Rational> key(symbols.size(), Rational(0));
        Monomial rest;
        for (const auto &f : t.mono) {
            bool matched = false;
            if (f.atom->kind == AtomKind::Symbol) {
                for (std::size_t i = 0; i < symbols.size(); ++i)
                    if (f.atom->name == symbols[i]) {
                        key[i] = f.exponent;
                        matched = true;
                    }
            } else {
                for (const auto &s : symbols)
                    if (atom_depends(*f.atom, s))
                        throw std::invalid_argument("collect: kernel depends on " + s);
            }
            if (!matched) rest.push_back(f);
        }
        acc[key].push_back(Term{t.coef, std::move(rest)});
    }
    std::map<std::vector<Rational>, Expr> out;
    for (auto &[k, v] : acc) {
        Expr c = Expr::from_terms(std::move(v));
        if (!c.is_zero()) out.emplace(k, std::move(c));
    }
    return out;
}

Expr minimal_term(const Expr &e) {
    if (e.is_zero()) return e;
    const Term *best = nullptr;
    std::size_t best_len = 0;
    for (const auto &t : e.terms()) {
        std::size_t len = to_string(Expr::from_terms({t})).size();
        if (!best || t.mono.size() < best->mono.size() ||
            (t.mono.size() == best->mono.size() && len < best_len)) {
            best = &t;
            best_len = len;
        }
    }
    return Expr::from_terms({*best});
}

std::string Expr::str() const { return to_string(*this); }

}  // namespace rdsym
