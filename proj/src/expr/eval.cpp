#include <unordered_map>

#include "rdsym/numeric.hpp"

namespace rdsym {

namespace {

Real to_real(const Rational &q) {
    Real n(q.get_num().get_mpz_t());
    Real d(q.get_den().get_mpz_t());
    return n / d;
}

Value add(const Value &a, const Value &b) {
    if (a.exact() && b.exact()) return Value{std::get<Rational>(a.v) + std::get<Rational>(b.v)};
    return Value{a.real() + b.real()};
}

Value mul(const Value &a, const Value &b) {
    if (a.exact() && b.exact()) return Value{std::get<Rational>(a.v) * std::get<Rational>(b.v)};
    return Value{a.real() * b.real()};
}

bool is_zero(const Value &a) {
    return a.exact() ? std::get<Rational>(a.v) == 0 : a.real() == 0;
}

class Evaluator {
public:
    explicit Evaluator(const NumericPoint &p) : p_(p) {}

    Value run(const Expr &e) {
        Value acc{Rational(0)};
        for (const auto &t : e.terms()) {
            Value prod{t.coef};
            for (const auto &f : t.mono) prod = mul(prod, power(f));
            acc = add(acc, prod);
        }
        return acc;
    }

private:
    Value power(const Factor &f) {
        if (f.atom->kind == AtomKind::Surd) {
            Real base = to_real(Rational(f.atom->prime));
            return Value{boost::multiprecision::pow(base, to_real(f.exponent))};
        }
        Value base = atom(f.atom);
        const Rational &e = f.exponent;
        if (e.get_den() == 1) {
            long k = e.get_num().get_si();
            if (k < 0 && is_zero(base)) throw DomainError("division by zero", to_string(Expr::from_terms({Term{1, {Factor{f.atom, 1}}}})));
            if (base.exact()) {
                Rational b = std::get<Rational>(base.v), r = 1;
                for (long i = 0; i < (k < 0 ? -k : k); ++i) r *= b;
                if (k < 0) r = 1 / r;
                return Value{r};
            }
            return Value{boost::multiprecision::pow(base.real(), static_cast<long>(k))};
        }
        Real b = base.real();
        if (b <= 0)
            throw DomainError("fractional power of non-positive value",
                              to_string(Expr::from_terms({Term{1, {Factor{f.atom, 1}}}})));
        return Value{boost::multiprecision::pow(b, to_real(e))};
    }

    Value atom(const AtomPtr &a) {
        auto it = memo_.find(a.get());
        if (it != memo_.end()) return it->second;
        Value v = compute(*a, a);
        memo_.emplace(a.get(), v);
        return v;
    }

    Value compute(const Atom &a, const AtomPtr &ap) {
        auto text = [&] { return to_string(Expr::from_terms({Term{1, {Factor{ap, 1}}}})); };
        switch (a.kind) {
        case AtomKind::Symbol: {
            auto it = p_.values.find(a.name);
            if (it != p_.values.end()) return Value{it->second};
            auto r = p_.reals.find(a.name);
            if (r == p_.reals.end()) throw DomainError("unbound symbol", a.name);
            return Value{r->second};
        }
        case AtomKind::Surd:
            return Value{Rational(a.prime)};
        case AtomKind::Exp: {
            Value x = run(a.args[0]);
            if (is_zero(x)) return Value{Rational(1)};
            return Value{boost::multiprecision::exp(x.real())};
        }
        case AtomKind::Ln: {
            Value x = run(a.args[0]);
            if (x.exact() && std::get<Rational>(x.v) == 1) return Value{Rational(0)};
            Real r = x.real();
            if (r <= 0) throw DomainError("logarithm of non-positive value", text());
            return Value{boost::multiprecision::log(r)};
        }
        case AtomKind::Sin: {
            Value x = run(a.args[0]);
            if (is_zero(x)) return Value{Rational(0)};
            return Value{boost::multiprecision::sin(x.real())};
        }
        case AtomKind::Cos: {
            Value x = run(a.args[0]);
            if (is_zero(x)) return Value{Rational(1)};
            return Value{boost::multiprecision::cos(x.real())};
        }
        case AtomKind::Recip: {
            Value x = run(a.args[0]);
            if (is_zero(x)) throw DomainError("division by zero", text());
            if (x.exact()) return Value{Rational(1) / std::get<Rational>(x.v)};
            return Value{Real(1) / x.real()};
        }
        case AtomKind::Func: {
            if (!p_.oracle) throw DomainError("no value for opaque function", text());
            std::vector<Real> args;
            for (const auto &x : a.args) args.push_back(run(x).real());
            return Value{p_.oracle(a.name, a.orders, args)};
        }
        }
        return Value{Rational(0)};
    }

    const NumericPoint &p_;
    std::unordered_map<const Atom *, Value> memo_;
};

}  // namespace

Real Value::real() const {
    if (auto q = std::get_if<Rational>(&v)) return to_real(*q);
    return std::get<Real>(v);
}

std::string Value::str(int digits) const {
    if (auto q = std::get_if<Rational>(&v)) return q->get_str();
    return std::get<Real>(v).str(digits);
}

Value eval_at(const Expr &e, const NumericPoint &p) { return Evaluator(p).run(e); }

Value eval_at(const Expr &e, const Binding &point, FuncOracle oracle) {
    NumericPoint p;
    p.oracle = std::move(oracle);
    for (const auto &[k, v] : point.symbols) {
        auto q = v.as_rational();
        if (!q) throw DomainError("point value is not a number", k + " = " + to_string(v));
        p.values[k] = *q;
    }
    return eval_at(e, p);
}

Rational random_rational(std::mt19937_64 &rng, long lo, long hi, long den) {
    std::uniform_int_distribution<long> dd(1, den);
    long d = dd(rng);
    std::uniform_int_distribution<long> nd(lo * d, hi * d);
    Rational q(nd(rng), d);
    q.canonicalize();
    return q;
}

FuncOracle smooth_oracle(std::uint64_t seed) {
    return [seed](const std::string &name, const std::vector<int> &orders, const std::vector<Real> &args) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(std::hash<std::string>{}(name)),
                          static_cast<std::uint64_t>(args.size())};
        std::mt19937_64 rng(seq);
        Real total = 0;
        for (int j = 0; j < 3; ++j) {
            Real c = to_real(random_rational(rng, -2, 2, 7));
            if (c == 0) c = 1;
            Real expo = 0, deriv = 1;
            for (std::size_t k = 0; k < args.size(); ++k) {
                Real a = to_real(random_rational(rng, -1, 1, 5));
                expo += a * args[k];
                deriv *= boost::multiprecision::pow(a, orders[k]);
            }
            total += c * deriv * boost::multiprecision::exp(expo);
        }
        return total;
    };
}

EqualityReport equivalent(const Expr &a, const Expr &b, const EqualityOptions &opt) {
    EqualityReport r;
    r.difference = a - b;
    if (r.difference.is_zero()) {
        r.status = EqualityStatus::Equal;
        r.path = DecisionPath::Normalize;
        return r;
    }
    Expr deep = normalize(r.difference);
    if (deep.is_zero()) {
        r.status = EqualityStatus::Equal;
        r.path = DecisionPath::Expand;
        r.difference = deep;
        return r;
    }
    // Without kernels the normal form is canonical: a nonzero remainder is a
    // genuine difference.
    if (!has_kernels(deep)) {
        r.status = EqualityStatus::NotEqual;
        r.path = DecisionPath::Expand;
        return r;
    }
    r.path = DecisionPath::Numeric;
    std::mt19937_64 rng(opt.seed);
    auto syms = free_symbols(deep);
    int failures = 0;
    const Real tol("1e-50");
    while (r.samples < opt.samples) {
        NumericPoint p;
        // the box grows (and later admits negative values) as domain failures accumulate
        int widen = failures / 16;
        Rational scale(1);
        for (int i = 0; i < widen; ++i) scale *= 4;
        for (const auto &s : syms) {
            Rational x = (random_rational(rng, 0, 3, 8) + Rational(1, 4)) * scale;
            if (widen >= 1 && rng() % 2) x = -x;
            p.values[s] = x;
        }
        p.oracle = smooth_oracle(opt.seed + static_cast<std::uint64_t>(r.samples) * 7919u);
        try {
            Evaluator ev(p);
            Value v = ev.run(deep);
            Real scale = 1;
            for (const auto &t : deep.terms()) scale += abs(Evaluator(p).run(Expr::from_terms({t})).real());
            if (abs(v.real()) > tol * scale) {
                r.status = EqualityStatus::NotEqual;
                r.counterexample = std::move(p);
                return r;
            }
            ++r.samples;
        } catch (const DomainError &) {
            if (++failures > opt.max_resamples) {
                r.status = EqualityStatus::Undecided;
                return r;
            }
        }
    }
    r.status = EqualityStatus::Equal;
    return r;
}

const char *to_string(EqualityStatus s) {
    switch (s) {
    case EqualityStatus::Equal:
        return "equal";
    case EqualityStatus::NotEqual:
        return "not_equal";
    default:
        return "undecided";
    }
}

const char *to_string(DecisionPath p) {
    switch (p) {
    case DecisionPath::Normalize:
        return "normalize";
    case DecisionPath::Expand:
        return "expand";
    default:
        return "numeric";
    }
}

}  // namespace rdsym
