#include <random>

#include "doctest.h"
#include "rdsym/numeric.hpp"

using namespace rdsym;

namespace {

Expr P(const char *s) { return parse(s); }
Expr S(const char *s) { return Expr::symbol(s); }

bool same(const Expr &a, const Expr &b) { return equivalent(a, b).status == EqualityStatus::Equal; }

}  // namespace

TEST_CASE("parse examples") {
    Expr e = P("u^2 - 1");
    CHECK(e == S("u") * S("u") - Expr(1));
    CHECK(P("0").is_zero());
    Expr k = P("lam*u^(nu+1)*exp(mu*v/u)");
    CHECK(function_names(k).empty());
    CHECK(free_symbols(k) == std::set<std::string>{"lam", "mu", "nu", "u", "v"});
    CHECK(same(k, S("lam") * S("u") * pow(S("u"), S("nu")) * exp(S("mu") * S("v") / S("u"))));
}

TEST_CASE("parse errors carry offset and expected set") {
    try {
        parse("u + * v");
        FAIL("no throw");
    } catch (const ParseError &err) {
        CHECK(err.offset() == 4);
        CHECK_FALSE(err.expected().empty());
    }
    CHECK_THROWS_AS(parse("(u"), ParseError);
    CHECK_THROWS_AS(parse("exp"), ParseError);
    CHECK_THROWS_AS(parse("u $"), ParseError);
}

TEST_CASE("differentiate examples") {
    CHECK(differentiate(P("u*v"), "u") == S("v"));
    Expr e = P("exp(nu*v/u)");
    CHECK(same(differentiate(e, "v"), P("nu/u") * e));
    CHECK(differentiate(P("a*b"), "u").is_zero());
    CHECK(same(differentiate(P("u^mu"), "u"), P("mu*u^(mu-1)")));
    CHECK(same(differentiate(P("ln(u)"), "u"), P("1/u")));
    CHECK(same(differentiate(P("sin(2*x)"), "x"), P("2*cos(2*x)")));
    CHECK(same(differentiate(P("F(u, v)"), "v"), P("F__d0_1(u, v)")));
}

TEST_CASE("kernel rewrite rule") {
    // W(t, x, u) with W_t -> f2_v - W_u f1.
    Expr f1 = P("u^2"), f2v = P("x*u");
    auto rule = std::make_shared<KernelRule>();
    rule->index = 0;
    rule->rhs = [f1, f2v](std::span<const Expr> args, const KernelRulePtr &self) {
        std::vector<Expr> a(args.begin(), args.end());
        return f2v - func("W", a, {0, 0, 1}, self) * f1;
    };
    Expr W = func("W", {S("t"), S("x"), S("u")}, {}, rule);
    Expr Wt = differentiate(W, "t");
    CHECK(Wt == P("x*u") - P("u^2") * P("W__d0_0_1(t, x, u)"));
    // Mixed derivatives commute through the rule.
    Expr a = differentiate(differentiate(W, "t"), "x");
    Expr b = differentiate(differentiate(W, "x"), "t");
    CHECK(same(a, b));
}

TEST_CASE("substitute examples") {
    Binding b;
    b.bind("u", Expr(0));
    CHECK(substitute(P("u^2"), b).is_zero());
    Binding b2;
    b2.bind("mu", Expr(0));
    b2.kernels["F1"] = KernelValue{{"w"}, Expr(1)};
    CHECK(substitute(P("u^(mu+1)*F1(v/u)"), b2) == S("u"));
    Binding b3;
    b3.bind("lam", Expr(0)).bind("om", Expr(0));
    CHECK(substitute(P("exp(lam*t + om*x)"), b3) == Expr(1));
    Binding b4;
    b4.bind("zz", Expr(5));
    CHECK(substitute(P("u+v"), b4) == P("u+v"));
    // Simultaneous.
    Binding sw;
    sw.bind("u", S("v")).bind("v", S("u"));
    CHECK(substitute(P("u - 2*v"), sw) == P("v - 2*u"));
}

TEST_CASE("equivalent examples") {
    CHECK(same(P("exp(u+v)"), P("exp(u)*exp(v)")));
    CHECK(same(P("u^2"), P("u*u")));
    CHECK(same(P("(2*v-u^2)*u - (2*u*v-u^3)"), Expr(0)));
    auto r = equivalent(P("u^2"), P("u^3"));
    CHECK(r.status == EqualityStatus::NotEqual);
    CHECK(same(P("sin(x)^2 + cos(x)^2"), Expr(1)));
    CHECK(same(P("exp(2*ln(u))"), P("u^2")));
    CHECK(same(P("(u^(1/2))^2"), P("u")));
}

TEST_CASE("numeric path decides opaque mixtures") {
    Expr a = P("F(u)*exp(u) + G(v)");
    auto r = equivalent(a, P("G(v) + exp(u)*F(u)"));
    CHECK(r.status == EqualityStatus::Equal);
    auto n = equivalent(P("F(u)"), P("F(v)"));
    CHECK(n.status == EqualityStatus::NotEqual);
}

TEST_CASE("undecided when every sample hits the domain boundary") {
    EqualityOptions opt;
    opt.max_resamples = 3;
    auto r = equivalent(P("ln(-1 - u^2) + F(u)"), P("F(u)"), opt);
    CHECK(r.status == EqualityStatus::Undecided);
}

TEST_CASE("eval_at examples") {
    Binding p;
    p.bind("u", Expr(3));
    auto v = eval_at(P("u^2 - 1"), p);
    CHECK(v.exact());
    CHECK(v.str() == "8");
    Binding q;
    q.bind("nu", Expr(1)).bind("u", Expr(1)).bind("v", Expr(0));
    CHECK(eval_at(P("exp(nu*v/u)"), q).str() == "1");
    Binding d;
    d.bind("mu", Expr(3)).bind("nu", Expr(1)).bind("lam", Expr(1)).bind("sig", Expr(-1));
    CHECK(eval_at(P("1/4*(mu-nu)^2 + lam*sig"), d).str() == "0");
    Binding bad;
    bad.bind("u", Expr(-2));
    try {
        eval_at(P("ln(u)"), bad);
        FAIL("no throw");
    } catch (const DomainError &err) {
        CHECK(err.subexpression() == "ln(u)");
    }
    Binding zero;
    zero.bind("u", Expr(0));
    CHECK_THROWS_AS(eval_at(P("1/u"), zero), DomainError);
    Binding pi;
    pi.bind("x", Expr(1));
    Real s = eval_at(P("sin(x)"), pi).real();
    CHECK(abs(s - Real("0.84147098480789650665250232163029899962256306079837")) < Real("1e-45"));
}

TEST_CASE("print round trip") {
    for (const char *s : {"u^2 - 1", "lam*u^(nu+1)*exp(mu*v/u)", "3/2*u*v^(-2) + 2^(1/2)*x",
                          "ln(u) - sin(x - 2*y)*cos(t)", "F__d0_2(u, v)*G(t) + 1/(1+u^2)",
                          "u^(1/3)*6^(1/2)"}) {
        Expr e = P(s);
        CAPTURE(s);
        CAPTURE(to_string(e));
        CHECK(parse(to_string(e)) == e);
    }
}

namespace {

Expr random_expr(std::mt19937_64 &rng, int depth) {
    static const char *syms[] = {"u", "v", "x"};
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 2);
    switch (pick(rng)) {
    case 0:
        return Expr::symbol(syms[rng() % 3]);
    case 1:
        return Expr(random_rational(rng, -3, 3, 4));
    case 2:
        return Expr::symbol(syms[rng() % 3]) + Expr(random_rational(rng, 1, 3, 2));
    case 3:
    case 4:
        return random_expr(rng, depth - 1) + random_expr(rng, depth - 1);
    case 5:
    case 6:
        return random_expr(rng, depth - 1) * random_expr(rng, depth - 1);
    case 7:
        return exp(random_expr(rng, depth - 1) / Expr(4));
    case 8:
        return sin(random_expr(rng, depth - 1));
    default: {
        long k = static_cast<long>(rng() % 3) + 1;
        if (rng() % 2) return pow(random_expr(rng, depth - 1), Rational(k));
        Expr base = Expr::symbol(syms[rng() % 3]) + Expr(random_rational(rng, 1, 3, 2));
        return pow(base, Rational(k, static_cast<long>(rng() % 2) + 1) * ((rng() % 2) ? 1 : -1));
    }
    }
}

}  // namespace

TEST_CASE("normalization is idempotent") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        Expr e = random_expr(rng, 3);
        Expr n = normalize(e);
        CAPTURE(to_string(e));
        REQUIRE(normalize(n) == n);
    }
}

TEST_CASE("derivative linearity") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        Expr e1 = random_expr(rng, 3), e2 = random_expr(rng, 3);
        Expr a(random_rational(rng, -5, 5, 3)), b(random_rational(rng, -5, 5, 3));
        Expr lhs = differentiate(a * e1 + b * e2, "u");
        Expr rhs = a * differentiate(e1, "u") + b * differentiate(e2, "u");
        CAPTURE(to_string(e1));
        CAPTURE(to_string(e2));
        REQUIRE(same(lhs, rhs));
    }
}

TEST_CASE("derivative agrees with central finite differences") {
    std::mt19937_64 rng(13);
    int checked = 0;
    for (int i = 0; i < 200 && checked < 100; ++i) {
        Expr e = random_expr(rng, 3);
        Expr d = differentiate(e, "u");
        NumericPoint p;
        p.values = {{"u", random_rational(rng, 1, 2, 5)}, {"v", random_rational(rng, 1, 2, 5)},
                    {"x", random_rational(rng, 1, 2, 5)}};
        Rational h(1, 1000000000);
        try {
            NumericPoint lo = p, hi = p;
            lo.values["u"] -= h;
            hi.values["u"] += h;
            Real fd = (eval_at(e, hi).real() - eval_at(e, lo).real()) / (Real(2) / Real(1000000000));
            Real exact = eval_at(d, p).real();
            Real scale = abs(exact) > 1 ? abs(exact) : Real(1);
            CAPTURE(to_string(e));
            REQUIRE(abs(fd - exact) / scale <= Real("1e-6"));
            ++checked;
        } catch (const DomainError &) {
        }
    }
    CHECK(checked >= 50);
}

TEST_CASE("substitution composition") {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 100; ++i) {
        Expr e = random_expr(rng, 3);
        Binding b1, b2, both;
        Expr eu = S("x") * Expr(random_rational(rng, 1, 3, 2)) + Expr(1);
        Expr ev(random_rational(rng, 1, 3, 3));
        b1.bind("u", eu);
        b2.bind("v", ev);
        both.bind("u", eu).bind("v", ev);
        CAPTURE(to_string(e));
        REQUIRE(same(substitute(substitute(e, b1), b2), substitute(e, both)));
    }
}
