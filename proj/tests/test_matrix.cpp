#include <random>

#include "doctest.h"
#include "rdsym/matrix.hpp"
#include "rdsym/numeric.hpp"

using namespace rdsym;

namespace {

Expr P(const char *s) { return parse(s); }

JetContext ctx_m(int m) {
    JetContext c;
    c.m = m;
    return c;
}

bool same(const Expr &a, const Expr &b) { return equivalent(a, b).status == EqualityStatus::Equal; }

bool same(const Generator &a, const Generator &b) {
    Generator d = normalize(a - b);
    for (const auto &c : d.xi)
        if (!same(c, Expr())) return false;
    for (const auto &c : d.pi)
        if (!same(c, Expr())) return false;
    return same(d.eta, Expr());
}

Expr rq(std::mt19937_64 &rng, bool allow_zero = true) {
    std::uniform_int_distribution<int> coin(0, 3);
    if (allow_zero && coin(rng) == 0) return Expr();
    Rational q;
    do q = random_rational(rng, -5, 5, 3);
    while (q == 0);
    return Expr(q);
}

NMatrix random_n(std::mt19937_64 &rng) { return NMatrix{rq(rng), rq(rng), rq(rng), rq(rng)}; }

UMatrix random_u(std::mt19937_64 &rng) { return UMatrix{rq(rng), rq(rng), rq(rng, false), rq(rng)}; }

Mat3 direct_inverse(const Mat3 &m) {
    // Adjugate over the cofactors; m is lower triangular with nonzero diagonal.
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
            r[i][j] = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        }
    Expr det = m[0][0] * r[0][0] + m[0][1] * r[1][0] + m[0][2] * r[2][0];
    return (Expr(1) / det) * r;
}

}  // namespace

TEST_CASE("U inverse") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        UMatrix U = random_u(rng);
        CHECK(U.mat() * U.inverse() == mat_identity());
        CHECK(U.inverse() == direct_inverse(U.mat()));
    }
    UMatrix unit{P("3"), P("-2"), P("1"), P("5")};
    CHECK(unit.printed_inverse() == unit.inverse());
    UMatrix scaled{P("3"), P("-2"), P("2"), P("5")};
    CHECK_FALSE(scaled.printed_inverse() == scaled.inverse());
    UMatrix sym{P("b1"), P("b2"), P("K1"), P("K2")};
    CHECK(sym.mat() * sym.inverse() == mat_identity());
}

TEST_CASE("conjugate") {
    NMatrix g{P("2"), P("1/3"), P("-1"), P("4")};
    CHECK(conjugate(g, UMatrix::identity()) == g);

    NMatrix h{P("lambda"), P("nu2"), Expr(), Expr()};
    UMatrix U{Expr(), Expr(), P("K1"), P("-K1*nu2/lambda")};
    NMatrix c = conjugate(h, U);
    CHECK(same(c.nu2, Expr()));
    CHECK(same(c.nu1, P("K1*lambda")));
    CHECK_THROWS(conjugate(g, UMatrix{Expr(), Expr(), Expr(), Expr(1)}));

    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        NMatrix x = random_n(rng);
        UMatrix U1 = random_u(rng), U2 = random_u(rng);
        NMatrix lhs = conjugate(conjugate(x, U1), U2);
        CHECK(lhs == conjugate(x, U2 * U1));
        CHECK(NMatrix::has_pattern(lhs.mat()));
    }
}

TEST_CASE("canonical form examples") {
    auto f = canonical_form(named_matrix(CanonicalLabel::G1));
    CHECK(f.label == CanonicalLabel::G1);
    CHECK(f.witness.mat() == mat_identity());
    CHECK(same(f.scale, Expr(1)));

    f = canonical_form(NMatrix{Expr(), Expr(1), Expr(), Expr()});
    CHECK(f.label == CanonicalLabel::G2Tilde);

    f = canonical_form(NMatrix{Expr(1), Expr(), Expr(), Expr(1)});
    CHECK(f.label == CanonicalLabel::G6);

    f = canonical_form(named_matrix(CanonicalLabel::G2, Expr(3)));
    CHECK(f.label == CanonicalLabel::G3);
    REQUIRE(f.g2_lambda);
    CHECK(same(*f.g2_lambda, Expr(3)));

    f = canonical_form(NMatrix{P("2"), P("1"), P("2"), P("3")});
    CHECK(f.label == CanonicalLabel::G4);
    REQUIRE(f.invariant);
    CHECK(same(*f.invariant, P("3/2")));

    f = canonical_form(NMatrix{});
    CHECK(f.label == CanonicalLabel::Zero);

    f = canonical_form(NMatrix{Expr(), Expr(), P("mu"), Expr()});
    CHECK_FALSE(f.decided);
    CHECK(f.case_split.size() == 2);
}

TEST_CASE("canonical form orbit soundness") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        NMatrix g = random_n(rng);
        UMatrix U = random_u(rng);
        auto a = canonical_form(g);
        auto b = canonical_form(conjugate(g, U));
        REQUIRE(a.decided);
        CHECK(a.label == b.label);
        CHECK(a.invariant.has_value() == b.invariant.has_value());
        if (a.invariant && b.invariant) CHECK(same(*a.invariant, *b.invariant));
        NMatrix w = conjugate(g, a.witness);
        CHECK(a.scale * w.mat() == a.canonical.mat());
        auto again = canonical_form(a.canonical);
        CHECK(again.label == a.label);
        CHECK(again.canonical == a.canonical);
        CHECK(again.witness.mat() == mat_identity());
    }
}

TEST_CASE("canonical form agrees with a randomized orbit search") {
    // Brute force: conjugate by random U and rescale, looking for the representative.
    std::mt19937_64 rng(99);
    NMatrix g{Expr(1), Expr(), Expr(), Expr(1)};
    NMatrix target = named_matrix(CanonicalLabel::G6);
    bool found = false;
    for (int i = 0; i < 4000 && !found; ++i) {
        UMatrix U{Expr(random_rational(rng, -2, 2, 1)), Expr(random_rational(rng, -2, 2, 1)), Expr(1),
                  Expr(random_rational(rng, -2, 2, 1))};
        NMatrix c = conjugate(g, U);
        found = c == target;
    }
    CHECK(found);
    CHECK(canonical_form(g).label == CanonicalLabel::G6);
}

TEST_CASE("realize") {
    JetContext ctx = ctx_m(2);
    Generator g1 = realize(named_matrix(CanonicalLabel::G1), ctx);
    CHECK(same(g1.phi0(0), P("u")));
    CHECK(same(g1.phi0(1), P("v")));
    Generator g5 = realize(named_matrix(CanonicalLabel::G5), ctx);
    CHECK(same(g5.phi0(0), Expr()));
    CHECK(same(g5.phi0(1), P("u")));
    Generator g3 = realize(named_matrix(CanonicalLabel::G3), ctx);
    CHECK(same(g3.phi0(0), Expr(1)));
    CHECK(same(g3.phi0(1), Expr()));
    CHECK(realize(NMatrix{}, ctx).is_zero());
}

TEST_CASE("realize reverses brackets") {
    JetContext ctx = ctx_m(1);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        NMatrix g = random_n(rng), h = random_n(rng);
        NMatrix gh = NMatrix::from_mat(bracket(g.mat(), h.mat()));
        Generator lhs = commutator(realize(g, ctx), realize(h, ctx), ctx);
        CHECK(same(lhs, Expr(-1) * realize(gh, ctx)));
        // g -> -g^ is a homomorphism
        Generator neg = commutator(Expr(-1) * realize(g, ctx), Expr(-1) * realize(h, ctx), ctx);
        CHECK(same(neg, Expr(-1) * realize(gh, ctx)));
    }
}

TEST_CASE("algebra catalog: matrix brackets") {
    JetContext ctx = ctx_m(2);
    for (const auto &name : algebra_names()) {
        auto a = algebra_catalog(name, ctx);
        if (a.basis.size() < 2) continue;
        std::vector<Mat3> mats;
        for (const auto &b : a.basis) mats.push_back(b.mat());
        auto rep = closure_check(mats);
        INFO(name);
        CHECK(rep.closed);
        CHECK(rep.constants == a.stated);

        std::vector<Generator> hats;
        for (const auto &b : a.basis) hats.push_back(Expr(-1) * realize(b, ctx));
        auto vrep = closure_check(hats, ctx);
        CHECK(vrep.closed);
        CHECK(vrep.constants == a.stated);
    }
    CHECK_THROWS(algebra_catalog("A9,9", ctx));

    // listed order e1 = g2~, e2 = g3, e3 = g4 has [e1, e2] = 0
    auto printed = closure_check(std::vector<Mat3>{named_matrix(CanonicalLabel::G2Tilde).mat(),
                                                   named_matrix(CanonicalLabel::G3).mat(),
                                                   named_matrix(CanonicalLabel::G4, Expr(1)).mat()});
    CHECK(printed.closed);
    CHECK_FALSE(printed.constants.count({0, 1}));
}

TEST_CASE("algebra catalog: realizations close") {
    JetContext ctx = ctx_m(2);
    for (const auto &name : algebra_names()) {
        auto a = algebra_catalog(name, ctx);
        if (a.realization.size() < 2) continue;
        INFO(name);
        Binding params;
        params.bind("mu", P("2/3")).bind("nu", P("-5")).bind("lambda", P("7/2"));
        std::vector<Generator> inst;
        for (const auto &x : a.realization) inst.push_back(substitute(x, params));
        auto rep = closure_check(inst, ctx);
        if (name == "At2") {
            CHECK_FALSE(rep.closed);
            continue;
        }
        CHECK(rep.closed);
    }
    auto a3 = algebra_catalog("At3", ctx);
    auto rep = closure_check(a3.realization, ctx);
    REQUIRE(rep.constants.count({0, 1}));
    CHECK(rep.constants.at({0, 1}) == std::vector<Rational>{0, -1});

    auto a25 = algebra_catalog("A2,5", ctx);
    rep = closure_check(a25.realization, ctx);
    CHECK(rep.constants.at({0, 1}) == std::vector<Rational>{0, 1});
}

TEST_CASE("algebra catalog: Jacobi on realizations") {
    JetContext ctx = ctx_m(1);
    for (const char *name : {"A3,1", "A3,2", "A3,3", "A4"}) {
        auto a = algebra_catalog(name, ctx);
        const auto &x = a.realization;
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = i + 1; j < x.size(); ++j)
                for (std::size_t k = j + 1; k < x.size(); ++k) {
                    Generator s = commutator(x[i], commutator(x[j], x[k], ctx), ctx) +
                                  commutator(x[j], commutator(x[k], x[i], ctx), ctx) +
                                  commutator(x[k], commutator(x[i], x[j], ctx), ctx);
                    CHECK(normalize(s).is_zero());
                }
    }
}

TEST_CASE("fundamental pair examples") {
    auto check_pair = [](const FundamentalPair &f, const char *F1, const char *G1, const char *F2, const char *G2) {
        CHECK(same(f.F1, P(F1)));
        CHECK(same(f.G1, P(G1)));
        CHECK(same(f.F2, P(F2)));
        CHECK(same(f.G2, P(G2)));
    };
    check_pair(fundamental_pair(Expr(1), Expr(), Expr(), Expr(2)), "exp(t)", "0", "0", "exp(2*t)");
    check_pair(fundamental_pair(Expr(), Expr(1), Expr(), Expr()), "1", "0", "t", "1");
    auto trig = fundamental_pair(Expr(), Expr(1), Expr(-1), Expr());
    CHECK(trig.eigen == EigenCase::Complex);
    check_pair(trig, "cos(t)", "-sin(t)", "sin(t)", "cos(t)");

    auto split = fundamental_pair(P("l"), Expr(1), P("s"), Expr());
    CHECK_FALSE(split.decided);
    CHECK(split.case_split.size() == 3);
    auto assumed = fundamental_pair(P("l"), Expr(), Expr(), P("l"), EigenCase::Repeated);
    CHECK(assumed.decided);
    CHECK(same(assumed.F1, P("exp(l*t)")));
}

TEST_CASE("fundamental pair solves the system") {
    std::mt19937_64 rng(31);
    int cases[3] = {0, 0, 0};
    for (int i = 0; i < 200; ++i) {
        Expr l(random_rational(rng, -3, 3, 2)), al(random_rational(rng, -3, 3, 1)),
            s(random_rational(rng, -3, 3, 1)), g(random_rational(rng, -3, 3, 2));
        auto f = fundamental_pair(l, al, s, g);
        REQUIRE(f.decided);
        ++cases[static_cast<int>(f.eigen)];
        for (auto [F, G] : {std::pair{f.F1, f.G1}, std::pair{f.F2, f.G2}}) {
            CHECK(same(differentiate(F, "t"), l * F + al * G));
            CHECK(same(differentiate(G, "t"), s * F + g * G));
        }
        Expr w = f.F1 * f.G2 - f.F2 * f.G1;
        Binding at0;
        at0.bind("t", Expr());
        CHECK(same(substitute(w, at0), Expr(1)));
    }
    CHECK(cases[0] > 0);
    CHECK(cases[1] > 0);
    CHECK(cases[2] > 0);
}

TEST_CASE("matrix json") {
    NMatrix g{P("2"), P("nu"), P("1/3"), Expr()};
    Mat3 back = mat_from_json(mat_to_json(g.mat()));
    CHECK(back == g.mat());
    CHECK_THROWS(mat_from_json("[[1,2]]"));
}
