// Acceptance criteria 1-8: one PASS/FAIL line each.
//
// Exit status is nonzero when a criterion fails that is not listed in
// `expected_failures`, or when any criterion fails under --strict.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "rdsym/corpus.hpp"
#include "rdsym/equiv.hpp"
#include "rdsym/matrix.hpp"
#include "rdsym/numeric.hpp"

using namespace rdsym;

namespace {

Expr P(const std::string &s) { return parse(s); }

bool same(const Expr &a, const Expr &b) { return equivalent(a, b).status == EqualityStatus::Equal; }

// The printed Galilei line of the worked example does not admit G.
const std::set<int> expected_failures{4};

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Crosscheck {
    int checked = 0, skipped = 0, over = 0;
    double worst = -1000;

    void add(const SymmetryReport &rep, std::uint64_t seed) {
        Real r = numeric_crosscheck(rep.detail, seed);
        ++checked;
        double l = r == 0 ? -1000 : static_cast<double>(log10(r));
        worst = std::max(worst, l);
        if (l > -20) ++over;
    }
};

Crosscheck numeric;

std::string rq(std::mt19937_64 &rng) {
    Rational q;
    do q = random_rational(rng, -5, 5, 3);
    while (q == 0);
    return "(" + to_string(Expr(q)) + ")";
}

std::string random_source(std::mt19937_64 &rng) {
    static const char *terms[] = {"u^2*v", "v^3", "exp(v)", "u*exp(u - v)", "sin(u)*v", "F1(u, v)", "F2(u)*v", "u^3"};
    std::uniform_int_distribution<int> pick(0, 7), count(1, 3);
    std::string f;
    for (int i = count(rng); i > 0; --i) f += (f.empty() ? "" : " + ") + rq(rng) + "*" + terms[pick(rng)];
    return f;
}

Outcome kernel_suite() {
    std::mt19937_64 rng(101);
    int systems = 0, gens = 0, failures = 0;
    for (int family = 0; family < 3; ++family)
        for (int m = 1; m <= 3; ++m)
            for (int i = 0; i < 100; ++i) {
                Expr f1 = P(random_source(rng)), f2 = P(random_source(rng));
                RDSystem s = family == 0   ? RDSystem::triangular(m, P(rq(rng)), f1, f2)
                             : family == 1 ? RDSystem::triangular(m, Expr(), f1, f2)
                                           : RDSystem::drift(m, Expr(1), f1, f2);
                JetContext ctx = s.context();
                // rotations of the drift family fix x_m
                int rot = family == 2 ? m - 1 : m;
                std::vector<Generator> basis{named_operator("P0", {}, ctx)};
                for (int k = 1; k <= m; ++k) basis.push_back(named_operator("P" + std::to_string(k), {}, ctx));
                for (int k = 1; k <= rot; ++k)
                    for (int l = k + 1; l <= rot; ++l)
                        basis.push_back(named_operator("J" + std::to_string(k) + std::to_string(l), {}, ctx));
                ++systems;
                for (const auto &g : basis) {
                    ++gens;
                    SymmetryReport rep = is_symmetry(s, g);
                    if (rep.verdict == Verdict::Holds)
                        numeric.add(rep, 1000 + gens);
                    else
                        ++failures;
                }
            }
    std::ostringstream os;
    os << systems << " systems, " << gens << " generators, " << failures << " failures";
    return {failures == 0, os.str()};
}

Outcome algebra_suite() {
    JetContext ctx;
    ctx.m = 2;
    std::vector<std::string> names;
    for (const auto &n : algebra_names())
        if (algebra_catalog(n, ctx).basis.size() >= 2) names.push_back(n);
    int bad = 0;
    std::string list;
    for (const auto &c : verify_catalog(names)) {
        if (!(c.matrix_ok && c.realized_ok && c.closes)) ++bad;
        list += (list.empty() ? "" : " ") + c.name;
    }
    bool required = true;
    for (const char *n : {"A3,1", "A3,2", "A3,3", "A3,4", "A4"})
        required = required && std::find(names.begin(), names.end(), n) != names.end();
    return {bad == 0 && required, std::to_string(names.size()) + " algebras (" + list + "), " + std::to_string(bad) +
                                      " mismatches"};
}

Outcome canonical_suite() {
    std::mt19937_64 rng(2718);
    auto r = [&](bool zero_ok) {
        if (zero_ok && rng() % 4 == 0) return Expr();
        return P(rq(rng));
    };
    int label = 0, witness = 0, undecided = 0;
    for (int i = 0; i < 1000; ++i) {
        NMatrix g{r(true), r(true), r(true), r(true)};
        UMatrix U{r(true), r(true), r(false), r(true)};
        Expr s = r(false);
        NMatrix h = conjugate(g, U);
        h = NMatrix::from_mat(s * h.mat());
        CanonicalForm a = canonical_form(g), b = canonical_form(h);
        if (!a.decided || !b.decided) {
            ++undecided;
            continue;
        }
        bool inv = a.invariant.has_value() == b.invariant.has_value() &&
                   (!a.invariant || same(*a.invariant, *b.invariant));
        if (a.label != b.label || !inv) ++label;
        if (!(a.scale * conjugate(g, a.witness).mat() == a.canonical.mat())) ++witness;
    }
    std::ostringstream os;
    os << "1000 matrices, " << label << " label mismatches, " << witness << " witness failures, " << undecided
       << " undecided";
    return {label == 0 && witness == 0 && undecided == 0, os.str()};
}

const CorpusRow *find_row(const std::vector<CorpusTable> &corpus, const std::string &t, const std::string &i) {
    for (const auto &tab : corpus)
        if (tab.id == t)
            for (const auto &r : tab.rows)
                if (r.item == i) return &r;
    return nullptr;
}

Outcome worked_chain(const std::vector<CorpusTable> &corpus) {
    VerifyOptions opt;
    opt.crosscheck = true;
    std::ostringstream os;
    bool ok = true;
    for (const char *item : {"n01", "n03", "n06"}) {
        const CorpusRow *row = find_row(corpus, "worked", item);
        if (!row) return {false, std::string("missing row ") + item};
        VerificationRun run = verify_row(*row, opt);
        os << (std::strcmp(item, "n01") ? "; " : "") << item << " " << to_string(run.verdict);
        for (const auto &c : run.claims)
            if (c.verdict != Verdict::Holds) os << " [" << c.label << ": " << to_string(c.verdict) << "]";
        if (run.corrected) os << " (mu = nu/a: " << to_string(*run.corrected) << ")";
        ok = ok && run.verdict == RowVerdict::Pass;
    }
    return {ok, os.str()};
}

SuiteReport suite;

Outcome coverage_gate(const std::vector<CorpusTable> &corpus) {
    VerifyOptions opt;
    opt.crosscheck = true;
    suite = run_suite(corpus, {}, opt);
    static const std::set<std::string> gated{"2", "3", "4", "5", "7", "8", "9", "10"};
    int rows = 0, pass = 0, blocked6 = 0, rows6 = 0, bad_annotation = 0;
    for (const auto &r : suite.runs) {
        if (r.table == "6") {
            ++rows6;
            if (r.verdict == RowVerdict::Blocked) ++blocked6;
            continue;
        }
        if (!gated.count(r.table)) continue;
        ++rows;
        if (r.verdict == RowVerdict::Pass) {
            ++pass;
            continue;
        }
        bool minimal = false;
        for (const auto &c : r.claims)
            for (const auto &x : c.runs) minimal = minimal || !x.minimal.empty();
        if (!r.annotated || !minimal) ++bad_annotation;
    }
    std::ostringstream os;
    os << "gated pass rate " << suite.pass_rate << " (annotated rows excluded), raw " << pass << "/" << rows
       << "; unannotated failures " << bad_annotation << "; Table 6 blocked " << blocked6 << "/" << rows6;
    return {suite.pass_rate >= 0.9 && bad_annotation == 0 && blocked6 == rows6 && rows6 > 0, os.str()};
}

Outcome fundamental_suite() {
    std::mt19937_64 rng(77);
    int cases[3] = {0, 0, 0}, bad = 0;
    for (int i = 0; i < 200; ++i) {
        Rational l = random_rational(rng, -3, 3, 2), g = random_rational(rng, -3, 3, 2), al, s;
        do al = random_rational(rng, -3, 3, 1);
        while (al == 0);
        Rational d = (l - g) * (l - g);
        switch (i % 3) {
        case 0:  // (l - g)^2 + 4 al s > 0
            s = (Rational(1) - d) / (Rational(4) * al) + (al > 0 ? Rational(1) : Rational(-1));
            break;
        case 1:
            s = -d / (Rational(4) * al);
            break;
        default:
            s = -(d + Rational(4)) / (Rational(4) * al);
            break;
        }
        Expr L(l), A(al), S(s), G(g);
        FundamentalPair f = fundamental_pair(L, A, S, G);
        if (!f.decided) {
            ++bad;
            continue;
        }
        ++cases[static_cast<int>(f.eigen)];
        for (auto [F, H] : {std::pair{f.F1, f.G1}, std::pair{f.F2, f.G2}})
            if (!same(differentiate(F, "t"), L * F + A * H) || !same(differentiate(H, "t"), S * F + G * H)) ++bad;
        Binding at0;
        at0.bind("t", Expr());
        if (normalize(substitute(f.F1 * f.G2 - f.F2 * f.G1, at0)).is_zero()) ++bad;
    }
    std::ostringstream os;
    os << "200 quadruples (distinct " << cases[0] << ", repeated " << cases[1] << ", complex " << cases[2] << "), "
       << bad << " failures";
    return {bad == 0 && cases[0] > 0 && cases[1] > 0 && cases[2] > 0, os.str()};
}

EquivTransform random_linear(std::mt19937_64 &rng) {
    return EquivTransform::linear(P(rq(rng)), P(rq(rng)), P(rq(rng)), P(rq(rng)), P(rq(rng)));
}

Outcome equivalence_suite(const std::vector<CorpusTable> &corpus) {
    std::mt19937_64 rng(5);
    int group = 0;
    for (int i = 0; i < 20; ++i) {
        RDSystem s = RDSystem::triangular(1 + i % 3, P(rq(rng)), P(random_source(rng)), P(random_source(rng)));
        EquivTransform A = random_linear(rng), B = random_linear(rng);
        auto p = [](const EquivTransform &t, const char *n) { return t.param(n); };
        // B after A
        EquivTransform C = EquivTransform::linear(
            p(B, "K1") * p(A, "K1"), p(B, "K1") * p(A, "K2") + p(B, "K2") * p(A, "K1"), p(B, "lambda") * p(A, "lambda"),
            p(B, "K1") * p(A, "b1") + p(B, "b1"), p(B, "K1") * p(A, "b2") + p(B, "K2") * p(A, "b1") + p(B, "b2"));
        RDSystem two = apply_equiv(apply_equiv(s, A), B), one = apply_equiv(s, C);
        RDSystem back = apply_equiv(apply_equiv(s, A), inverse(A));
        if (!same(two.f1, one.f1) || !same(two.f2, one.f2) || !same(back.f1, s.f1) || !same(back.f2, s.f2)) ++group;
    }

    int transported = 0, transport_bad = 0;
    std::string first_bad;
    static const std::set<std::string> gated{"2", "3", "4", "5", "8", "9", "10"};
    for (const auto &t : corpus) {
        if (!gated.count(t.id)) continue;
        for (const auto &row : t.rows) {
            if (transported >= 20) break;
            if (row.annotation || row.blocked || row.family != Family::TriangularA) continue;
            for (std::size_t ci = 0; ci < row.claims.size() && transported < 20; ++ci) {
                const Claim &c = row.claims[ci];
                if (c.aet || c.gen.find('W') != std::string::npos || c.gen.empty()) continue;
                int m = c.m.empty() ? row.m.front() : c.m.front();
                Instance in = instantiate_claim(row, c, m, 0, 9);
                EquivTransform T = random_linear(rng);
                RDSystem r = apply_equiv(in.system, T);
                JetContext ctx = in.system.context();
                bool ok = true;
                for (const auto &g : in.generators) {
                    ok = ok && is_symmetry(in.system, g).verdict == Verdict::Holds;
                    ok = ok && is_symmetry(r, pushforward(g, T, ctx)).verdict == Verdict::Holds;
                }
                ++transported;
                if (!ok) {
                    ++transport_bad;
                    first_bad = first_bad.empty() ? t.id + "/" + row.item + " " + c.gen : first_bad;
                }
                break;  // one claim per row
            }
        }
    }

    int aet_claims = 0, aet_bad = 0;
    std::set<int> indices;
    for (const auto &run : suite.runs) {
        const CorpusRow *row = find_row(corpus, run.table, run.item);
        if (!row) continue;
        // annotated rows cite their corrected system
        std::vector<ClaimResult> claims = run.claims;
        if (run.annotated && run.verdict != RowVerdict::Pass) claims = verify_row(corrected_row(*row), {}).claims;
        for (std::size_t i = 0; i < claims.size() && i < row->claims.size(); ++i) {
            if (!row->claims[i].aet) continue;
            ++aet_claims;
            indices.insert(*row->claims[i].aet);
            if (claims[i].verdict != Verdict::Holds) ++aet_bad;
        }
    }

    RDSystem s = RDSystem::triangular(1, Expr(), P("u^2"), P("u"));
    bool eqv1 = check_eqv3_admissible(s, P("7")).admissible && check_eqv3_admissible(s, P("t")).admissible &&
                !check_eqv3_admissible(s, P("t^2")).admissible;

    std::ostringstream os;
    os << "compose/invert failures " << group << "/20; transport " << transported - transport_bad << "/" << transported
       << (first_bad.empty() ? "" : " (fails: " + first_bad + ")")
       << "; AET claims " << aet_claims - aet_bad << "/" << aet_claims << " (rows";
    for (int i : indices) os << " " << i;
    os << "); eqv1 examples " << (eqv1 ? "separated" : "not separated");
    return {group == 0 && transported == 20 && transport_bad == 0 && aet_bad == 0 && eqv1, os.str()};
}

Outcome crosscheck_summary() {
    int corpus_checked = 0, corpus_over = 0, corpus_skipped = 0;
    double worst = numeric.worst;
    for (const auto &run : suite.runs)
        for (const auto &c : run.claims)
            for (const auto &r : c.runs) {
                if (r.verdict != Verdict::Holds) continue;
                if (!r.crosscheck_log10) {
                    ++corpus_skipped;
                    continue;
                }
                ++corpus_checked;
                worst = std::max(worst, *r.crosscheck_log10);
                if (*r.crosscheck_log10 > -20) ++corpus_over;
            }
    std::ostringstream os;
    os << numeric.checked + corpus_checked << " holding verdicts checked at 20 points, worst log10 |residual| = "
       << worst << ", over 1e-20: " << numeric.over + corpus_over << "; not numerically checkable (AET or W kernel): "
       << corpus_skipped;
    return {numeric.over + corpus_over == 0 && numeric.checked > 0 && corpus_checked > 0, os.str()};
}

}  // namespace

int main(int argc, char **argv) {
    bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
    std::vector<CorpusTable> corpus = load_corpus(default_corpus_dir());
    std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
        {"kernel-symmetry suite", kernel_suite},
        {"algebra catalog", algebra_suite},
        {"canonicalization", canonical_suite},
        {"worked-example chain", [&] { return worked_chain(corpus); }},
        {"corpus coverage gate", [&] { return coverage_gate(corpus); }},
        {"fundamental pairs", fundamental_suite},
        {"equivalence group", [&] { return equivalence_suite(corpus); }},
        {"numeric cross-check", crosscheck_summary},
    };
    int unexpected = 0, failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        int n = static_cast<int>(i) + 1;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %d %-24s %s  %s\n", n, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) {
            ++failed;
            if (!expected_failures.count(n)) ++unexpected;
        }
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return strict ? failed != 0 : unexpected != 0;
}
