#include <regex>
#include <set>

#include "doctest.h"
#include "rdsym/corpus.hpp"
#include "rdsym/matrix.hpp"

using namespace rdsym;

namespace {

const std::vector<CorpusTable> &corpus() {
    static const std::vector<CorpusTable> c = load_corpus(default_corpus_dir());
    return c;
}

const CorpusRow &row(const std::string &table, const std::string &item) {
    for (const auto &t : corpus())
        if (t.id == table)
            for (const auto &r : t.rows)
                if (r.item == item) return r;
    throw std::runtime_error("no row " + table + "/" + item);
}

Expr P(const char *s) { return parse(s); }

bool holds(const RDSystem &s, const Generator &g) { return is_symmetry(s, g).verdict == Verdict::Holds; }

const std::set<std::string> gated{"2", "3", "4", "5", "7", "8", "9", "10"};

}  // namespace

TEST_CASE("every table loads") {
    std::set<std::string> ids;
    for (const auto &t : corpus()) ids.insert(t.id);
    for (const char *id : {"2", "3", "4", "5", "6", "7", "8", "9", "10", "worked"}) CHECK(ids.count(id) == 1);
    CHECK(row("4", "3").claims.size() >= 2);
}

TEST_CASE("nested kernel template at fixed parameters") {
    const CorpusRow &r = row("4", "3");
    Binding b;
    b.bind("lam", P("2")).bind("sig", P("3")).bind("mu", P("1")).bind("nu", P("2"));
    Expr f1 = substitute(parse(r.f1), b), f2 = substitute(parse(r.f2), b);
    CHECK(equivalent(f1, P("2*u^3*exp(v/u)")).status == EqualityStatus::Equal);
    RDSystem s = RDSystem::triangular(2, Expr(1), f1, f2);
    JetContext ctx = s.context();
    std::map<std::string, Expr> params{{"lam", P("2")}, {"sig", P("3")}, {"mu", P("1")}, {"nu", P("2")}, {"a", P("1")}};
    for (int i = 0; i < 2; ++i)
        CHECK(holds(s, generator_from_template(r.claims[i].gen, false, ctx, params, {})[0]));

    // nu = a mu branch at a = 1
    params["nu"] = P("1");
    b.bind("nu", P("1"));
    RDSystem g = RDSystem::triangular(2, Expr(1), substitute(parse(r.f1), b), substitute(parse(r.f2), b));
    auto gal = generator_from_template("G@a", true, ctx, params, {});
    REQUIRE(gal.size() == 2);
    for (const auto &x : gal) CHECK(holds(g, x));
}

TEST_CASE("instantiation honours side conditions and constraints") {
    const CorpusRow &r = row("4", "3");
    for (int k = 0; k < 4; ++k) {
        Instance in = instantiate_claim(r, r.claims[2], 2, k, 7);
        CHECK(in.generators.size() == 2);
        CHECK(equivalent(in.params.at("nu"), in.params.at("a") * in.params.at("mu")).status ==
              EqualityStatus::Equal);
    }
    CorpusRow bad = r;
    bad.nonzero.push_back("mu - mu");
    CHECK_THROWS_AS(instantiate_row(bad, 1, 2, 0), InstantiationError);
    CHECK_THROWS_AS(instantiate_row(r, 1, 4, 0), InstantiationError);
}

TEST_CASE("psi witness for the linear source term") {
    RDSystem s = RDSystem::triangular(2, P("3/2"), P("F1(u)"), P("F2(u) + nu*v"));
    JetContext ctx = s.context();
    Generator x = generator_from_template("exp(nu*t)*dv", false, ctx, {}, {})[0];
    CHECK(holds(s, x));
    Generator y = generator_from_template("exp(nu*t)*(x1^2 + 3*t)*dv", false, ctx, {}, {})[0];
    CHECK(holds(s, y));
    Generator bad = generator_from_template("exp(nu*t)*x1^2*dv", false, ctx, {}, {})[0];
    CHECK(is_symmetry(s, bad).verdict == Verdict::Fails);
    CHECK(verify_row(row("2", "3"), {}).verdict == RowVerdict::Pass);
    CHECK(verify_row(row("2", "1"), {}).verdict == RowVerdict::Pass);
}

TEST_CASE("zero source in the first equation") {
    RDSystem s = RDSystem::triangular(2, Expr(), Expr(), P("F2(v)"));
    JetContext ctx = s.context();
    for (const char *g : {"du", "x1*du", "@xd + 2*u*du"})
        CHECK(holds(s, generator_from_template(g, false, ctx, {}, {})[0]));
    VerificationRun run = verify_row(row("8", "6"), {});
    CHECK(run.verdict == RowVerdict::Pass);
    CHECK(run.claims.size() == 2);
}

TEST_CASE("undefined symbol rows are blocked") {
    int n = 0;
    for (const auto &t : corpus())
        if (t.id == "6")
            for (const auto &r : t.rows) {
                VerificationRun run = verify_row(r, {});
                CHECK(run.verdict == RowVerdict::Blocked);
                CHECK(run.detail.find("undefined symbol") != std::string::npos);
                ++n;
            }
    CHECK(n == 5);
}

TEST_CASE("worked example chain") {
    CHECK(verify_row(row("worked", "n01"), {}).verdict == RowVerdict::Pass);
    CHECK(verify_row(row("worked", "n03"), {}).verdict == RowVerdict::Pass);
    CHECK(verify_row(row("worked", "n04"), {}).verdict == RowVerdict::Pass);
    VerificationRun n06 = verify_row(row("worked", "n06"), {});
    CHECK(n06.verdict == RowVerdict::Fail);
    CHECK(n06.annotated);
    REQUIRE(n06.corrected);
    CHECK(*n06.corrected == RowVerdict::Pass);
    // X1 and X2 survive on the printed line; only G fails
    CHECK(n06.claims[0].verdict == Verdict::Holds);
    CHECK(n06.claims[1].verdict == Verdict::Holds);
    CHECK(n06.claims[2].verdict == Verdict::Fails);
    CHECK(!n06.claims[2].runs.empty());
    CHECK(!n06.claims[2].runs.front().minimal.empty());
}

TEST_CASE("report is deterministic") {
    SuiteFilter f;
    f.tables = {"3", "8"};
    VerifyOptions o;
    o.seed = 11;
    std::string a = report_json(run_suite(corpus(), f, o, 4));
    std::string b = report_json(run_suite(corpus(), f, o, 1));
    CHECK(a == b);
    o.seed = 12;
    CHECK(report_json(run_suite(corpus(), f, o, 2)) != a);
}

TEST_CASE("full suite: gate, annotations, two paths") {
    SuiteReport rep = run_suite(corpus(), {}, {});
    CHECK(rep.counts["undecided"] == 0);
    CHECK(rep.counts["blocked"] == 5);
    CHECK(rep.unannotated_failures == 0);
    CHECK(rep.pass_rate >= 0.9);
    int two_path = 0, extension = 0;
    for (const auto &run : rep.runs) {
        if (run.table == "1") {
            CHECK(run.verdict == RowVerdict::Pass);
            continue;
        }
        if (run.verdict == RowVerdict::Fail) {
            CHECK(run.annotated);
            CHECK(!run.suspected.empty());
            bool has_minimal = false;
            for (const auto &c : run.claims)
                for (const auto &r : c.runs) has_minimal = has_minimal || !r.minimal.empty();
            CHECK(has_minimal);
        }
        for (const auto &c : run.claims)
            for (const auto &r : c.runs) {
                if (r.two_path_agrees) {
                    ++two_path;
                    CHECK_MESSAGE(*r.two_path_agrees, run.table << "/" << run.item << " " << c.label);
                }
                if (r.extension_agrees) {
                    ++extension;
                    CHECK_MESSAGE(*r.extension_agrees, run.table << "/" << run.item << " " << c.label);
                }
            }
    }
    CHECK(two_path > 50);
    CHECK(extension > 0);
}

TEST_CASE("mutated source flips passing rows") {
    VerifyOptions mut;
    mut.mutate_f2 = true;
    mut.instantiations = 1;
    int checked = 0;
    for (const auto &t : corpus()) {
        if (!gated.count(t.id)) continue;
        for (const auto &r : t.rows) {
            if (r.blocked || r.annotation) continue;
            // an arbitrary F(u) in f2 absorbs kappa u^3
            static const std::regex absorbs("[A-Z][A-Za-z0-9]*\\(u\\)");
            if (std::regex_search(r.f2, absorbs)) continue;
            bool plain = false;
            for (const auto &c : r.claims) plain = plain || (!c.aet && c.gen.find('W') == std::string::npos);
            if (!plain) continue;
            VerificationRun run = verify_row(r, mut);
            CHECK_MESSAGE(run.verdict == RowVerdict::Fail, t.id << "/" << r.item);
            ++checked;
        }
    }
    CHECK(checked > 40);
}

TEST_CASE("catalog structure constants") {
    std::vector<std::string> names;
    JetContext ctx{1};
    for (const auto &n : algebra_names())
        if (algebra_catalog(n, ctx).basis.size() >= 2) names.push_back(n);
    CHECK(names.size() > 5);
    for (const auto &c : verify_catalog(names)) {
        CHECK_MESSAGE(c.closes, c.name);
        CHECK_MESSAGE(c.realized_ok, c.name);
    }
}
