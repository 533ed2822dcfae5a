#pragma once

// Machine-readable classification tables and the verification harness.
//
// Templates are expression strings with a few textual macros expanded per
// instantiation:
//   @a    family index (claims with "each": true run for a = 1..m)
//   @m    the spatial dimension
//   @x    x1,...,xm          @xt   x1,...,x(m-1) (0 when m = 1)
//   @r2   x1^2+...+xm^2      @xd   x1*dx1+...+xm*dxm
//   @HD   H1*dx1+...+Hm*dxm
// Generator templates are linear in the operator symbols dt, du, dv, dx<k>,
// E (u du + v dv), D, Dt, K, Kt, P0, G<k>, Gh<k>, H.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdsym/equiv.hpp"
#include "rdsym/system.hpp"

namespace rdsym {

struct Claim {
    std::string label;
    std::string gen;                                   // generator template (empty for AET claims)
    bool each = false;                                 // one generator per index a = 1..m
    std::vector<std::pair<std::string, std::string>> when;  // side-condition assignments, in order
    std::vector<std::string> nonzero;                  // extra constraints of the side condition
    std::vector<int> m;                                // restriction of the row's m
    std::map<std::string, std::vector<std::string>> witness;  // placeholder -> alternatives
    std::optional<int> aet;                            // AET row index for equivalence claims
    std::map<std::string, std::string> aet_params;
    std::optional<std::string> a;                      // "nonzero", "zero" or an expression
    std::map<std::string, std::string> fix;            // functions fixed by the side condition (body in z1, ...)
};

// Known-typo record.  `corrected` rewrites the row for a second run: keys f1,
// f2, set.<param>, witness.<symbol> (row level), gen.<claim index> and
// when.<claim index>.<param>.
struct Annotation {
    std::string suspected;
    std::string note;
    std::vector<std::pair<std::string, std::string>> corrected;
};

struct CorpusRow {
    std::string table;
    std::string item;
    Family family = Family::TriangularA;
    std::string a = "nonzero";  // "nonzero", "zero", "both"
    std::vector<int> m{1, 2, 3};
    std::string f1, f2;
    std::vector<std::string> params;
    std::vector<std::string> signs;                 // parameters restricted to +-1
    std::vector<std::string> nonzero;
    std::vector<std::pair<std::string, std::string>> set;  // derived parameters, in order
    std::map<std::string, std::vector<std::string>> witness;    // placeholder symbol -> alternatives
    std::map<std::string, std::vector<std::string>> functions;  // witness bodies in z1, z2, ... (z = z1)
    std::vector<Claim> claims;
    std::optional<Annotation> annotation;
    std::optional<std::string> blocked;
    std::string note;
};

struct CorpusTable {
    std::string id;
    std::string title;
    std::vector<CorpusRow> rows;
};

CorpusTable table_from_json(std::string_view text);
std::vector<CorpusTable> load_corpus(const std::string &dir);
std::string default_corpus_dir();

struct Instance {
    int m = 1;
    bool witness_mode = false;
    std::map<std::string, Expr> params;  // includes "a"
    RDSystem system;
    std::vector<Generator> generators;   // empty for AET claims
    std::optional<EquivTransform> transform;
};

class InstantiationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Instance of one claim; `k` selects parameters, kernel mode and witness alternative.
Instance instantiate_claim(const CorpusRow &row, const Claim &claim, int m, int k, std::uint64_t seed);
// Row-level instance with the first claim's side conditions (or none).
Instance instantiate_row(const CorpusRow &row, std::uint64_t seed, int m, int k = 0);

// Parses a generator template after macro expansion and parameter binding.
std::vector<Generator> generator_from_template(const std::string &tmpl, bool each, const JetContext &ctx,
                                               const std::map<std::string, Expr> &params, const Binding &extra);

enum class RowVerdict { Pass, Fail, Blocked, Undecided };
const char *to_string(RowVerdict v);

struct RunRecord {
    int m = 1;
    int k = 0;
    bool witness_mode = false;
    std::map<std::string, std::string> params;
    Verdict verdict = Verdict::Undecided;
    std::string residual;  // first nonzero residual component
    std::string minimal;   // its minimal term
    std::optional<bool> two_path_agrees;
    std::optional<bool> extension_agrees;
    std::optional<double> crosscheck_log10;  // log10 of the worst numeric residual
};

struct ClaimResult {
    std::string label;
    Verdict verdict = Verdict::Holds;
    std::vector<RunRecord> runs;
};

struct VerificationRun {
    std::string table, item;
    RowVerdict verdict = RowVerdict::Pass;
    bool annotated = false;
    std::string suspected;                // annotation text
    std::optional<RowVerdict> corrected;  // verdict of the annotation's corrected row
    std::vector<ClaimResult> claims;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    int instantiations = 3;
    std::vector<int> m;             // restrict m (empty: row default)
    bool crosscheck = false;        // numeric check of every holding run
    bool mutate_f2 = false;         // negative control: f2 += kappa u^3
};

VerificationRun verify_row(const CorpusRow &row, const VerifyOptions &opt);
// The row with the annotation's corrections applied (the row itself when there are none).
CorpusRow corrected_row(const CorpusRow &row);

struct SuiteFilter {
    std::vector<std::string> tables;  // empty: all
    std::vector<std::string> items;
};

struct SuiteReport {
    std::vector<VerificationRun> runs;
    std::map<std::string, int> counts;  // pass, fail, blocked, undecided, annotated
    int unannotated_failures = 0;
    double pass_rate = 0;  // over gated tables, blocked rows excluded
};

SuiteReport run_suite(const std::vector<CorpusTable> &corpus, const SuiteFilter &filter, const VerifyOptions &opt,
                      int threads = 0);
std::string report_json(const SuiteReport &r, int indent = 2);
std::string report_text(const SuiteReport &r);

// Structure constants of the matrix algebra catalog, at matrix and realized level.
struct CatalogCheck {
    std::string name;
    bool matrix_ok = false;
    bool realized_ok = false;
    bool closes = false;
};
std::vector<CatalogCheck> verify_catalog(const std::vector<std::string> &names);

}  // namespace rdsym
