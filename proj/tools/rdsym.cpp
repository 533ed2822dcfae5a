// Command-line front end: symmetry checks, canonical forms, brackets,
// equivalence transforms and the corpus runner.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rdsym/corpus.hpp"
#include "rdsym/equiv.hpp"
#include "rdsym/matrix.hpp"

using namespace rdsym;

namespace {

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Generator files may carry a context: {"m": 2, "eta": ..., ...}; otherwise the system's.
int cmd_verify(const std::string &sys_path, const std::string &gen_path) {
    RDSystem s = system_from_json(slurp(sys_path));
    JetContext ctx = s.context();
    Generator g = generator_from_json(slurp(gen_path), ctx);
    auto rep = is_symmetry(s, g);
    nlohmann::ordered_json j;
    j["verdict"] = to_string(rep.verdict);
    j["path"] = to_string(rep.path);
    j["residual"] = {to_string(rep.residual[0]), to_string(rep.residual[1])};
    std::cout << j.dump(2) << "\n";
    return rep.verdict == Verdict::Holds ? 0 : 1;
}

int cmd_canon(const std::string &path) {
    NMatrix g = NMatrix::from_mat(mat_from_json(slurp(path)));
    auto c = canonical_form(g);
    nlohmann::ordered_json j;
    j["decided"] = c.decided;
    if (!c.decided) {
        j["case_split"] = c.case_split;
    } else {
        j["label"] = to_string(c.label);
        j["canonical"] = nlohmann::json::parse(mat_to_json(c.canonical.mat()));
        j["witness"] = {{"b1", to_string(c.witness.b1)}, {"b2", to_string(c.witness.b2)},
                        {"K1", to_string(c.witness.K1)}, {"K2", to_string(c.witness.K2)}};
        j["scale"] = to_string(c.scale);
        if (c.invariant) j["invariant"] = to_string(*c.invariant);
        if (c.g2_lambda) j["g2_lambda"] = to_string(*c.g2_lambda);
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_commutator(const std::string &xp, const std::string &yp, int m) {
    JetContext ctx;
    ctx.m = m;
    Generator x = generator_from_json(slurp(xp), ctx), y = generator_from_json(slurp(yp), ctx);
    Generator c = commutator(x, y, ctx);
    std::cout << to_json(c, 2) << "\n" << to_string(c, ctx) << "\n";
    return 0;
}

int cmd_equiv(const std::string &sys_path, const std::string &tr_path) {
    RDSystem s = system_from_json(slurp(sys_path));
    EquivTransform t = equiv_from_json(slurp(tr_path));
    try {
        std::cout << to_json(apply_equiv(s, t), 2) << "\n";
    } catch (const InapplicableTransform &e) {
        std::cerr << "inapplicable: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cmd_corpus(const std::vector<std::string> &tables, const std::vector<std::string> &items,
               const std::vector<int> &ms, std::uint64_t seed, const std::string &json_out, const std::string &dir,
               int threads, bool crosscheck, bool quiet) {
    auto corpus = load_corpus(dir.empty() ? default_corpus_dir() : dir);
    VerifyOptions opt;
    opt.seed = seed;
    opt.m = ms;
    opt.crosscheck = crosscheck;
    auto rep = run_suite(corpus, SuiteFilter{tables, items}, opt, threads);
    if (!json_out.empty()) {
        std::ofstream out(json_out);
        out << report_json(rep) << "\n";
    }
    if (!quiet) std::cout << report_text(rep);
    return rep.unannotated_failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"symmetry analysis of triangular reaction-diffusion systems"};
    app.require_subcommand(1);
    int code = 0;

    std::string a1, a2;
    auto *verify = app.add_subcommand("verify", "check that a generator is a symmetry of a system");
    verify->add_option("system", a1, "system JSON")->required();
    verify->add_option("generator", a2, "generator JSON")->required();
    verify->callback([&] { code = cmd_verify(a1, a2); });

    auto *canon = app.add_subcommand("canon", "canonical form of a 3x3 matrix");
    canon->add_option("matrix", a1, "matrix JSON")->required();
    canon->callback([&] { code = cmd_canon(a1); });

    int m = 1;
    auto *comm = app.add_subcommand("commutator", "bracket of two generators");
    comm->add_option("X", a1)->required();
    comm->add_option("Y", a2)->required();
    comm->add_option("--m", m, "spatial dimension")->check(CLI::Range(1, 3));
    comm->callback([&] { code = cmd_commutator(a1, a2, m); });

    auto *equiv = app.add_subcommand("equiv", "equivalence transformations");
    equiv->require_subcommand(1);
    auto *apply_cmd = equiv->add_subcommand("apply", "apply a transform to a system");
    apply_cmd->add_option("system", a1)->required();
    apply_cmd->add_option("transform", a2)->required();
    apply_cmd->callback([&] { code = cmd_equiv(a1, a2); });

    std::vector<std::string> tables, items;
    std::vector<int> ms;
    std::uint64_t seed = 1;
    std::string json_out, dir;
    int threads = 0;
    bool crosscheck = false, quiet = false;
    auto *corpus = app.add_subcommand("corpus", "classification tables");
    corpus->require_subcommand(1);
    auto *run = corpus->add_subcommand("run", "verify table rows");
    run->add_option("--table", tables, "table id (repeatable)");
    run->add_option("--item", items, "item id (repeatable)");
    run->add_option("--m", ms, "restrict m")->check(CLI::Range(1, 3));
    run->add_option("--seed", seed, "instantiation seed");
    run->add_option("--json", json_out, "write the JSON report");
    run->add_option("--data", dir, "corpus directory");
    run->add_option("--threads", threads, "worker threads (0: all cores)");
    run->add_flag("--crosscheck", crosscheck, "numeric check of holding runs");
    run->add_flag("--quiet", quiet, "no text report");
    run->callback([&] { code = cmd_corpus(tables, items, ms, seed, json_out, dir, threads, crosscheck, quiet); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int r = app.exit(e);
        return r == 0 ? 0 : 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return code;
}
