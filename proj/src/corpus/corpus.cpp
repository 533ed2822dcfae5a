#include "rdsym/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rdsym/matrix.hpp"

namespace rdsym {

namespace {

using ojson = nlohmann::ordered_json;

std::string str_or(const ojson &j, const char *key, std::string dflt = {}) {
    if (!j.contains(key)) return dflt;
    const auto &v = j.at(key);
    return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<int> int_list(const ojson &j) {
    if (j.is_number_integer()) return {j.get<int>()};
    return j.get<std::vector<int>>();
}

std::vector<std::pair<std::string, std::string>> pairs(const ojson &j) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto it = j.begin(); it != j.end(); ++it)
        out.emplace_back(it.key(), it->is_string() ? it->get<std::string>() : it->dump());
    return out;
}

std::map<std::string, std::vector<std::string>> alternatives(const ojson &j) {
    std::map<std::string, std::vector<std::string>> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it->is_array())
            for (const auto &x : *it) out[it.key()].push_back(x.is_string() ? x.get<std::string>() : x.dump());
        else
            out[it.key()].push_back(it->is_string() ? it->get<std::string>() : it->dump());
    }
    return out;
}

Family family_of(const std::string &s) {
    if (s == "drift") return Family::NilpotentDrift;
    if (s == "triangular") return Family::TriangularA;
    throw std::invalid_argument("unknown family " + s);
}

Claim claim_from_json(const ojson &j) {
    Claim c;
    c.label = str_or(j, "label");
    c.gen = str_or(j, "gen");
    c.each = j.value("each", false);
    if (j.contains("when")) c.when = pairs(j.at("when"));
    if (j.contains("nonzero")) c.nonzero = j.at("nonzero").get<std::vector<std::string>>();
    if (j.contains("m")) c.m = int_list(j.at("m"));
    if (j.contains("witness")) c.witness = alternatives(j.at("witness"));
    if (j.contains("aet")) c.aet = j.at("aet").get<int>();
    if (j.contains("aet_params"))
        for (auto &[k, v] : pairs(j.at("aet_params"))) c.aet_params[k] = v;
    if (j.contains("a")) c.a = str_or(j, "a");
    if (j.contains("fix"))
        for (auto &[k, v] : pairs(j.at("fix"))) c.fix[k] = v;
    if (c.label.empty()) c.label = c.aet ? "AET" + std::to_string(*c.aet) : c.gen;
    return c;
}

// ---- macros -----------------------------------------------------------

void replace_all(std::string &s, const std::string &from, const std::string &to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
}

std::string join_x(int from, int to, const std::string &sep, const std::string &fmt) {
    std::string out;
    for (int k = from; k <= to; ++k) {
        if (!out.empty()) out += sep;
        std::string term = fmt;
        replace_all(term, "#", std::to_string(k));
        out += term;
    }
    return out;
}

std::string expand_macros(std::string s, int m, int index) {
    replace_all(s, "@xt", m > 1 ? join_x(1, m - 1, ",", "x#") : "0");
    replace_all(s, "@xd", "(" + join_x(1, m, "+", "x#*dx#") + ")");
    replace_all(s, "@x", join_x(1, m, ",", "x#"));
    replace_all(s, "@r2", "(" + join_x(1, m, "+", "x#^2") + ")");
    replace_all(s, "@HD", "(" + join_x(1, m, "+", "H#*dx#") + ")");
    replace_all(s, "@a", std::to_string(index));
    replace_all(s, "@m", std::to_string(m));
    return s;
}

// Function names applied in a template with their arities.
std::map<std::string, int> applied_functions(const std::string &s) {
    static const std::set<std::string> builtin{"exp", "ln", "sin", "cos", "sqrt"};
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isalpha(static_cast<unsigned char>(s[i])) || (i > 0 && (std::isalnum(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == '_')))
            continue;
        std::size_t j = i;
        while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
        if (j < s.size() && s[j] == '(') {
            std::string name = s.substr(i, j - i);
            if (!builtin.count(name)) {
                int depth = 0, args = 1;
                for (std::size_t k = j; k < s.size(); ++k) {
                    if (s[k] == '(') ++depth;
                    else if (s[k] == ')') {
                        if (--depth == 0) break;
                    } else if (s[k] == ',' && depth == 1)
                        ++args;
                }
                out[name] = args;
            }
        }
        i = j;
    }
    return out;
}

// Witness body for an arbitrary function of n arguments.
std::string default_body(int n, int alt) {
    std::string lin = join_x(1, n, "+", "#*z#");
    switch (alt % 3) {
    case 0: return "3/2 + " + lin + " + z1^2";
    case 1: return "exp(z1/3) + z1^3 - (" + lin + ")";
    default: return "1/(z1^2 + 2) + z1*z" + std::to_string(n);
    }
}

// ---- sampling ---------------------------------------------------------

std::uint64_t fnv(std::uint64_t h, const std::string &s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t run_seed(std::uint64_t seed, const CorpusRow &row, int claim, int m, int k, int attempt) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv(h, std::to_string(seed) + "|" + row.table + "|" + row.item + "|" + std::to_string(claim) + "|" +
                   std::to_string(m) + "|" + std::to_string(k) + "|" + std::to_string(attempt));
    return h;
}

Rational nonzero_rational(std::mt19937_64 &rng, long lo, long hi) {
    for (;;) {
        Rational q = random_rational(rng, lo, hi, 2);
        if (q != 0) return q;
    }
}

Expr eval_template(const std::string &text, const Binding &b) { return substitute(parse(text), b); }

Binding param_binding(const std::map<std::string, Expr> &params, int m) {
    Binding b;
    for (const auto &[k, v] : params) b.bind(k, v);
    b.bind("m", Expr(m));
    return b;
}

// W(t, x, u) with W_t = f2_v - W_u f1.
Expr make_w(const RDSystem &s) {
    JetContext ctx = s.context();
    std::vector<Expr> args{Expr::symbol("t")};
    for (int i = 0; i < s.m; ++i) args.push_back(Expr::symbol(ctx.x(i)));
    args.push_back(Expr::symbol("u"));
    std::vector<int> du(args.size(), 0);
    du.back() = 1;
    Expr f1 = s.f1, f2v = differentiate(s.f2, "v");
    auto rule = std::make_shared<KernelRule>();
    rule->index = 0;
    rule->rhs = [f1, f2v, du](std::span<const Expr> a, const KernelRulePtr &self) {
        return f2v - func("W", std::vector<Expr>(a.begin(), a.end()), du, self) * f1;
    };
    return func("W", args, {}, rule);
}

bool is_operator(const std::string &s) {
    static const std::set<std::string> plain{"dt", "du", "dv", "E", "D", "Dt", "K", "Kt", "P0", "H"};
    static const std::regex indexed("(dx|P|G|Gh)[0-9]+|J[0-9][0-9]");
    return plain.count(s) || std::regex_match(s, indexed);
}

Generator operator_generator(const std::string &name, const JetContext &ctx, const OperatorParams &params) {
    Generator g = Generator::zero(ctx);
    if (name == "dt") g.eta = Expr(1);
    else if (name == "du") g.pi[0] = Expr(-1);
    else if (name == "dv") g.pi[1] = Expr(-1);
    else if (name == "E") g.pi = {-Expr::symbol("u"), -Expr::symbol("v")};
    else if (name.rfind("dx", 0) == 0) {
        int k = std::stoi(name.substr(2));
        if (k < 1 || k > ctx.m) throw InstantiationError("operator " + name + " outside m = " + std::to_string(ctx.m));
        g.xi[k - 1] = Expr(1);
    } else
        return named_operator(name, params, ctx);
    return g;
}

std::vector<std::string> x_symbols_over(const std::string &text, int m) {
    std::vector<std::string> bad;
    static const std::regex xk("x([0-9]+)");
    for (std::sregex_iterator it(text.begin(), text.end(), xk), end; it != end; ++it)
        if (std::stoi((*it)[1]) > m) bad.push_back(it->str());
    return bad;
}

// Sampled parameters for one run; nullopt when the constraints reject the draw.
std::optional<std::map<std::string, Expr>> sample_params(const CorpusRow &row, const Claim *claim, int m, int k,
                                                         std::mt19937_64 &rng) {
    std::map<std::string, Expr> params;
    for (const auto &p : row.params) params[p] = Expr(nonzero_rational(rng, -5, 5));
    for (const auto &p : row.signs) params[p] = Expr(rng() % 2 ? 1 : -1);
    if (row.family == Family::TriangularA) {
        std::string mode = claim && claim->a ? *claim->a : row.a;
        if (mode == "both") mode = k % 3 == 1 ? "zero" : "nonzero";
        if (mode == "zero")
            params["a"] = Expr();
        else if (mode == "nonzero")
            params["a"] = Expr(random_rational(rng, 1, 5, 2));
        else
            params["a"] = eval_template(mode, param_binding(params, m));
    }
    auto assign = [&](const std::vector<std::pair<std::string, std::string>> &list) {
        for (const auto &[name, text] : list) params[name] = eval_template(expand_macros(text, m, 1), param_binding(params, m));
    };
    if (claim) assign(claim->when);
    assign(row.set);
    std::vector<std::string> nz = row.nonzero;
    if (claim) nz.insert(nz.end(), claim->nonzero.begin(), claim->nonzero.end());
    Binding b = param_binding(params, m);
    for (const auto &c : nz)
        if (eval_template(expand_macros(c, m, 1), b).is_zero()) return std::nullopt;
    return params;
}

Expr witness_body(const std::string &text) {
    Binding z;
    z.bind("z", Expr::symbol("z1"));
    return substitute(parse(text), z);
}

Instance instantiate_impl(const CorpusRow &row, const Claim *claim, int claim_index, int m, int k, std::uint64_t seed,
                          bool mutate) {
    if (std::find(row.m.begin(), row.m.end(), m) == row.m.end())
        throw InstantiationError("m = " + std::to_string(m) + " not applicable");
    Instance inst;
    inst.m = m;
    std::optional<std::map<std::string, Expr>> params;
    std::mt19937_64 rng;
    for (int attempt = 0; attempt < 64 && !params; ++attempt) {
        rng.seed(run_seed(seed, row, claim_index, m, k, attempt));
        params = sample_params(row, claim, m, k, rng);
    }
    if (!params) throw InstantiationError("constraints unsatisfiable after 64 draws");
    inst.params = *params;

    std::string f1t = expand_macros(row.f1, m, 1), f2t = expand_macros(row.f2, m, 1);
    std::string gent = claim ? claim->gen : std::string();
    std::vector<std::string> gen_texts;
    if (!gent.empty())
        for (int i = 1; i <= (claim->each ? m : 1); ++i) gen_texts.push_back(expand_macros(gent, m, i));

    Binding b = param_binding(inst.params, m);
    std::map<std::string, int> funcs = applied_functions(f1t + " " + f2t);
    for (const auto &g : gen_texts)
        for (auto &[n, ar] : applied_functions(g)) funcs[n] = ar;
    funcs.erase("W");
    inst.witness_mode = k % 2 == 1 && !funcs.empty();
    if (inst.witness_mode) {
        int alt = k / 2;
        for (const auto &[name, arity] : funcs) {
            std::vector<std::string> formals;
            for (int i = 1; i <= arity; ++i) formals.push_back("z" + std::to_string(i));
            auto it = row.functions.find(name);
            std::string body = it != row.functions.end() && !it->second.empty()
                                   ? it->second[alt % it->second.size()]
                                   : default_body(arity, alt + static_cast<int>(name.size()));
            b.kernels[name] = KernelValue{formals, substitute(witness_body(body), param_binding(inst.params, m))};
        }
    }

    if (claim)
        for (const auto &[name, body] : claim->fix) {
            int arity = funcs.count(name) ? funcs.at(name) : 1;
            std::vector<std::string> formals;
            for (int i = 1; i <= arity; ++i) formals.push_back("z" + std::to_string(i));
            b.kernels[name] = KernelValue{formals, substitute(witness_body(body), param_binding(inst.params, m))};
        }
    Expr f1 = substitute(parse(f1t), b), f2 = substitute(parse(f2t), b);
    if (mutate) {
        Expr kappa(nonzero_rational(rng, 1, 5) + Rational(1, 7));
        inst.params["kappa"] = kappa;
        f2 = f2 + kappa * pow(Expr::symbol("u"), Rational(3));
    }
    if (row.family == Family::NilpotentDrift)
        inst.system = RDSystem::drift(m, Expr(1), f1, f2);
    else
        inst.system = RDSystem::triangular(m, inst.params.at("a"), f1, f2);
    if (!claim) return inst;

    if (claim->aet) {
        std::map<std::string, Expr> tp;
        for (const auto &[name, text] : claim->aet_params) tp[name] = eval_template(text, b);
        inst.transform = EquivTransform::aet(*claim->aet, tp);
        return inst;
    }

    // witness placeholders, claim entries first
    auto wit = claim->witness;
    for (const auto &[name, alts] : row.witness) wit.emplace(name, alts);
    Binding extra;
    extra.kernels = b.kernels;
    for (const auto &[name, alts] : wit) {
        std::vector<std::string> ok;
        for (const auto &a : alts) {
            std::string e = expand_macros(a, m, 1);
            if (x_symbols_over(e, m).empty()) ok.push_back(e);
        }
        if (ok.empty()) throw InstantiationError("no witness for " + name + " at m = " + std::to_string(m));
        extra.bind(name, substitute(parse(ok[k % ok.size()]), b));
    }
    bool uses_w = false;
    for (const auto &g : gen_texts) uses_w = uses_w || free_symbols(parse(g)).count("W");
    if (uses_w) extra.bind("W", make_w(inst.system));
    inst.generators = generator_from_template(gent, claim->each, inst.system.context(), inst.params, extra);
    return inst;
}

std::string first_residual(const SymmetryReport &r, std::string *minimal) {
    for (const auto &c : r.residual) {
        Expr n = normalize(c);
        if (!n.is_zero()) {
            if (minimal) *minimal = to_string(minimal_term(n));
            return to_string(n);
        }
    }
    return {};
}

// X = mu D + C1 E + C2 u dv + B1 du + B2 dv with constant mu.
struct MainShape {
    Expr mu, C1, C2, B1, B2;
};

std::optional<MainShape> main_shape_impl(const Generator &g, const JetContext &ctx) {
    Expr t = Expr::symbol("t"), u = Expr::symbol("u"), v = Expr::symbol("v");
    MainShape s;
    s.mu = coefficient(g.eta, "t", 1);
    if (!s.mu.is_rational() || !normalize(g.eta - s.mu * t).is_zero()) return std::nullopt;
    for (int i = 0; i < ctx.m; ++i)
        if (!normalize(g.xi[i] - s.mu * Expr::symbol(ctx.x(i)) / Expr(2)).is_zero()) return std::nullopt;
    Expr p1 = normalize(g.pi[0]), p2 = normalize(g.pi[1]);  // X = mu D - C1 E - C2 u dv - B1 du - B2 dv
    s.C1 = coefficient(p1, "u", 1);
    s.B1 = normalize(p1 - s.C1 * u);
    s.C2 = coefficient(p2, "u", 1);
    s.B2 = normalize(p2 - s.C2 * u - s.C1 * v);
    for (const auto &e : {s.C1, s.C2, s.B1, s.B2})
        if (depends_on(e, "u") || depends_on(e, "v")) return std::nullopt;
    if (has_kernels(s.C1) || has_kernels(s.C2)) return std::nullopt;
    return s;
}

std::optional<MainShape> main_shape(const Generator &g, const JetContext &ctx) {
    try {
        return main_shape_impl(g, ctx);
    } catch (const std::invalid_argument &) {
        return std::nullopt;  // coefficients with kernels in t, u or v
    }
}

std::set<Extension> expected_extensions(const std::string &gen) {
    std::set<Extension> out;
    static const std::regex gal("(^|[^h])G(@a|[0-9])"), expg("Gh(@a|[0-9])"), conf("(^|[^A-Za-z])K([^A-Za-z0-9t]|$)");
    if (std::regex_search(gen, gal)) out.insert(Extension::Galilei);
    if (std::regex_search(gen, expg)) out.insert(Extension::ExpGalilei);
    if (std::regex_search(gen, conf)) out.insert(Extension::Conformal);
    return out;
}

Verdict combine(Verdict a, Verdict b) {
    if (a == Verdict::Fails || b == Verdict::Fails) return Verdict::Fails;
    if (a == Verdict::Undecided || b == Verdict::Undecided) return Verdict::Undecided;
    return Verdict::Holds;
}

RunRecord run_claim(const CorpusRow &row, const Claim &claim, int ci, int m, int k, const VerifyOptions &opt) {
    RunRecord rec;
    rec.m = m;
    rec.k = k;
    try {
        Instance inst = instantiate_impl(row, &claim, ci, m, k, opt.seed, opt.mutate_f2);
        rec.witness_mode = inst.witness_mode;
        for (const auto &[name, v] : inst.params) rec.params[name] = to_string(v);
        if (inst.transform) {
            rec.verdict = preserves_class(inst.system, *inst.transform) ? Verdict::Holds : Verdict::Fails;
            if (rec.verdict == Verdict::Fails) {
                try {
                    auto ch = change_variables(inst.system, substitution(*inst.transform, inst.system.context()));
                    std::string stray;
                    for (const auto &s : ch.stray) stray += (stray.empty() ? "" : ",") + s;
                    rec.residual = "not a point transformation of the class; stray: " + stray;
                } catch (const std::exception &e) {
                    rec.residual = e.what();
                }
            }
            return rec;
        }
        JetContext ctx = inst.system.context();
        rec.verdict = Verdict::Holds;
        bool has_w = false;
        for (const auto &g : inst.generators) {
            auto rep = is_symmetry(inst.system, g);
            rec.verdict = combine(rec.verdict, rep.verdict);
            if (rep.verdict != Verdict::Holds && rec.residual.empty()) rec.residual = first_residual(rep, &rec.minimal);
            std::string text = to_string(g, ctx);
            has_w = has_w || text.find("W") != std::string::npos;
            if (rep.verdict == Verdict::Holds && opt.crosscheck && !has_w) {
                Real worst = numeric_crosscheck(rep.detail, opt.seed + static_cast<std::uint64_t>(k));
                double lg = worst == 0 ? -200.0 : static_cast<double>(log10(worst));
                rec.crosscheck_log10 = rec.crosscheck_log10 ? std::max(*rec.crosscheck_log10, lg) : lg;
            }
            if (inst.system.family == Family::TriangularA)
                if (auto ms = main_shape(g, ctx)) {
                    auto r = classifying_residual_main(inst.system, ms->C1, ms->C2, ms->B1, ms->B2, ms->mu);
                    bool zero = equivalent(r[0], Expr()).status == EqualityStatus::Equal &&
                                equivalent(r[1], Expr()).status == EqualityStatus::Equal;
                    bool agrees = zero == (rep.verdict == Verdict::Holds);
                    rec.two_path_agrees = rec.two_path_agrees.value_or(true) && agrees;
                }
        }
        auto expected = expected_extensions(claim.gen);
        if (!expected.empty() && claim.when.empty() && inst.system.family == Family::TriangularA &&
            !inst.system.a.is_zero() && !inst.witness_mode) {
            auto ext = extension_check(inst.system);
            bool agrees = true;
            for (auto e : expected) agrees = agrees && ext.holds.count(e);
            rec.extension_agrees = agrees == (rec.verdict == Verdict::Holds);
        }
    } catch (const InstantiationError &e) {
        rec.verdict = Verdict::Undecided;
        rec.residual = std::string("instantiation: ") + e.what();
    } catch (const std::exception &e) {
        rec.verdict = Verdict::Undecided;
        rec.residual = std::string("error: ") + e.what();
    }
    return rec;
}

const std::set<std::string> kGated{"2", "3", "4", "5", "7", "8", "9", "10"};

}  // namespace

CorpusTable table_from_json(std::string_view text) {
    ojson j = ojson::parse(text);
    CorpusTable t;
    t.id = str_or(j, "table");
    t.title = str_or(j, "title");
    const ojson dflt = j.value("defaults", ojson::object());
    for (const auto &rj : j.at("rows")) {
        ojson r = dflt;
        for (auto it = rj.begin(); it != rj.end(); ++it) r[it.key()] = *it;
        CorpusRow row;
        row.table = t.id;
        row.item = str_or(r, "item");
        row.family = family_of(r.value("family", std::string("triangular")));
        row.a = str_or(r, "a", "nonzero");
        if (r.contains("m")) row.m = int_list(r.at("m"));
        row.f1 = str_or(r, "f1", "0");
        row.f2 = str_or(r, "f2", "0");
        if (r.contains("params")) row.params = r.at("params").get<std::vector<std::string>>();
        if (r.contains("signs")) row.signs = r.at("signs").get<std::vector<std::string>>();
        if (r.contains("nonzero")) row.nonzero = r.at("nonzero").get<std::vector<std::string>>();
        if (r.contains("set")) row.set = pairs(r.at("set"));
        if (r.contains("witness")) row.witness = alternatives(r.at("witness"));
        if (r.contains("functions")) row.functions = alternatives(r.at("functions"));
        if (r.contains("claims"))
            for (const auto &c : r.at("claims")) row.claims.push_back(claim_from_json(c));
        if (r.contains("annotation")) {
            const auto &a = r.at("annotation");
            row.annotation = Annotation{str_or(a, "suspected"), str_or(a, "note"), {}};
            if (a.contains("corrected")) row.annotation->corrected = pairs(a.at("corrected"));
        }
        if (r.contains("blocked")) row.blocked = str_or(r, "blocked");
        row.note = str_or(r, "note");
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string default_corpus_dir() {
    if (const char *env = std::getenv("RDSYM_CORPUS")) return env;
    return std::string(RDSYM_DATA_DIR) + "/corpus";
}

std::vector<CorpusTable> load_corpus(const std::string &dir) {
    std::vector<std::filesystem::path> files;
    for (const auto &e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<CorpusTable> out;
    for (const auto &f : files) {
        std::ifstream in(f);
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            out.push_back(table_from_json(ss.str()));
        } catch (const std::exception &e) {
            throw std::runtime_error(f.filename().string() + ": " + e.what());
        }
    }
    auto key = [](const CorpusTable &t) {
        bool num = !t.id.empty() && std::all_of(t.id.begin(), t.id.end(), ::isdigit);
        return std::make_pair(num ? std::stoi(t.id) : 1000, t.id);
    };
    std::sort(out.begin(), out.end(), [&](const auto &a, const auto &b) { return key(a) < key(b); });
    return out;
}

Instance instantiate_claim(const CorpusRow &row, const Claim &claim, int m, int k, std::uint64_t seed) {
    int ci = static_cast<int>(&claim - row.claims.data());
    if (ci < 0 || ci >= static_cast<int>(row.claims.size())) ci = 0;
    return instantiate_impl(row, &claim, ci, m, k, seed, false);
}

Instance instantiate_row(const CorpusRow &row, std::uint64_t seed, int m, int k) {
    if (row.claims.empty()) return instantiate_impl(row, nullptr, 0, m, k, seed, false);
    return instantiate_impl(row, &row.claims.front(), 0, m, k, seed, false);
}

std::vector<Generator> generator_from_template(const std::string &tmpl, bool each, const JetContext &ctx,
                                               const std::map<std::string, Expr> &params, const Binding &extra) {
    OperatorParams op(params.begin(), params.end());
    for (const auto &[k, v] : extra.symbols) op[k] = v;
    std::vector<Generator> out;
    for (int idx = 1; idx <= (each ? ctx.m : 1); ++idx) {
        Binding b = param_binding(params, ctx.m);
        for (const auto &[k, v] : extra.symbols) b.bind(k, v);
        b.kernels = extra.kernels;
        Expr e = substitute(parse(expand_macros(tmpl, ctx.m, idx)), b);
        Generator g = Generator::zero(ctx);
        Expr rest = e;
        for (const auto &name : free_symbols(e)) {
            if (!is_operator(name)) continue;
            if (!coefficient(e, name, 2).is_zero()) throw InstantiationError("template is not linear in " + name);
            Expr c = coefficient(e, name, 1);
            rest = rest - c * Expr::symbol(name);
            g = g + c * operator_generator(name, ctx, op);
        }
        if (!normalize(rest).is_zero())
            throw InstantiationError("template has a part without operators: " + to_string(normalize(rest)));
        out.push_back(normalize(g));
    }
    return out;
}

const char *to_string(RowVerdict v) {
    switch (v) {
    case RowVerdict::Pass: return "pass";
    case RowVerdict::Fail: return "fail";
    case RowVerdict::Blocked: return "blocked";
    case RowVerdict::Undecided: return "undecided";
    }
    return "?";
}

CorpusRow corrected_row(const CorpusRow &row) {
    CorpusRow out = row;
    if (!row.annotation) return out;
    for (const auto &[key, value] : row.annotation->corrected) {
        if (key == "f1") out.f1 = value;
        else if (key == "f2") out.f2 = value;
        else if (key.rfind("set.", 0) == 0) {
            std::string name = key.substr(4);
            auto it = std::find_if(out.set.begin(), out.set.end(), [&](const auto &p) { return p.first == name; });
            if (it != out.set.end()) it->second = value;
            else out.set.emplace_back(name, value);
        } else if (key.rfind("witness.", 0) == 0)
            out.witness[key.substr(8)] = {value};
        else if (key.rfind("gen.", 0) == 0)
            out.claims.at(std::stoul(key.substr(4))).gen = value;
        else if (key.rfind("when.", 0) == 0) {
            std::size_t dot = key.find('.', 5);
            auto &when = out.claims.at(std::stoul(key.substr(5, dot - 5))).when;
            std::string name = key.substr(dot + 1);
            auto it = std::find_if(when.begin(), when.end(), [&](const auto &p) { return p.first == name; });
            if (it != when.end()) it->second = value;
            else when.emplace_back(name, value);
        }
        else
            throw std::invalid_argument("unknown correction key " + key);
    }
    return out;
}

VerificationRun verify_row(const CorpusRow &row, const VerifyOptions &opt) {
    VerificationRun run;
    run.table = row.table;
    run.item = row.item;
    run.annotated = row.annotation.has_value();
    if (row.annotation) run.suspected = row.annotation->suspected;
    if (row.blocked) {
        run.verdict = RowVerdict::Blocked;
        run.detail = "blocked: " + *row.blocked;
        return run;
    }
    Verdict agg = Verdict::Holds;
    for (std::size_t ci = 0; ci < row.claims.size(); ++ci) {
        const Claim &claim = row.claims[ci];
        ClaimResult cr;
        cr.label = claim.label;
        std::vector<int> ms = claim.m.empty() ? row.m : claim.m;
        if (!opt.m.empty())
            std::erase_if(ms, [&](int m) { return std::find(opt.m.begin(), opt.m.end(), m) == opt.m.end(); });
        for (int m : ms)
            for (int k = 0; k < opt.instantiations; ++k) {
                RunRecord rec = run_claim(row, claim, static_cast<int>(ci), m, k, opt);
                cr.verdict = combine(cr.verdict, rec.verdict);
                cr.runs.push_back(std::move(rec));
            }
        if (cr.verdict != Verdict::Holds && run.detail.empty())
            for (const auto &r : cr.runs)
                if (r.verdict != Verdict::Holds) {
                    run.detail = cr.label + " (m=" + std::to_string(r.m) + "): " + r.residual;
                    break;
                }
        agg = combine(agg, cr.verdict);
        run.claims.push_back(std::move(cr));
    }
    run.verdict = agg == Verdict::Holds ? RowVerdict::Pass : agg == Verdict::Fails ? RowVerdict::Fail : RowVerdict::Undecided;
    if (row.annotation && !row.annotation->corrected.empty() && run.verdict != RowVerdict::Pass) {
        CorpusRow fixed = corrected_row(row);
        fixed.annotation.reset();
        run.corrected = verify_row(fixed, opt).verdict;
    }
    return run;
}

std::vector<CatalogCheck> verify_catalog(const std::vector<std::string> &names) {
    std::vector<CatalogCheck> out;
    std::vector<std::string> list = names.empty() ? algebra_names() : names;
    JetContext ctx;
    ctx.m = 2;
    for (const auto &name : list) {
        auto a = algebra_catalog(name, ctx);
        CatalogCheck c;
        c.name = name;
        if (a.basis.size() >= 2) {
            std::vector<Mat3> mats;
            std::vector<Generator> hats;
            for (const auto &b : a.basis) {
                mats.push_back(b.mat());
                hats.push_back(Expr(-1) * realize(b, ctx));
            }
            auto rm = closure_check(mats);
            c.matrix_ok = rm.closed && rm.constants == a.stated;
            auto rv = closure_check(hats, ctx);
            c.realized_ok = rv.closed && rv.constants == a.stated;
        } else {
            c.matrix_ok = c.realized_ok = true;
        }
        Binding params;
        params.bind("mu", Expr(Rational(2, 3))).bind("nu", Expr(-5)).bind("lambda", Expr(Rational(7, 2)));
        std::vector<Generator> inst;
        for (const auto &x : a.realization) inst.push_back(substitute(x, params));
        c.closes = inst.size() < 2 || closure_check(inst, ctx).closed;
        out.push_back(c);
    }
    return out;
}

SuiteReport run_suite(const std::vector<CorpusTable> &corpus, const SuiteFilter &filter, const VerifyOptions &opt,
                      int threads) {
    auto wanted = [](const std::vector<std::string> &list, const std::string &v) {
        return list.empty() || std::find(list.begin(), list.end(), v) != list.end();
    };
    SuiteReport rep;
    if (wanted(filter.tables, "1")) {
        std::vector<std::string> names;
        JetContext ctx;
        for (const auto &n : algebra_names())
            if (algebra_catalog(n, ctx).basis.size() >= 2 && wanted(filter.items, n)) names.push_back(n);
        for (const auto &c : verify_catalog(names)) {
            VerificationRun r;
            r.table = "1";
            r.item = c.name;
            r.verdict = c.matrix_ok && c.realized_ok && c.closes ? RowVerdict::Pass : RowVerdict::Fail;
            r.detail = std::string("matrix ") + (c.matrix_ok ? "ok" : "mismatch") + ", realized " +
                       (c.realized_ok ? "ok" : "mismatch") + (c.closes ? "" : ", realization does not close");
            rep.runs.push_back(r);
        }
    }
    std::vector<const CorpusRow *> rows;
    for (const auto &t : corpus)
        if (wanted(filter.tables, t.id))
            for (const auto &r : t.rows)
                if (wanted(filter.items, r.item)) rows.push_back(&r);
    std::vector<VerificationRun> results(rows.size());
    int n = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i)
        pool.emplace_back([&] {
            for (std::size_t j; (j = next++) < rows.size();) results[j] = verify_row(*rows[j], opt);
        });
    for (auto &th : pool) th.join();
    for (auto &r : results) rep.runs.push_back(std::move(r));

    for (const char *k : {"pass", "fail", "blocked", "undecided", "annotated", "gated"}) rep.counts[k] = 0;
    int gated_pass = 0;
    for (const auto &r : rep.runs) {
        rep.counts[to_string(r.verdict)]++;
        bool bad = r.verdict == RowVerdict::Fail || r.verdict == RowVerdict::Undecided;
        if (r.annotated) rep.counts["annotated"]++;
        if (bad && !r.annotated) rep.unannotated_failures++;
        if (kGated.count(r.table) && r.verdict != RowVerdict::Blocked && !(bad && r.annotated)) {
            rep.counts["gated"]++;
            if (r.verdict == RowVerdict::Pass) gated_pass++;
        }
    }
    rep.pass_rate = rep.counts["gated"] ? static_cast<double>(gated_pass) / rep.counts["gated"] : 1.0;
    return rep;
}

std::string report_json(const SuiteReport &r, int indent) {
    ojson j;
    j["counts"] = r.counts;
    j["gated_pass_rate"] = std::round(r.pass_rate * 1e6) / 1e6;
    j["unannotated_failures"] = r.unannotated_failures;
    j["rows"] = ojson::array();
    for (const auto &run : r.runs) {
        ojson row;
        row["table"] = run.table;
        row["item"] = run.item;
        row["verdict"] = to_string(run.verdict);
        row["annotated"] = run.annotated;
        if (!run.detail.empty()) row["detail"] = run.detail;
        if (run.annotated) row["suspected"] = run.suspected;
        if (run.corrected) row["corrected_verdict"] = to_string(*run.corrected);
        row["claims"] = ojson::array();
        for (const auto &c : run.claims) {
            ojson cj;
            cj["label"] = c.label;
            cj["verdict"] = to_string(c.verdict);
            cj["runs"] = ojson::array();
            for (const auto &x : c.runs) {
                ojson xj;
                xj["m"] = x.m;
                xj["k"] = x.k;
                xj["witness_mode"] = x.witness_mode;
                xj["params"] = x.params;
                xj["verdict"] = to_string(x.verdict);
                if (!x.residual.empty()) xj["residual"] = x.residual;
                if (!x.minimal.empty()) xj["minimal_monomial"] = x.minimal;
                if (x.two_path_agrees) xj["two_path_agrees"] = *x.two_path_agrees;
                if (x.extension_agrees) xj["extension_agrees"] = *x.extension_agrees;
                if (x.crosscheck_log10) xj["crosscheck_log10"] = std::round(*x.crosscheck_log10 * 100) / 100;
                cj["runs"].push_back(xj);
            }
            row["claims"].push_back(cj);
        }
        j["rows"].push_back(row);
    }
    return j.dump(indent);
}

std::string report_text(const SuiteReport &r) {
    std::ostringstream os;
    for (const auto &run : r.runs) {
        os << "table " << run.table << " item " << run.item << ": " << to_string(run.verdict);
        if (run.annotated && run.verdict != RowVerdict::Pass) os << " (annotated)";
        if (run.corrected) os << " [corrected: " << to_string(*run.corrected) << "]";
        if (!run.detail.empty() && run.verdict != RowVerdict::Pass) os << "  " << run.detail;
        os << "\n";
    }
    os << "pass " << r.counts.at("pass") << ", fail " << r.counts.at("fail") << ", blocked " << r.counts.at("blocked")
       << ", undecided " << r.counts.at("undecided") << "; gated pass rate " << r.pass_rate
       << "; unannotated failures " << r.unannotated_failures << "\n";
    return os.str();
}

}  // namespace rdsym
