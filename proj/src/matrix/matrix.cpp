#include <stdexcept>

#include "json.hpp"
#include "rdsym/matrix.hpp"

namespace rdsym {

Mat3 mat_identity() {
    Mat3 m;
    for (int i = 0; i < 3; ++i) m[i][i] = Expr(1);
    return m;
}

Mat3 operator*(const Mat3 &a, const Mat3 &b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}

Mat3 operator+(const Mat3 &a, const Mat3 &b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i][j] = a[i][j] + b[i][j];
    return r;
}

Mat3 operator-(const Mat3 &a, const Mat3 &b) { return a + Expr(-1) * b; }

Mat3 operator*(const Expr &c, const Mat3 &a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i][j] = c * a[i][j];
    return r;
}

bool operator==(const Mat3 &a, const Mat3 &b) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!normalize(a[i][j] - b[i][j]).is_zero()) return false;
    return true;
}

Mat3 bracket(const Mat3 &a, const Mat3 &b) { return a * b - b * a; }

Mat3 NMatrix::mat() const {
    Mat3 m;
    m[1][0] = nu1;
    m[1][1] = mu1;
    m[2][0] = nu2;
    m[2][1] = mu2;
    m[2][2] = mu1;
    return m;
}

bool NMatrix::has_pattern(const Mat3 &m) {
    for (int j = 0; j < 3; ++j)
        if (!normalize(m[0][j]).is_zero()) return false;
    return normalize(m[1][2]).is_zero() && normalize(m[1][1] - m[2][2]).is_zero();
}

NMatrix NMatrix::from_mat(const Mat3 &m) {
    if (!has_pattern(m)) throw std::invalid_argument("matrix does not have the N-matrix pattern");
    return NMatrix{normalize(m[1][0]), normalize(m[2][0]), normalize(m[1][1]), normalize(m[2][1])};
}

bool operator==(const NMatrix &a, const NMatrix &b) { return a.mat() == b.mat(); }

UMatrix UMatrix::identity() { return UMatrix{Expr(), Expr(), Expr(1), Expr()}; }

Mat3 UMatrix::mat() const {
    Mat3 m;
    m[0][0] = Expr(1);
    m[1][0] = b1;
    m[1][1] = K1;
    m[2][0] = b2;
    m[2][1] = K2;
    m[2][2] = K1;
    return m;
}

Mat3 UMatrix::inverse() const {
    if (normalize(K1).is_zero()) throw std::invalid_argument("U needs K1 != 0");
    // P^{-1} = I/K1 - K2 N / K1^2, lower block -P^{-1} b.
    Expr k1sq = K1 * K1;
    Mat3 m;
    m[0][0] = Expr(1);
    m[1][0] = -b1 / K1;
    m[1][1] = Expr(1) / K1;
    m[2][0] = (K2 * b1 - K1 * b2) / k1sq;
    m[2][1] = -K2 / k1sq;
    m[2][2] = Expr(1) / K1;
    return m;
}

Mat3 UMatrix::printed_inverse() const {
    Mat3 m;
    m[0][0] = K1;
    m[1][0] = -b1;
    m[1][1] = Expr(1);
    m[2][0] = b1 * K2 - b2;
    m[2][1] = -K2 / K1;
    m[2][2] = Expr(1);
    return (Expr(1) / K1) * m;
}

UMatrix UMatrix::operator*(const UMatrix &o) const {
    Mat3 m = mat() * o.mat();
    return UMatrix{normalize(m[1][0]), normalize(m[2][0]), normalize(m[1][1]), normalize(m[2][1])};
}

NMatrix conjugate(const NMatrix &g, const UMatrix &U) { return NMatrix::from_mat(U.mat() * g.mat() * U.inverse()); }

const char *to_string(CanonicalLabel l) {
    switch (l) {
    case CanonicalLabel::G1:
        return "g1";
    case CanonicalLabel::G2:
        return "g2";
    case CanonicalLabel::G3:
        return "g3";
    case CanonicalLabel::G4:
        return "g4";
    case CanonicalLabel::G5:
        return "g5";
    case CanonicalLabel::G6:
        return "g6";
    case CanonicalLabel::G2Tilde:
        return "g2~";
    default:
        return "zero";
    }
}

NMatrix named_matrix(CanonicalLabel l, const Expr &param) {
    switch (l) {
    case CanonicalLabel::G1:
        return NMatrix{Expr(), Expr(), Expr(1), Expr()};
    case CanonicalLabel::G2:
        return NMatrix{param, Expr(1), Expr(), Expr()};
    case CanonicalLabel::G3:
        return NMatrix{Expr(1), Expr(), Expr(), Expr()};
    case CanonicalLabel::G4:
        return NMatrix{Expr(), Expr(), Expr(1), param.is_zero() ? Expr(1) : param};
    case CanonicalLabel::G5:
        return NMatrix{Expr(), Expr(), Expr(), Expr(1)};
    case CanonicalLabel::G6:
        return NMatrix{Expr(1), Expr(), Expr(), Expr(1)};
    case CanonicalLabel::G2Tilde:
        return NMatrix{Expr(), Expr(1), Expr(), Expr()};
    default:
        return NMatrix{};
    }
}

CanonicalForm canonical_form(const NMatrix &g0) {
    NMatrix g{normalize(g0.nu1), normalize(g0.nu2), normalize(g0.mu1), normalize(g0.mu2)};
    CanonicalForm out;
    for (auto [e, name] : {std::pair{&g.mu1, "mu1"}, {&g.mu2, "mu2"}, {&g.nu1, "nu1"}, {&g.nu2, "nu2"}})
        if (!e->is_rational()) {
            out.decided = false;
            out.case_split.push_back(to_string(*e) + " = 0");
            out.case_split.push_back(to_string(*e) + " != 0");
            (void)name;
        }
    if (!out.decided) return out;
    Rational nu1 = *g.nu1.as_rational(), nu2 = *g.nu2.as_rational();
    Rational mu1 = *g.mu1.as_rational(), mu2 = *g.mu2.as_rational();
    UMatrix U = UMatrix::identity();
    Rational scale = 1;
    if (mu1 != 0) {
        // n' = P n - B b with P = I; b = B^{-1} n kills the first column.
        Rational b1 = nu1 / mu1;
        Rational b2 = (nu2 - mu2 * b1) / mu1;
        U = UMatrix{Expr(b1), Expr(b2), Expr(1), Expr()};
        scale = 1 / mu1;
        if (mu2 == 0) {
            out.label = CanonicalLabel::G1;
        } else {
            out.label = CanonicalLabel::G4;
            out.invariant = Expr(Rational(mu2 / mu1));
        }
    } else if (mu2 != 0) {
        scale = 1 / mu2;
        if (nu1 != 0) {
            Rational K1 = mu2 / nu1;
            Rational b1 = K1 * nu2 / mu2;
            U = UMatrix{Expr(b1), Expr(), Expr(K1), Expr()};
            out.label = CanonicalLabel::G6;
        } else {
            U = UMatrix{Expr(Rational(nu2 / mu2)), Expr(), Expr(1), Expr()};
            out.label = CanonicalLabel::G5;
        }
    } else if (nu1 != 0) {
        scale = 1 / nu1;
        U = UMatrix{Expr(), Expr(), Expr(1), Expr(Rational(-nu2 / nu1))};
        out.label = CanonicalLabel::G3;
        if (nu2 != 0) out.g2_lambda = Expr(Rational(nu1 / nu2));
    } else if (nu2 != 0) {
        scale = 1 / nu2;
        out.label = CanonicalLabel::G2Tilde;
    } else {
        out.label = CanonicalLabel::Zero;
    }
    out.witness = U;
    out.scale = Expr(scale);
    out.canonical = named_matrix(out.label, out.invariant.value_or(Expr()));
    return out;
}

Generator realize(const NMatrix &g, const JetContext &ctx) {
    Expr u = Expr::symbol(ctx.deps[0]), v = Expr::symbol(ctx.deps[1]);
    Generator x = Generator::zero(ctx);
    x.pi[0] = -(g.mu1 * u + g.nu1);
    x.pi[1] = -(g.mu1 * v + g.mu2 * u + g.nu2);
    return x;
}

namespace {

struct KeyLess {
    bool operator()(const std::pair<int, Monomial> &a, const std::pair<int, Monomial> &b) const {
        if (a.first != b.first) return a.first < b.first;
        return compare(a.second, b.second) < 0;
    }
};

using Row = std::map<std::pair<int, Monomial>, Rational, KeyLess>;

std::optional<std::vector<Rational>> solve_columns(const std::vector<Row> &columns, const Row &target) {
    // Rows of the linear system are the union of keys.
    std::map<std::pair<int, Monomial>, int, KeyLess> index;
    for (const auto &c : columns)
        for (const auto &[k, v] : c) index.emplace(k, 0);
    for (const auto &[k, v] : target) index.emplace(k, 0);
    int r = 0;
    for (auto &[k, i] : index) i = r++;
    const int n = static_cast<int>(columns.size());
    std::vector<std::vector<Rational>> a(r, std::vector<Rational>(n + 1, Rational(0)));
    for (int j = 0; j < n; ++j)
        for (const auto &[k, v] : columns[j]) a[index[k]][j] = v;
    for (const auto &[k, v] : target) a[index[k]][n] = v;
    std::vector<int> pivot_col;
    int row = 0;
    for (int col = 0; col < n && row < r; ++col) {
        int p = row;
        while (p < r && a[p][col] == 0) ++p;
        if (p == r) continue;
        std::swap(a[p], a[row]);
        for (int i = 0; i < r; ++i) {
            if (i == row || a[i][col] == 0) continue;
            Rational f = a[i][col] / a[row][col];
            for (int j = col; j <= n; ++j) a[i][j] -= f * a[row][j];
        }
        pivot_col.push_back(col);
        ++row;
    }
    for (int i = row; i < r; ++i)
        if (a[i][n] != 0) return std::nullopt;
    std::vector<Rational> c(n, Rational(0));
    for (int i = 0; i < row; ++i) c[pivot_col[i]] = a[i][n] / a[i][pivot_col[i]];
    return c;
}

void add_expr(Row &row, int comp, const Expr &e) {
    Expr n = normalize(e);
    for (const auto &t : n.terms()) row[{comp, t.mono}] += t.coef;
}

Row mat_row(const Mat3 &m) {
    Row r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) add_expr(r, 3 * i + j, m[i][j]);
    return r;
}

Row gen_row(const Generator &g) {
    Row r;
    add_expr(r, 0, g.eta);
    int k = 1;
    for (const auto &c : g.xi) add_expr(r, k++, c);
    for (const auto &c : g.pi) add_expr(r, k++, c);
    return r;
}

bool all_zero(const std::vector<Rational> &c) {
    for (const auto &x : c)
        if (x != 0) return false;
    return true;
}

}  // namespace

std::optional<std::vector<Rational>> decompose(const Mat3 &target, const std::vector<Mat3> &basis) {
    std::vector<Row> cols;
    for (const auto &b : basis) cols.push_back(mat_row(b));
    return solve_columns(cols, mat_row(target));
}

std::optional<std::vector<Rational>> decompose(const Generator &target, const std::vector<Generator> &basis) {
    std::vector<Row> cols;
    for (const auto &b : basis) cols.push_back(gen_row(b));
    return solve_columns(cols, gen_row(target));
}

ClosureReport closure_check(const std::vector<Mat3> &basis) {
    ClosureReport rep;
    for (int i = 0; i < static_cast<int>(basis.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(basis.size()); ++j) {
            auto c = decompose(bracket(basis[i], basis[j]), basis);
            if (!c) {
                rep.closed = false;
                rep.open.emplace_back(i, j);
            } else if (!all_zero(*c)) {
                rep.constants[{i, j}] = *c;
            }
        }
    return rep;
}

ClosureReport closure_check(const std::vector<Generator> &basis, const JetContext &ctx) {
    ClosureReport rep;
    for (int i = 0; i < static_cast<int>(basis.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(basis.size()); ++j) {
            auto c = decompose(commutator(basis[i], basis[j], ctx), basis);
            if (!c) {
                rep.closed = false;
                rep.open.emplace_back(i, j);
            } else if (!all_zero(*c)) {
                rep.constants[{i, j}] = *c;
            }
        }
    return rep;
}

namespace {

using Stated = std::map<std::pair<int, int>, std::vector<Rational>>;

std::vector<Rational> unit(int n, std::initializer_list<std::pair<int, long>> entries) {
    std::vector<Rational> v(n, Rational(0));
    for (auto [k, c] : entries) v[k] = c;
    return v;
}

NMatrix G(CanonicalLabel l) { return named_matrix(l); }

struct Entry {
    std::vector<NMatrix> basis;
    Stated stated;
    // Realization: each element is  dcoef*D + sum_k c_k * ghat_k  (+ extra).
    std::vector<std::string> text;
};

Generator hat(const NMatrix &g, const JetContext &ctx) { return realize(g, ctx); }

}  // namespace

std::vector<std::string> algebra_names() {
    return {"A2,1", "A2,2", "A2,3", "A2,4", "A2,5", "A2,13", "A3,1", "A3,2", "A3,3", "A3,4", "A4",
            "At1",  "At2",  "At3",  "At4",  "At5",  "At6",   "At7",  "A1:g1", "A1:g2", "A1:g3", "A1:g4",
            "A1:g5", "A1:g6"};
}

AlgebraPresentation algebra_catalog(const std::string &name, const JetContext &ctx) {
    using L = CanonicalLabel;
    AlgebraPresentation a;
    a.name = name;
    Expr mu = Expr::symbol("mu"), nu = Expr::symbol("nu"), t = Expr::symbol("t");
    Generator D = named_operator("D", {}, ctx);
    auto two_abelian = [&](L x, L y) {
        a.basis = {G(x), G(y)};
        Generator e1 = hat(a.basis[0], ctx), e2 = hat(a.basis[1], ctx);
        a.realization = {mu * D + e1 + nu * t * e2, e2};
        a.realization_text = {"mu*D + e1^ + nu*t*e2^", "e2^"};
    };
    auto two_solvable = [&](L x, L y) {
        a.basis = {G(x), G(y)};
        a.stated[{0, 1}] = unit(2, {{1, 1}});
        Generator e1 = hat(a.basis[0], ctx), e2 = hat(a.basis[1], ctx);
        a.realization = {mu * D - e1, e2};
        a.realization_text = {"mu*D - e1^", "e2^"};
    };
    if (name == "A2,1") {
        two_abelian(L::G3, L::G2Tilde);
    } else if (name == "A2,2") {
        two_abelian(L::G1, L::G5);
    } else if (name == "A2,3") {
        two_abelian(L::G5, L::G2Tilde);
    } else if (name == "A2,4") {
        two_abelian(L::G6, L::G2Tilde);
    } else if (name == "A2,5") {
        two_solvable(L::G1, L::G2);
        a.basis[1] = named_matrix(L::G2, Expr::symbol("lambda"));
        a.realization[1] = hat(a.basis[1], ctx);
    } else if (name == "A2,13") {
        two_solvable(L::G1, L::G3);
    } else if (name == "A3,1") {
        a.basis = {G(L::G1), G(L::G3), G(L::G2Tilde)};
        a.stated[{0, 1}] = unit(3, {{1, 1}});
        a.stated[{0, 2}] = unit(3, {{2, 1}});
        a.realization = {mu * D - hat(a.basis[0], ctx), hat(a.basis[1], ctx), hat(a.basis[2], ctx)};
        a.realization_text = {"mu*D - e1^", "e2^", "e3^"};
    } else if (name == "A3,2") {
        a.basis = {G(L::G5), G(L::G1), G(L::G2Tilde)};
        a.stated[{1, 2}] = unit(3, {{2, 1}});
        a.realization = {mu * D - Expr(2) * hat(a.basis[0], ctx), nu * D - Expr(2) * hat(a.basis[1], ctx),
                         hat(a.basis[2], ctx)};
        a.realization_text = {"mu*D - 2*e1^", "nu*D - 2*e2^", "e3^"};
    } else if (name == "A3,3") {
        a.basis = {G(L::G2Tilde), G(L::G5), G(L::G6)};
        a.stated[{1, 2}] = unit(3, {{0, 1}});
        a.realization = {mu * D - Expr(2) * hat(a.basis[1], ctx), nu * D - Expr(2) * hat(a.basis[2], ctx),
                         hat(a.basis[0], ctx)};
        a.realization_text = {"mu*D - 2*e2^", "nu*D - 2*e3^", "e1^"};
    } else if (name == "A3,4") {
        // Basis order that reproduces the listed brackets.
        a.basis = {named_matrix(L::G4, Expr(1)), G(L::G2Tilde), G(L::G3)};
        a.stated[{0, 1}] = unit(3, {{1, 1}});
        a.stated[{0, 2}] = unit(3, {{1, 1}, {2, 1}});
        a.realization = {mu * D - Expr(2) * hat(a.basis[0], ctx), hat(a.basis[1], ctx), hat(a.basis[2], ctx)};
        a.realization_text = {"mu*D - 2*e1^", "e2^", "e3^"};
    } else if (name == "A4") {
        a.basis = {G(L::G1), G(L::G3), G(L::G2Tilde), G(L::G5)};
        a.stated[{0, 1}] = unit(4, {{1, 1}});
        a.stated[{0, 2}] = unit(4, {{2, 1}});
        // [e4, e2] = e3  <=>  [e2, e4] = -e3
        a.stated[{1, 3}] = unit(4, {{2, -1}});
        for (const auto &g : a.basis) a.realization.push_back(Expr(-1) * hat(g, ctx));
        a.realization_text = {"-e1^", "-e2^", "-e3^", "-e4^"};
    } else if (name.rfind("At", 0) == 0) {
        Generator Dt = named_operator("Dt", {}, ctx);
        Generator E = Generator::zero(ctx), du = E, dv = E;
        E.pi = {-Expr::symbol(ctx.deps[0]), -Expr::symbol(ctx.deps[1])};
        du.pi = {Expr(-1), Expr()};
        dv.pi = {Expr(), Expr(-1)};
        // Exponential prefactors of the shift generators are forced to 1 by closure with Dt.
        Generator X11 = mu * Dt - E, X12 = Dt - nu * du, X13 = Dt + E + nu * dv;
        Generator X31 = du, X32 = dv, X33 = du + dv;
        if (name == "At1") {
            a.realization = {Dt, E};
            a.realization_text = {"Dt", "u*du + v*dv"};
        } else if (name == "At2") {
            a.realization = {X12, X33};
            a.realization_text = {"Dt - nu*du", "du + dv"};
        } else if (name == "At3") {
            a.realization = {X13, X31};
            a.realization_text = {"Dt + u*du + v*dv + nu*dv", "du"};
        } else if (name == "At4") {
            a.realization = {X11, X31};
            a.realization_text = {"mu*Dt - u*du - v*dv", "du"};
        } else if (name == "At5") {
            a.realization = {X11, X32};
            a.realization_text = {"mu*Dt - u*du - v*dv", "dv"};
        } else if (name == "At6") {
            Generator tdv = Generator::zero(ctx);
            tdv.pi[1] = -t;
            a.realization = {Dt + Expr(4) * E + tdv, X32};
            a.realization_text = {"Dt + 4*(u*du + v*dv) + t*dv", "dv"};
        } else if (name == "At7") {
            Generator tdu = Generator::zero(ctx);
            tdu.pi[0] = -t;
            a.realization = {Dt + Expr(3) * E + tdu, X31};
            a.realization_text = {"Dt + 3*(u*du + v*dv) + t*du", "du"};
        } else {
            throw std::invalid_argument("unknown algebra " + name);
        }
    } else if (name.rfind("A1:g", 0) == 0 && name.size() == 5) {
        int k = name[4] - '0';
        if (k < 1 || k > 6) throw std::invalid_argument("unknown algebra " + name);
        L labels[] = {L::G1, L::G2, L::G3, L::G4, L::G5, L::G6};
        NMatrix g = named_matrix(labels[k - 1], k == 2 ? Expr::symbol("lambda") : Expr());
        a.basis = {g};
        if (k == 2 || k == 3) {
            a.realization = {exp(Expr::symbol("lambda") * t) * hat(g, ctx)};
            a.realization_text = {"exp(lambda*t)*g^"};
        } else {
            a.realization = {mu * D + hat(g, ctx)};
            a.realization_text = {"mu*D + g^"};
        }
    } else {
        throw std::invalid_argument("unknown algebra " + name);
    }
    return a;
}

const char *to_string(EigenCase c) {
    switch (c) {
    case EigenCase::DistinctReal:
        return "distinct_real";
    case EigenCase::Repeated:
        return "repeated";
    default:
        return "complex";
    }
}

FundamentalPair fundamental_pair(const Expr &lambda, const Expr &alpha, const Expr &sigma, const Expr &gamma,
                                 std::optional<EigenCase> assume) {
    FundamentalPair out;
    Expr t = Expr::symbol("t");
    Expr r = (lambda + gamma) / Expr(2);
    Expr disc = normalize((lambda - gamma) * (lambda - gamma) + Expr(4) * alpha * sigma);
    if (assume) {
        out.eigen = *assume;
    } else if (auto q = disc.as_rational()) {
        out.eigen = *q > 0 ? EigenCase::DistinctReal : (*q == 0 ? EigenCase::Repeated : EigenCase::Complex);
    } else {
        out.decided = false;
        std::string d = to_string(disc);
        out.case_split = {d + " > 0", d + " = 0", d + " < 0"};
        return out;
    }
    // exp(M t) = e^{r t} (c(t) I + s(t) (M - r I))
    Expr c, s;
    switch (out.eigen) {
    case EigenCase::DistinctReal: {
        Expr h = sqrt(disc) / Expr(2);
        Expr ep = exp((r + h) * t), em = exp((r - h) * t);
        c = (ep + em) / Expr(2);
        s = (ep - em) / (Expr(2) * h);
        break;
    }
    case EigenCase::Repeated:
        c = exp(r * t);
        s = t * exp(r * t);
        break;
    case EigenCase::Complex: {
        Expr w = sqrt(-disc) / Expr(2);
        Expr er = exp(r * t);
        c = er * cos(w * t);
        s = er * sin(w * t) / w;
        break;
    }
    }
    out.F1 = c + s * (lambda - r);
    out.G1 = s * sigma;
    out.F2 = s * alpha;
    out.G2 = c + s * (gamma - r);
    return out;
}

std::string mat_to_json(const Mat3 &m) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto &row : m) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto &e : row) r.push_back(to_string(e));
        j.push_back(r);
    }
    return j.dump();
}

Mat3 mat_from_json(std::string_view text) {
    auto j = nlohmann::json::parse(text);
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("matrix must be a 3x3 array");
    Mat3 m;
    for (int i = 0; i < 3; ++i) {
        if (j[i].size() != 3) throw std::invalid_argument("matrix must be a 3x3 array");
        for (int k = 0; k < 3; ++k) {
            const auto &e = j[i][k];
            m[i][k] = e.is_string() ? parse(e.get<std::string>()) : parse(e.dump());
        }
    }
    return m;
}

}  // namespace rdsym
