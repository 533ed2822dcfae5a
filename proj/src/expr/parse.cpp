#include <cctype>
#include <sstream>

#include "rdsym/expr.hpp"

namespace rdsym {

namespace {

// Pratt parser over the expression grammar:
//   + - (10)   * / (20)   unary - (25)   ^ (30, right associative)
class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr parse_all() {
        Expr e = parse_expr(0);
        skip_ws();
        if (pos_ != s_.size()) fail({"operator", "end of input"}, "unexpected character");
        return e;
    }

private:
    [[noreturn]] void fail(std::vector<std::string> expected, const std::string &msg) {
        throw ParseError(pos_, std::move(expected), msg);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    static int infix_prec(char c) {
        switch (c) {
        case '+':
        case '-':
            return 10;
        case '*':
        case '/':
            return 20;
        case '^':
            return 30;
        default:
            return -1;
        }
    }

    Expr parse_expr(int min_prec) {
        Expr lhs = parse_prefix();
        for (;;) {
            char c = peek();
            int prec = infix_prec(c);
            if (prec < 0 || prec < min_prec) break;
            ++pos_;
            // ^ is right associative; others left.
            Expr rhs = parse_expr(c == '^' ? prec : prec + 1);
            switch (c) {
            case '+':
                lhs = lhs + rhs;
                break;
            case '-':
                lhs = lhs - rhs;
                break;
            case '*':
                lhs = lhs * rhs;
                break;
            case '/':
                if (rhs.is_zero()) fail({"nonzero divisor"}, "division by zero");
                lhs = lhs / rhs;
                break;
            case '^':
                lhs = pow(lhs, rhs);
                break;
            }
        }
        return lhs;
    }

    Expr parse_prefix() {
        char c = peek();
        if (c == '-') {
            ++pos_;
            return -parse_expr(25);
        }
        if (c == '+') {
            ++pos_;
            return parse_expr(25);
        }
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr(0);
            if (peek() != ')') fail({")"}, "unbalanced parenthesis");
            ++pos_;
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail({"number", "identifier", "(", "-"}, c ? "unexpected character" : "unexpected end of input");
    }

    Expr parse_number() {
        std::size_t start = pos_;
        std::string digits;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) digits += s_[pos_++];
        Rational value(digits.empty() ? mpz_class(0) : mpz_class(digits));
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            std::string frac;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) frac += s_[pos_++];
            if (digits.empty() && frac.empty()) {
                pos_ = start;
                fail({"number"}, "malformed number");
            }
            if (!frac.empty()) {
                mpz_class scale = 1;
                for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
                value += Rational(mpz_class(frac), scale);
                value.canonicalize();
            }
        }
        return Expr(value);
    }

    Expr parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        std::string name(s_.substr(start, pos_ - start));
        if (peek() != '(') {
            if (name == "exp" || name == "ln" || name == "sin" || name == "cos") fail({"("}, "kernel needs an argument");
            return Expr::symbol(name);
        }
        ++pos_;
        std::vector<Expr> args;
        if (peek() != ')') {
            for (;;) {
                args.push_back(parse_expr(0));
                char c = peek();
                if (c == ',') {
                    ++pos_;
                    continue;
                }
                if (c == ')') break;
                fail({",", ")"}, "bad argument list");
            }
        }
        ++pos_;
        auto one = [&](const char *k) -> const Expr & {
            if (args.size() != 1) {
                pos_ = start;
                fail({"single argument"}, std::string(k) + " takes one argument");
            }
            return args[0];
        };
        if (name == "exp") return exp(one("exp"));
        if (name == "ln") return ln(one("ln"));
        if (name == "sin") return sin(one("sin"));
        if (name == "cos") return cos(one("cos"));
        if (name == "sqrt") return sqrt(one("sqrt"));
        if (args.empty()) {
            pos_ = start;
            fail({"argument"}, "function application needs arguments");
        }
        // F__d0_1(...) denotes a partial derivative of opaque F.
        std::vector<int> orders;
        if (auto p = name.find("__d"); p != std::string::npos) {
            std::string spec = name.substr(p + 3);
            name = name.substr(0, p);
            std::stringstream ss(spec);
            std::string tok;
            while (std::getline(ss, tok, '_')) orders.push_back(std::stoi(tok));
            if (orders.size() != args.size()) {
                pos_ = start;
                fail({"derivative orders matching arity"}, "bad derivative suffix");
            }
        }
        return func(name, std::move(args), std::move(orders));
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

std::string rational_str(const Rational &q) { return q.get_str(); }

bool needs_parens(const Expr &e) { return e.size() > 1 || (e.size() == 1 && e.terms()[0].coef < 0); }

std::string factor_str(const Factor &f);

std::string atom_str(const Atom &a) {
    switch (a.kind) {
    case AtomKind::Symbol:
        return a.name;
    case AtomKind::Surd:
        return a.prime.get_str();
    case AtomKind::Exp:
        return "exp(" + to_string(a.args[0]) + ")";
    case AtomKind::Ln:
        return "ln(" + to_string(a.args[0]) + ")";
    case AtomKind::Sin:
        return "sin(" + to_string(a.args[0]) + ")";
    case AtomKind::Cos:
        return "cos(" + to_string(a.args[0]) + ")";
    case AtomKind::Recip:
        return "(" + to_string(a.args[0]) + ")";
    case AtomKind::Func: {
        std::string s = a.name;
        bool any = false;
        for (int o : a.orders) any = any || o != 0;
        if (any) {
            s += "__d";
            for (std::size_t i = 0; i < a.orders.size(); ++i) {
                if (i) s += "_";
                s += std::to_string(a.orders[i]);
            }
        }
        s += "(";
        for (std::size_t i = 0; i < a.args.size(); ++i) {
            if (i) s += ", ";
            s += to_string(a.args[i]);
        }
        return s + ")";
    }
    }
    return "?";
}

std::string factor_str(const Factor &f) {
    std::string base = atom_str(*f.atom);
    Rational e = f.exponent;
    if (f.atom->kind == AtomKind::Recip) e = -e;
    if (e == 1) return base;
    if (e.get_den() == 1 && e > 0) return base + "^" + rational_str(e);
    return base + "^(" + rational_str(e) + ")";
}

}  // namespace

Expr parse(std::string_view text) { return Parser(text).parse_all(); }

std::string to_string(const Expr &e) {
    if (e.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto &t : e.terms()) {
        Rational c = t.coef;
        bool neg = c < 0;
        if (neg) c = -c;
        if (first) {
            if (neg) out += "-";
        } else {
            out += neg ? " - " : " + ";
        }
        first = false;
        std::string body;
        for (const auto &f : t.mono) {
            if (!body.empty()) body += "*";
            body += factor_str(f);
        }
        if (body.empty()) {
            out += rational_str(c);
        } else if (c == 1) {
            out += body;
        } else {
            out += rational_str(c) + "*" + body;
        }
    }
    return out;
}

}  // namespace rdsym
