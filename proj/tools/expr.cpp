#include "expr.hpp"

#include "bessel/io.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace bessel::cli {

namespace {

struct Vars {
    double t, x, u, v;
};

using Node = std::function<double(const Vars&)>;

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Node parse() {
        Node n = expr();
        skip();
        if (pos_ != s_.size()) {
            fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        }
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression: " + what + " at position " + std::to_string(pos_) + " in '" +
                                    std::string(s_) + "'");
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }

    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Node expr() {
        Node lhs = term();
        while (true) {
            if (eat('+')) {
                lhs = [a = lhs, b = term()](const Vars& w) { return a(w) + b(w); };
            } else if (eat('-')) {
                lhs = [a = lhs, b = term()](const Vars& w) { return a(w) - b(w); };
            } else {
                return lhs;
            }
        }
    }

    Node term() {
        Node lhs = unary();
        while (true) {
            if (eat('*')) {
                lhs = [a = lhs, b = unary()](const Vars& w) { return a(w) * b(w); };
            } else if (eat('/')) {
                lhs = [a = lhs, b = unary()](const Vars& w) { return a(w) / b(w); };
            } else {
                return lhs;
            }
        }
    }

    Node unary() {
        if (eat('-')) {
            return [a = unary()](const Vars& w) { return -a(w); };
        }
        if (eat('+')) {
            return unary();
        }
        return power();
    }

    // right associative, binds tighter than unary minus on its left: -x^2 = -(x^2)
    Node power() {
        Node base = primary();
        if (eat('^')) {
            return [a = base, b = unary()](const Vars& w) { return std::pow(a(w), b(w)); };
        }
        return base;
    }

    Node primary() {
        skip();
        if (pos_ >= s_.size()) {
            fail("unexpected end");
        }
        if (eat('(')) {
            Node n = expr();
            if (!eat(')')) {
                fail("expected ')'");
            }
            return n;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
                ++pos_;
            }
            return name(std::string(s_.substr(start, pos_ - start)), start);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Node number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) {
                ++p;
            }
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                pos_ = p;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                    ++pos_;
                }
            }
        }
        double value = 0.0;
        try {
            value = parse_double(s_.substr(start, pos_ - start));
        } catch (const std::invalid_argument&) {
            pos_ = start;
            fail("bad number");
        }
        return [value](const Vars&) { return value; };
    }

    Node name(const std::string& id, std::size_t start) {
        if (id == "t") {
            return [](const Vars& w) { return w.t; };
        }
        if (id == "x") {
            return [](const Vars& w) { return w.x; };
        }
        if (id == "u") {
            return [](const Vars& w) { return w.u; };
        }
        if (id == "v") {
            return [](const Vars& w) { return w.v; };
        }
        if (id == "pi") {
            return [](const Vars&) { return M_PI; };
        }
        static const std::map<std::string, double (*)(double)> unary_fns{
            {"sin", [](double a) { return std::sin(a); }},   {"cos", [](double a) { return std::cos(a); }},
            {"tan", [](double a) { return std::tan(a); }},   {"exp", [](double a) { return std::exp(a); }},
            {"log", [](double a) { return std::log(a); }},   {"sqrt", [](double a) { return std::sqrt(a); }},
            {"abs", [](double a) { return std::abs(a); }},   {"tanh", [](double a) { return std::tanh(a); }},
            {"atan", [](double a) { return std::atan(a); }},
        };
        if (id == "min" || id == "max") {
            if (!eat('(')) {
                fail("expected '(' after " + id);
            }
            Node a = expr();
            if (!eat(',')) {
                fail("expected ',' in " + id);
            }
            Node b = expr();
            if (!eat(')')) {
                fail("expected ')'");
            }
            if (id == "min") {
                return [a, b](const Vars& w) { return std::min(a(w), b(w)); };
            }
            return [a, b](const Vars& w) { return std::max(a(w), b(w)); };
        }
        const auto it = unary_fns.find(id);
        if (it == unary_fns.end()) {
            pos_ = start;
            fail("unknown name '" + id + "'");
        }
        if (!eat('(')) {
            fail("expected '(' after " + id);
        }
        Node arg = expr();
        if (!eat(')')) {
            fail("expected ')'");
        }
        return [fn = it->second, arg](const Vars& w) { return fn(arg(w)); };
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace

std::function<double(double, double, double, double)> compile_expression(std::string_view text) {
    Node root = Parser(text).parse();
    return [root](double t, double x, double u, double v) { return root(Vars{t, x, u, v}); };
}

} // namespace bessel::cli
