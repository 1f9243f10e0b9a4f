#include "ppde/expression.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace ppde {

struct Expression::Node {
    enum class Kind { constant, time, coord, prefix_integral, neg, add, sub, mul, div, pow,
                      exp_fn, min_fn, max_fn };
    Kind kind;
    double value = 0.0;  // constants
    int index = 0;       // coordinate (0-based)
    std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_node(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::constant;
    n->value = v;
    return n;
}

double eval_node(const Node& n, double t, const PathView& x) {
    switch (n.kind) {
        case Node::Kind::constant: return n.value;
        case Node::Kind::time: return t;
        case Node::Kind::coord: {
            double out[16];
            x.value_at(t, out);
            return out[n.index];
        }
        case Node::Kind::prefix_integral: {
            const TimeGrid& g = *x.grid;
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < g.node_count(); ++k) {
                const double t0 = g.node(k);
                if (t0 >= t) break;
                acc += x.coord(k, n.index) * (std::min(g.node(k + 1), t) - t0);
            }
            return acc;
        }
        case Node::Kind::neg: return -eval_node(*n.a, t, x);
        case Node::Kind::add: return eval_node(*n.a, t, x) + eval_node(*n.b, t, x);
        case Node::Kind::sub: return eval_node(*n.a, t, x) - eval_node(*n.b, t, x);
        case Node::Kind::mul: return eval_node(*n.a, t, x) * eval_node(*n.b, t, x);
        case Node::Kind::div: return eval_node(*n.a, t, x) / eval_node(*n.b, t, x);
        case Node::Kind::pow: return std::pow(eval_node(*n.a, t, x), eval_node(*n.b, t, x));
        case Node::Kind::exp_fn: return std::exp(eval_node(*n.a, t, x));
        case Node::Kind::min_fn:
            return std::min(eval_node(*n.a, t, x), eval_node(*n.b, t, x));
        case Node::Kind::max_fn:
            return std::max(eval_node(*n.a, t, x), eval_node(*n.b, t, x));
    }
    return 0.0;
}

void scan_node(const Node& n, bool& path_dep, int& max_coord) {
    if (n.kind == Node::Kind::coord || n.kind == Node::Kind::prefix_integral) {
        path_dep = true;
        max_coord = std::max(max_coord, n.index + 1);
    }
    if (n.a) scan_node(*n.a, path_dep, max_coord);
    if (n.b) scan_node(*n.b, path_dep, max_coord);
}

class Parser {
public:
    Parser(const std::string& text, double horizon) : text_(text), horizon_(horizon) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression error at position " + std::to_string(pos_) +
                                    " in '" + text_ + "': " + what);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (consume('+'))
                lhs = make_node(Node::Kind::add, lhs, term());
            else if (consume('-'))
                lhs = make_node(Node::Kind::sub, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            if (consume('*'))
                lhs = make_node(Node::Kind::mul, lhs, factor());
            else if (consume('/'))
                lhs = make_node(Node::Kind::div, lhs, factor());
            else
                return lhs;
        }
    }

    NodePtr factor() {
        // exponentiation binds tighter than unary minus: -2^2 = -(2^2)
        if (consume('-')) return make_node(Node::Kind::neg, factor());
        NodePtr base = primary();
        if (consume('^')) return make_node(Node::Kind::pow, base, factor());  // right assoc
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (consume('(')) {
            NodePtr e = expr();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        fail("expected a number, name, or '('");
    }

    NodePtr number() {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text_.substr(pos_), &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += used;
        return make_const(v);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);

        if (name == "t") return make_node(Node::Kind::time);
        if (name == "T") return make_const(horizon_);
        if (name == "exp") {
            if (!consume('(')) fail("exp needs '('");
            NodePtr a = expr();
            if (!consume(')')) fail("expected ')'");
            return make_node(Node::Kind::exp_fn, a);
        }
        if (name == "min" || name == "max") {
            if (!consume('(')) fail(name + " needs '('");
            NodePtr a = expr();
            if (!consume(',')) fail("expected ','");
            NodePtr b = expr();
            if (!consume(')')) fail("expected ')'");
            return make_node(name == "min" ? Node::Kind::min_fn : Node::Kind::max_fn, a, b);
        }

        auto coord_index = [&](const std::string& digits) -> int {
            if (digits.empty()) return 0;  // bare alias x / ix
            if (digits.size() != 1 || digits[0] < '1' || digits[0] > '9')
                fail("coordinate index must be a single digit 1-9");
            return digits[0] - '1';
        };
        auto optional_time_arg = [&]() {
            const std::size_t save = pos_;
            if (consume('(')) {
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == 't') {
                    ++pos_;
                    if (consume(')')) return;
                }
                pos_ = save;  // not the (t) suffix: leave it for the caller
            }
        };
        if (name.rfind("ix", 0) == 0) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::prefix_integral;
            n->index = coord_index(name.substr(2));
            optional_time_arg();
            return n;
        }
        if (name.rfind('x', 0) == 0) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::coord;
            n->index = coord_index(name.substr(1));
            optional_time_arg();
            return n;
        }
        fail("unknown name '" + name + "'");
    }

    const std::string& text_;
    double horizon_;
    std::size_t pos_ = 0;
};

}  // namespace

double Expression::eval(double t, const PathView& x) const { return eval_node(*root_, t, x); }

FunctionalHandle Expression::to_functional() const {
    auto root = root_;
    return {[root](double t, const PathView& x) { return eval_node(*root, t, x); }, text_};
}

TerminalFunctional Expression::to_terminal() const {
    auto root = root_;
    const double horizon = horizon_;
    return {[root, horizon](const PathView& x) { return eval_node(*root, horizon, x); }, text_,
            !depends_on_path_};
}

Expression parse_expression(const std::string& text, double horizon) {
    Expression e;
    Parser parser(text, horizon);
    e.root_ = parser.parse();
    e.horizon_ = horizon;
    e.text_ = text;
    scan_node(*e.root_, e.depends_on_path_, e.max_coordinate_);
    return e;
}

}  // namespace ppde
