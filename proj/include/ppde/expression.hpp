#pragma once

#include <memory>
#include <string>

#include "ppde/functional.hpp"

namespace ppde {

/// Parsed scalar expression over (t, path). The grammar covers numeric
/// constants, `t`, the horizon constant `T`, coordinates `x1..x9` (alias `x`,
/// optionally written `x1(t)`), left-endpoint prefix integrals `ix1..ix9`
/// (alias `ix`, the running integral of the coordinate up to t), the
/// operators + - * / ^, unary minus, parentheses, and the calls exp(a),
/// min(a,b), max(a,b). Every expression is non-anticipative by construction.
class Expression {
public:
    double eval(double t, const PathView& x) const;
    bool depends_on_path() const { return depends_on_path_; }
    int max_coordinate() const { return max_coordinate_; }  // 0 when path-free
    const std::string& text() const { return text_; }

    /// Functional handle evaluating the expression; label is the source text.
    FunctionalHandle to_functional() const;
    /// Terminal payoff: the expression evaluated at the horizon.
    TerminalFunctional to_terminal() const;

    struct Node;

private:
    friend Expression parse_expression(const std::string&, double);
    std::shared_ptr<const Node> root_;
    double horizon_ = 0.0;
    bool depends_on_path_ = false;
    int max_coordinate_ = 0;
    std::string text_;
};

/// Parse `text` with the horizon bound to `T`. Throws std::invalid_argument
/// with the offending position on malformed input.
Expression parse_expression(const std::string& text, double horizon);

}  // namespace ppde
