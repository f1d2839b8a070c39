#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>

namespace diskbif {

// Expression tree for the exponent g(s) of a nonlinearity f = exp(g).
// Only the operations the source grammar admits appear as node kinds;
// parameters are resolved to constants at parse time, so a built tree is
// closed over s alone.
//
// Grammar (byte offsets reported on error):
//   expr   = term   { ("+" | "-") term }
//   term   = factor { ("*" | "/") factor }
//   factor = base [ "^" base ]
//   base   = "s" | number | ident | func "(" expr ")" | "(" expr ")"
//   func   = "exp" | "log"
enum class ExprKind { constant, var_s, add, sub, mul, div, pow, exp_fn, log_fn };

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    ExprKind kind;
    double value = 0.0;  // constant only
    Expr a, b;           // operands; unary kinds use a
};

// Smart constructors; fold constants and drop arithmetic identities so that
// symbolic derivatives stay compact.
Expr mk_const(double v);
Expr mk_var();
Expr mk_add(Expr a, Expr b);
Expr mk_sub(Expr a, Expr b);
Expr mk_mul(Expr a, Expr b);
Expr mk_div(Expr a, Expr b);
// Non-constant exponents are rewritten as exp(b * log(a)).
Expr mk_pow(Expr a, Expr b);
Expr mk_exp(Expr a);
Expr mk_log(Expr a);

// Parse the grammar above. Named identifiers are looked up in params;
// an unknown name raises config_error carrying the byte offset.  When
// used_params is non-null it collects the parameter names the source
// actually referenced, so callers can reject stray parameters.
Expr parse_expr(const std::string& source, const std::map<std::string, double>& params,
                std::set<std::string>* used_params = nullptr);

// Plain double evaluation at s.  May overflow to inf or produce NaN for
// out-of-domain operands (log of a nonpositive value, fractional power of
// a negative value); callers in the quadrature paths guard the range.
double eval_value(const Expr& e, double s);

// d/ds as a new tree.
Expr differentiate(const Expr& e);

// Grammar-round-trippable rendering (for reports and error messages).
std::string to_string(const Expr& e);

// True if the tree references s at all; constants-only trees are rejected
// as nonlinearity exponents upstream.
bool depends_on_s(const Expr& e);

}  // namespace diskbif
