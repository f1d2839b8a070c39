#include "diskbif/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "diskbif/error.hpp"

namespace diskbif {

namespace {

Expr node(ExprKind k, double v, Expr a, Expr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->value = v;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

bool is_const(const Expr& e, double v) {
    return e->kind == ExprKind::constant && e->value == v;
}

}  // namespace

Expr mk_const(double v) { return node(ExprKind::constant, v, nullptr, nullptr); }
Expr mk_var() { return node(ExprKind::var_s, 0.0, nullptr, nullptr); }

Expr mk_add(Expr a, Expr b) {
    if (a->kind == ExprKind::constant && b->kind == ExprKind::constant)
        return mk_const(a->value + b->value);
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return node(ExprKind::add, 0.0, std::move(a), std::move(b));
}

Expr mk_sub(Expr a, Expr b) {
    if (a->kind == ExprKind::constant && b->kind == ExprKind::constant)
        return mk_const(a->value - b->value);
    if (is_const(b, 0.0)) return a;
    return node(ExprKind::sub, 0.0, std::move(a), std::move(b));
}

Expr mk_mul(Expr a, Expr b) {
    if (a->kind == ExprKind::constant && b->kind == ExprKind::constant)
        return mk_const(a->value * b->value);
    if (is_const(a, 0.0) || is_const(b, 0.0)) return mk_const(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return node(ExprKind::mul, 0.0, std::move(a), std::move(b));
}

Expr mk_div(Expr a, Expr b) {
    if (a->kind == ExprKind::constant && b->kind == ExprKind::constant && b->value != 0.0)
        return mk_const(a->value / b->value);
    if (is_const(a, 0.0)) return mk_const(0.0);
    if (is_const(b, 1.0)) return a;
    return node(ExprKind::div, 0.0, std::move(a), std::move(b));
}

Expr mk_pow(Expr a, Expr b) {
    if (b->kind != ExprKind::constant) return mk_exp(mk_mul(std::move(b), mk_log(std::move(a))));
    if (a->kind == ExprKind::constant) return mk_const(std::pow(a->value, b->value));
    if (b->value == 1.0) return a;
    if (b->value == 0.0) return mk_const(1.0);
    return node(ExprKind::pow, 0.0, std::move(a), std::move(b));
}

Expr mk_exp(Expr a) {
    if (a->kind == ExprKind::constant) return mk_const(std::exp(a->value));
    return node(ExprKind::exp_fn, 0.0, std::move(a), nullptr);
}

Expr mk_log(Expr a) {
    if (a->kind == ExprKind::constant && a->value > 0.0) return mk_const(std::log(a->value));
    return node(ExprKind::log_fn, 0.0, std::move(a), nullptr);
}

namespace {

class Parser {
  public:
    Parser(const std::string& src, const std::map<std::string, double>& params,
           std::set<std::string>* used)
        : src_(src), params_(params), used_(used) {}

    Expr run() {
        Expr e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("unexpected trailing input", pos_);
        return e;
    }

  private:
    const std::string& src_;
    const std::map<std::string, double>& params_;
    std::set<std::string>* used_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what, size_t at) {
        throw config_error("syntax error at byte " + std::to_string(at) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace((unsigned char)src_[pos_])) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    Expr expr() {
        Expr e = term();
        for (;;) {
            if (eat('+'))
                e = mk_add(e, term());
            else if (eat('-'))
                e = mk_sub(e, term());
            else
                return e;
        }
    }

    Expr term() {
        Expr e = factor();
        for (;;) {
            if (eat('*'))
                e = mk_mul(e, factor());
            else if (eat('/'))
                e = mk_div(e, factor());
            else
                return e;
        }
    }

    Expr factor() {
        Expr b = base();
        if (eat('^')) return mk_pow(b, base());
        return b;
    }

    Expr base() {
        skip_ws();
        if (pos_ >= src_.size()) fail("expected operand, found end of input", pos_);
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (!eat(')')) fail("expected ')'", pos_);
            return e;
        }
        if (std::isdigit((unsigned char)c) || c == '.' ||
            (c == '-' && pos_ + 1 < src_.size() &&
             (std::isdigit((unsigned char)src_[pos_ + 1]) || src_[pos_ + 1] == '.')))
            return number();
        if (std::isalpha((unsigned char)c) || c == '_') return ident();
        fail(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr number() {
        const char* first = src_.data() + pos_;
        const char* last = src_.data() + src_.size();
        double v = 0.0;
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc())
            fail("malformed number", pos_);
        pos_ = (size_t)(p - src_.data());
        return mk_const(v);
    }

    Expr ident() {
        size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
            ++pos_;
        std::string name = src_.substr(start, pos_ - start);
        if (name == "s") return mk_var();
        if (name == "exp" || name == "log") {
            if (!eat('(')) fail("expected '(' after '" + name + "'", pos_);
            Expr arg = expr();
            if (!eat(')')) fail("expected ')'", pos_);
            return name == "exp" ? mk_exp(arg) : mk_log(arg);
        }
        auto it = params_.find(name);
        if (it == params_.end())
            throw config_error("unknown identifier '" + name + "' at byte " +
                               std::to_string(start));
        if (used_) used_->insert(name);
        return mk_const(it->second);
    }
};

}  // namespace

Expr parse_expr(const std::string& source, const std::map<std::string, double>& params,
                std::set<std::string>* used_params) {
    return Parser(source, params, used_params).run();
}

double eval_value(const Expr& e, double s) {
    switch (e->kind) {
        case ExprKind::constant:
            return e->value;
        case ExprKind::var_s:
            return s;
        case ExprKind::add:
            return eval_value(e->a, s) + eval_value(e->b, s);
        case ExprKind::sub:
            return eval_value(e->a, s) - eval_value(e->b, s);
        case ExprKind::mul:
            return eval_value(e->a, s) * eval_value(e->b, s);
        case ExprKind::div:
            return eval_value(e->a, s) / eval_value(e->b, s);
        case ExprKind::pow:
            return std::pow(eval_value(e->a, s), e->b->value);
        case ExprKind::exp_fn:
            return std::exp(eval_value(e->a, s));
        case ExprKind::log_fn:
            return std::log(eval_value(e->a, s));
    }
    return 0.0;
}

Expr differentiate(const Expr& e) {
    switch (e->kind) {
        case ExprKind::constant:
            return mk_const(0.0);
        case ExprKind::var_s:
            return mk_const(1.0);
        case ExprKind::add:
            return mk_add(differentiate(e->a), differentiate(e->b));
        case ExprKind::sub:
            return mk_sub(differentiate(e->a), differentiate(e->b));
        case ExprKind::mul:
            return mk_add(mk_mul(differentiate(e->a), e->b), mk_mul(e->a, differentiate(e->b)));
        case ExprKind::div:
            return mk_div(mk_sub(mk_mul(differentiate(e->a), e->b),
                                 mk_mul(e->a, differentiate(e->b))),
                          mk_mul(e->b, e->b));
        case ExprKind::pow: {
            double p = e->b->value;
            return mk_mul(mk_mul(mk_const(p), mk_pow(e->a, mk_const(p - 1.0))),
                          differentiate(e->a));
        }
        case ExprKind::exp_fn:
            return mk_mul(e, differentiate(e->a));
        case ExprKind::log_fn:
            return mk_div(differentiate(e->a), e->a);
    }
    throw numeric_error("corrupt expression node");
}

namespace {

int precedence(ExprKind k) {
    switch (k) {
        case ExprKind::add:
        case ExprKind::sub:
            return 1;
        case ExprKind::mul:
        case ExprKind::div:
            return 2;
        case ExprKind::pow:
            return 3;
        default:
            return 4;
    }
}

std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

void render(const Expr& e, int parent_prec, std::string& out) {
    int prec = precedence(e->kind);
    bool parens = prec < parent_prec;
    if (parens) out += '(';
    switch (e->kind) {
        case ExprKind::constant:
            if (e->value < 0.0) {
                out += '(';
                out += fmt_double(e->value);
                out += ')';
            } else {
                out += fmt_double(e->value);
            }
            break;
        case ExprKind::var_s:
            out += 's';
            break;
        case ExprKind::add:
            render(e->a, prec, out);
            out += " + ";
            render(e->b, prec, out);
            break;
        case ExprKind::sub:
            render(e->a, prec, out);
            out += " - ";
            render(e->b, prec + 1, out);
            break;
        case ExprKind::mul:
            render(e->a, prec, out);
            out += "*";
            render(e->b, prec, out);
            break;
        case ExprKind::div:
            render(e->a, prec, out);
            out += "/";
            render(e->b, prec + 1, out);
            break;
        case ExprKind::pow:
            render(e->a, prec + 1, out);
            out += "^";
            render(e->b, prec + 1, out);
            break;
        case ExprKind::exp_fn:
            out += "exp(";
            render(e->a, 0, out);
            out += ')';
            break;
        case ExprKind::log_fn:
            out += "log(";
            render(e->a, 0, out);
            out += ')';
            break;
    }
    if (parens) out += ')';
}

}  // namespace

std::string to_string(const Expr& e) {
    std::string out;
    render(e, 0, out);
    return out;
}

bool depends_on_s(const Expr& e) {
    if (e->kind == ExprKind::var_s) return true;
    if (e->a && depends_on_s(e->a)) return true;
    if (e->b && depends_on_s(e->b)) return true;
    return false;
}

}  // namespace diskbif
