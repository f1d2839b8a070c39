#include "doctest.h"

#include <cmath>
#include <map>
#include <set>
#include <string>

#include "diskbif/error.hpp"
#include "diskbif/expr.hpp"

using namespace diskbif;

namespace {

double ev(const std::string& src, double s, const std::map<std::string, double>& params = {}) {
    return eval_value(parse_expr(src, params), s);
}

}  // namespace

TEST_CASE("evaluation follows precedence and associativity") {
    CHECK(ev("2*s+3", 5.0) == doctest::Approx(13.0));
    CHECK(ev("2*(s+3)", 5.0) == doctest::Approx(16.0));
    CHECK(ev("s-2-1", 10.0) == doctest::Approx(7.0));  // left associative
    CHECK(ev("s/2/2", 12.0) == doctest::Approx(3.0));
    CHECK(ev("2*s^3", 2.0) == doctest::Approx(16.0));  // ^ binds tighter than *
    CHECK(ev("s^2 - 3*log(s)", 2.0) == doctest::Approx(4.0 - 3.0 * std::log(2.0)));
    CHECK(ev("exp(s)/(s+1)", 1.5) == doctest::Approx(std::exp(1.5) / 2.5));
    // Negative literals parse; there is no unary minus on expressions.
    CHECK(ev("-2.5*s", 2.0) == doctest::Approx(-5.0));
    CHECK_THROWS_AS(parse_expr("-s", {}), config_error);
}

TEST_CASE("parameters resolve to constants at parse time") {
    std::map<std::string, double> p{{"p", 3.0}, {"r", 1.0}};
    CHECK(ev("s^p + s^r", 2.0, p) == doctest::Approx(10.0));

    std::set<std::string> used;
    parse_expr("s^p", {{"p", 2.0}, {"q", 7.0}}, &used);
    CHECK(used == std::set<std::string>{"p"});
}

TEST_CASE("errors carry byte offsets") {
    CHECK_THROWS_AS(parse_expr("exp(s^", {}), config_error);
    try {
        parse_expr("exp(s^", {});
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("byte 6") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_expr("s + w", {}), config_error);
    try {
        parse_expr("s + w", {});
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("w") != std::string::npos);
    }

    // One exponent per factor; a second caret is trailing garbage.
    CHECK_THROWS_AS(parse_expr("s^2^3", {}), config_error);
    CHECK_THROWS_AS(parse_expr("", {}), config_error);
    CHECK_THROWS_AS(parse_expr("(s+1", {}), config_error);
}

TEST_CASE("derivatives of composite expressions") {
    Expr g = parse_expr("s^3", {});
    Expr d1 = differentiate(g);
    Expr d2 = differentiate(d1);
    Expr d3 = differentiate(d2);
    CHECK(eval_value(d1, 2.0) == doctest::Approx(12.0));
    CHECK(eval_value(d2, 2.0) == doctest::Approx(12.0));
    CHECK(eval_value(d3, 2.0) == doctest::Approx(6.0));

    Expr h = parse_expr("exp(2*s)", {});
    CHECK(eval_value(differentiate(h), 1.0) == doctest::Approx(2.0 * std::exp(2.0)));

    Expr l = parse_expr("log(s^2+1)", {});
    // d/ds log(s^2+1) = 2s/(s^2+1)
    CHECK(eval_value(differentiate(l), 3.0) == doctest::Approx(0.6));

    Expr q = parse_expr("s^2*log(s)", {});
    // d/ds = 2s log s + s
    CHECK(eval_value(differentiate(q), 4.0) ==
          doctest::Approx(8.0 * std::log(4.0) + 4.0));
}

TEST_CASE("non-constant exponents lower to exp(b*log(a))") {
    Expr e = parse_expr("s^s", {});
    CHECK(eval_value(e, 3.0) == doctest::Approx(27.0));
    CHECK(eval_value(differentiate(e), 3.0) ==
          doctest::Approx(27.0 * (std::log(3.0) + 1.0)));
}

TEST_CASE("rendering round-trips through the grammar") {
    for (const char* src : {"s^2 - 3*log(s)", "exp(exp(s))", "s^3 + s", "s^2*log(s)",
                            "exp(s) - 2*s + 1.3862943611198906"}) {
        Expr a = parse_expr(src, {});
        Expr b = parse_expr(to_string(a), {});
        for (double s : {0.7, 1.3, 2.9, 6.1}) {
            CHECK(eval_value(b, s) == doctest::Approx(eval_value(a, s)).epsilon(1e-14));
        }
    }
}

TEST_CASE("dependence on s is detected through folding") {
    CHECK(depends_on_s(parse_expr("s", {})));
    CHECK(depends_on_s(parse_expr("exp(s)+1", {})));
    CHECK_FALSE(depends_on_s(parse_expr("3.5", {})));
    CHECK_FALSE(depends_on_s(parse_expr("p*2", {{"p", 1.5}})));
    // 0*s folds to the constant zero.
    CHECK_FALSE(depends_on_s(parse_expr("0*s", {})));
}
