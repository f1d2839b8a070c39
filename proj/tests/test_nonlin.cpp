#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "diskbif/error.hpp"
#include "diskbif/nonlin.hpp"

using namespace diskbif;

// Closed-form references for H = g g''/g'^2, written directly in double
// arithmetic.  The implementation evaluates H through symbolic derivative
// trees and log-space jets; these formulas share none of that path.
namespace {

double H_f1(double B, double s) {
    double Bp = B / (B - 1.0);
    double c = std::log(4.0 / (B * Bp));
    double t = 2.0 * Bp - 1.0;
    double smB = std::pow(s, -Bp);
    double num = -Bp * (Bp - 1.0) * t * std::log(s) + Bp * (Bp - 1.0) * c + t * t -
                 t * t * smB * std::log(s) + (t * c - t * t / B) * smB;
    double den = std::pow(s, Bp) * (Bp - t * smB) * (Bp - t * smB);
    return 1.0 / B + num / den;
}

double H_exp_of_pow(double i, double s) {  // g = exp(s^(1+i))
    return 1.0 + i / ((1.0 + i) * std::pow(s, 1.0 + i));
}

double H_pow_sum(double p, double r, double s) {
    double srp = std::pow(s, r - p);
    double num = (p - 2.0 * r) * (p - 1.0) + r * (r - 1.0) +
                 r * (r - 1.0 - (p - 1.0) * r / p) * srp;
    double den = std::pow(s, p - r) * (p + r * srp) * (p + r * srp);
    return (p - 1.0) / p + num / den;
}

double H_pow_log(double p, double i, double s) {
    double L = std::log(s);
    double num = i + (i * (i - 1.0) - (p - 1.0) / p * i * i) / L;
    double den = L * (p + i / L) * (p + i / L);
    return (p - 1.0) / p + num / den;
}

double H_f2(double s) {
    double es = std::exp(s);
    double d = 1.0 - 2.0 / es;
    return 1.0 + ((-2.0 * s + 4.0 + std::log(4.0)) - 4.0 / es) / (es * d * d);
}

double H_double_exp(double s) { return 1.0 + std::exp(-s); }

double H_triple_exp(double s) {
    return 1.0 + std::exp(-std::exp(s)) * (1.0 + std::exp(-s));
}

NonlinearitySpec cat(const std::string& id, std::map<std::string, double> p = {}) {
    return parse_nonlinearity(id, p);
}

}  // namespace

TEST_CASE("H matches the closed forms of the catalog families") {
    const double tol = 1e-9;
    for (double s : {3.0, 5.0, 10.0}) {
        for (double B : {1.5, 2.0, 3.0})
            CHECK(eval_H(cat("f1", {{"B", B}}), s).h ==
                  doctest::Approx(H_f1(B, s)).epsilon(tol));
        CHECK(eval_H(cat("f2"), s).h == doctest::Approx(H_f2(s)).epsilon(tol));
        CHECK(eval_H(cat("pow_sum", {{"p", 3.0}, {"r", 1.0}}), s).h ==
              doctest::Approx(H_pow_sum(3.0, 1.0, s)).epsilon(tol));
        CHECK(eval_H(cat("pow_sum", {{"p", 2.0}, {"r", 0.5}}), s).h ==
              doctest::Approx(H_pow_sum(2.0, 0.5, s)).epsilon(tol));
        CHECK(eval_H(cat("pow_log", {{"p", 2.0}, {"i", 1.0}}), s).h ==
              doctest::Approx(H_pow_log(2.0, 1.0, s)).epsilon(tol));
        CHECK(eval_H(parse_nonlinearity("exp(s^1.5)"), s).h ==
              doctest::Approx(H_exp_of_pow(0.5, s)).epsilon(tol));
    }
    for (double s : {1.0, 2.0, 3.0})
        CHECK(eval_H(cat("double_exp"), s).h ==
              doctest::Approx(H_double_exp(s)).epsilon(tol));
    for (double s : {0.5, 1.0, 1.5})
        CHECK(eval_H(cat("triple_exp"), s).h ==
              doctest::Approx(H_triple_exp(s)).epsilon(tol));
    // exp_pow is the exactly self-similar case: H is constant.
    CHECK(eval_H(cat("exp_pow", {{"p", 3.0}}), 7.7).h ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("q estimates converge to the known limits with honest intervals") {
    struct Row {
        const char* id;
        std::map<std::string, double> params;
        double q;
    };
    std::vector<Row> rows = {
        {"f1", {{"B", 2.0}}, 2.0},
        {"f1", {{"B", 1.5}}, 1.5},
        {"f2", {}, 1.0},
        {"exp_pow", {{"p", 3.0}}, 1.5},
        {"exp_pow", {{"p", 2.0}}, 2.0},
        {"pow_sum", {{"p", 3.0}, {"r", 1.0}}, 1.5},
        {"pow_log", {{"p", 2.0}, {"i", 1.0}}, 2.0},
        {"double_exp", {}, 1.0},
        {"triple_exp", {}, 1.0},
    };
    for (const auto& row : rows) {
        CAPTURE(row.id);
        QEstimate qe = estimate_q(parse_nonlinearity(row.id, row.params));
        CHECK(std::abs(qe.q - row.q) <= 1e-3);
        CHECK(std::abs(qe.q - row.q) <= qe.ci);  // interval covers the truth
        CHECK(qe.q >= 1.0 - qe.ci);
        CHECK(qe.samples.size() == 11);
    }
    QEstimate qe = estimate_q(parse_nonlinearity("exp(s^1.5)"));
    CHECK(std::abs(qe.q - 1.0) <= 1e-3);
    CHECK(std::abs(qe.q - 1.0) <= qe.ci);
}

TEST_CASE("exponent jets reproduce the worked examples") {
    Jet3 a = taylor_jet(cat("exp_pow", {{"p", 2.0}}), 3.0);
    CHECK(a.v == doctest::Approx(9.0).epsilon(1e-13));
    CHECK(a.d1 == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(a.d2 == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(a.d3 == doctest::Approx(0.0).epsilon(1e-13));

    Jet3 b = taylor_jet(parse_nonlinearity("exp(s)"), 1.0);
    double e = std::exp(1.0);
    CHECK(b.v == doctest::Approx(e).epsilon(1e-13));
    CHECK(b.d1 == doctest::Approx(e).epsilon(1e-13));
    CHECK(b.d2 == doctest::Approx(e).epsilon(1e-13));
    CHECK(b.d3 == doctest::Approx(e).epsilon(1e-13));

    Jet3 c = taylor_jet(cat("double_exp"), 0.0);
    CHECK(c.v == doctest::Approx(e).epsilon(1e-13));
    CHECK(c.d1 == doctest::Approx(e).epsilon(1e-13));
    CHECK(c.d2 == doctest::Approx(2.0 * e).epsilon(1e-13));
    CHECK(c.d3 == doctest::Approx(5.0 * e).epsilon(1e-13));
}

TEST_CASE("catalog parameter validation") {
    CHECK_THROWS_AS(cat("f1"), config_error);                          // B missing
    CHECK_THROWS_AS(cat("f1", {{"B", 1.0}}), config_error);            // B > 1 required
    CHECK_THROWS_AS(cat("exp_pow", {{"p", 1.0}}), config_error);       // p > 1 required
    CHECK_THROWS_AS(cat("exp_pow", {{"p", 2.0}, {"x", 1.0}}), config_error);
    CHECK_THROWS_AS(cat("pow_sum", {{"p", 2.0}, {"r", 2.0}}), config_error);  // r < p
    CHECK_THROWS_AS(cat("pow_sum", {{"p", 2.0}, {"r", -1.0}}), config_error);
    CHECK_THROWS_AS(cat("pow_log", {{"p", 2.0}}), config_error);       // i missing
    CHECK_THROWS_AS(cat("f2", {{"B", 2.0}}), config_error);            // f2 takes none

    // Free-form sources: stray parameters and s-free expressions reject.
    CHECK_THROWS_AS(parse_nonlinearity("s^2", {{"p", 2.0}}), config_error);
    CHECK_THROWS_AS(parse_nonlinearity("3.5"), config_error);
    CHECK_THROWS_AS(parse_nonlinearity("exp(s^"), config_error);
    try {
        parse_nonlinearity("exp(s^");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("byte 6") != std::string::npos);
    }
}

TEST_CASE("admissibility floors sit at the analytic thresholds") {
    // f1, B = 2: g' = 2s - 3/s turns positive at sqrt(1.5).
    CHECK(cat("f1", {{"B", 2.0}}).s_floor() ==
          doctest::Approx(std::sqrt(1.5)).epsilon(1e-6));
    // f2: g' = e^s - 2 turns positive at log 2.
    CHECK(cat("f2").s_floor() == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    // pow_log p=2, i=1: g = s^2 log s needs s > 1.
    CHECK(cat("pow_log", {{"p", 2.0}, {"i", 1.0}}).s_floor() ==
          doctest::Approx(1.0).epsilon(1e-6));
    // exp_pow: admissible down to s = 0.
    CHECK(cat("exp_pow", {{"p", 3.0}}).s_floor() <= 1e-5);
    CHECK(cat("double_exp").s_floor() <= 1e-5);
}

TEST_CASE("pure exponentials are flagged critical and rejected by H") {
    NonlinearitySpec lin = parse_nonlinearity("2*s");
    CHECK(lin.critical_exponential());
    CHECK_FALSE(lin.singular_admissible());
    CHECK_THROWS_AS(eval_H(lin, 1.0), config_error);
    CHECK_THROWS_AS(estimate_q(lin), config_error);
    CHECK_THROWS_AS(criticality_report(lin), config_error);

    CHECK_FALSE(cat("f2").critical_exponential());
    CHECK(cat("f2").singular_admissible());
    CHECK(cat("f1", {{"B", 2.0}}).singular_admissible());
    CHECK(cat("exp_pow", {{"p", 3.0}}).singular_admissible());
    CHECK(cat("pow_log", {{"p", 2.0}, {"i", 1.0}}).singular_admissible());
}

TEST_CASE("tail integral matches independent quadrature-free references") {
    // g = s^2: integral_s^inf e^{-t^2} dt = (sqrt(pi)/2) erfc(s).
    NonlinearitySpec sq = cat("exp_pow", {{"p", 2.0}});
    double ref2 = 0.5 * std::sqrt(M_PI) * std::erfc(2.0);
    CHECK(tail_integral(sq, 2.0).value() == doctest::Approx(ref2).epsilon(1e-9));
    double ref4 = 0.5 * std::sqrt(M_PI) * std::erfc(4.0);
    CHECK(tail_integral(sq, 4.0).value() == doctest::Approx(ref4).epsilon(1e-9));

    // g = s: integral_s^inf e^{-t} dt = e^{-s}, exactly, at any scale.
    NonlinearitySpec lin = parse_nonlinearity("s");
    CHECK(tail_integral(lin, 3.0).ln == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(tail_integral(lin, 2.0e4).ln == doctest::Approx(-2.0e4).epsilon(1e-12));

    // Primitive of the same: integral_0^s e^t dt = e^s - 1.
    CHECK(primitive_integral(lin, 3.0).value() ==
          doctest::Approx(std::exp(3.0) - 1.0).epsilon(1e-6));
    CHECK(primitive_integral(lin, 2.0e4).ln == doctest::Approx(2.0e4).epsilon(1e-12));
}

TEST_CASE("f'(s) F(s) sits in the first-order bracket on the far tail") {
    for (auto spec : {cat("exp_pow", {{"p", 3.0}}), cat("f1", {{"B", 2.0}}), cat("f2")}) {
        for (double target : {30.0, 300.0, 3000.0}) {
            double s = spec.s_of_log_g(std::log(target));
            Jet3 jg = taylor_jet(spec, s);
            double h = eval_H(spec, s).h;
            // f' F = g' e^g F; log-space to dodge overflow.
            double log_fpF = std::log(jg.d1) + jg.v + tail_integral(spec, s).ln;
            double fpF = std::exp(log_fpF);
            CHECK(fpF <= 1.0 + 1e-9);
            CHECK(fpF >= 1.0 - 2.0 * h / jg.v);
        }
    }
}

TEST_CASE("criticality report classifies the catalog") {
    auto rep = [](const std::string& id, std::map<std::string, double> p = {}) {
        return criticality_report(parse_nonlinearity(id, p));
    };

    CriticalityReport ep = rep("exp_pow", {{"p", 3.0}});
    CHECK(ep.supercritical);
    CHECK(std::abs(ep.fbar_limit - 1.0 / 3.0) <= 1e-2);
    CHECK(std::abs(ep.B1_limit - 2.0 / 3.0) <= 2e-2);
    CHECK(std::abs(ep.B2_limit - 2.0 / 3.0) <= 2e-2);
    CHECK(ep.f3_equiv);
    CHECK(ep.g1_ok);
    CHECK(ep.g1_margin == doctest::Approx(2.0).epsilon(1e-3));  // s g'/g = 3
    CHECK(ep.g2_ok);

    CriticalityReport f1r = rep("f1", {{"B", 2.0}});
    CHECK_FALSE(f1r.supercritical);  // q = 2 is the boundary case
    CHECK(std::abs(f1r.fbar_limit - 0.5) <= 1e-2);
    CHECK(f1r.f3_equiv);
    CHECK(f1r.g1_ok);

    CriticalityReport f2r = rep("f2");
    CHECK(f2r.supercritical);
    CHECK(std::abs(f2r.fbar_limit) <= 2e-2);
    CHECK(f2r.f3_equiv);
    CHECK(f2r.g1_ok);
    CHECK(f2r.g2_ok);

    CriticalityReport ps = rep("pow_sum", {{"p", 3.0}, {"r", 1.0}});
    CHECK(ps.supercritical);
    CHECK(std::abs(ps.fbar_limit - 1.0 / 3.0) <= 1e-2);
    CHECK(ps.f3_equiv);

    CriticalityReport pl = rep("pow_log", {{"p", 2.0}, {"i", 1.0}});
    CHECK_FALSE(pl.supercritical);  // q = 2 again
    CHECK_FALSE(pl.f3_equiv);

    CriticalityReport de = rep("double_exp");
    CHECK(de.supercritical);
    CHECK_FALSE(de.f3_equiv);

    CriticalityReport te = rep("triple_exp");
    CHECK(te.supercritical);
    CHECK_FALSE(te.f3_equiv);
    CHECK(std::abs(te.q - 1.0) <= 1e-3);

    CriticalityReport ii = criticality_report(parse_nonlinearity("exp(s^1.5)"));
    CHECK(ii.supercritical);
    CHECK_FALSE(ii.f3_equiv);
}

TEST_CASE("log g inversion is consistent with forward evaluation") {
    for (auto spec : {cat("f1", {{"B", 2.0}}), cat("triple_exp"), cat("f2"),
                      cat("pow_log", {{"p", 2.0}, {"i", 1.0}})}) {
        for (double target : {3.4, 8.9, 25.0}) {
            double s = spec.s_of_log_g(target);
            CHECK(spec.exponent_log_jet(s).ell == doctest::Approx(target).epsilon(1e-9));
        }
    }
}

TEST_CASE("exponent scaling is superlinear above the floor") {
    // For admissible g with s g'/g > 1, g(t s) < t g(s) for t < 1.
    NonlinearitySpec spec = cat("exp_pow", {{"p", 3.0}});
    double s = spec.s_of_log_g(6.0);
    double gs = std::exp(spec.exponent_log_jet(s).ell);
    for (double t : {0.25, 0.5, 0.9}) {
        double gts = std::exp(spec.exponent_log_jet(t * s).ell);
        CHECK(gts <= t * gs);
    }
}
