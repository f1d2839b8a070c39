#include "doctest.h"

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "diskbif/asym.hpp"
#include "diskbif/error.hpp"
#include "diskbif/nonlin.hpp"
#include "diskbif/quad.hpp"

using namespace diskbif;

namespace {

NonlinearitySpec cat(const std::string& id, std::map<std::string, double> p = {}) {
    return parse_nonlinearity(id, p);
}

double g_at(const NonlinearitySpec& spec, double s) { return taylor_jet(spec, s).v; }

}  // namespace

TEST_CASE("g inversion reproduces closed-form inverses") {
    CHECK(invert_g(cat("exp_pow", {{"p", 2.0}}), 100.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(invert_g(parse_nonlinearity("exp(s)"), 100.0) ==
          doctest::Approx(std::log(100.0)).epsilon(1e-12));
    CHECK(invert_g(cat("double_exp"), std::exp(10.0)) ==
          doctest::Approx(std::log(10.0)).epsilon(1e-11));

    NonlinearitySpec f2 = cat("f2");
    for (double rho : {5.0, 50.0, 500.0, 5000.0}) {
        double y = invert_g(f2, rho);
        CHECK(std::abs(g_at(f2, y) - rho) <= 1e-12 * std::max(1.0, rho));
    }
    CHECK_THROWS_AS(invert_g(f2, 1.0), config_error);
}

TEST_CASE("frame base lands on the admissibility boundary") {
    CHECK(frame_base(cat("f2")) == doctest::Approx(2.0).epsilon(3e-6));
    CHECK(frame_base(cat("f1", {{"B", 2.0}})) ==
          doctest::Approx(1.5 - 1.5 * std::log(1.5)).epsilon(3e-6));
    CHECK(frame_base(cat("exp_pow", {{"p", 3.0}})) == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("frame satisfies its defining identities") {
    NonlinearitySpec f2 = cat("f2");
    AsymptoticFrame fr = frame_at(f2, 200.0);

    CHECK(std::abs(g_at(f2, fr.y1) - 200.0) <= 1e-12 * 200.0);
    double gp = taylor_jet(f2, fr.y1).d1;
    double lhs = std::exp(gp * fr.y2);
    double rhs = 4.0 * fr.G / (200.0 * gp);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    CHECK(fr.G == doctest::Approx(eval_H(f2, fr.y1).h).epsilon(1e-14));
    CHECK(fr.a * fr.a * std::sqrt(fr.G / fr.rho) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(fr.y2 < 0.0);
}

TEST_CASE("frame derivatives match central differences") {
    NonlinearitySpec spec = cat("pow_sum", {{"p", 3.0}, {"r", 1.0}});
    const double rho = 300.0;
    const double rho0 = frame_base(spec);
    const double h = 0.01;
    AsymptoticFrame mid = frame_at(spec, rho, rho0);
    AsymptoticFrame lo = frame_at(spec, rho - h, rho0);
    AsymptoticFrame hi = frame_at(spec, rho + h, rho0);

    CHECK((hi.y1 - lo.y1) / (2.0 * h) == doctest::Approx(mid.dy1).epsilon(1e-7));
    CHECK((hi.dy1 - lo.dy1) / (2.0 * h) == doctest::Approx(mid.d2y1).epsilon(1e-6));
    CHECK((hi.d2y1 - lo.d2y1) / (2.0 * h) == doctest::Approx(mid.d3y1).epsilon(1e-5));

    CHECK((hi.y2 - lo.y2) / (2.0 * h) == doctest::Approx(mid.dy2).epsilon(1e-5));
    CHECK((hi.dy2 - lo.dy2) / (2.0 * h) == doctest::Approx(mid.d2y2).epsilon(1e-4));
    CHECK((hi.d2y2 - lo.d2y2) / (2.0 * h) == doctest::Approx(mid.d3y2).epsilon(1e-3));

    CHECK((hi.a - lo.a) / (2.0 * h) == doctest::Approx(mid.da).epsilon(1e-6));
    CHECK((hi.da - lo.da) / (2.0 * h) == doctest::Approx(mid.d2a).epsilon(1e-5));

    CHECK((hi.b - lo.b) / (2.0 * h) == doctest::Approx(1.0 / (mid.a * mid.a)).epsilon(1e-6));
}

TEST_CASE("y2 decays at the documented rate") {
    NonlinearitySpec f1 = cat("f1", {{"B", 2.0}});
    double rho0 = frame_base(f1);
    double prev = 0.0;
    for (double rho : {100.0, 178.0, 316.0, 562.0, 1000.0}) {
        AsymptoticFrame fr = frame_at(f1, rho, rho0);
        CHECK(fr.y2 < 0.0);
        CHECK(std::abs(fr.dy2) <= 50.0 * std::log(rho) / std::pow(rho, 1.0 + 0.5 - 0.1));
        CHECK(std::abs(fr.y2) < (prev == 0.0 ? 1e300 : prev));
        prev = std::abs(fr.y2);
    }

    NonlinearitySpec f2 = cat("f2");
    rho0 = frame_base(f2);
    for (double rho : {100.0, 316.0, 1000.0}) {
        AsymptoticFrame fr = frame_at(f2, rho, rho0);
        CHECK(fr.y2 < 0.0);
        CHECK(std::abs(fr.dy2) <= 100.0 * std::log(rho) / std::pow(rho, 2.0 - 0.1));
    }
}

TEST_CASE("phase integral matches closed forms and fixed panels") {
    // Constant curvature ratio: H = 2/3 for g = s^3, so
    // b(rho) = 2 sqrt(2/3) (sqrt(rho) - sqrt(rho0)).
    NonlinearitySpec p3 = cat("exp_pow", {{"p", 3.0}});
    double rho0 = frame_base(p3);
    AsymptoticFrame fr = frame_at(p3, 80.0, rho0);
    double exact = 2.0 * std::sqrt(2.0 / 3.0) * (std::sqrt(80.0) - std::sqrt(rho0));
    CHECK(fr.b == doctest::Approx(exact).epsilon(1e-8));

    // Smooth non-constant G: difference of two anchored values against a
    // fixed-panel Gauss rule in the plain variable.
    NonlinearitySpec f2 = cat("f2");
    rho0 = frame_base(f2);
    AsymptoticFrame fa = frame_at(f2, 50.0, rho0);
    AsymptoticFrame fb = frame_at(f2, 80.0, rho0);
    auto integrand = [&](double tau) {
        return std::sqrt(eval_H(f2, invert_g(f2, tau)).h / tau);
    };
    double ref = 0.0;
    const int panels = 60;
    for (int i = 0; i < panels; ++i) {
        double a = 50.0 + 30.0 * double(i) / panels;
        double b = 50.0 + 30.0 * double(i + 1) / panels;
        ref += gauss8(integrand, a, b);
    }
    CHECK(fb.b - fa.b == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("expansion matches the explicit singular profile") {
    // g = s^2 - 3 log s: the profile u(rho) = sqrt(rho) gives
    // g(u) = rho - 1.5 log rho exactly.
    NonlinearitySpec f1 = cat("f1", {{"B", 2.0}});
    double prev = 1e300;
    for (double rho : {1e3, 3e3, 1e4}) {
        ExpansionValue ev = expansion_g(f1, rho);
        double err = std::abs(ev.g_of_u - (rho - 1.5 * std::log(rho)));
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev <= 0.05);
}

TEST_CASE("expansion bookkeeping is exact") {
    NonlinearitySpec spec = cat("pow_sum", {{"p", 3.0}, {"r", 1.0}});
    ExpansionValue ev = expansion_g(spec, 250.0);
    double sum = ev.terms.rho + ev.terms.minus_two_log_rho + ev.terms.log_g_over_gp +
                 ev.terms.log_4H;
    CHECK(sum == ev.g_of_u);
    CHECK(ev.terms.remainder_bound == doctest::Approx(std::pow(250.0, -0.5)).epsilon(1e-15));
    CHECK(std::abs(ev.terms.neg_log_q + ev.terms.log_qH -
                   (ev.terms.log_4H - std::log(4.0))) <= 1e-13);
    CHECK_THROWS_AS(expansion_g(spec, 250.0, 0.6), config_error);
    CHECK_THROWS_AS(expansion_g(spec, 250.0, 0.0), config_error);
}

TEST_CASE("expansion collapses to the pure-growth form where H tends to 1") {
    NonlinearitySpec f2 = cat("f2");
    double prev = 1e300;
    for (double rho : {100.0, 200.0, 400.0}) {
        ExpansionValue ev = expansion_g(f2, rho);
        double log_H = ev.terms.log_4H - std::log(4.0);
        CHECK(std::abs(log_H) < prev);
        prev = std::abs(log_H);
    }
    CHECK(prev <= 0.05);
}

TEST_CASE("reference profile tracks the explicit solutions") {
    NonlinearitySpec f1 = cat("f1", {{"B", 2.0}});
    double r = 1e-40;
    double rho = -2.0 * std::log(r);
    double u = tilde_u(f1, r);
    CHECK(std::abs(u - std::sqrt(rho)) <= 0.01 * std::sqrt(rho));
    CHECK(tilde_u(f1, r, 2.0) == doctest::Approx(u).epsilon(1e-2));
    CHECK_THROWS_AS(tilde_u(f1, 0.999999), numeric_error);
    CHECK_THROWS_AS(tilde_u(f1, 1.5), config_error);
}

TEST_CASE("reference profile obeys the tail expansion") {
    NonlinearitySpec spec = cat("pow_sum", {{"p", 3.0}, {"r", 1.0}});
    double q = estimate_q(spec).q;
    for (double rho : {100.0, 300.0, 900.0, 2000.0}) {
        double u = tilde_u_at_rho(spec, rho, q);
        double y1 = invert_g(spec, rho);
        LogJet<double> lg = eval_logjet(spec.exponent(), y1);
        double predicted = rho - 2.0 * std::log(rho) - std::log(lg.u1) + std::log(4.0) -
                           std::log(q);
        double scaled = std::abs(g_at(spec, u) - predicted) * std::sqrt(rho);
        CHECK(scaled <= 5.0);
    }
}

TEST_CASE("reference profile differs from the expansion by log qH") {
    NonlinearitySpec f2 = cat("f2");
    double prev = 1e300;
    for (double rho : {100.0, 400.0, 1600.0}) {
        double u = tilde_u_at_rho(f2, rho, 1.0);
        double y1 = invert_g(f2, rho);
        double exact = rho - 2.0 * std::log(rho) + std::log(4.0);
        double gap = std::abs(exact - g_at(f2, u) - std::log(eval_H(f2, y1).h));
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev <= 0.05);
}

TEST_CASE("growth ratios settle at 1 - 1/q") {
    struct Row {
        const char* id;
        std::map<std::string, double> params;
        double limit;
    };
    std::vector<Row> rows = {{"exp_pow", {{"p", 3.0}}, 1.0 / 3.0},
                             {"f1", {{"B", 2.0}}, 0.5},
                             {"f2", {}, 0.0}};
    for (const Row& row : rows) {
        NonlinearitySpec spec = cat(row.id, row.params);
        double prev1 = 1e300, prev2 = 1e300;
        for (double gamma : {8.0, 16.0, 32.0, 64.0, 128.0}) {
            double s = spec.s_of_log_g(gamma);
            LogJet<double> lg = eval_logjet(spec.exponent(), s);
            double e1 = std::abs(1.0 / (s * lg.u1) - row.limit);
            double e2 = std::abs(-std::log(lg.u1) / lg.ell - row.limit);
            CHECK(e1 <= prev1 + 1e-12);
            CHECK(e2 <= prev2 + 1e-12);
            prev1 = e1;
            prev2 = e2;
        }
        CHECK(prev1 <= 0.05);
        CHECK(prev2 <= 0.1);
    }
}
