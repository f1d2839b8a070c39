#include "diskbif/asym.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diskbif/error.hpp"
#include "diskbif/quad.hpp"

namespace diskbif {

namespace {

constexpr double kLn4 = 1.3862943611198906;

// Value and first three s-derivatives of log c from the jet of c.
struct LogChain {
    double v, d1, d2, d3;
};

LogChain log_of(const Jet3& c) {
    double q1 = c.d1 / c.v;
    double q2 = c.d2 / c.v;
    double q3 = c.d3 / c.v;
    return {std::log(c.v), q1, q2 - q1 * q1, q3 - 3.0 * q1 * q2 + 2.0 * q1 * q1 * q1};
}

// Pushes an s-jet through s = y1(rho) given dy1, d2y1, d3y1.
LogChain to_rho(const LogChain& c, double u1, double u2, double u3) {
    return {c.v, c.d1 * u1, c.d2 * u1 * u1 + c.d1 * u2,
            c.d3 * u1 * u1 * u1 + 3.0 * c.d2 * u1 * u2 + c.d1 * u3};
}

// The relative noise of G = H(y1(rho)) is about eps * H, because a y
// error of eps*g/g' moves H by H' ~ H g'/g near a pole of H.  The upper
// cap keeps the phase quadrature above its own noise floor; the base
// search uses margin = 2 so the recorded rho0 sits clear of the exact
// boundary, where re-evaluation noise could flip the predicate.
bool frame_admissible(const NonlinearitySpec& spec, double s, double margin = 1.0) {
    Jet3 jg = spec.exponent_jet(s);
    if (!(jg.v > 0.0) || !(jg.d1 > 0.0)) return false;
    CurvatureValue h = eval_H(spec, s);
    return h.h > 1e-6 * margin && h.h <= 1e6 / margin;
}

}  // namespace

double invert_g(const NonlinearitySpec& spec, double rho) {
    if (spec.critical_exponential())
        throw config_error("pure exponential source has no asymptotic frame");
    double lo = spec.s_floor();
    double glo = eval_jet(spec.exponent(), lo).v;
    if (!(rho >= glo)) throw config_error("rho below g(s_floor)");

    double hi = std::max(lo * 2.0, lo + 1.0);
    double ghi = eval_jet(spec.exponent(), hi).v;
    for (int i = 0; i < 200 && !(ghi >= rho); ++i) {
        hi = std::max(hi * 2.0, hi + 1.0);
        ghi = eval_jet(spec.exponent(), hi).v;
    }
    if (!(ghi >= rho)) throw numeric_error("failed to bracket g(s) = rho");

    // Polished to full y-convergence, not merely a small g-residual: the
    // frame quadrature evaluates H(y1) where H is large, and the G noise
    // it sees scales with the y error times H.
    double y = 0.5 * (lo + hi);
    double best = y, best_res = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
        Jet3 j = eval_jet(spec.exponent(), y);
        double res = j.v - rho;
        if (std::abs(res) < best_res) {
            best_res = std::abs(res);
            best = y;
        }
        if (res > 0.0)
            hi = y;
        else if (res < 0.0)
            lo = y;
        else
            return y;
        double step = j.d1 > 0.0 ? res / j.d1 : 0.0;
        double yn = y - step;
        if (!(yn > lo) || !(yn < hi)) yn = 0.5 * (lo + hi);
        if (yn == y || !(lo < hi)) break;
        y = yn;
    }
    if (best_res > 1e-12 * std::max(1.0, rho))
        throw numeric_error("g inversion stalled; exponent may not be monotone");
    return best;
}

double frame_base(const NonlinearitySpec& spec) {
    if (!spec.singular_admissible())
        throw config_error("source is not admissible for singular asymptotics");

    const double s_lo = std::max(spec.s_floor(), 1e-8);
    const double g_hi_target = std::min(10.0, spec.max_resolvable_log_g() - 1.0);
    const double s_hi = spec.s_of_log_g(g_hi_target);

    double floor_rho = 1e-4;
    double s_good = std::numeric_limits<double>::quiet_NaN();
    double s_bad = s_lo;
    if (frame_admissible(spec, s_lo, 2.0)) {
        s_good = s_lo;
        s_bad = std::numeric_limits<double>::quiet_NaN();
    } else {
        const int n = 512;
        double prev = s_lo;
        for (int i = 1; i <= n; ++i) {
            double s = s_lo * std::pow(s_hi / s_lo, double(i) / n);
            if (frame_admissible(spec, s, 2.0)) {
                s_good = s;
                s_bad = prev;
                break;
            }
            prev = s;
        }
        if (!(s_good > 0.0)) throw numeric_error("no admissible frame base below log g = 10");
        for (int i = 0; i < 80; ++i) {
            double mid = 0.5 * (s_bad + s_good);
            if (mid == s_bad || mid == s_good) break;
            (frame_admissible(spec, mid, 2.0) ? s_good : s_bad) = mid;
        }
    }

    double rho0 = std::max(eval_jet(spec.exponent(), s_good).v, floor_rho);
    for (int i = 0; i < 200; ++i) {
        double s = invert_g(spec, rho0);
        if (frame_admissible(spec, s)) return rho0;
        rho0 = std::max(rho0 * 1.5, rho0 + 1e-4);
    }
    throw numeric_error("frame base search did not stabilize");
}

namespace {

AsymptoticFrame frame_impl(const NonlinearitySpec& spec, double rho, double rho0,
                           bool with_phase);

}  // namespace

AsymptoticFrame frame_at(const NonlinearitySpec& spec, double rho) {
    return frame_at(spec, rho, frame_base(spec));
}

AsymptoticFrame frame_at(const NonlinearitySpec& spec, double rho, double rho0) {
    return frame_impl(spec, rho, rho0, true);
}

AsymptoticFrame frame_tangent_at(const NonlinearitySpec& spec, double rho, double rho0) {
    return frame_impl(spec, rho, rho0, false);
}

namespace {

AsymptoticFrame frame_impl(const NonlinearitySpec& spec, double rho, double rho0,
                           bool with_phase) {
    if (!(rho >= rho0)) throw config_error("rho below the frame base");

    AsymptoticFrame fr;
    fr.rho = rho;
    fr.rho0 = rho0;
    fr.y1 = invert_g(spec, rho);

    Jet3 jg = spec.exponent_jet(fr.y1);
    Jet3 jg1 = eval_jet(spec.exponent_d1(), fr.y1);
    Jet3 jh = eval_jet(spec.curvature_ratio(), fr.y1);
    if (!(jg.d1 > 0.0)) throw numeric_error("g' vanishes at the frame point");
    if (!(jh.v > 0.0)) throw numeric_error("curvature ratio vanishes at the frame point");

    const double g1 = jg.d1, g2 = jg.d2, g3 = jg.d3, g4 = jg1.d3;
    fr.dy1 = 1.0 / g1;
    fr.d2y1 = -g2 / (g1 * g1 * g1);
    fr.d3y1 = (3.0 * g2 * g2 - g1 * g3) / std::pow(g1, 5);

    // L = log g'(y1) and M = log H(y1), first in s, then pushed to rho.
    LogChain L = to_rho(log_of(Jet3{g1, g2, g3, g4}), fr.dy1, fr.d2y1, fr.d3y1);
    LogChain M = to_rho(log_of(jh), fr.dy1, fr.d2y1, fr.d3y1);

    // y2 = N / D with N = log 4 + M - log rho - L and D = g'(y1).
    const double n0 = kLn4 + M.v - std::log(rho) - L.v;
    const double n1 = M.d1 - 1.0 / rho - L.d1;
    const double n2 = M.d2 + 1.0 / (rho * rho) - L.d2;
    const double n3 = M.d3 - 2.0 / (rho * rho * rho) - L.d3;
    const double d0 = g1;
    const double d1 = d0 * L.d1;
    const double d2 = d0 * (L.d2 + L.d1 * L.d1);
    const double d3 = d0 * (L.d3 + 3.0 * L.d1 * L.d2 + L.d1 * L.d1 * L.d1);
    fr.y2 = n0 / d0;
    fr.dy2 = (n1 - fr.y2 * d1) / d0;
    fr.d2y2 = (n2 - 2.0 * fr.dy2 * d1 - fr.y2 * d2) / d0;
    fr.d3y2 = (n3 - 3.0 * fr.d2y2 * d1 - 3.0 * fr.dy2 * d2 - fr.y2 * d3) / d0;

    fr.G = jh.v;
    fr.a = std::pow(rho / fr.G, 0.25);
    const double la1 = 0.25 * (1.0 / rho - M.d1);
    const double la2 = 0.25 * (-1.0 / (rho * rho) - M.d2);
    fr.da = fr.a * la1;
    fr.d2a = fr.a * (la2 + la1 * la1);

    // b(rho) = int_{rho0}^{rho} sqrt(G/tau) dtau, integrated in
    // tau = rho0 + w^2 so an inverse-square-root blowup of G at the
    // base (where g' -> 0) leaves the integrand bounded.
    if (!with_phase) {
        fr.b = std::numeric_limits<double>::quiet_NaN();
        return fr;
    }
    const double wmax = std::sqrt(rho - rho0);
    auto integrand = [&](double w) {
        double tau = rho0 + w * w;
        double y = invert_g(spec, tau);
        double G = eval_H(spec, y).h;
        return 2.0 * w * std::sqrt(std::max(G, 0.0) / tau);
    };
    if (wmax > 0.0) {
        double tol = 1e-10 * std::max(1.0, 2.0 * wmax);
        fr.b = integrate_adaptive(integrand, 0.0, wmax, tol);
    }
    return fr;
}

}  // namespace

ExpansionValue expansion_g(const NonlinearitySpec& spec, double rho, double eps) {
    if (!(eps > 0.0) || !(eps <= 0.5)) throw config_error("eps must lie in (0, 1/2]");
    double y1 = invert_g(spec, rho);

    LogJet<double> lg = eval_logjet(spec.exponent(), y1);
    if (!(lg.u1 > 0.0)) throw numeric_error("g' vanishes at the expansion point");
    CurvatureValue h = eval_H(spec, y1);
    if (!(h.h > 0.0)) throw numeric_error("curvature ratio vanishes at the expansion point");
    double q = estimate_q(spec).q;

    ExpansionValue out;
    out.rho = rho;
    out.terms.rho = rho;
    out.terms.minus_two_log_rho = -2.0 * std::log(rho);
    // log(g/g') = -log(g'/g), safe even where g' overflows a double.
    out.terms.log_g_over_gp = -std::log(lg.u1);
    out.terms.log_4H = kLn4 + std::log(h.h);
    out.terms.remainder_bound = std::pow(rho, eps - 1.0);
    out.terms.neg_log_q = -std::log(q);
    out.terms.log_qH = std::log(q) + std::log(h.h);
    out.g_of_u = out.terms.rho + out.terms.minus_two_log_rho + out.terms.log_g_over_gp +
                 out.terms.log_4H;
    return out;
}

double tilde_u(const NonlinearitySpec& spec, double r) {
    return tilde_u(spec, r, estimate_q(spec).q);
}

double tilde_u(const NonlinearitySpec& spec, double r, double B) {
    if (!(r > 0.0) || !(r < 1.0)) throw config_error("radius must lie in (0, 1)");
    return tilde_u_at_rho(spec, -2.0 * std::log(r), B);
}

double tilde_u_at_rho(const NonlinearitySpec& spec, double rho, double B) {
    if (!(rho > 0.0)) throw config_error("rho must be positive");
    const double target = std::log(B / 4.0) + std::log1p(rho) - rho;

    double lo = spec.s_floor() + 1e-12 * std::max(1.0, spec.s_floor());
    if (!(tail_integral(spec, lo).ln >= target))
        throw numeric_error("tail inversion target above F at the floor");
    double hi = std::max(lo * 2.0, lo + 1.0);
    for (int i = 0; i < 200 && tail_integral(spec, hi).ln >= target; ++i)
        hi = std::max(hi * 2.0, hi + 1.0);
    if (tail_integral(spec, hi).ln >= target)
        throw numeric_error("failed to bracket the tail inversion");

    for (int i = 0; i < 90; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (tail_integral(spec, mid).ln >= target ? lo : hi) = mid;
        if (hi - lo <= 1e-14 * std::max(1.0, std::abs(lo))) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace diskbif
