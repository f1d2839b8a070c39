#pragma once

#include "diskbif/nonlin.hpp"

namespace diskbif {

// Asymptotic frame at the logarithmic radius rho = -2 log r.
//
// y1 solves g(y1) = rho.  y2 is the closed-form correction fixed by
//   exp(g'(y1) y2) = 4 G / (rho g'(y1)),   G = H(y1),
// and both carry their first three rho-derivatives, assembled from jets
// of g and H (no finite differencing).  a = (rho/G)^{1/4} and b with
// b' = 1/a^2 are the oscillator variables; b is anchored at rho0, the
// smallest rho where the frame is defined, so a^2 b' = 1 holds by
// construction.
struct AsymptoticFrame {
    double rho = 0.0;
    double y1 = 0.0, dy1 = 0.0, d2y1 = 0.0, d3y1 = 0.0;
    double y2 = 0.0, dy2 = 0.0, d2y2 = 0.0, d3y2 = 0.0;
    double G = 0.0;
    double a = 0.0, da = 0.0, d2a = 0.0;
    double b = 0.0;
    double rho0 = 0.0;
};

// Additive pieces of the leading expansion of g(u) along the singular
// profile.  g_of_u is the plain sum
//   rho + minus_two_log_rho + log_g_over_gp + log_4H
// so reassembly is exact by construction; remainder_bound is the size
// of the neglected tail, not part of the sum.  neg_log_q and log_qH
// split log_4H - log 4 into the two factors -log q + log(q H).
struct ExpansionTerms {
    double rho = 0.0;
    double minus_two_log_rho = 0.0;
    double log_g_over_gp = 0.0;
    double log_4H = 0.0;
    double remainder_bound = 0.0;
    double neg_log_q = 0.0;
    double log_qH = 0.0;
};

struct ExpansionValue {
    double rho = 0.0;
    double g_of_u = 0.0;
    ExpansionTerms terms;
};

// Solves g(y1) = rho on [s_floor, +inf) by safeguarded Newton;
// |g(y1) - rho| <= 1e-12 max(1, rho).  Requires rho >= g(s_floor).
double invert_g(const NonlinearitySpec& spec, double rho);

// Smallest rho at which the frame is defined: g(y1) = rho with g > 0,
// g'(y1) > 0 and G = H(y1) > 1e-6, floored at 1e-4.
double frame_base(const NonlinearitySpec& spec);

AsymptoticFrame frame_at(const NonlinearitySpec& spec, double rho);
AsymptoticFrame frame_at(const NonlinearitySpec& spec, double rho, double rho0);

// Same frame with the phase quadrature skipped (b = NaN).  The tangent
// data y1, y2 and the envelope a cost only point evaluations, so this
// form is cheap enough to call per grid point.
AsymptoticFrame frame_tangent_at(const NonlinearitySpec& spec, double rho, double rho0);

// Leading expansion of g(u) at rho; remainder_bound = rho^(eps-1) with
// eps in (0, 1/2].
ExpansionValue expansion_g(const NonlinearitySpec& spec, double rho, double eps = 0.5);

// Reference profile u with F(u) = (B/4) e^{-rho} (rho + 1) at radius r,
// where B is the estimated growth exponent and F the tail integral of
// 1/f; the inversion runs in log space so the right-hand side may be
// far below the double underflow threshold.  The rho form reaches
// logarithmic radii whose r would underflow a double.
double tilde_u(const NonlinearitySpec& spec, double r);
double tilde_u(const NonlinearitySpec& spec, double r, double B);
double tilde_u_at_rho(const NonlinearitySpec& spec, double rho, double B);

}  // namespace diskbif
