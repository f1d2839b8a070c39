#pragma once

#include <map>
#include <string>
#include <vector>

#include "diskbif/expr.hpp"
#include "diskbif/jet.hpp"
#include "diskbif/logreal.hpp"

namespace diskbif {

// Exponential-type nonlinearity f = exp(g), held as the symbolic exponent
// g(s).  f itself is never materialized: every evaluation goes through g
// and its log-space jets, so g may approach the overflow threshold of
// double while f stays representable as a (sign, log-magnitude) pair.
//
// Construction validates, on a geometric sample grid above s_floor():
//   g(s) > 0 and g'(s) > 0.
// Convexity of g (required by the singular-solution routines, not by
// parsing or tail integrals) is recorded in singular_admissible().
class NonlinearitySpec {
public:
    // g, its first three derivatives, and H = g * g'' / g'^2.
    const Expr& exponent() const { return g_; }
    const Expr& exponent_d1() const { return g1_; }
    const Expr& exponent_d2() const { return g2_; }
    const Expr& exponent_d3() const { return g3_; }
    const Expr& curvature_ratio() const { return h_; }

    // Catalog id ("f1", "double_exp", ...) or empty for a free-form source.
    const std::string& catalog_id() const { return catalog_id_; }
    const std::map<std::string, double>& params() const { return params_; }

    // Smallest s at which g > 0 and g' > 0 were verified.
    double s_floor() const { return s_floor_; }

    // True when g'' folds to the zero constant (f is a pure exponential).
    // Such specs parse and integrate but admit no singular solution.
    bool critical_exponential() const { return critical_exponential_; }

    // True when g'' > 0 held on the whole admissibility grid.
    bool singular_admissible() const { return singular_admissible_; }

    // Largest log g(s) reachable before some jet component of H or g
    // overflows double; grids used by the estimators stay below this.
    double max_resolvable_log_g() const { return log_g_cap_; }

    // g(s) as a plain double (throws numeric_error past the overflow edge).
    double log_f(double s) const;

    // Log-space jet of g at s: ell = log g, u_k = (log g)^(k).
    LogJet<double> exponent_log_jet(double s) const;

    // Materialized jet of g at s.
    Jet3 exponent_jet(double s) const;

    // Inverse of s -> log g(s) on [s_floor, +inf), by bisection.
    double s_of_log_g(double target) const;

    friend NonlinearitySpec parse_nonlinearity(const std::string&,
                                               const std::map<std::string, double>&);

private:
    NonlinearitySpec() = default;
    void finalize();

    Expr g_, g1_, g2_, g3_, h_;
    std::string catalog_id_;
    std::map<std::string, double> params_;
    double s_floor_ = 0.0;
    double s_cap_ = 0.0;
    double log_g_cap_ = 0.0;
    bool critical_exponential_ = false;
    bool singular_admissible_ = false;
};

// Builds a spec from a catalog name or a free-form expression in s.
//
// Catalog entries and their parameters:
//   f1          B > 1; g = s^B' - (2B'-1) log s + log(4/(B B')), B' = B/(B-1)
//   f2          g = exp(s) - 2s + log 4
//   exp_pow     p > 1; g = s^p
//   pow_sum     p > 1, 0 < r < p; g = s^p + s^r
//   pow_log     p > 1, i real; g = s^p (log s)^i
//   double_exp  g = exp(exp(s))
//   triple_exp  g = exp(exp(exp(s)))
//
// Free-form sources use the expression grammar of parse_expr; params supplies
// named constants and every supplied name must be used.  Errors are reported
// as config_error (syntax, unknown identifier, parameter out of range,
// positivity/monotonicity failure on the admissibility grid).
NonlinearitySpec parse_nonlinearity(const std::string& source,
                                    const std::map<std::string, double>& params = {});

// Jet of the exponent g at s: (g, g', g'', g''') as plain doubles.
Jet3 taylor_jet(const NonlinearitySpec& spec, double s);

// H = g g''/g'^2 and its first two derivatives at s.  Throws config_error
// for critical-exponential specs, where H vanishes identically and the
// singular-solution machinery downstream is inadmissible.
struct CurvatureValue {
    double h;
    double dh;
    double d2h;
};
CurvatureValue eval_H(const NonlinearitySpec& spec, double s);

// Sample of H on the estimation grid.
struct HSample {
    double s;
    double log_g;
    double h;
};

// Limit estimate q = lim 1/H(s), extrapolated in x = 1/log g along a grid
// with log g(s_k) = log g0 + k log 2.  ci is the spread of the last two
// extrapolation stages; samples holds the raw grid data.
struct QEstimate {
    double q;
    double ci;
    std::vector<HSample> samples;
};
QEstimate estimate_q(const NonlinearitySpec& spec);

// Tail integral F(s) = int_s^inf exp(-g(t)) dt as a positive log-space
// value.  Hybrid evaluation: adaptive quadrature of exp(g(s) - g(t)) over
// the window where it exceeds exp(-38), closed-form tail beyond, and a pure
// closed form once g(s) is large enough that its truncation error is below
// 1e-11 relative.
LogPos tail_integral(const NonlinearitySpec& spec, double s);

// Antiderivative of f vanishing at s_ref = max(0, s_floor):
// Fbar(s) = int_{s_ref}^s exp(g(t)) dt, as a positive log-space value.
LogPos primitive_integral(const NonlinearitySpec& spec, double s);

// Criticality classification of the nonlinearity.
//
//   q, q_ci        limit of 1/H with combined uncertainty (includes the
//                  spread of the independent B2 route, so q_ci can exceed
//                  the ci reported by estimate_q)
//   H_samples      raw H samples over the estimation grids
//   g1_ok          liminf s g'/g > 1 on the tail grid (a sufficient proxy
//                  for the convergence of int^inf du/g); margin is the
//                  observed minimum of s g'/g - 1
//   g2_ok          |H^(k)| <= C (g'/g)^k on the grid for k = 1,2,3 with a
//                  non-diverging constant; margin is the smallest such C
//   supercritical  extrapolated limit of (Fbar log Fbar / f)' is below 1/2,
//                  computed from quadrature values of Fbar; limits within
//                  5e-3 of 1/2 are conservatively classified false
//   fbar_limit     that extrapolated limit (equals 1 - 1/q in exact math)
//   B1_limit       extrapolated limit of (-log F)(1 - f' F)
//   B2_limit       extrapolated limit of f' F (-log F)^2 (f f'' F / f' - 1);
//                  both are quadrature-backed estimates of 1/q, independent
//                  of the jet route behind q itself
//   f3_equiv       sqrt(g) (H - 1/q) -> 0 and sqrt(g) H' g/g' -> 0, judged
//                  by log-scale trend over a moderate window
struct CriticalityReport {
    double q = 0.0;
    double q_ci = 0.0;
    std::vector<HSample> H_samples;
    bool g1_ok = false;
    double g1_margin = 0.0;
    bool g2_ok = false;
    double g2_margin = 0.0;
    bool supercritical = false;
    double fbar_limit = 0.0;
    double B1_limit = 0.0;
    double B2_limit = 0.0;
    bool f3_equiv = false;
};
CriticalityReport criticality_report(const NonlinearitySpec& spec);

}  // namespace diskbif
