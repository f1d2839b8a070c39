#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "diskbif/nonlin.hpp"

namespace diskbif {

// Shooting solution of -u'' - u'/r = f(u), u(0) = alpha, u'(0) = 0 in the
// plain radius.  first_zero is the smallest r with u = 0; the unit-disk
// eigenvalue is lambda(alpha) = first_zero^2.
struct RadialSolution {
    std::vector<double> r;   // strictly increasing
    std::vector<double> u;
    std::vector<double> du;  // du/dr
    double alpha = 0.0;      // centre value u(0); NaN for transformed singular data
    std::optional<double> first_zero;
    double rtol = 0.0, atol = 0.0;
    double scale_exponent = 0.0;  // g(alpha); the trajectory ran in r e^{g(alpha)/2}
};

enum class EmdenKind { singular, transformed_regular };

// How a trajectory ended.  span_complete: reached the far end of the
// requested interval.  zero_crossing: y passed through 0 transversally.
// vertical_zero: y approached 0 with unbounded slope (forms whose g blows
// up at 0+), located by the local square-root model.  band_exit: left the
// certified band g(y) <= rho + log 4 without reaching a zero.
enum class StopReason { span_complete, zero_crossing, vertical_zero, band_exit };

// Trajectory of y'' = -exp(g(y) - rho)/4 in rho = -2 log r.  For
// kind=singular every recorded grid point satisfies g(y) <= rho + log 4;
// once the trajectory leaves that band the integration continues off-grid
// only to localize the zero of y, reported in zero_rho.
struct EmdenSolution {
    std::vector<double> rho;  // strictly increasing
    std::vector<double> y;
    std::vector<double> dy;  // dy/drho
    EmdenKind kind = EmdenKind::singular;
    StopReason stop = StopReason::span_complete;
    std::optional<double> zero_rho;
    // y - (y1 + y2) where the grid overlaps the asymptotic range (rho >=
    // rho0 and the correction subordinate, |y2| <= y1/2), NaN elsewhere;
    // empty for transformed regular data.
    std::vector<double> eta;
    double rho0 = 0.0;  // frame base used for the initial data and eta
    double alpha = std::numeric_limits<double>::quiet_NaN();  // carried through to_emden
    double rtol = 0.0, atol = 0.0;
};

// Regular shooting trajectory in sigma = log(r e^{g(alpha)/2}), the chart
// in which the centre series starts at sigma = log 1e-6 and the first zero
// sits at moderate sigma for every admissible alpha.  lambda(alpha) in log
// form is 2 sigma_zero - g(alpha).
struct RegularShot {
    std::vector<double> sigma;
    std::vector<double> w;   // u along the trajectory
    std::vector<double> dw;  // dw/dsigma
    double alpha = 0.0;
    double g_alpha = 0.0;
    std::optional<double> sigma_zero;
    StopReason stop = StopReason::span_complete;
};

// Integrates the shooting problem for centre value alpha with local error
// tol, in the rescaled radius r e^{g(alpha)/2} (the RHS is O(1) near the
// centre for every spec).  Stops after the first zero of u or after
// sigma_extra log-units past g(alpha)/2; r, u, du and first_zero are
// reported in the original radius.  tol in [1e-13, 1e-6].
RadialSolution integrate_regular(const NonlinearitySpec& spec, double alpha, double tol);

// Chart-level form of integrate_regular without the plain-radius
// materialization, usable at any g(alpha); integrate_regular rejects
// g(alpha) > 1300 where r or du would leave the double range.
RegularShot shoot_regular(const NonlinearitySpec& spec, double alpha, double tol,
                          double sigma_extra = 16.0);

// Constructs the singular solution by backward integration from the
// asymptotic data y1 + y2 at rho_max down to rho_min >= 0.  The recorded
// grid stays inside the certified band g(y) <= rho + log 4; the zero hunt
// continues below it (and slightly below rho = 0 if needed) so to_radial
// can report first_zero.
EmdenSolution integrate_singular(const NonlinearitySpec& spec, double rho_max, double rho_min,
                                 double tol);

// Change of variables rho = -2 log r, du/dr = -(2/r) dy/drho.  first_zero
// is e^{-rho_zero/2}; throws if the trajectory recorded no zero.
RadialSolution to_radial(const EmdenSolution& sol);

// Inverse chart: wraps a shooting solution as Emden data (kind
// transformed_regular) for comparisons against singular trajectories.
EmdenSolution to_emden(const RadialSolution& sol);

}  // namespace diskbif
