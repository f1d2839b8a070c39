#include "diskbif/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "diskbif/asym.hpp"
#include "diskbif/error.hpp"
#include "diskbif/jet.hpp"
#include "diskbif/ode45.hpp"

namespace diskbif {
namespace {

constexpr double kLn4 = 1.3862943611198906;
constexpr double kExpCap = 700.0;
// Slope at which a trajectory is declared to be on a vertical-tangent
// approach to its zero.  Reached around 1e-9 before the zero, well before
// the stepper's own size floor, and the completion error there is ~1e-17.
constexpr double kSlopeCap = 1e4;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string str(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// g with out-of-domain trial points answered by a tangent-line barrier.
//
// Trial stages of an adaptive step may overshoot past the domain of g
// (s <= 0 for forms with a log term, s < 1 for fractional powers of log).
// A NaN would corrupt the step controller, so the first failing call on
// each side locates the domain edge by bisection against a known-good
// point and extends g linearly from just inside it; the slope is steep
// wherever g blows up at the edge, so the barrier stays finite while
// still repelling the stepper.  In-domain values are always the exact g.
class GuardedExponent {
  public:
    GuardedExponent(const NonlinearitySpec& spec, double s_good)
        : spec_(spec), good_(s_good) {}

    double operator()(double s) const {
        double v = eval_value(spec_.exponent(), s);
        if (std::isfinite(v)) return v;
        const Tangent& t = s < good_ ? edge(below_, s) : edge(above_, s);
        return t.g + t.g1 * (s - t.s);
    }

  private:
    struct Tangent {
        bool set = false;
        double s = 0.0, g = 0.0, g1 = 0.0;
    };

    const Tangent& edge(Tangent& slot, double bad) const {
        if (slot.set) return slot;
        double lo = bad, hi = good_;
        for (int i = 0; i < 80; ++i) {
            double mid = 0.5 * (lo + hi);
            (std::isfinite(eval_value(spec_.exponent(), mid)) ? hi : lo) = mid;
        }
        // Step inward until the jet is finite too; the slope itself can
        // overflow right at the edge.
        for (int k = 40; k >= 0; --k) {
            double s = hi + (good_ - hi) * std::ldexp(1.0, -k);
            Jet3 j = eval_jet(spec_.exponent(), s);
            if (std::isfinite(j.v) && std::isfinite(j.d1)) {
                slot = {true, s, j.v, j.d1};
                return slot;
            }
        }
        throw numeric_error("could not bracket the domain edge of g near s = " + str(hi));
    }

    const NonlinearitySpec& spec_;
    double good_;
    mutable Tangent below_, above_;
};

// RHS of w'' = -exp(2 sigma + g(w) - g(alpha)), the shooting equation in
// sigma = log(r e^{g(alpha)/2}).
struct SigmaRhs {
    const GuardedExponent& g;
    double g_alpha;

    void operator()(double t, const std::array<double, 2>& y,
                    std::array<double, 2>& dy) const {
        double e = 2.0 * t + g(y[0]) - g_alpha;
        dy[0] = y[1];
        dy[1] = -std::exp(std::min(e, kExpCap));
    }
};

// RHS of y'' = -exp(g(y) - rho)/4 with error weights following the
// stiffness scale 1/g'(y), the natural size of the solution's variation.
struct EmdenRhs {
    const NonlinearitySpec& spec;
    const GuardedExponent& g;

    void operator()(double t, const std::array<double, 2>& y,
                    std::array<double, 2>& dy) const {
        double e = g(y[0]) - t;
        dy[0] = y[1];
        dy[1] = -0.25 * std::exp(std::min(e, kExpCap));
    }

    void error_scale(double, const std::array<double, 2>& y,
                     std::array<double, 2>& sc) const {
        double gp = eval_jet(spec.exponent(), y[0]).d1;
        if (!std::isfinite(gp) || gp < 0.0) gp = 0.0;
        sc[0] = sc[1] = 1.0 / (1.0 + std::min(gp, 1e12));
    }
};

double hermite_eval(double h, double v0, double m0, double v1, double m1, double u) {
    double u2 = u * u, u3 = u2 * u;
    return (2.0 * u3 - 3.0 * u2 + 1.0) * v0 + (u3 - 2.0 * u2 + u) * h * m0 +
           (-2.0 * u3 + 3.0 * u2) * v1 + (u3 - u2) * h * m1;
}

// Root of the cubic Hermite interpolant of a sign-changing step, by
// secant with bisection fallback, to 1e-12 relative in the abscissa.
double hermite_root(double x0, double v0, double m0, double x1, double v1, double m1) {
    if (v0 == 0.0) return x0;
    if (v1 == 0.0) return x1;
    double h = x1 - x0;
    double a = 0.0, b = 1.0, va = v0, vb = v1;
    double u = 0.5;
    for (int i = 0; i < 90; ++i) {
        if ((b - a) * std::abs(h) <= 1e-12 * std::max(1.0, std::abs(x0)))
            break;
        u = vb != va ? b - vb * (b - a) / (vb - va) : 0.5 * (a + b);
        if (!(u > a && u < b)) u = 0.5 * (a + b);
        double vu = hermite_eval(h, v0, m0, v1, m1, u);
        if (vu == 0.0) return x0 + u * h;
        if ((vu < 0.0) == (va < 0.0)) {
            a = u;
            va = vu;
        } else {
            b = u;
            vb = vu;
        }
    }
    return x0 + 0.5 * (a + b) * h;
}

// Completion of a vertical-tangent zero approach v ~ c|t - t*|^m from the
// last two states: r = v/v' is linear in t with slope 1/m, so
// m = (t_a - t_b)/(r_a - r_b) and t* = t_a - m r_a.  One state falls back
// to the square-root model m = 1/2.
double vertical_completion(double ta, double va, double sa, bool have_b, double tb,
                           double vb, double sb) {
    double ra = va / sa;
    double m = 0.5;
    if (have_b && sb != 0.0) {
        double rb = vb / sb;
        if (ra != rb) {
            double est = (ta - tb) / (ra - rb);
            if (std::isfinite(est) && est > 0.0 && est < 1e3) m = est;
        }
    }
    return ta - m * ra;
}

void validate_tol(double tol) {
    if (!(tol >= 1e-13) || !(tol <= 1e-6))
        throw config_error("tolerance must lie in [1e-13, 1e-6]");
}

}  // namespace

RegularShot shoot_regular(const NonlinearitySpec& spec, double alpha, double tol,
                          double sigma_extra) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw config_error("centre value alpha must be positive");
    validate_tol(tol);
    if (!(sigma_extra > 0.0)) throw config_error("sigma_extra must be positive");

    Jet3 ja = spec.exponent_jet(alpha);
    if (!std::isfinite(ja.v) || !std::isfinite(ja.d1))
        throw config_error("g(alpha) exceeds double range at alpha = " + str(alpha));
    // The centre series below is truncated after the rt^4 term; its region
    // of validity is g'(alpha) rt^2 / 4 << 1 at the start radius rt = 1e-6.
    if (std::abs(ja.d1) > 4e9)
        throw config_error("g'(alpha) = " + str(ja.d1) +
                           " puts the start radius outside the centre series range");

    RegularShot shot;
    shot.alpha = alpha;
    shot.g_alpha = ja.v;

    // Centre series u = alpha - rt^2/4 + g'(alpha) rt^4/64 at rt = 1e-6.
    const double sigma_s = std::log(1e-6);
    const double rt2 = 1e-12;
    std::array<double, 2> y0 = {alpha - rt2 / 4.0 + ja.d1 * rt2 * rt2 / 64.0,
                                -rt2 / 2.0 + ja.d1 * rt2 * rt2 / 16.0};
    const double sigma_end = ja.v / 2.0 + sigma_extra;
    if (!(sigma_end > sigma_s + 1.0))
        throw config_error("integration span collapses; raise sigma_extra");

    GuardedExponent g(spec, alpha);
    SigmaRhs rhs{g, ja.v};
    using Stepper = Dopri5<double, SigmaRhs>;
    Stepper::Options opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-3;
    Stepper stepper(rhs, opt);

    shot.sigma.push_back(sigma_s);
    shot.w.push_back(y0[0]);
    shot.dw.push_back(y0[1]);

    bool have_prev = false;
    double tp = 0.0, wp = 0.0, sp = 0.0;
    try {
        stepper.integrate(sigma_s, y0, sigma_end, [&](const Stepper::Step& st) {
            if (st.y1[0] <= 0.0) {
                shot.sigma_zero = hermite_root(st.t0, st.y0[0], st.y0[1], st.t1,
                                               st.y1[0], st.y1[1]);
                shot.stop = StopReason::zero_crossing;
                return false;
            }
            if (st.y1[1] <= -kSlopeCap) {
                shot.sigma_zero = vertical_completion(st.t1, st.y1[0], st.y1[1],
                                                      have_prev, tp, wp, sp);
                shot.stop = StopReason::vertical_zero;
                return false;
            }
            shot.sigma.push_back(st.t1);
            shot.w.push_back(st.y1[0]);
            shot.dw.push_back(st.y1[1]);
            have_prev = true;
            tp = st.t1;
            wp = st.y1[0];
            sp = st.y1[1];
            return true;
        });
    } catch (const numeric_error&) {
        // Step collapse right at a vertical wall: complete from the last
        // recorded states if the slope was already steep, else rethrow.
        if (have_prev && sp <= -10.0 && wp < 0.2 * alpha) {
            shot.sigma_zero = vertical_completion(tp, wp, sp, false, 0, 0, 0);
            shot.stop = StopReason::vertical_zero;
        } else {
            throw;
        }
    }
    return shot;
}

RadialSolution integrate_regular(const NonlinearitySpec& spec, double alpha, double tol) {
    if (alpha > 0.0 && std::isfinite(alpha)) {
        Jet3 ja = spec.exponent_jet(alpha);
        if (std::isfinite(ja.v) && ja.v > 1300.0)
            throw config_error(
                "g(alpha) = " + str(ja.v) +
                " is too steep for the plain-radius chart; use shoot_regular");
    }
    RegularShot shot = shoot_regular(spec, alpha, tol);
    if (!shot.sigma_zero)
        throw numeric_error("u has no zero within the integration span; extend it");

    RadialSolution out;
    out.alpha = alpha;
    out.rtol = tol;
    out.atol = tol * 1e-3;
    out.scale_exponent = shot.g_alpha;
    const double half_g = shot.g_alpha / 2.0;
    out.r.reserve(shot.sigma.size());
    out.u = shot.w;
    out.du.reserve(shot.sigma.size());
    for (size_t i = 0; i < shot.sigma.size(); ++i) {
        double r = std::exp(shot.sigma[i] - half_g);
        out.r.push_back(r);
        out.du.push_back(shot.dw[i] / r);
    }
    out.first_zero = std::exp(*shot.sigma_zero - half_g);
    return out;
}

EmdenSolution integrate_singular(const NonlinearitySpec& spec, double rho_max,
                                 double rho_min, double tol) {
    if (spec.critical_exponential() || !spec.singular_admissible())
        throw config_error("spec admits no singular solution");
    validate_tol(tol);
    if (!(rho_min >= 0.0)) throw config_error("rho_min must be nonnegative");
    if (!(rho_max > rho_min)) throw config_error("rho_max must exceed rho_min");

    const double rho0 = frame_base(spec);
    if (!(rho_max > rho0))
        throw config_error("rho_max = " + str(rho_max) +
                           " is below the asymptotic range (frame base " + str(rho0) + ")");

    AsymptoticFrame fr = frame_tangent_at(spec, rho_max, rho0);
    std::array<double, 2> state = {fr.y1 + fr.y2, fr.dy1 + fr.dy2};

    EmdenSolution out;
    out.kind = EmdenKind::singular;
    out.rho0 = rho0;
    out.rtol = tol;
    out.atol = tol * 1e-4;

    GuardedExponent g(spec, fr.y1);
    EmdenRhs rhs{spec, g};
    using Stepper = Dopri5<double, EmdenRhs>;
    Stepper::Options opt;
    opt.rtol = tol;
    opt.atol = tol * 1e-4;
    opt.h_max = 5.0;
    Stepper stepper(rhs, opt);

    // Descending-rho record; reversed to the ascending grid at the end.
    out.rho.push_back(rho_max);
    out.y.push_back(state[0]);
    out.dy.push_back(state[1]);

    bool need_endgame = false;
    std::array<double, 2> exit_state = state;
    double exit_rho = rho_max;
    try {
        stepper.integrate(rho_max, state, rho_min, [&](const Stepper::Step& st) {
            if (st.y1[0] <= 0.0) {
                out.zero_rho = hermite_root(st.t0, st.y0[0], st.y0[1], st.t1, st.y1[0],
                                            st.y1[1]);
                out.stop = StopReason::zero_crossing;
                return false;
            }
            if (g(st.y1[0]) > st.t1 + kLn4) {
                need_endgame = true;
                exit_state = st.y1;
                exit_rho = st.t1;
                return false;
            }
            out.rho.push_back(st.t1);
            out.y.push_back(st.y1[0]);
            out.dy.push_back(st.y1[1]);
            return true;
        });
    } catch (const numeric_error& e) {
        throw numeric_error(std::string(e.what()) + "; singular trajectory near rho = " +
                            str(out.rho.back()));
    }

    if (need_endgame) {
        // Off-grid zero hunt below the certified band, allowed to run a
        // little past rho = 0 since the zero of a constructed profile can
        // sit at small negative rho (radius slightly above 1).
        out.stop = StopReason::band_exit;
        const double y_exit = exit_state[0];
        bool have_prev = false;
        double tp = exit_rho, yp = exit_state[0], sp = exit_state[1];
        try {
            stepper.integrate(exit_rho, exit_state, rho_min - 5.0,
                              [&](const Stepper::Step& st) {
                                  if (st.y1[0] <= 0.0) {
                                      out.zero_rho = hermite_root(st.t0, st.y0[0], st.y0[1],
                                                                  st.t1, st.y1[0], st.y1[1]);
                                      out.stop = StopReason::zero_crossing;
                                      return false;
                                  }
                                  if (st.y1[1] >= kSlopeCap) {
                                      out.zero_rho = vertical_completion(
                                          st.t1, st.y1[0], st.y1[1], have_prev, tp, yp, sp);
                                      out.stop = StopReason::vertical_zero;
                                      return false;
                                  }
                                  if (st.y1[0] > y_exit + 2.0)
                                      throw numeric_error(
                                          "singular trajectory blew up near rho = " +
                                          str(st.t1));
                                  have_prev = true;
                                  tp = st.t1;
                                  yp = st.y1[0];
                                  sp = st.y1[1];
                                  return true;
                              });
        } catch (const numeric_error&) {
            if (have_prev && sp >= 10.0 && yp < 0.5) {
                out.zero_rho = vertical_completion(tp, yp, sp, false, 0, 0, 0);
                out.stop = StopReason::vertical_zero;
            } else {
                throw;
            }
        }
    }

    std::reverse(out.rho.begin(), out.rho.end());
    std::reverse(out.y.begin(), out.y.end());
    std::reverse(out.dy.begin(), out.dy.end());

    out.eta.assign(out.rho.size(), kNan);
    for (size_t i = 0; i < out.rho.size(); ++i) {
        if (out.rho[i] < rho0) continue;
        AsymptoticFrame f = frame_tangent_at(spec, out.rho[i], rho0);
        if (std::abs(f.y2) <= 0.5 * f.y1) out.eta[i] = out.y[i] - f.y1 - f.y2;
    }
    return out;
}

RadialSolution to_radial(const EmdenSolution& sol) {
    if (sol.rho.empty()) throw config_error("empty trajectory");

    RadialSolution out;
    out.alpha = sol.alpha;
    out.rtol = sol.rtol;
    out.atol = sol.atol;
    out.scale_exponent = 0.0;
    const size_t n = sol.rho.size();
    out.r.resize(n);
    out.u.resize(n);
    out.du.resize(n);
    for (size_t i = 0; i < n; ++i) {
        size_t j = n - 1 - i;  // ascending rho -> descending r
        double r = std::exp(-0.5 * sol.rho[j]);
        out.r[i] = r;
        out.u[i] = sol.y[j];
        out.du[i] = -2.0 / r * sol.dy[j];
    }
    if (sol.zero_rho) {
        out.first_zero = std::exp(-0.5 * *sol.zero_rho);
    } else {
        throw numeric_error("trajectory recorded no zero of y on its span");
    }
    return out;
}

EmdenSolution to_emden(const RadialSolution& sol) {
    if (sol.r.empty()) throw config_error("empty trajectory");

    EmdenSolution out;
    out.kind = EmdenKind::transformed_regular;
    out.alpha = sol.alpha;
    out.rtol = sol.rtol;
    out.atol = sol.atol;
    const size_t n = sol.r.size();
    out.rho.resize(n);
    out.y.resize(n);
    out.dy.resize(n);
    for (size_t i = 0; i < n; ++i) {
        size_t j = n - 1 - i;  // ascending r -> descending rho
        if (!(sol.r[j] > 0.0)) throw config_error("radii must be positive");
        out.rho[i] = -2.0 * std::log(sol.r[j]);
        out.y[i] = sol.u[j];
        out.dy[i] = -0.5 * sol.r[j] * sol.du[j];
    }
    if (sol.first_zero) {
        out.zero_rho = -2.0 * std::log(*sol.first_zero);
        out.stop = StopReason::zero_crossing;
    }
    return out;
}

}  // namespace diskbif
