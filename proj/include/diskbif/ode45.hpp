#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "diskbif/dd.hpp"
#include "diskbif/error.hpp"

namespace diskbif {

// Dormand-Prince 5(4) with FSAL, templated on the scalar so the same
// trajectory code runs in plain double or compensated arithmetic. State
// dimension is fixed at 2 (all trajectories here are scalar second-order
// equations reduced to first order).
//
// The RHS functor provides
//   void operator()(S t, const std::array<S,2>& y, std::array<S,2>& dy) const;
// and may optionally provide per-component error scales
//   void error_scale(S t, const std::array<S,2>& y, std::array<double,2>& sc) const;
// which multiply the usual atol + rtol*|y| weights.
template <class S, class RHS>
class Dopri5 {
  public:
    using State = std::array<S, 2>;

    struct Step {
        double t0, t1;
        State y0, y1;
        State f0, f1;
    };

    struct Options {
        double rtol = 1e-10;
        double atol = 1e-12;
        double h_init = 1e-3;
        double h_max = 1e30;
        uint64_t max_steps = 50'000'000;
    };

    Dopri5(const RHS& rhs, Options opt) : rhs_(rhs), opt_(opt) {
        auto frac = [](long num, long den) { return S(double(num)) / S(double(den)); };
        a21_ = frac(1, 5);
        a31_ = frac(3, 40), a32_ = frac(9, 40);
        a41_ = frac(44, 45), a42_ = frac(-56, 15), a43_ = frac(32, 9);
        a51_ = frac(19372, 6561), a52_ = frac(-25360, 2187);
        a53_ = frac(64448, 6561), a54_ = frac(-212, 729);
        a61_ = frac(9017, 3168), a62_ = frac(-355, 33), a63_ = frac(46732, 5247);
        a64_ = frac(49, 176), a65_ = frac(-5103, 18656);
        b1_ = frac(35, 384), b3_ = frac(500, 1113), b4_ = frac(125, 192);
        b5_ = frac(-2187, 6784), b6_ = frac(11, 84);
        e1_ = frac(71, 57600), e3_ = frac(-71, 16695), e4_ = frac(71, 1920);
        e5_ = frac(-17253, 339200), e6_ = frac(22, 525), e7_ = frac(-1, 40);
    }

    // Integrate from (t0, y0) to t_end; observer(const Step&) sees every
    // accepted step and may return false to stop early.
    template <class Observer>
    State integrate(double t0, State y0, double t_end, Observer&& observer) {
        double dir = t_end >= t0 ? 1.0 : -1.0;
        double t = t0;
        State y = y0;
        State f;
        rhs_(S(t), y, f);
        double h = dir * std::min(opt_.h_init, std::abs(t_end - t0));
        uint64_t steps = 0;
        while (dir * (t_end - t) > 0.0) {
            if (++steps > opt_.max_steps)
                throw numeric_error("integration exceeded the step budget");
            if (dir * (t + h) > dir * t_end) h = t_end - t;
            double h_floor = 1e-14 * std::max(std::abs(t), 1.0);
            if (std::abs(h) < h_floor)
                throw numeric_error("step size underflow during integration");

            State y1, f1;
            double err = attempt(t, y, f, h, y1, f1);
            if (err <= 1.0) {
                Step rec{t, t + h, y, y1, f, f1};
                t += h;
                y = y1;
                f = f1;
                if (!observer(rec)) return y;
            }
            double fac = 0.9 * std::pow(err > 1e-30 ? err : 1e-30, -0.2);
            fac = std::min(5.0, std::max(0.2, fac));
            h *= fac;
            if (std::abs(h) > opt_.h_max) h = dir * opt_.h_max;
        }
        return y;
    }

    State integrate(double t0, State y0, double t_end) {
        return integrate(t0, std::move(y0), t_end, [](const Step&) { return true; });
    }

    // Fixed-step classical run (no error control), for convergence-order
    // measurements.
    State integrate_fixed(double t0, State y0, double t_end, int n_steps) {
        double h = (t_end - t0) / n_steps;
        State y = y0, f, y1, f1;
        rhs_(S(t0), y, f);
        for (int i = 0; i < n_steps; ++i) {
            double t = t0 + i * h;
            attempt(t, y, f, h, y1, f1);
            y = y1;
            f = f1;
        }
        return y;
    }

    // Integrate until event(t, y) changes sign, then polish the crossing by
    // re-integration from the bracketing step's start under secant iteration.
    // Returns true and fills (t_event, y_event) if the event fired before
    // t_limit.
    template <class Event>
    bool integrate_event(double t0, State y0, double t_limit, Event&& event, double& t_event,
                         State& y_event) {
        bool found = false;
        Step bracket{};
        double prev_val = 0.0;
        bool have_prev = false;
        integrate(t0, y0, t_limit, [&](const Step& st) {
            double v0 = have_prev ? prev_val : to_double(event(S(st.t0), st.y0));
            double v1 = to_double(event(S(st.t1), st.y1));
            prev_val = v1;
            have_prev = true;
            if (v0 == 0.0 || (v0 < 0.0) != (v1 < 0.0)) {
                bracket = st;
                found = true;
                return false;
            }
            return true;
        });
        if (!found) return false;

        // Secant on phi(t) = event(solution through the bracket at t), with
        // bisection fallback; each evaluation re-integrates the short arc.
        double ta = bracket.t0, tb = bracket.t1;
        double va = to_double(event(S(ta), bracket.y0));
        double vb = to_double(event(S(tb), bracket.y1));
        State ya = bracket.y0;
        auto eval = [&](double tt) {
            State yy = integrate(bracket.t0, bracket.y0, tt, [](const Step&) { return true; });
            return std::pair<double, State>(to_double(event(S(tt), yy)), yy);
        };
        if (va == 0.0) {
            t_event = ta;
            y_event = bracket.y0;
            return true;
        }
        double tm = tb, vm = vb;
        State ym = bracket.y1;
        for (int it = 0; it < 80; ++it) {
            double tol = 1e-12 * std::max(1.0, std::abs(tm));
            if (std::abs(tb - ta) <= tol) break;
            double ts;
            if (vb != va) {
                ts = tb - vb * (tb - ta) / (vb - va);
                double lo = std::min(ta, tb), hi = std::max(ta, tb);
                if (!(ts > lo && ts < hi)) ts = 0.5 * (ta + tb);
            } else {
                ts = 0.5 * (ta + tb);
            }
            auto [vs, ys] = eval(ts);
            tm = ts;
            vm = vs;
            ym = ys;
            if (vs == 0.0) break;
            if ((vs < 0.0) == (va < 0.0)) {
                ta = ts;
                va = vs;
                ya = ys;
            } else {
                tb = ts;
                vb = vs;
            }
        }
        (void)vm;
        (void)ya;
        t_event = tm;
        y_event = ym;
        return true;
    }

  private:
    const RHS& rhs_;
    Options opt_;
    S a21_, a31_, a32_, a41_, a42_, a43_, a51_, a52_, a53_, a54_;
    S a61_, a62_, a63_, a64_, a65_;
    S b1_, b3_, b4_, b5_, b6_;
    S e1_, e3_, e4_, e5_, e6_, e7_;

    // One trial step; returns the scaled error norm, fills y1/f1 (FSAL).
    double attempt(double t, const State& y, const State& f, double h, State& y1, State& f1) {
        using std::abs;
        S hs(h);
        State k2, k3, k4, k5, k6, k7, tmp;

        for (int i = 0; i < 2; ++i) tmp[i] = y[i] + hs * (a21_ * f[i]);
        rhs_(S(t) + hs * a21_, tmp, k2);  // c2 = 1/5 = a21
        for (int i = 0; i < 2; ++i) tmp[i] = y[i] + hs * (a31_ * f[i] + a32_ * k2[i]);
        rhs_(S(t) + hs * S(0.3), tmp, k3);
        for (int i = 0; i < 2; ++i)
            tmp[i] = y[i] + hs * (a41_ * f[i] + a42_ * k2[i] + a43_ * k3[i]);
        rhs_(S(t) + hs * S(0.8), tmp, k4);
        for (int i = 0; i < 2; ++i)
            tmp[i] = y[i] + hs * (a51_ * f[i] + a52_ * k2[i] + a53_ * k3[i] + a54_ * k4[i]);
        rhs_(S(t) + hs * (S(8.0) / S(9.0)), tmp, k5);
        for (int i = 0; i < 2; ++i)
            tmp[i] = y[i] + hs * (a61_ * f[i] + a62_ * k2[i] + a63_ * k3[i] + a64_ * k4[i] +
                                  a65_ * k5[i]);
        rhs_(S(t) + hs, tmp, k6);
        for (int i = 0; i < 2; ++i)
            y1[i] = y[i] + hs * (b1_ * f[i] + b3_ * k3[i] + b4_ * k4[i] + b5_ * k5[i] +
                                 b6_ * k6[i]);
        rhs_(S(t) + hs, y1, k7);
        f1 = k7;

        std::array<double, 2> sc = {1.0, 1.0};
        if constexpr (requires { rhs_.error_scale(S(t), y, sc); })
            rhs_.error_scale(S(t), y, sc);
        double err = 0.0;
        for (int i = 0; i < 2; ++i) {
            S e = hs * (e1_ * f[i] + e3_ * k3[i] + e4_ * k4[i] + e5_ * k5[i] + e6_ * k6[i] +
                        e7_ * k7[i]);
            double w =
                (opt_.atol + opt_.rtol * std::max(std::abs(to_double(y[i])),
                                                  std::abs(to_double(y1[i])))) *
                sc[i];
            double q = std::abs(to_double(e)) / w;
            err = std::max(err, q);
        }
        return err;
    }
};

}  // namespace diskbif
