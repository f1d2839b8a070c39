#pragma once

#include <cmath>
#include <limits>

#include "diskbif/dd.hpp"
#include "diskbif/error.hpp"
#include "diskbif/expr.hpp"

namespace diskbif {

// Value and first three s-derivatives of an expression at a point.
template <class S>
struct Jet3T {
    S v, d1, d2, d3;
    double s = 0.0;
    bool overflow = false;
};
using Jet3 = Jet3T<double>;

// Log-scale jet: sign and log-magnitude of the value, plus the first three
// derivatives of log|value|. Closed under the expression grammar without
// forming the (possibly astronomically large) values themselves, so
// compositions like exp(exp(exp(s))) stay evaluable far beyond double range.
template <class S>
struct LogJet {
    int sign = 0;  // -1, 0, +1
    S ell{};       // log |value|
    S u1{}, u2{}, u3{};
    bool overflow = false;

    S value() const {
        using std::exp;
        if (sign == 0) return S(0.0);
        return sign > 0 ? exp(ell) : -exp(ell);
    }
};

namespace detail {

template <class S>
bool finite(S x) {
    using diskbif::isfinite;
    using std::isfinite;
    return isfinite(x);
}

// Ratios value^{(k)} / value from log-derivatives.
template <class S>
void abs_ratios(const LogJet<S>& j, S& r1, S& r2, S& r3) {
    r1 = j.u1;
    r2 = j.u2 + j.u1 * j.u1;
    r3 = j.u3 + S(3.0) * j.u1 * j.u2 + j.u1 * j.u1 * j.u1;
}

template <class S>
LogJet<S> lj_neg(LogJet<S> a) {
    a.sign = -a.sign;
    return a;
}

template <class S>
LogJet<S> lj_mul(const LogJet<S>& a, const LogJet<S>& b, int sign_mult) {
    LogJet<S> r;
    if (a.sign == 0 || b.sign == 0) return r;
    r.sign = a.sign * b.sign * sign_mult;
    r.ell = a.ell + b.ell;
    r.u1 = a.u1 + b.u1;
    r.u2 = a.u2 + b.u2;
    r.u3 = a.u3 + b.u3;
    r.overflow = a.overflow || b.overflow || !finite(r.ell);
    return r;
}

template <class S>
LogJet<S> lj_div(const LogJet<S>& a, const LogJet<S>& b) {
    LogJet<S> r;
    if (b.sign == 0) throw numeric_error("division by zero in expression evaluation");
    if (a.sign == 0) return r;
    r.sign = a.sign * b.sign;
    r.ell = a.ell - b.ell;
    r.u1 = a.u1 - b.u1;
    r.u2 = a.u2 - b.u2;
    r.u3 = a.u3 - b.u3;
    r.overflow = a.overflow || b.overflow || !finite(r.ell);
    return r;
}

// a + b, pivoting on the larger magnitude so the ratio w = small/large
// satisfies |w| <= 1.
template <class S>
LogJet<S> lj_add(const LogJet<S>& a, const LogJet<S>& b) {
    using std::exp;
    using std::log;
    using std::log1p;
    if (a.sign == 0) return b;
    if (b.sign == 0) return a;
    const LogJet<S>& big = to_double(a.ell) >= to_double(b.ell) ? a : b;
    const LogJet<S>& sml = to_double(a.ell) >= to_double(b.ell) ? b : a;
    S w = exp(sml.ell - big.ell);
    if (sml.sign != big.sign) w = -w;

    LogJet<S> r;
    r.overflow = a.overflow || b.overflow;
    S one_pw = S(1.0) + w;
    if (to_double(one_pw) == 0.0) {
        r.sign = 0;  // exact cancellation
        return r;
    }
    r.sign = to_double(one_pw) > 0.0 ? big.sign : -big.sign;
    r.ell = big.ell + log1p(w);
    S a1, a2, a3, b1, b2, b3;
    abs_ratios(big, a1, a2, a3);
    abs_ratios(sml, b1, b2, b3);
    S v1 = (a1 + w * b1) / one_pw;
    S v2 = (a2 + w * b2) / one_pw;
    S v3 = (a3 + w * b3) / one_pw;
    r.u1 = v1;
    r.u2 = v2 - v1 * v1;
    r.u3 = v3 - S(3.0) * v1 * v2 + S(2.0) * v1 * v1 * v1;
    if (!finite(r.ell)) r.overflow = true;
    return r;
}

}  // namespace detail

template <class S>
Jet3T<S> eval_jet(const Expr& e, S s);

template <class S>
LogJet<S> eval_logjet(const Expr& e, S s) {
    using std::exp;
    using std::log;
    constexpr double kMaxExpArg = 709.78;  // log(DBL_MAX)
    LogJet<S> r;
    switch (e->kind) {
        case ExprKind::constant: {
            double c = e->value;
            if (c == 0.0) return r;
            r.sign = c > 0.0 ? 1 : -1;
            r.ell = log(S(c > 0.0 ? c : -c));
            return r;
        }
        case ExprKind::var_s: {
            double sv = to_double(s);
            if (sv == 0.0) return r;
            r.sign = sv > 0.0 ? 1 : -1;
            S as = sv > 0.0 ? s : -s;
            r.ell = log(as);
            r.u1 = S(1.0) / s;
            r.u2 = -r.u1 * r.u1;
            r.u3 = S(2.0) * r.u1 * r.u1 * r.u1;
            return r;
        }
        case ExprKind::add:
            return detail::lj_add(eval_logjet(e->a, s), eval_logjet(e->b, s));
        case ExprKind::sub:
            return detail::lj_add(eval_logjet(e->a, s), detail::lj_neg(eval_logjet(e->b, s)));
        case ExprKind::mul:
            return detail::lj_mul(eval_logjet(e->a, s), eval_logjet(e->b, s), 1);
        case ExprKind::div:
            return detail::lj_div(eval_logjet(e->a, s), eval_logjet(e->b, s));
        case ExprKind::pow: {
            if (e->b->kind != ExprKind::constant)
                throw numeric_error("power node with non-constant exponent");
            LogJet<S> a = eval_logjet(e->a, s);
            double p = e->b->value;
            if (a.sign == 0) return r;
            if (a.sign < 0) {
                double ip = std::nearbyint(p);
                if (ip != p)
                    throw numeric_error("fractional power of a negative base");
                r.sign = std::fmod(ip, 2.0) == 0.0 ? 1 : -1;
            } else {
                r.sign = 1;
            }
            r.ell = S(p) * a.ell;
            r.u1 = S(p) * a.u1;
            r.u2 = S(p) * a.u2;
            r.u3 = S(p) * a.u3;
            r.overflow = a.overflow || !detail::finite(r.ell);
            return r;
        }
        case ExprKind::exp_fn: {
            LogJet<S> c = eval_logjet(e->a, s);
            r.sign = 1;
            r.overflow = c.overflow;
            if (c.sign == 0) {
                // The argument value is exactly zero, which the log form
                // cannot distinguish from the zero function; recover the
                // derivatives from the direct jet.
                Jet3T<S> h = eval_jet(e->a, s);
                r.ell = h.v;
                r.u1 = h.d1;
                r.u2 = h.d2;
                r.u3 = h.d3;
                r.overflow = r.overflow || h.overflow;
                return r;
            }
            if (to_double(c.ell) > kMaxExpArg) {
                // |argument| exceeds double range: value is e^{+inf} or e^{-inf};
                // either way the derivative components are unrepresentable.
                r.overflow = true;
                double inf = std::numeric_limits<double>::infinity();
                r.ell = S(c.sign > 0 ? inf : -inf);
                return r;
            }
            S cv = c.value();
            S c1, c2, c3;
            detail::abs_ratios(c, c1, c2, c3);
            r.ell = cv;
            r.u1 = cv * c1;
            r.u2 = cv * c2;
            r.u3 = cv * c3;
            if (!detail::finite(r.u1) || !detail::finite(r.u2) || !detail::finite(r.u3))
                r.overflow = true;
            return r;
        }
        case ExprKind::log_fn: {
            LogJet<S> c = eval_logjet(e->a, s);
            if (c.sign <= 0)
                throw numeric_error("log of a non-positive value in expression evaluation");
            S v = c.ell;
            double vd = to_double(v);
            r.overflow = c.overflow;
            if (vd == 0.0) return r;
            r.sign = vd > 0.0 ? 1 : -1;
            r.ell = log(vd > 0.0 ? v : -v);
            r.u1 = c.u1 / v;
            r.u2 = c.u2 / v - r.u1 * r.u1;
            r.u3 = c.u3 / v - S(3.0) * r.u1 * (c.u2 / v - r.u1 * r.u1) - r.u1 * r.u1 * r.u1;
            return r;
        }
    }
    throw numeric_error("corrupt expression node");
}

// Absolute jet; overflow is flagged, not thrown, so callers can fall back
// to the log-scale form.
template <class S>
Jet3T<S> to_jet(const LogJet<S>& j, double s) {
    using std::exp;
    Jet3T<S> out;
    out.s = s;
    out.overflow = j.overflow;
    if (j.sign == 0) {
        out.v = out.d1 = out.d2 = out.d3 = S(0.0);
        return out;
    }
    if (to_double(j.ell) > 709.78) {
        out.overflow = true;
        double inf = std::numeric_limits<double>::infinity();
        out.v = S(j.sign > 0 ? inf : -inf);
        out.d1 = out.d2 = out.d3 = out.v;
        return out;
    }
    S v = j.value();
    S r1, r2, r3;
    detail::abs_ratios(j, r1, r2, r3);
    out.v = v;
    out.d1 = v * r1;
    out.d2 = v * r2;
    out.d3 = v * r3;
    if (!detail::finite(out.d3)) out.overflow = true;
    return out;
}

// Forward-mode jet, materialized magnitudes.  An independent route from
// eval_logjet: it overflows where intermediate values exceed double range,
// but zero-valued subterms keep their derivatives.
template <class S>
Jet3T<S> eval_jet(const Expr& e, S s) {
    using std::exp;
    using std::log;
    using std::pow;
    constexpr double kMaxExpArg = 709.78;  // log(DBL_MAX)
    Jet3T<S> r;
    r.s = to_double(s);
    auto finish = [](Jet3T<S> j) {
        if (!detail::finite(j.v) || !detail::finite(j.d1) || !detail::finite(j.d2) ||
            !detail::finite(j.d3))
            j.overflow = true;
        return j;
    };
    switch (e->kind) {
        case ExprKind::constant:
            r.v = S(e->value);
            return r;
        case ExprKind::var_s:
            r.v = s;
            r.d1 = S(1.0);
            return r;
        case ExprKind::add:
        case ExprKind::sub: {
            Jet3T<S> a = eval_jet(e->a, s), b = eval_jet(e->b, s);
            double sg = e->kind == ExprKind::add ? 1.0 : -1.0;
            r.overflow = a.overflow || b.overflow;
            r.v = a.v + S(sg) * b.v;
            r.d1 = a.d1 + S(sg) * b.d1;
            r.d2 = a.d2 + S(sg) * b.d2;
            r.d3 = a.d3 + S(sg) * b.d3;
            return finish(r);
        }
        case ExprKind::mul: {
            Jet3T<S> a = eval_jet(e->a, s), b = eval_jet(e->b, s);
            r.overflow = a.overflow || b.overflow;
            r.v = a.v * b.v;
            r.d1 = a.d1 * b.v + a.v * b.d1;
            r.d2 = a.d2 * b.v + S(2.0) * a.d1 * b.d1 + a.v * b.d2;
            r.d3 = a.d3 * b.v + S(3.0) * a.d2 * b.d1 + S(3.0) * a.d1 * b.d2 + a.v * b.d3;
            return finish(r);
        }
        case ExprKind::div: {
            Jet3T<S> a = eval_jet(e->a, s), b = eval_jet(e->b, s);
            r.overflow = a.overflow || b.overflow;
            r.v = a.v / b.v;
            r.d1 = (a.d1 - r.v * b.d1) / b.v;
            r.d2 = (a.d2 - S(2.0) * r.d1 * b.d1 - r.v * b.d2) / b.v;
            r.d3 = (a.d3 - S(3.0) * r.d2 * b.d1 - S(3.0) * r.d1 * b.d2 - r.v * b.d3) / b.v;
            return finish(r);
        }
        case ExprKind::pow: {
            if (e->b->kind != ExprKind::constant)
                throw numeric_error("power node with non-constant exponent");
            Jet3T<S> a = eval_jet(e->a, s);
            const double p = e->b->value;
            r.overflow = a.overflow;
            S h0, h1, h2, h3;
            if (to_double(a.v) == 0.0) {
                auto zp = [](double c, double q) {
                    return c == 0.0 ? S(0.0) : S(c * std::pow(0.0, q));
                };
                h0 = zp(1.0, p);
                h1 = zp(p, p - 1.0);
                h2 = zp(p * (p - 1.0), p - 2.0);
                h3 = zp(p * (p - 1.0) * (p - 2.0), p - 3.0);
            } else {
                if (to_double(a.v) < 0.0) {
                    double ip = std::nearbyint(p);
                    if (ip != p)
                        throw numeric_error("fractional power of a negative base");
                    S m = pow(-a.v, S(p));
                    h0 = std::fmod(ip, 2.0) == 0.0 ? m : -m;
                } else {
                    h0 = pow(a.v, S(p));
                }
                h1 = h0 * S(p) / a.v;
                h2 = h1 * S(p - 1.0) / a.v;
                h3 = h2 * S(p - 2.0) / a.v;
            }
            r.v = h0;
            r.d1 = h1 * a.d1;
            r.d2 = h2 * a.d1 * a.d1 + h1 * a.d2;
            r.d3 = h3 * a.d1 * a.d1 * a.d1 + S(3.0) * h2 * a.d1 * a.d2 + h1 * a.d3;
            return finish(r);
        }
        case ExprKind::exp_fn: {
            Jet3T<S> a = eval_jet(e->a, s);
            r.overflow = a.overflow;
            if (to_double(a.v) > kMaxExpArg) {
                r.overflow = true;
                r.v = r.d1 = r.d2 = r.d3 = S(std::numeric_limits<double>::infinity());
                return r;
            }
            S w = exp(a.v);
            r.v = w;
            r.d1 = w * a.d1;
            r.d2 = w * (a.d2 + a.d1 * a.d1);
            r.d3 = w * (a.d3 + S(3.0) * a.d1 * a.d2 + a.d1 * a.d1 * a.d1);
            return finish(r);
        }
        case ExprKind::log_fn: {
            Jet3T<S> a = eval_jet(e->a, s);
            if (!(to_double(a.v) > 0.0))
                throw numeric_error("log of a non-positive value");
            r.overflow = a.overflow;
            S q1 = a.d1 / a.v, q2 = a.d2 / a.v, q3 = a.d3 / a.v;
            r.v = log(a.v);
            r.d1 = q1;
            r.d2 = q2 - q1 * q1;
            r.d3 = q3 - S(3.0) * q1 * q2 + S(2.0) * q1 * q1 * q1;
            return finish(r);
        }
    }
    throw numeric_error("corrupt expression node");
}

}  // namespace diskbif
