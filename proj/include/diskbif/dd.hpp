#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace diskbif {

// Double-double ("compensated") arithmetic: an unevaluated sum hi + lo with
// |lo| <= ulp(hi)/2, giving ~31 significant decimal digits inside the range
// of binary64.  Core error-free transforms follow Dekker and Knuth; division
// and square root use one Newton correction on the double estimate.
//
// Requires round-to-nearest IEEE doubles and a correct fma; do not compile
// the library with -ffast-math.
class Dd {
  public:
    constexpr Dd() : hi_(0.0), lo_(0.0) {}
    constexpr Dd(double x) : hi_(x), lo_(0.0) {}
    constexpr Dd(double hi, double lo) : hi_(hi), lo_(lo) {}

    constexpr double hi() const { return hi_; }
    constexpr double lo() const { return lo_; }

    static Dd sum2(double a, double b) {  // Knuth two-sum, 6 flops
        double s = a + b;
        double t = s - a;
        double e = (a - (s - t)) + (b - t);
        return Dd(s, e);
    }
    static Dd fast_sum2(double a, double b) {  // Dekker, requires |a| >= |b|
        double s = a + b;
        double e = b - (s - a);
        return Dd(s, e);
    }
    static Dd prod2(double a, double b) {
        double p = a * b;
        double e = std::fma(a, b, -p);
        return Dd(p, e);
    }

    Dd operator-() const { return Dd(-hi_, -lo_); }

    friend Dd operator+(Dd a, Dd b) {
        Dd s = sum2(a.hi_, b.hi_);
        Dd t = sum2(a.lo_, b.lo_);
        double c = s.lo_ + t.hi_;
        Dd v = fast_sum2(s.hi_, c);
        double w = t.lo_ + v.lo_;
        return fast_sum2(v.hi_, w);
    }
    friend Dd operator-(Dd a, Dd b) { return a + (-b); }
    friend Dd operator*(Dd a, Dd b) {
        Dd p = prod2(a.hi_, b.hi_);
        p.lo_ += a.hi_ * b.lo_ + a.lo_ * b.hi_;
        return fast_sum2(p.hi_, p.lo_);
    }
    friend Dd operator/(Dd a, Dd b) {
        double q1 = a.hi_ / b.hi_;
        Dd r = a - b * Dd(q1);
        double q2 = r.hi_ / b.hi_;
        r = r - b * Dd(q2);
        double q3 = r.hi_ / b.hi_;
        Dd q = fast_sum2(q1, q2);
        return q + Dd(q3);
    }

    Dd& operator+=(Dd b) { return *this = *this + b; }
    Dd& operator-=(Dd b) { return *this = *this - b; }
    Dd& operator*=(Dd b) { return *this = *this * b; }
    Dd& operator/=(Dd b) { return *this = *this / b; }

    friend bool operator==(Dd a, Dd b) { return a.hi_ == b.hi_ && a.lo_ == b.lo_; }
    friend bool operator!=(Dd a, Dd b) { return !(a == b); }
    friend bool operator<(Dd a, Dd b) {
        return a.hi_ < b.hi_ || (a.hi_ == b.hi_ && a.lo_ < b.lo_);
    }
    friend bool operator>(Dd a, Dd b) { return b < a; }
    friend bool operator<=(Dd a, Dd b) { return !(b < a); }
    friend bool operator>=(Dd a, Dd b) { return !(a < b); }

  private:
    double hi_, lo_;
};

inline double to_double(Dd x) { return x.hi(); }
inline double to_double(double x) { return x; }

inline Dd abs(Dd x) { return x.hi() < 0.0 || (x.hi() == 0.0 && x.lo() < 0.0) ? -x : x; }
inline bool isfinite(Dd x) { return std::isfinite(x.hi()); }

inline Dd sqrt(Dd x) {
    if (x.hi() == 0.0) return Dd(0.0);
    double y = std::sqrt(x.hi());
    // One Newton step on y ~ sqrt(x): y + (x - y^2) / (2 y).
    Dd r = (x - Dd::prod2(y, y)) / Dd(2.0 * y);
    return Dd(y) + r;
}

namespace dd_const {
// 2^-53-split high/low parts of the constants.
inline constexpr Dd ln2{6.931471805599453e-01, 2.3190468138462996e-17};
inline constexpr Dd pi{3.141592653589793e+00, 1.2246467991473532e-16};
inline constexpr Dd e{2.718281828459045e+00, 1.4456468917292502e-16};
}  // namespace dd_const

// exp: reduce by powers of ln 2, then x/2^9, Taylor, square back.
inline Dd exp(Dd x) {
    if (x.hi() > 709.0) return Dd(std::numeric_limits<double>::infinity());
    if (x.hi() < -745.0) return Dd(0.0);
    double k = std::nearbyint(x.hi() / dd_const::ln2.hi());
    Dd r = x - dd_const::ln2 * Dd(k);
    constexpr int kSquarings = 9;
    r = r / Dd(double(1 << kSquarings));
    // Taylor to order 14: |r| < ln2/1024 so term 14 < 1e-46.
    Dd sum(1.0), term(1.0);
    for (int n = 1; n <= 14; ++n) {
        term = term * r / Dd(double(n));
        sum = sum + term;
    }
    Dd p = sum - Dd(1.0);
    for (int i = 0; i < kSquarings; ++i) p = p * Dd(2.0) + p * p;
    Dd y = p + Dd(1.0);
    return y * Dd(std::ldexp(1.0, int(k)));
}

// log: double estimate + two Newton corrections y <- y + x e^-y - 1.
inline Dd log(Dd x) {
    double y0 = std::log(x.hi());
    Dd y(y0);
    for (int i = 0; i < 2; ++i) y = y + x * exp(-y) - Dd(1.0);
    return y;
}

inline Dd expm1(Dd x) {
    if (std::abs(x.hi()) > 0.5) return exp(x) - Dd(1.0);
    constexpr int kSquarings = 6;
    Dd r = x / Dd(double(1 << kSquarings));
    Dd sum(0.0), term(1.0);
    for (int n = 1; n <= 16; ++n) {
        term = term * r / Dd(double(n));
        sum = sum + term;
    }
    for (int i = 0; i < kSquarings; ++i) sum = sum * Dd(2.0) + sum * sum;
    return sum;
}

inline Dd log1p(Dd x) {
    if (std::abs(x.hi()) > 0.5) return log(Dd(1.0) + x);
    // Newton on f(y) = expm1(y) - x, seeded with the double log1p.  The
    // expm1 residual stays fully accurate where exp(y) - 1 would cancel.
    Dd y(std::log1p(x.hi()));
    for (int i = 0; i < 2; ++i) {
        Dd e = expm1(y);
        y = y - (e - x) / (e + Dd(1.0));
    }
    return y;
}

inline Dd pow(Dd x, Dd y) { return exp(y * log(x)); }
inline Dd pow(Dd x, double y) { return exp(Dd(y) * log(x)); }

namespace detail {

// Taylor kernels on |r| <= pi/4, where 15 terms reach below 1e-33.
inline Dd sin_kernel(Dd r) {
    Dd sum = r, term = r, r2 = r * r;
    for (int n = 1; n <= 14; ++n) {
        term = -term * r2 / Dd(double(2 * n) * double(2 * n + 1));
        sum = sum + term;
    }
    return sum;
}

inline Dd cos_kernel(Dd r) {
    Dd sum = Dd(1.0), term = Dd(1.0), r2 = r * r;
    for (int n = 1; n <= 15; ++n) {
        term = -term * r2 / Dd(double(2 * n - 1) * double(2 * n));
        sum = sum + term;
    }
    return sum;
}

// Quadrant index and remainder of x mod pi/2.  Range is modest in this
// codebase (phase angles), so a single compensated reduction suffices.
inline int trig_reduce(Dd x, Dd& r) {
    Dd half_pi = dd_const::pi * Dd(0.5);
    double k = std::nearbyint(x.hi() / half_pi.hi());
    r = x - half_pi * Dd(k);
    return int(k - 4.0 * std::floor(k / 4.0));
}

}  // namespace detail

inline Dd sin(Dd x) {
    Dd r;
    switch (detail::trig_reduce(x, r)) {
        case 0: return detail::sin_kernel(r);
        case 1: return detail::cos_kernel(r);
        case 2: return -detail::sin_kernel(r);
        default: return -detail::cos_kernel(r);
    }
}

inline Dd cos(Dd x) {
    Dd r;
    switch (detail::trig_reduce(x, r)) {
        case 0: return detail::cos_kernel(r);
        case 1: return -detail::sin_kernel(r);
        case 2: return -detail::cos_kernel(r);
        default: return detail::sin_kernel(r);
    }
}

inline Dd max(Dd a, Dd b) { return a < b ? b : a; }
inline Dd min(Dd a, Dd b) { return a < b ? a : b; }

}  // namespace diskbif
