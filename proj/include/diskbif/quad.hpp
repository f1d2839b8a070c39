#pragma once

#include <array>
#include <cmath>

#include "diskbif/error.hpp"

namespace diskbif {

// Adaptive Simpson with the classical (S_left + S_right - S_whole)/15
// correction as both error estimate and endgame refinement.
namespace detail {

template <class F>
double simpson_rec(const F& f, double a, double fa, double b, double fb, double m, double fm,
                   double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    bool splittable = a < lm && lm < m && m < rm && rm < b;
    if (depth <= 0 || !splittable || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <class F>
double integrate_adaptive(const F& f, double a, double b, double tol, int max_depth = 48) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// 8-point Gauss-Legendre panel on [a, b]; exact for degree <= 15, used for
// the smooth single-lobe pieces of oscillatory kernels.
template <class F>
double gauss8(const F& f, double a, double b) {
    static constexpr std::array<double, 4> x = {
        0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    static constexpr std::array<double, 4> w = {
        0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
        acc += w[i] * (f(c + h * x[i]) + f(c - h * x[i]));
    return acc * h;
}

}  // namespace diskbif
