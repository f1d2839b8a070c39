#pragma once

#include <cmath>

namespace diskbif {

// Positive real carried as its natural log, for quantities whose magnitude
// exceeds double range (tail integrals of e^g, products f * F).
struct LogPos {
    double ln;  // log of the value; value = exp(ln)

    static LogPos from_value(double v) { return {std::log(v)}; }
    static LogPos from_log(double l) { return {l}; }

    double value() const { return std::exp(ln); }

    friend LogPos operator*(LogPos a, LogPos b) { return {a.ln + b.ln}; }
    friend LogPos operator/(LogPos a, LogPos b) { return {a.ln - b.ln}; }

    // a + b computed as max * (1 + e^{-gap}).
    friend LogPos operator+(LogPos a, LogPos b) {
        double hi = a.ln > b.ln ? a.ln : b.ln;
        double lo = a.ln > b.ln ? b.ln : a.ln;
        return {hi + std::log1p(std::exp(lo - hi))};
    }
    // a - b for a > b; caller guarantees positivity.
    friend LogPos operator-(LogPos a, LogPos b) {
        return {a.ln + std::log1p(-std::exp(b.ln - a.ln))};
    }

    friend bool operator<(LogPos a, LogPos b) { return a.ln < b.ln; }
};

// Decimal split of a log-scale value: value = mantissa * 10^exp10 with
// mantissa in [1, 10). Used for reporting magnitudes outside double range.
struct DecimalMag {
    double mantissa;
    long long exp10;
};

inline DecimalMag decimal_mag(double ln_value) {
    double l10 = ln_value / std::log(10.0);
    long long e = (long long)std::floor(l10);
    return {std::pow(10.0, l10 - (double)e), e};
}

}  // namespace diskbif
