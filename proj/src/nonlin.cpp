#include "diskbif/nonlin.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <utility>

#include "diskbif/error.hpp"
#include "diskbif/quad.hpp"

namespace diskbif {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string str(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Polynomial extrapolation of (x_j, v_j) to x = 0 via a Neville tableau.
// Points are used in order of decreasing x, so the deepest stage leans on
// the most asymptotic samples.  Nearly coincident abscissas stop the
// descent instead of amplifying roundoff.
struct Extrapolation {
    double value = 0.0;
    double spread = 0.0;
    int depth = 0;
    std::vector<double> stages;  // stages[m] = depth-m result; stages[0] is the rawest sample
};

Extrapolation extrapolate_to_zero(std::vector<double> x, std::vector<double> v, int max_depth) {
    const size_t n = x.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] > x[b]; });
    std::vector<double> xs(n), t(n);
    for (size_t i = 0; i < n; ++i) {
        xs[i] = x[order[i]];
        t[i] = v[order[i]];
    }
    Extrapolation out;
    out.value = t[n - 1];
    std::vector<double> stage_values = {t[n - 1]};
    for (int m = 1; m <= max_depth && (size_t)m < n; ++m) {
        bool degenerate = false;
        std::vector<double> nt(n - m);
        for (size_t j = 0; j + m < n; ++j) {
            double dx = xs[j] - xs[j + m];
            if (!(std::abs(dx) > 1e-9 * std::abs(xs[j]))) {
                degenerate = true;
                break;
            }
            nt[j] = (xs[j] * t[j + 1] - xs[j + m] * t[j]) / dx;
        }
        if (degenerate) break;
        t = std::move(nt);
        double val = t[t.size() - 1];
        if (!std::isfinite(val)) break;
        stage_values.push_back(val);
        out.depth = m;
    }
    out.value = stage_values.back();
    if (stage_values.size() >= 2)
        out.spread = std::abs(stage_values.back() - stage_values[stage_values.size() - 2]);
    out.stages = std::move(stage_values);
    return out;
}

struct LimitEstimate {
    double value = 0.0;
    double err = 0.0;
};

// Stage-adaptive limit of a sequence sampled at abscissas x -> 0, where each
// sample carries absolute noise sigma.  Stage 0 is the rawest sample; stage
// m >= 1 the depth-m extrapolant.  On a clustered grid every stage multiplies
// the noise by roughly x/dx, so sequences that converge faster than any
// polynomial in x (and would have their residual noise amplified for no
// gain) settle on a shallow stage.
LimitEstimate select_stage_limit(const std::vector<double>& x, const std::vector<double>& v,
                                 double sigma) {
    const size_t n = x.size();
    Extrapolation ex = extrapolate_to_zero(x, v, 3);
    double gap_min = std::numeric_limits<double>::infinity();
    double x_hi = 0.0, x_lo = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < n; ++i) gap_min = std::min(gap_min, std::abs(x[i] - x[i + 1]));
    for (double xi : x) {
        x_hi = std::max(x_hi, xi);
        x_lo = std::min(x_lo, xi);
    }
    LimitEstimate best;
    best.value = ex.stages[0];
    const double dv = n >= 2 ? std::abs(v[n - 1] - v[n - 2]) : 0.0;
    // A c*x residual shows up in consecutive samples as c*dx; scale back up.
    best.err = dv * (x_lo / gap_min) + sigma;
    const double amp = x_hi / gap_min;
    double noise = sigma;
    for (size_t m = 1; m < ex.stages.size(); ++m) {
        noise *= amp;
        if (!std::isfinite(ex.stages[m]) || !std::isfinite(noise)) break;
        const double err = std::abs(ex.stages[m] - ex.stages[m - 1]) + noise;
        if (err < best.err) {
            best.err = err;
            best.value = ex.stages[m];
        }
    }
    return best;
}

// Least-squares slope of y against x.
double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= (double)n;
    my /= (double)n;
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

// Point t >= s with g(t) = g(s) + delta, by bisection on a bracket whose
// upper end s + delta/g'(s) is valid whenever g is convex.
double advance_by_delta_g(const Expr& g, double s, double gs, double gp, double delta) {
    double lo = s;
    double hi = s + delta / gp;
    double ghi = eval_value(g, hi);
    // Non-convex tails can undershoot the bracket; widen geometrically.
    int guard = 0;
    while (!(ghi >= gs + delta) && guard++ < 200) {
        hi = s + (hi - s) * 2.0;
        ghi = eval_value(g, hi);
        if (std::isinf(ghi)) break;
    }
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double gm = eval_value(g, mid);
        if (gm < gs + delta)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// F(s) e^{g(s)}: the scaled upper tail integral int_s^inf e^{g(s)-g(t)} dt,
// by adaptive quadrature over the window g(t) <= g(s) + 38 plus a first
// order Laplace tail beyond it.  Quadrature-only on purpose: the B-route
// estimators need values independent of the jet expansion of H.
double tail_scaled_quadrature(const NonlinearitySpec& spec, double s) {
    const Expr& g = spec.exponent();
    const double gs = eval_value(g, s);
    Jet3 jg = spec.exponent_jet(s);
    const double gp = jg.d1;
    const double tm = advance_by_delta_g(g, s, gs, gp, 38.0);
    auto integrand = [&](double t) { return std::exp(gs - eval_value(g, t)); };
    // The integrand carries ~eps*|g| of exponent-cancellation noise; the
    // tolerance must sit above noise*span or the refinement never converges.
    const double scale = std::min(1.0 / gp, tm - s);
    const double noise = kEps * std::max(1.0, std::abs(gs));
    const double tol = std::max(1e-13 * scale, noise * (tm - s));
    double phi = integrate_adaptive(integrand, s, tm, tol);
    Jet3 jm = spec.exponent_jet(tm);
    const double dm = eval_value(g, tm) - gs;
    phi += std::exp(-dm) / jm.d1;
    return phi;
}

// Fbar(s) e^{-g(s)}: the scaled lower primitive int_{s_ref}^s e^{g(t)-g(s)} dt
// with s_ref = max(0, s_floor), again quadrature-only.
double primitive_scaled_quadrature(const NonlinearitySpec& spec, double s) {
    const Expr& g = spec.exponent();
    const double s_ref = std::max(0.0, spec.s_floor());
    if (!(s > s_ref)) return 0.0;
    const double gs = eval_value(g, s);
    Jet3 jg = spec.exponent_jet(s);
    const double gp = jg.d1;
    // Lower edge of the window that contributes above e^{-38}.
    double t_lo = s_ref;
    double g_lo = eval_value(g, t_lo);
    if (g_lo < gs - 38.0) {
        double lo = s_ref, hi = s;
        for (int i = 0; i < 80; ++i) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (eval_value(g, mid) < gs - 38.0)
                lo = mid;
            else
                hi = mid;
        }
        t_lo = lo;
    }
    auto integrand = [&](double t) { return std::exp(eval_value(g, t) - gs); };
    const double scale = std::min(1.0 / gp, s - t_lo);
    const double noise = kEps * std::max(1.0, std::abs(gs));
    const double tol = std::max(1e-13 * scale, noise * (s - t_lo));
    double phi = integrate_adaptive(integrand, t_lo, s, tol);
    if (t_lo > s_ref) {
        // Descending Laplace tail below the window.
        Jet3 jl = spec.exponent_jet(t_lo);
        if (jl.d1 > 0.0) phi += std::exp(eval_value(g, t_lo) - gs) / jl.d1;
    }
    return phi;
}

}  // namespace

// ---------------------------------------------------------------------------
// NonlinearitySpec

double NonlinearitySpec::log_f(double s) const {
    LogJet<double> lj = eval_logjet(g_, s);
    if (lj.sign == 0) return 0.0;
    double v = lj.value();
    if (!std::isfinite(v))
        throw numeric_error("g(" + str(s) + ") exceeds double range");
    return v;
}

LogJet<double> NonlinearitySpec::exponent_log_jet(double s) const { return eval_logjet(g_, s); }

Jet3 NonlinearitySpec::exponent_jet(double s) const { return eval_jet(g_, s); }

double NonlinearitySpec::s_of_log_g(double target) const {
    const double lo_s = s_floor_ * (1.0 + 1e-9) + 1e-300;
    double t_lo = std::log(lo_s);
    double t_hi = std::log(s_cap_);
    auto ell = [&](double t) { return eval_logjet(g_, std::exp(t)).ell; };
    if (ell(t_lo) >= target) return lo_s;
    if (ell(t_hi) < target)
        throw numeric_error("log g target " + str(target) + " beyond the resolvable range");
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (t_lo + t_hi);
        if (mid <= t_lo || mid >= t_hi) break;
        if (ell(mid) < target)
            t_lo = mid;
        else
            t_hi = mid;
    }
    return std::exp(0.5 * (t_lo + t_hi));
}

void NonlinearitySpec::finalize() {
    g1_ = differentiate(g_);
    g2_ = differentiate(g1_);
    g3_ = differentiate(g2_);
    h_ = mk_div(mk_mul(g_, g2_), mk_mul(g1_, g1_));
    critical_exponential_ = h_->kind == ExprKind::constant && h_->value == 0.0;

    // A point is admissible when g > 0 and g' > 0 evaluate cleanly.  A +inf
    // log-magnitude only means g overflowed double, which is still a valid
    // positive value.
    auto bad = [&](double s) -> bool {
        try {
            LogJet<double> a = eval_logjet(g_, s);
            if (a.sign <= 0 || std::isnan(a.ell)) return true;
            LogJet<double> b = eval_logjet(g1_, s);
            if (b.sign <= 0 || std::isnan(b.ell)) return true;
            return false;
        } catch (const std::exception&) {
            return true;
        }
    };

    double lo_bad = -1.0, hi_good = -1.0;
    {
        double prev = 0.0;  // conceptual bad point at s = 0
        bool found_good = false;
        double span_lo = 1e-6, span_hi = 1e3;
        for (int round = 0; round < 2 && !found_good; ++round) {
            int n = 400;
            double last_bad = prev;
            double first_good_after = -1.0;
            for (int j = 0; j <= n; ++j) {
                double sj = span_lo * std::pow(span_hi / span_lo, (double)j / n);
                if (bad(sj)) {
                    last_bad = sj;
                    first_good_after = -1.0;
                } else if (first_good_after < 0.0) {
                    first_good_after = sj;
                }
            }
            if (first_good_after > 0.0) {
                lo_bad = last_bad;
                hi_good = first_good_after;
                found_good = true;
            } else {
                prev = span_hi;
                span_lo = span_hi;
                span_hi = 1e9;
            }
        }
        if (!found_good)
            throw config_error("no admissible domain: g > 0 and g' > 0 never hold for s <= 1e9");
    }
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo_bad + hi_good);
        if (mid <= lo_bad || mid >= hi_good) break;
        if (bad(mid))
            lo_bad = mid;
        else
            hi_good = mid;
    }
    s_floor_ = hi_good;

    // Verification grid: positivity and monotonicity must hold on the whole
    // range the numerical routines will touch, not just at one point.
    {
        double lo = s_floor_ * (1.0 + 1e-6) + 1e-12;
        double hi = std::max(1e3, s_floor_ * 100.0);
        bool convex = true;
        for (int j = 0; j <= 64; ++j) {
            double sj = lo * std::pow(hi / lo, (double)j / 64.0);
            if (bad(sj))
                throw config_error("g > 0 and g' > 0 fail inside the admissible range at s = " +
                                   str(sj));
            try {
                if (eval_logjet(g2_, sj).sign <= 0) convex = false;
            } catch (const std::exception&) {
                convex = false;
            }
        }
        singular_admissible_ = convex && !critical_exponential_;
    }

    // Jet-resolvability cap: the largest s (hence log g) at which the jets
    // of H and the log-magnitude of g still evaluate to finite doubles.
    {
        auto jets_ok = [&](double s) -> bool {
            try {
                LogJet<double> lg = eval_logjet(g_, s);
                if (lg.sign <= 0 || !std::isfinite(lg.ell) || lg.overflow) return false;
                if (critical_exponential_) return true;
                LogJet<double> lh = eval_logjet(h_, s);
                if (lh.overflow || std::isnan(lh.ell)) return false;
                if (!std::isfinite(lh.u1) || !std::isfinite(lh.u2) || !std::isfinite(lh.u3))
                    return false;
                return true;
            } catch (const std::exception&) {
                return false;
            }
        };
        double s0 = std::max(2.0 * s_floor_, s_floor_ + 1.0);
        if (!jets_ok(s0)) {
            // Climb until jets resolve; specs whose jets never resolve are
            // rejected later by the routines that need them.
            int guard = 0;
            while (!jets_ok(s0) && guard++ < 64) s0 *= 2.0;
        }
        double lo = s0, hi = s0;
        while (hi < 1e300 && jets_ok(hi)) {
            lo = hi;
            hi = std::min(hi * 32.0, 1e300);
            if (hi == lo) break;
        }
        if (jets_ok(hi)) {
            s_cap_ = hi;
        } else {
            for (int i = 0; i < 100; ++i) {
                double mid = std::exp(0.5 * (std::log(lo) + std::log(hi)));
                if (mid <= lo || mid >= hi) break;
                if (jets_ok(mid))
                    lo = mid;
                else
                    hi = mid;
            }
            s_cap_ = lo;
        }
        log_g_cap_ = eval_logjet(g_, s_cap_).ell;
    }
}

NonlinearitySpec parse_nonlinearity(const std::string& source,
                                    const std::map<std::string, double>& params) {
    NonlinearitySpec sp;
    sp.params_ = params;
    const std::string name = trim(source);

    auto need = [&](const char* pname) -> double {
        auto it = params.find(pname);
        if (it == params.end())
            throw config_error("catalog entry '" + name + "' requires parameter " +
                               std::string(pname));
        return it->second;
    };
    auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
        for (const auto& kv : params) {
            bool ok = false;
            for (const char* a : allowed)
                if (kv.first == a) ok = true;
            if (!ok)
                throw config_error("unknown parameter '" + kv.first + "' for catalog entry '" +
                                   name + "'");
        }
    };

    const Expr s = mk_var();
    if (name == "f1") {
        reject_unknown({"B"});
        const double B = need("B");
        if (!(B > 1.0))
            throw config_error("parameter B out of range for 'f1': require B > 1 (got " + str(B) +
                               ")");
        const double Bp = B / (B - 1.0);
        sp.g_ = mk_add(mk_sub(mk_pow(s, mk_const(Bp)), mk_mul(mk_const(2.0 * Bp - 1.0), mk_log(s))),
                       mk_const(std::log(4.0 / (B * Bp))));
        sp.catalog_id_ = name;
    } else if (name == "f2") {
        reject_unknown({});
        sp.g_ = mk_add(mk_sub(mk_exp(s), mk_mul(mk_const(2.0), s)), mk_const(std::log(4.0)));
        sp.catalog_id_ = name;
    } else if (name == "exp_pow") {
        reject_unknown({"p"});
        const double p = need("p");
        if (!(p > 1.0))
            throw config_error("parameter p out of range for 'exp_pow': require p > 1 (got " +
                               str(p) + ")");
        sp.g_ = mk_pow(s, mk_const(p));
        sp.catalog_id_ = name;
    } else if (name == "pow_sum") {
        reject_unknown({"p", "r"});
        const double p = need("p");
        const double r = need("r");
        if (!(p > 1.0))
            throw config_error("parameter p out of range for 'pow_sum': require p > 1 (got " +
                               str(p) + ")");
        if (!(r > 0.0 && r < p))
            throw config_error("parameter r out of range for 'pow_sum': require 0 < r < p (got " +
                               str(r) + ")");
        sp.g_ = mk_add(mk_pow(s, mk_const(p)), mk_pow(s, mk_const(r)));
        sp.catalog_id_ = name;
    } else if (name == "pow_log") {
        reject_unknown({"p", "i"});
        const double p = need("p");
        const double i = need("i");
        if (!(p > 1.0))
            throw config_error("parameter p out of range for 'pow_log': require p > 1 (got " +
                               str(p) + ")");
        sp.g_ = mk_mul(mk_pow(s, mk_const(p)), mk_pow(mk_log(s), mk_const(i)));
        sp.catalog_id_ = name;
    } else if (name == "double_exp") {
        reject_unknown({});
        sp.g_ = mk_exp(mk_exp(s));
        sp.catalog_id_ = name;
    } else if (name == "triple_exp") {
        reject_unknown({});
        sp.g_ = mk_exp(mk_exp(mk_exp(s)));
        sp.catalog_id_ = name;
    } else {
        std::set<std::string> used;
        sp.g_ = parse_expr(source, params, &used);
        for (const auto& kv : params)
            if (!used.count(kv.first))
                throw config_error("parameter '" + kv.first +
                                   "' is not referenced by the expression");
        if (!depends_on_s(sp.g_))
            throw config_error("expression does not depend on s");
    }

    sp.finalize();
    return sp;
}

Jet3 taylor_jet(const NonlinearitySpec& spec, double s) { return eval_jet(spec.exponent(), s); }

CurvatureValue eval_H(const NonlinearitySpec& spec, double s) {
    if (spec.critical_exponential())
        throw config_error(
            "critical-exponential nonlinearity: H vanishes identically and the "
            "singular-solution routines are inadmissible");
    // Log-space evaluation: H must stay computable out to the resolvability
    // cap, far beyond where g itself materializes as a double.
    Jet3 jh = to_jet(eval_logjet(spec.curvature_ratio(), s), s);
    return {jh.v, jh.d1, jh.d2};
}

// ---------------------------------------------------------------------------
// estimate_q

QEstimate estimate_q(const NonlinearitySpec& spec) {
    if (spec.critical_exponential())
        throw config_error(
            "critical-exponential nonlinearity: H vanishes identically and the "
            "singular-solution routines are inadmissible");
    const double cap = spec.max_resolvable_log_g();
    const double gamma0 = std::min(3.0e5, cap - 14.0 * kLn2 - 2.0);
    if (!(gamma0 > 3.0))
        throw numeric_error("resolvable log g range too small to estimate q (cap = " + str(cap) +
                            ")");

    QEstimate out;
    for (int k = 4; k <= 14; ++k) {
        const double sk = spec.s_of_log_g(gamma0 + k * kLn2);
        const double gamma = spec.exponent_log_jet(sk).ell;
        const double h = to_jet(eval_logjet(spec.curvature_ratio(), sk), sk).v;
        if (!(h > 0.0) || !std::isfinite(h))
            throw numeric_error("H is not positive on the estimation grid (H(" + str(sk) +
                                ") = " + str(h) + ")");
        out.samples.push_back({sk, gamma, h});
    }

    const size_t n = out.samples.size();
    std::vector<double> x(n), qv(n);
    for (size_t i = 0; i < n; ++i) {
        x[i] = 1.0 / out.samples[i].log_g;
        qv[i] = 1.0 / out.samples[i].h;
    }
    const double q_last = qv[n - 1];
    double q_min = qv[0], q_max = qv[0];
    for (double v : qv) {
        q_min = std::min(q_min, v);
        q_max = std::max(q_max, v);
    }
    const double range = q_max - q_min;

    // Oscillation guard: alternating differences of non-trivial size mean
    // H has no limit along the grid.
    {
        int flips = 0;
        double prev_d = 0.0;
        const double thresh = 1e-3 * (1.0 + std::abs(q_last));
        for (size_t i = 1; i < n; ++i) {
            double d = qv[i] - qv[i - 1];
            if (std::abs(d) < thresh) continue;
            if (prev_d != 0.0 && d * prev_d < 0.0) ++flips;
            prev_d = d;
        }
        if (flips >= 3 && range > 0.05 * (1.0 + std::abs(q_last))) {
            std::ostringstream os;
            os << "H does not converge along the estimation grid; samples:";
            for (const auto& smp : out.samples)
                os << " (s=" << smp.s << ", H=" << smp.h << ")";
            throw numeric_error(os.str());
        }
    }

    const double gmax = out.samples.back().log_g;
    // Log-space cancellation noise in one H sample, mapped to q units.
    const double sigma = 32.0 * kEps * gmax * (1.0 + q_last * q_last);
    // Candidate at stage 0: the rawest sample, with a c/log(g) residual
    // bound calibrated from the observed range across ten doublings of g.
    // Candidates at stage m >= 1: Neville extrapolants in x = 1/log g.
    // On this grid the abscissas are clustered, so each stage amplifies
    // the per-sample noise by roughly x/dx; the estimate picks the stage
    // whose combined truncation-plus-noise bound is smallest.
    Extrapolation ex = extrapolate_to_zero(x, qv, 3);
    double gap_min = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < n; ++i) gap_min = std::min(gap_min, std::abs(x[i] - x[i + 1]));
    const double amp = x[0] / gap_min;

    const double floor_ci = 1e-15 * (1.0 + std::abs(q_last));
    double best_q = q_last;
    double best_err = (range + sigma) * gmax / (10.0 * kLn2) + sigma;
    double noise = sigma;
    for (size_t m = 1; m < ex.stages.size(); ++m) {
        noise *= amp;
        if (!std::isfinite(ex.stages[m]) || !std::isfinite(noise)) break;
        const double err = std::abs(ex.stages[m] - ex.stages[m - 1]) + noise;
        if (err < best_err) {
            best_err = err;
            best_q = ex.stages[m];
        }
    }
    out.q = best_q;
    out.ci = std::max(best_err, floor_ci);
    return out;
}

// ---------------------------------------------------------------------------
// Tail integral and primitive

LogPos tail_integral(const NonlinearitySpec& spec, double s) {
    if (!(s >= spec.s_floor()))
        throw config_error("tail integral requested below the admissible floor s = " +
                           str(spec.s_floor()));
    Jet3 jg = spec.exponent_jet(s);
    Jet3 jh = eval_jet(spec.curvature_ratio(), s);
    const double g = jg.v, gp = jg.d1, h = jh.v, dh = jh.d1;
    if (std::isfinite(g) && g >= 1e4 * std::max(1.0, std::abs(h))) {
        // Closed form: relative truncation below 1e-11 at this size.
        const double corr = 1.0 - h / g - (dh / (g * gp) - h / (g * g) - h * h / (g * g));
        return LogPos::from_log(-g - std::log(gp) + std::log(corr));
    }
    const double gs = eval_value(spec.exponent(), s);
    const double phi = tail_scaled_quadrature(spec, s);
    return LogPos::from_log(std::log(phi) - gs);
}

LogPos primitive_integral(const NonlinearitySpec& spec, double s) {
    const double s_ref = std::max(0.0, spec.s_floor());
    if (!(s > s_ref)) return LogPos::from_log(-std::numeric_limits<double>::infinity());
    Jet3 jg = spec.exponent_jet(s);
    Jet3 jh = eval_jet(spec.curvature_ratio(), s);
    const double g = jg.v, gp = jg.d1, h = jh.v, dh = jh.d1;
    if (std::isfinite(g) && g >= 1e4 * std::max(1.0, std::abs(h))) {
        const double corr = 1.0 + h / g - dh / (g * gp) + (h + h * h) / (g * g);
        return LogPos::from_log(g - std::log(gp) + std::log(corr));
    }
    const double gs = eval_value(spec.exponent(), s);
    const double phi = primitive_scaled_quadrature(spec, s);
    if (!(phi > 0.0)) return LogPos::from_log(-std::numeric_limits<double>::infinity());
    return LogPos::from_log(std::log(phi) + gs);
}

// ---------------------------------------------------------------------------
// criticality_report

CriticalityReport criticality_report(const NonlinearitySpec& spec) {
    if (spec.critical_exponential())
        throw config_error(
            "critical-exponential nonlinearity: H vanishes identically and the "
            "singular-solution routines are inadmissible");

    CriticalityReport rep;
    QEstimate qe = estimate_q(spec);
    rep.q = qe.q;
    rep.H_samples = qe.samples;

    // ---- B route: quadrature-backed estimates of 1/q over moderate g ----
    // Windows chosen so that double-precision cancellation in 1 - f'F and in
    // the second-order bracket stays far below the quantities themselves.
    std::vector<double> xb, b1v, b2v, rv;
    double sig_b1 = 0.0, sig_b2 = 0.0, sig_r = 0.0;
    {
        const double glo = 3.4, ghi = std::min(8.9, spec.max_resolvable_log_g() - 1.0);
        if (!(ghi > glo + 1.0))
            throw numeric_error("resolvable log g range too small for the B-route estimates");
        const int nb = 12;
        for (int j = 0; j < nb; ++j) {
            const double target = glo + (ghi - glo) * (double)j / (nb - 1);
            const double sj = spec.s_of_log_g(target);
            const double gs = eval_value(spec.exponent(), sj);
            Jet3 jg = spec.exponent_jet(sj);
            const double gp = jg.d1;
            const double hog = jg.d2 / (jg.d1 * jg.d1);  // g''/g'^2 = H/g
            const double phi = tail_scaled_quadrature(spec, sj);
            const double neg_log_F = gs - std::log(phi);
            const double fpF = gp * phi;
            b1v.push_back(neg_log_F * (1.0 - fpF));
            // The bracket is O(H/g)^2; grouping as below keeps the two
            // near-1 factors from cancelling at full magnitude.
            b2v.push_back(fpF * neg_log_F * neg_log_F * ((fpF - 1.0) + fpF * hog));
            const double phibar = primitive_scaled_quadrature(spec, sj);
            rv.push_back((gs + std::log(phibar)) * (1.0 - gp * phibar) + 1.0);
            xb.push_back(1.0 / std::log(gs));
            rep.H_samples.push_back({sj, std::log(gs), eval_jet(spec.curvature_ratio(), sj).v});
            // Per-sample noise: quadrature tolerance plus the eps*g
            // cancellation in the exponent, scaled through each estimate.
            const double eta = 40.0 * kEps * std::max(1.0, gs) + 1e-12;
            sig_b1 = neg_log_F * eta;
            sig_b2 = 2.0 * fpF * neg_log_F * neg_log_F * eta;
            sig_r = (std::abs(gs + std::log(phibar)) + 1.0) * eta;
        }
    }
    LimitEstimate e1 = select_stage_limit(xb, b1v, sig_b1);
    LimitEstimate e2 = select_stage_limit(xb, b2v, sig_b2);
    LimitEstimate er = select_stage_limit(xb, rv, sig_r);
    rep.B1_limit = e1.value;
    rep.B2_limit = e2.value;
    rep.fbar_limit = er.value;
    // Combined uncertainty: the jet route plus both quadrature routes,
    // mapped into q units through q = 1/H.
    rep.q_ci = std::max({qe.ci, rep.q * rep.q * e1.err, rep.q * rep.q * e2.err, 1e-12});

    // Supercritical classification: the defining condition is q < 2.  The
    // high-anchor H route carries the tight interval; the quadrature route,
    // which converges only polynomially for some families, must not place
    // the limit verifiably on the other side of the threshold.
    const double q_band = std::max(rep.q_ci, 2e-2);
    rep.supercritical = rep.q + q_band < 2.0 && er.value - er.err < 0.5 - 5e-3;

    std::sort(rep.H_samples.begin(), rep.H_samples.end(),
              [](const HSample& a, const HSample& b) { return a.s < b.s; });

    // ---- growth condition: liminf s g'/g > 1 ----
    {
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& smp : rep.H_samples) {
            const double u1 = spec.exponent_log_jet(smp.s).u1;
            margin = std::min(margin, smp.s * u1 - 1.0);
        }
        rep.g1_margin = margin;
        rep.g1_ok = std::isfinite(margin) && margin > 0.0;
    }

    // ---- derivative control: |H^(k)| <= C (g'/g)^k, k = 1..3 ----
    {
        std::vector<std::pair<double, double>> cs;  // (s, C at s)
        for (const auto& smp : rep.H_samples) {
            const double lu1 = std::log(spec.exponent_log_jet(smp.s).u1);
            Jet3 jh = eval_jet(spec.curvature_ratio(), smp.s);
            const double d[3] = {jh.d1, jh.d2, jh.d3};
            double c_here = 0.0;
            for (int k = 1; k <= 3; ++k) {
                const double lc = std::log(std::abs(d[k - 1])) - k * lu1;
                c_here = std::max(c_here, std::exp(lc));
            }
            cs.emplace_back(smp.s, c_here);
        }
        double head = 0.0, tail = 0.0, all = 0.0;
        for (size_t i = 0; i < cs.size(); ++i) {
            all = std::max(all, cs[i].second);
            if (i < cs.size() / 2)
                head = std::max(head, cs[i].second);
            else
                tail = std::max(tail, cs[i].second);
        }
        rep.g2_margin = all;
        rep.g2_ok = std::isfinite(all) && tail <= 2.0 * head + 0.5;
    }

    // ---- F3 equivalence: sqrt(g)(H - 1/q) -> 0 and sqrt(g) H' g/g' -> 0 ----
    {
        const double wlo = 8.0;
        const double whi = std::min(30.0, 0.5 * spec.max_resolvable_log_g());
        std::vector<double> gam1, y1, gam2, y2;
        const int nw = 12;
        for (int j = 0; j < nw; ++j) {
            const double target = wlo + (whi - wlo) * (double)j / (nw - 1);
            const double sj = spec.s_of_log_g(target);
            LogJet<double> lg = spec.exponent_log_jet(sj);
            Jet3 jh = eval_jet(spec.curvature_ratio(), sj);
            const double ell = lg.ell, u1 = lg.u1;
            const double dev = jh.v - 1.0 / rep.q;
            const double mask1 =
                std::max(1e-13 * (1.0 + std::abs(jh.v)), 2.0 * rep.q_ci / (rep.q * rep.q));
            if (std::abs(dev) > mask1) {
                gam1.push_back(ell);
                y1.push_back(0.5 * ell + std::log(std::abs(dev)));
            }
            const double mask2 = 64.0 * kEps * (1.0 + std::abs(jh.v)) * u1;
            if (std::abs(jh.d1) > mask2) {
                gam2.push_back(ell);
                y2.push_back(0.5 * ell + std::log(std::abs(jh.d1)) - std::log(u1));
            }
        }
        auto to_zero = [](const std::vector<double>& xs, const std::vector<double>& ys) {
            if (ys.size() < 3) return true;  // signal at or below noise: treat as vanishing
            return lsq_slope(xs, ys) < -1e-3 && ys.back() <= ys.front();
        };
        rep.f3_equiv = to_zero(gam1, y1) && to_zero(gam2, y2);
    }

    return rep;
}

}  // namespace diskbif
