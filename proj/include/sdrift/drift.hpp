#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sdrift/errors.hpp"

namespace sdrift {

/// Log-spaced abscissae lo = x_0 < ... < x_{n-1} = hi.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    detail::require_usage(lo > 0.0 && hi >= lo, "log_grid: need 0 < lo <= hi");
    detail::require_usage(n >= 1, "log_grid: need at least one point");
    std::vector<double> xs(n);
    if (n == 1) {
        xs[0] = lo;
        return xs;
    }
    const double a = std::log(lo);
    const double step = (std::log(hi) - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) xs[i] = std::exp(a + step * static_cast<double>(i));
    xs.front() = lo;
    xs.back() = hi;
    return xs;
}

inline constexpr std::size_t kDefaultGridPoints = 1000;
// Potter and sandwich grids span this many decades beyond M.
inline constexpr double kCheckDecades = 8.0;

struct MidSegment {
    enum class Kind { Constant, LinearBridge, SmoothBridge };

    Kind kind = Kind::LinearBridge;
    double level = 0.0;  // Constant only

    static MidSegment constant(double c) { return {Kind::Constant, c}; }
    static MidSegment linear_bridge() { return {Kind::LinearBridge, 0.0}; }
    static MidSegment smooth_bridge() { return {Kind::SmoothBridge, 0.0}; }
};

/// Slowly varying factor, at zero (from the right) or at infinity.
struct SlowVaryFn {
    enum class Kind { One, LogPower, IterLog, UserTable };
    enum class Domain { AtZero, AtInfinity };

    Kind kind = Kind::One;
    Domain domain = Domain::AtInfinity;
    double r = 1.0;               // LogPower exponent
    std::vector<double> table_x;  // UserTable abscissae, strictly increasing
    std::vector<double> table_v;  // UserTable values, positive

    static SlowVaryFn one(Domain d = Domain::AtInfinity) { return {Kind::One, d, 1.0, {}, {}}; }
    static SlowVaryFn log_power(double r, Domain d) { return {Kind::LogPower, d, r, {}, {}}; }
    static SlowVaryFn iter_log(Domain d) { return {Kind::IterLog, d, 1.0, {}, {}}; }

    static SlowVaryFn table(std::vector<double> xs, std::vector<double> vs, Domain d) {
        detail::require_usage(xs.size() == vs.size() && xs.size() >= 2,
                              "SlowVaryFn table needs >= 2 (x, value) pairs of equal length");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            detail::require_usage(xs[i] > 0.0 && vs[i] > 0.0, "SlowVaryFn table entries must be positive");
            if (i > 0) detail::require_usage(xs[i] > xs[i - 1], "SlowVaryFn table abscissae must increase");
        }
        return {Kind::UserTable, d, 1.0, std::move(xs), std::move(vs)};
    }

    double operator()(double x) const {
        // log kinds are written in the variable that grows toward the singular end
        const double y = domain == Domain::AtZero ? 1.0 / x : x;
        switch (kind) {
            case Kind::One:
                return 1.0;
            case Kind::LogPower:
                return std::pow(std::log(std::max(y, std::numbers::e)), r);
            case Kind::IterLog:
                return std::log(std::log(std::max(y, std::exp(std::numbers::e))));
            case Kind::UserTable:
                return table_eval(x);
        }
        return 1.0;
    }

private:
    // log-log interpolation, constant beyond the ends
    double table_eval(double x) const {
        if (x <= table_x.front()) return table_v.front();
        if (x >= table_x.back()) return table_v.back();
        const auto it = std::upper_bound(table_x.begin(), table_x.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - table_x.begin());
        const double lx0 = std::log(table_x[i - 1]);
        const double lx1 = std::log(table_x[i]);
        const double w = (std::log(x) - lx0) / (lx1 - lx0);
        return std::exp((1.0 - w) * std::log(table_v[i - 1]) + w * std::log(table_v[i]));
    }
};

/// Coefficient function base + amp * exp(-rate * x); monotone in x.
struct CoefFn {
    double base = 0.0;
    double amp = 0.0;
    double rate = 0.0;

    static CoefFn constant(double c) { return {c, 0.0, 0.0}; }

    double operator()(double x) const { return base + amp * std::exp(-rate * x); }

    // value approached as x -> infinity
    double limit() const { return rate > 0.0 ? base : base + amp; }

    // {min, max} over the closed interval [a, b] (a may be 0)
    std::pair<double, double> range(double a, double b) const {
        const double fa = (*this)(a);
        const double fb = (*this)(b);
        return {std::min(fa, fb), std::max(fa, fb)};
    }
};

struct PiecewisePower {
    double alpha = 1.0;
    double q = 0.5;
    double beta = 1.0;
    double p = 0.5;
    double m1 = 1.0;
    double m2 = 2.0;
    MidSegment mid = MidSegment::linear_bridge();
};

struct PurePower {
    double beta = 1.0;
    double p = 0.5;
};

struct SlowlyVarying {
    CoefFn alpha = CoefFn::constant(1.0);
    CoefFn beta = CoefFn::constant(1.0);
    double q = 0.5;
    double p = 0.5;
    SlowVaryFn ell1 = SlowVaryFn::one(SlowVaryFn::Domain::AtZero);
    SlowVaryFn ell2 = SlowVaryFn::one(SlowVaryFn::Domain::AtInfinity);
    double m1 = 1.0;
    double m2 = 2.0;
    MidSegment mid = MidSegment::linear_bridge();
};

/// Drift field b on (0, inf). Immutable once built; evaluation is pure.
class DriftSpec {
public:
    using Params = std::variant<PiecewisePower, PurePower, SlowlyVarying>;

    DriftSpec() : DriftSpec(PiecewisePower{}) {}

    explicit DriftSpec(Params params) : params_(std::move(params)) {
        std::visit([this](const auto& v) { validate(v); }, params_);
        if (!std::holds_alternative<PurePower>(params_)) build_mid();
    }

    const Params& params() const { return params_; }

    bool is_pure_power() const { return std::holds_alternative<PurePower>(params_); }
    bool is_piecewise_power() const { return std::holds_alternative<PiecewisePower>(params_); }
    bool is_slowly_varying() const { return std::holds_alternative<SlowlyVarying>(params_); }

    /// True when b is C^1 on (0, inf), i.e. it admits the h-transform.
    bool is_c1() const {
        if (const auto* pp = std::get_if<PiecewisePower>(&params_))
            return pp->mid.kind == MidSegment::Kind::SmoothBridge;
        if (const auto* pure = std::get_if<PurePower>(&params_)) return pure->p < 1.0;
        return false;
    }

    // power of the decay at infinity
    double tail_exponent() const {
        return std::visit([](const auto& v) { return v.p; }, params_);
    }

    // limiting multiplier of the decay at infinity
    double tail_beta() const {
        if (const auto* sv = std::get_if<SlowlyVarying>(&params_)) return sv->beta.limit();
        if (const auto* pp = std::get_if<PiecewisePower>(&params_)) return pp->beta;
        return std::get<PurePower>(params_).beta;
    }

    std::pair<double, double> junctions() const {
        if (const auto* pp = std::get_if<PiecewisePower>(&params_)) return {pp->m1, pp->m2};
        if (const auto* sv = std::get_if<SlowlyVarying>(&params_)) return {sv->m1, sv->m2};
        return {0.0, 0.0};
    }

    const MidSegment* mid() const {
        if (const auto* pp = std::get_if<PiecewisePower>(&params_)) return &pp->mid;
        if (const auto* sv = std::get_if<SlowlyVarying>(&params_)) return &sv->mid;
        return nullptr;
    }

    /// sup |b| over [M1, M2]
    double mid_bound() const { return mid_bound_; }

    /// b(x) for x > 0; unchecked.
    double operator()(double x) const {
        if (const auto* pure = std::get_if<PurePower>(&params_)) return -pure->beta * std::pow(x, -pure->p);
        const auto [m1, m2] = junctions();
        if (x <= m1) return near(x);
        if (x < m2) return mid_poly(x - m1);
        return far(x);
    }

    /// b'(x); at M1 the left derivative, at M2 the right one.
    double derivative(double x) const {
        if (const auto* pure = std::get_if<PurePower>(&params_))
            return pure->beta * pure->p * std::pow(x, -pure->p - 1.0);
        const auto [m1, m2] = junctions();
        if (x <= m1) return near_slope(x);
        if (x < m2) {
            const double s = x - m1;
            return poly_[1] + s * (2.0 * poly_[2] + 3.0 * poly_[3] * s);
        }
        return far_slope(x);
    }

    /// \int_0^x b(y) dy, closed form on each piece.
    double integral(double x) const {
        if (const auto* pure = std::get_if<PurePower>(&params_)) {
            detail::require_domain(pure->p < 1.0, "drift integral diverges at 0 for p >= 1");
            return -pure->beta * std::pow(x, 1.0 - pure->p) / (1.0 - pure->p);
        }
        const auto* pp = std::get_if<PiecewisePower>(&params_);
        detail::require_usage(pp != nullptr, "closed-form drift integral needs a power-law drift");
        const auto near_int = [pp](double y) { return -pp->alpha * std::pow(y, 1.0 - pp->q) / (1.0 - pp->q); };
        if (x <= pp->m1) return near_int(x);
        const double at_m1 = near_int(pp->m1);
        if (x < pp->m2) return at_m1 + mid_poly_integral(x - pp->m1);
        const double at_m2 = at_m1 + mid_poly_integral(pp->m2 - pp->m1);
        return at_m2 - pp->beta / (1.0 - pp->p) * (std::pow(x, 1.0 - pp->p) - std::pow(pp->m2, 1.0 - pp->p));
    }

    /// Outer formula valid on (0, M1], evaluated anywhere.
    double near(double x) const {
        if (const auto* pp = std::get_if<PiecewisePower>(&params_)) return -pp->alpha * std::pow(x, -pp->q);
        if (const auto* sv = std::get_if<SlowlyVarying>(&params_))
            return -sv->alpha(x) * std::pow(x, -sv->q) * sv->ell1(x);
        return (*this)(x);
    }

    /// Outer formula valid on [M2, inf), evaluated anywhere.
    double far(double x) const {
        if (const auto* pp = std::get_if<PiecewisePower>(&params_)) return -pp->beta * std::pow(x, -pp->p);
        if (const auto* sv = std::get_if<SlowlyVarying>(&params_))
            return -sv->beta(x) * std::pow(x, -sv->p) * sv->ell2(x);
        return (*this)(x);
    }

    // mid polynomial coefficients in s = x - M1
    const std::array<double, 4>& mid_coefficients() const { return poly_; }

private:
    Params params_;
    std::array<double, 4> poly_{0.0, 0.0, 0.0, 0.0};
    double mid_bound_ = 0.0;

    static void validate(const PiecewisePower& v) {
        detail::require_domain(v.m1 > 0.0 && v.m2 > v.m1, "PiecewisePower: need 0 < M1 < M2");
        detail::require_domain(v.p > 0.0 && v.p < 1.0, "PiecewisePower: need 0 < p < 1");
        detail::require_domain(v.q > 0.0 && v.q < 1.0, "PiecewisePower: need 0 < q < 1");
        detail::require_domain(v.beta > 0.0, "PiecewisePower: need beta > 0");
        detail::require_domain(std::isfinite(v.alpha) && std::isfinite(v.mid.level),
                               "PiecewisePower: alpha and mid level must be finite");
    }

    static void validate(const PurePower& v) {
        detail::require_domain(v.p > 0.0 && v.p <= 1.0, "PurePower: need 0 < p <= 1");
        detail::require_domain(std::isfinite(v.beta), "PurePower: beta must be finite");
    }

    static void validate(const SlowlyVarying& v) {
        detail::require_domain(v.m1 > 0.0 && v.m2 > v.m1, "SlowlyVarying: need 0 < M1 < M2");
        detail::require_domain(v.p > 0.0 && v.p < 1.0, "SlowlyVarying: need 0 < p < 1");
        detail::require_domain(v.q > 0.0 && v.q < 1.0, "SlowlyVarying: need 0 < q < 1");
        detail::require_domain(v.alpha.rate >= 0.0 && v.beta.rate >= 0.0,
                               "SlowlyVarying: coefficient decay rates must be non-negative");
        detail::require_domain(v.beta.base > 0.0 && v.beta.base + v.beta.amp > 0.0,
                               "SlowlyVarying: beta(x) must stay positive");
    }

    double near_slope(double x) const {
        if (const auto* pp = std::get_if<PiecewisePower>(&params_))
            return pp->alpha * pp->q * std::pow(x, -pp->q - 1.0);
        const double h = 1e-5 * x;
        return (near(x + h) - near(x - h)) / (2.0 * h);
    }

    double far_slope(double x) const {
        if (const auto* pp = std::get_if<PiecewisePower>(&params_))
            return pp->beta * pp->p * std::pow(x, -pp->p - 1.0);
        const double h = 1e-5 * x;
        return (far(x + h) - far(x - h)) / (2.0 * h);
    }

    double mid_poly(double s) const { return poly_[0] + s * (poly_[1] + s * (poly_[2] + s * poly_[3])); }

    double mid_poly_integral(double s) const {
        return s * (poly_[0] + s * (poly_[1] / 2.0 + s * (poly_[2] / 3.0 + s * poly_[3] / 4.0)));
    }

    void build_mid() {
        const auto [m1, m2] = junctions();
        const MidSegment& seg = *mid();
        const double len = m2 - m1;
        const double y0 = near(m1);
        const double y1 = far(m2);
        switch (seg.kind) {
            case MidSegment::Kind::Constant:
                poly_ = {seg.level, 0.0, 0.0, 0.0};
                break;
            case MidSegment::Kind::LinearBridge:
                poly_ = {y0, (y1 - y0) / len, 0.0, 0.0};
                break;
            case MidSegment::Kind::SmoothBridge: {
                // cubic Hermite matching values and one-sided slopes at both ends
                const double d0 = near_slope(m1);
                const double d1 = far_slope(m2);
                const double secant = (y1 - y0) / len;
                poly_ = {y0, d0, (3.0 * secant - 2.0 * d0 - d1) / len, (d0 + d1 - 2.0 * secant) / (len * len)};
                break;
            }
        }
        // extremes of the cubic sit at the ends or at its critical points
        double bound = std::max(std::abs(mid_poly(0.0)), std::abs(mid_poly(len)));
        const double qa = 3.0 * poly_[3];
        const double qb = 2.0 * poly_[2];
        const double qc = poly_[1];
        std::vector<double> crit;
        if (qa != 0.0) {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0.0) {
                crit.push_back((-qb + std::sqrt(disc)) / (2.0 * qa));
                crit.push_back((-qb - std::sqrt(disc)) / (2.0 * qa));
            }
        } else if (qb != 0.0) {
            crit.push_back(-qc / qb);
        }
        for (double s : crit)
            if (s > 0.0 && s < len) bound = std::max(bound, std::abs(mid_poly(s)));
        mid_bound_ = bound;
    }
};

/// Checked evaluation of b(x).
inline double eval_drift(const DriftSpec& spec, double x) {
    detail::require_domain(x > 0.0 && std::isfinite(x), "eval_drift: x must be positive");
    return spec(x);
}

struct PotterReport {
    bool holds = false;
    double worst_ratio = 0.0;  // max of l(y) / (A l(x) max((y/x)^d, (y/x)^-d)); holds iff <= 1
    double grid_lo = 0.0;
    double grid_hi = 0.0;
    std::size_t grid_points = 0;
};

/// Finite check of the Potter bound on a log-spaced grid of pairs beyond M.
///
/// The grid covers [M, M*10^8] at infinity or [M*10^-8, M] at zero, with
/// floor(sqrt(sample_pairs)) points, and every ordered pair is tested.
inline PotterReport potter_check(const SlowVaryFn& ell, double A, double delta, double M, std::size_t sample_pairs) {
    detail::require_usage(A > 1.0, "potter_check: need A > 1");
    detail::require_usage(delta > 0.0, "potter_check: need delta > 0");
    detail::require_usage(M > 0.0, "potter_check: need M > 0");
    detail::require_usage(sample_pairs >= 1, "potter_check: empty sample set");

    const auto points = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(sample_pairs))));
    const double span = std::pow(10.0, kCheckDecades);
    const bool at_zero = ell.domain == SlowVaryFn::Domain::AtZero;
    const double lo = at_zero ? M / span : M;
    const double hi = at_zero ? M : M * span;
    const auto xs = log_grid(lo, hi, points);

    std::vector<double> vals(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) vals[i] = ell(xs[i]);

    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double ratio = xs[j] / xs[i];
            const double envelope = std::max(std::pow(ratio, delta), std::pow(ratio, -delta));
            worst = std::max(worst, vals[j] / (A * vals[i] * envelope));
        }
    }
    return {worst <= 1.0, worst, lo, hi, xs.size()};
}

struct SandwichReport {
    bool holds = false;
    double worst_excess = 0.0;  // largest |log| distance by which l leaves [x^-d, x^d] (0 when it holds)
    double grid_lo = 0.0;
    double grid_hi = 0.0;
    std::size_t grid_points = 0;
};

/// Checks x^-d <= l(x) <= x^d above M (at infinity) or x^d <= l(x) <= x^-d below M (at zero).
inline SandwichReport sandwich_bounds(const SlowVaryFn& ell, double delta, double M,
                                      std::size_t points = kDefaultGridPoints) {
    detail::require_domain(delta >= 0.0, "sandwich_bounds: need delta >= 0");
    detail::require_domain(M > 0.0, "sandwich_bounds: need M > 0");
    const double span = std::pow(10.0, kCheckDecades);
    const bool at_zero = ell.domain == SlowVaryFn::Domain::AtZero;
    const double lo = at_zero ? M / span : M;
    const double hi = at_zero ? M : M * span;

    double excess = 0.0;
    for (double x : log_grid(lo, hi, points)) {
        const double lx = std::log(x);
        const double ll = std::log(ell(x));
        // log bounds: at infinity [-d lx, d lx]; at zero [d lx, -d lx]
        const double a = at_zero ? delta * lx : -delta * lx;
        const double b = -a;
        excess = std::max({excess, a - ll, ll - b});
    }
    return {excess <= 0.0, std::max(excess, 0.0), lo, hi, points};
}

/// Largest amount by which lower(x) exceeds upper(x) on the grid (<= 0 when ordered).
inline double ordering_excess(const DriftSpec& lower, const DriftSpec& upper, const std::vector<double>& grid) {
    double worst = -std::numeric_limits<double>::infinity();
    for (double x : grid) {
        const double lo = lower(x);
        const double hi = upper(x);
        const double scale = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
        worst = std::max(worst, lo - hi - scale);
    }
    return worst;
}

struct SandwichPair {
    DriftSpec lower;
    DriftSpec upper;
    double m1 = 0.0;  // junctions after adjustment
    double m2 = 0.0;
    std::size_t grid_points = 0;
};

/// Power-law envelopes lower <= b <= upper around a slowly varying drift.
///
/// With s(x) = x^-q l1(x) in [x^-(q-d), x^-(q+d)] below M1 and x^-p l2(x) in
/// [x^-(p+d), x^-(p-d)] above M2, the envelopes take the extreme products of
/// the coefficient ranges with these bounds. M1 is halved and M2 doubled until
/// the sandwich bounds and |beta(x) - beta0| <= eps hold.
inline SandwichPair sandwich_drifts(const DriftSpec& spec, double delta, double eps) {
    const auto* sv = std::get_if<SlowlyVarying>(&spec.params());
    detail::require_usage(sv != nullptr, "sandwich_drifts: spec must be SlowlyVarying");
    detail::require_usage(delta >= 0.0 && eps >= 0.0, "sandwich_drifts: need delta, eps >= 0");
    detail::require_usage(sv->q - delta > 0.0 && sv->q + delta < 1.0 && sv->p - delta > 0.0 && sv->p + delta < 1.0,
                          "sandwich_drifts: delta too large, exponents must stay in (0,1)");
    const double beta0 = sv->beta.limit();
    detail::require_usage(beta0 - eps > 0.0, "sandwich_drifts: eps too large, beta0 - eps must stay positive");

    constexpr int kMaxAdjust = 64;
    double m1 = sv->m1;
    int k1 = 0;
    while (!sandwich_bounds(sv->ell1, delta, m1).holds) {
        if (++k1 > kMaxAdjust) throw ConstructionError("sandwich_drifts: no M1 satisfies the slowly varying bounds");
        m1 /= 2.0;
    }
    double m2 = sv->m2;
    int k2 = 0;
    const auto beta_close = [&](double x) {
        const double dev = sv->beta.rate > 0.0 ? std::abs(sv->beta.amp) * std::exp(-sv->beta.rate * x) : 0.0;
        return dev <= eps;
    };
    while (!(sandwich_bounds(sv->ell2, delta, m2).holds && beta_close(m2))) {
        if (++k2 > kMaxAdjust) throw ConstructionError("sandwich_drifts: no M2 satisfies the slowly varying bounds");
        m2 *= 2.0;
    }

    const auto [a_lo, a_hi] = sv->alpha.range(0.0, m1);
    PiecewisePower lower{};
    PiecewisePower upper{};
    lower.alpha = a_hi;
    lower.q = a_hi >= 0.0 ? sv->q + delta : sv->q - delta;
    upper.alpha = a_lo;
    upper.q = a_lo >= 0.0 ? sv->q - delta : sv->q + delta;
    lower.beta = beta0 + eps;
    lower.p = sv->p - delta;
    upper.beta = beta0 - eps;
    upper.p = sv->p + delta;
    lower.m1 = upper.m1 = m1;
    lower.m2 = upper.m2 = m2;

    const bool kept = k1 == 0 && k2 == 0 && sv->mid.kind != MidSegment::Kind::SmoothBridge;
    if (kept) {
        // same-weight linear bridges of ordered end values stay ordered
        lower.mid = upper.mid = sv->mid;
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (double x : log_grid(m1, m2, 10 * kDefaultGridPoints)) {
            const double b = spec(x);
            lo = std::min(lo, b);
            hi = std::max(hi, b);
        }
        const double margin = 1e-3 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
        lower.mid = MidSegment::constant(lo - margin);
        upper.mid = MidSegment::constant(hi + margin);
    }

    SandwichPair out{DriftSpec(lower), DriftSpec(upper), m1, m2, kDefaultGridPoints};
    const auto grid = log_grid(m1 * 1e-3, m2 * 1e3, kDefaultGridPoints);
    if (ordering_excess(out.lower, spec, grid) > 0.0 || ordering_excess(spec, out.upper, grid) > 0.0)
        throw ConstructionError("sandwich_drifts: envelope ordering failed on the check grid");
    return out;
}

}  // namespace sdrift
