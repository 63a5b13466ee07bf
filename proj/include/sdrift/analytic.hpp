#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "sdrift/drift.hpp"
#include "sdrift/errors.hpp"

namespace sdrift {

/// log B(a, b) = lgamma(a) + lgamma(b) - lgamma(a + b).
inline double log_beta(double a, double b) {
    detail::require_domain(a > 0.0 && b > 0.0, "log_beta: arguments must be positive");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// Rate constant of the stretched-exponential survival tail,
///
///   gamma(p, beta) = 1/2 p^{-2p/(1+p)} beta^{2/(1+p)} [B(1/2, a) + B(3/2, a)] B(1/2, a)^{-(1-p)/(1+p)}
///
/// with a = (1 - p) / (2p).
inline double gamma_rate(double p, double beta) {
    detail::require_domain(p > 0.0 && p < 1.0, "gamma_rate: need 0 < p < 1");
    detail::require_domain(beta > 0.0, "gamma_rate: need beta > 0");
    const double a = (1.0 - p) / (2.0 * p);
    const double lb_half = log_beta(0.5, a);
    const double lb_three_half = log_beta(1.5, a);
    // log of the bracket, factored around B(1/2, a)
    const double log_bracket = lb_half + std::log1p(std::exp(lb_three_half - lb_half));
    const double log_value = std::log(0.5) - 2.0 * p / (1.0 + p) * std::log(p) + 2.0 / (1.0 + p) * std::log(beta) +
                             log_bracket - (1.0 - p) / (1.0 + p) * lb_half;
    return std::exp(log_value);
}

/// P_x(tau_0 > t) for standard Brownian motion.
inline double bm_survival(double x, double t) {
    detail::require_domain(t > 0.0, "bm_survival: need t > 0");
    detail::require_domain(x >= 0.0, "bm_survival: need x >= 0");
    return std::erf(x / std::sqrt(2.0 * t));
}

/// P_x(tau_0 > t) for dX = dB - beta/X dt.
///
/// For beta > -1/2 this is the normalized integral of u^{2 beta} e^{-u^2/2}
/// over [0, x/sqrt(t)], i.e. the regularized lower incomplete gamma
/// P(beta + 1/2, x^2 / (2t)); for beta <= -1/2 zero is never reached.
inline double bessel_like_survival(double x, double t, double beta) {
    detail::require_domain(t > 0.0, "bessel_like_survival: need t > 0");
    detail::require_domain(x >= 0.0, "bessel_like_survival: need x >= 0");
    if (beta <= -0.5) return 1.0;
    if (x == 0.0) return 0.0;
    return boost::math::gamma_p(beta + 0.5, x * x / (2.0 * t));
}

namespace detail {

inline constexpr double kScaleRelTol = 1e-9;

// \int_a^b exp(-2 \int_0^z b) dz on one piece between junctions
inline double scale_piece(const DriftSpec& spec, double a, double b) {
    if (b <= a) return 0.0;
    double err = 0.0;
    const auto integrand = [&spec](double z) { return std::exp(-2.0 * spec.integral(z)); };
    // the piece touching 0 has a z^{1-q} cusp, which tanh-sinh absorbs; elsewhere the integrand is smooth
    double value = 0.0;
    if (a == 0.0) {
        static thread_local boost::math::quadrature::tanh_sinh<double> ts;
        value = ts.integrate(integrand, a, b, kScaleRelTol, &err);
    } else {
        value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, a, b, 15, kScaleRelTol, &err);
    }
    // tanh-sinh overstates the error on intervals so short that the integrand is flat
    const double floor = 1e-12 * std::abs(value) + 1e-300;
    if (!std::isfinite(value) || (err > 1e3 * kScaleRelTol * std::abs(value) + floor && (b - a) > 1e-6 * b)) {
        throw NumericError("scale_function: quadrature on [" + std::to_string(a) + ", " + std::to_string(b) +
                           "] did not converge (estimate " + std::to_string(value) + ", error " +
                           std::to_string(err) + ")");
    }
    return value;
}

}  // namespace detail

/// \int_a^b exp(-2 \int_0^z b(y) dy) dz, split at the drift junctions.
inline double scale_integral(const DriftSpec& spec, double a, double b) {
    detail::require_domain(a >= 0.0 && b >= a, "scale_integral: need 0 <= a <= b");
    detail::require_usage(!spec.is_slowly_varying(), "scale_function: needs a power-law drift");
    double total = 0.0;
    double left = a;
    if (!spec.is_pure_power()) {
        const auto [m1, m2] = spec.junctions();
        for (double cut : {m1, m2}) {
            if (cut > left && cut < b) {
                total += detail::scale_piece(spec, left, cut);
                left = cut;
            }
        }
    }
    return total + detail::scale_piece(spec, left, b);
}

/// Scale function f(x) = \int_0^x exp(-2 \int_0^z b(y) dy) dz; Lf = 0.
inline double scale_function(const DriftSpec& spec, double x) {
    detail::require_domain(x > 0.0, "scale_function: need x > 0");
    return scale_integral(spec, 0.0, x);
}

/// P_x(tau_{r1} < tau_{r2}) = (f(x) - f(r2)) / (f(r1) - f(r2)).
inline double two_sided_exit_prob(const DriftSpec& spec, double x, double r1, double r2) {
    detail::require_usage(r1 > 0.0 && r1 < x && x < r2, "two_sided_exit_prob: need 0 < r1 < x < r2");
    // both differences as direct integrals avoids cancellation in f(x) - f(r2)
    return scale_integral(spec, x, r2) / scale_integral(spec, r1, r2);
}

/// Harmonic function h = exp(\int_0^x b) and potential V = -(b^2 + b')/2 of a C^1 drift.
class HTransformPair {
public:
    explicit HTransformPair(DriftSpec spec) : spec_(std::move(spec)) {
        const auto* pp = std::get_if<PiecewisePower>(&spec_.params());
        const auto* pw = std::get_if<PurePower>(&spec_.params());
        detail::require_usage((pp != nullptr && pp->mid.kind == MidSegment::Kind::SmoothBridge) ||
                                  (pw != nullptr && pw->p < 1.0),
                              "h_transform: needs a PiecewisePower drift with a SmoothBridge mid segment "
                              "or a PurePower drift with p < 1");
        // h = C exp(-beta/(1-p) x^{1-p}) beyond M2, C fixed by continuity at M2
        if (pp != nullptr)
            log_c_ = spec_.integral(pp->m2) + pp->beta / (1.0 - pp->p) * std::pow(pp->m2, 1.0 - pp->p);
    }

    const DriftSpec& spec() const { return spec_; }

    double C() const { return std::exp(log_c_); }

    double log_h(double x) const { return spec_.integral(x); }

    double h(double x) const { return std::exp(log_h(x)); }

    double V(double x) const {
        const double b = spec_(x);
        return -0.5 * (b * b + spec_.derivative(x));
    }

private:
    DriftSpec spec_;
    double log_c_ = 0.0;
};

inline HTransformPair h_transform(const DriftSpec& spec) { return HTransformPair(spec); }

/// eps(t) = t^{-(1-p)/(1+p)}, the large-deviation speed at time t.
inline double tail_scale(double t, double p) {
    detail::require_domain(t > 0.0, "tail_scale: need t > 0");
    detail::require_domain(p > 0.0 && p < 1.0, "tail_scale: need 0 < p < 1");
    return std::pow(t, -(1.0 - p) / (1.0 + p));
}

}  // namespace sdrift
