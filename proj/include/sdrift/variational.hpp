#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "sdrift/errors.hpp"
#include "sdrift/mc.hpp"

namespace sdrift {

/// Values omega_0..omega_n on the uniform grid u_k = k/n, omega_0 = 0.
struct Path {
    std::vector<double> values;

    std::size_t n() const { return values.size() - 1; }
    double u(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(n()); }
};

struct FunctionalValue {
    double total = 0.0;
    double singular_term = 0.0;
    double boundary_term = 0.0;
    double kinetic_term = 0.0;
};

inline constexpr double kPathFloor = 1e-8;
inline constexpr double kDefaultTiltDelta = 0.05;

namespace detail {

inline void check_functional_args(double p, double beta) {
    require_domain(p > 0.0 && p < 1.0, "F: need 0 < p < 1");
    require_domain(beta > 0.0, "F: need beta > 0");
}

inline void check_path(const Path& path) {
    require_usage(path.values.size() >= 2, "F: path needs at least one cell");
    require_usage(path.values.front() == 0.0, "F: path must start at 0");
    for (std::size_t k = 1; k < path.values.size(); ++k)
        require_domain(path.values[k] > 0.0 && std::isfinite(path.values[k]), "F: interior values must be positive");
}

}  // namespace detail

/// Discretized F: midpoint rule for the singular part, forward differences for the kinetic part.
inline FunctionalValue evaluate_F(const Path& path, double p, double beta) {
    detail::check_functional_args(p, beta);
    detail::check_path(path);
    const auto& w = path.values;
    const double h = 1.0 / static_cast<double>(path.n());
    double sing = 0.0;
    double kin = 0.0;
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
        sing += std::pow(0.5 * (w[k] + w[k + 1]), -2.0 * p);
        const double d = w[k + 1] - w[k];
        kin += d * d;
    }
    FunctionalValue fv;
    fv.singular_term = 0.5 * beta * beta * sing * h;
    fv.kinetic_term = 0.5 * kin / h;
    fv.boundary_term = beta / (1.0 - p) * std::pow(w.back(), 1.0 - p);
    fv.total = fv.singular_term + fv.boundary_term + fv.kinetic_term;
    return fv;
}

/// J = F minus the kinetic part.
inline double evaluate_J(const Path& path, double p, double beta) {
    const auto fv = evaluate_F(path, p, beta);
    return fv.singular_term + fv.boundary_term;
}

/// Gradient of the discrete F with respect to omega_1..omega_n.
inline std::vector<double> gradient_F(const Path& path, double p, double beta) {
    detail::check_functional_args(p, beta);
    detail::check_path(path);
    const auto& w = path.values;
    const std::size_t n = path.n();
    const double h = 1.0 / static_cast<double>(n);
    std::vector<double> full(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double mid = 0.5 * (w[k] + w[k + 1]);
        const double gm = -p * beta * beta * std::pow(mid, -2.0 * p - 1.0) * h;
        const double d = (w[k + 1] - w[k]) / h;
        full[k] += 0.5 * gm - d;
        full[k + 1] += 0.5 * gm + d;
    }
    full[n] += beta * std::pow(w[n], -p);
    return {full.begin() + 1, full.end()};
}

enum class InitKind { PowerLaw, Linear };

struct MinimizeResult {
    Path path;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> history;  // value after each accepted iteration, starting with the initial value
};

namespace detail {

// Solves a symmetric tridiagonal system in place (diag, off-diagonal, rhs).
inline std::vector<double> solve_tridiagonal(std::vector<double> diag, const std::vector<double>& off,
                                             std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = off[i - 1] / diag[i - 1];
        diag[i] -= m * off[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - off[i] * rhs[i + 1]) / diag[i];
    return rhs;
}

inline Path power_path(std::size_t n, double c, double exponent) {
    Path path;
    path.values.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        path.values[k] = c * std::pow(static_cast<double>(k) / static_cast<double>(n), exponent);
    return path;
}

// golden-section search of F(c u^{1/(1+p)}) over log c
inline double best_power_amplitude(std::size_t n, double p, double beta) {
    const double e = 1.0 / (1.0 + p);
    const auto f = [&](double lc) { return evaluate_F(power_path(n, std::exp(lc), e), p, beta).total; };
    double lo = std::log(1e-3);
    double hi = std::log(1e3);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > 1e-8) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    return std::exp(0.5 * (lo + hi));
}

}  // namespace detail

/// Minimizes the discrete F over omega_1..omega_n >= kPathFloor.
///
/// Projected gradient descent preconditioned by the kinetic Laplacian plus
/// the diagonal of the singular term's Hessian. Coordinates held at the floor
/// by a positive gradient are decoupled from their neighbours in the metric,
/// so the projected step stays a descent direction. Steps are accepted by an
/// Armijo test, which makes the value sequence non-increasing.
inline MinimizeResult minimize_F(double p, double beta, std::size_t n, double tol, std::size_t max_iters,
                                 InitKind init = InitKind::PowerLaw) {
    detail::check_functional_args(p, beta);
    detail::require_usage(n >= 64, "minimize_F: need n >= 64");
    detail::require_usage(tol > 0.0, "minimize_F: need tol > 0");

    const double h = 1.0 / static_cast<double>(n);
    Path path = init == InitKind::PowerLaw
                    ? detail::power_path(n, detail::best_power_amplitude(n, p, beta), 1.0 / (1.0 + p))
                    : detail::power_path(n, 1.0, 1.0);
    for (std::size_t k = 1; k <= n; ++k) path.values[k] = std::max(path.values[k], kPathFloor);

    MinimizeResult res;
    double value = evaluate_F(path, p, beta).total;
    auto grad = gradient_F(path, p, beta);
    res.history.push_back(value);
    double step = 1.0;
    Path trial = path;
    std::vector<double> diag(n);
    std::vector<double> off(n - 1);

    while (res.iterations < max_iters) {
        const auto& w = path.values;
        // metric on omega_1..omega_n (index i <-> node i+1)
        std::fill(diag.begin(), diag.end(), 2.0 / h);
        diag[n - 1] = 1.0 / h;
        for (std::size_t k = 0; k < n; ++k) {
            const double mid = 0.5 * (w[k] + w[k + 1]);
            const double hs = p * (2.0 * p + 1.0) * beta * beta * std::pow(mid, -2.0 * p - 2.0) * h / 4.0;
            if (k >= 1) diag[k - 1] += hs;
            diag[k] += hs;
        }
        std::vector<bool> active(n);
        for (std::size_t i = 0; i < n; ++i) active[i] = w[i + 1] <= kPathFloor * (1.0 + 1e-9) + 1e-14 && grad[i] > 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) off[i] = active[i] || active[i + 1] ? 0.0 : -1.0 / h;
        const auto dir = detail::solve_tridiagonal(diag, off, grad);

        step = std::min(1.0, 2.0 * step);
        bool accepted = false;
        double new_value = value;
        while (step > 1e-16) {
            double slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                trial.values[i + 1] = std::max(w[i + 1] - step * dir[i], kPathFloor);
                slope += grad[i] * (trial.values[i + 1] - w[i + 1]);
            }
            new_value = evaluate_F(trial, p, beta).total;
            if (new_value <= value + 1e-4 * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        ++res.iterations;
        const double rel = std::abs(value - new_value) / std::abs(value);
        std::swap(path, trial);
        value = new_value;
        grad = gradient_F(path, p, beta);
        res.history.push_back(value);
        if (rel < tol) {
            res.converged = true;
            break;
        }
    }
    res.path = std::move(path);
    res.value = value;
    return res;
}

/// Minimizer of F wrapped as a tilt for the importance sampler.
inline TiltProfile optimal_tilt(double p, double beta, std::size_t n, double delta = kDefaultTiltDelta) {
    const auto res = minimize_F(p, beta, n, 1e-10, 100000);
    if (!res.converged)
        throw NumericError("optimal_tilt: minimize_F did not converge after " + std::to_string(res.iterations) +
                           " iterations (value " + std::to_string(res.value) + ")");
    return TiltProfile::from_values(res.path.values, delta);
}

}  // namespace sdrift
