#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "sdrift/analytic.hpp"
#include "sdrift/drift.hpp"
#include "sdrift/errors.hpp"
#include "sdrift/rng.hpp"

namespace sdrift {

struct SimConfig {
    double dt_max = 1e-3;
    double dt_floor = 1e-9;
    double dt_scale = 0.1;  // dt = clamp(dt_scale * X^2, dt_floor, dt_max)
    double absorb_at = 1e-6;
    bool bridge_correction = true;
    double horizon = 1.0;
    std::uint64_t seed = 1;
    std::size_t n_paths = 10000;
    std::size_t workers = 1;
    double drift_cap = 10.0;  // |b dt| <= drift_cap * sqrt(dt)

    void validate() const {
        detail::require_usage(dt_max > 0.0 && dt_floor > 0.0 && dt_floor <= dt_max,
                              "SimConfig: need 0 < dt_floor <= dt_max");
        detail::require_usage(dt_scale > 0.0, "SimConfig: need dt_scale > 0");
        detail::require_usage(absorb_at > 0.0, "SimConfig: need absorb_at > 0");
        detail::require_usage(horizon > 0.0, "SimConfig: need horizon > 0");
        detail::require_usage(n_paths >= 1, "SimConfig: need n_paths >= 1");
        detail::require_usage(drift_cap > 0.0, "SimConfig: need drift_cap > 0");
    }

    double step_size(double x, double remaining) const {
        return std::min(std::clamp(dt_scale * x * x, dt_floor, dt_max), remaining);
    }
};

enum class Scheme { Direct, FeynmanKac, Tilted };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Direct:
            return "direct";
        case Scheme::FeynmanKac:
            return "feynman_kac";
        case Scheme::Tilted:
            return "tilted";
    }
    return "direct";
}

struct SurvivalEstimate {
    double p_hat = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n_paths)
    std::size_t n_paths = 0;
    double t = 0.0;
    Scheme scheme = Scheme::Direct;
};

struct TrajectoryPoint {
    std::size_t step = 0;
    double time = 0.0;
    double value = 0.0;
};

struct PathRecord {
    std::optional<double> hit_time;  // empty when censored at the horizon
    double endpoint = 0.0;
    std::size_t steps = 0;
    std::size_t capped_steps = 0;
    std::vector<TrajectoryPoint> trajectory;
};

/// Deterministic tilt g on a uniform grid over [0, 1], plus the offset delta.
struct TiltProfile {
    std::vector<double> g;      // g(k/n), k = 0..n
    std::vector<double> slope;  // forward-difference g' on cell k (last entry repeats)
    double delta = 0.05;

    static TiltProfile from_values(std::vector<double> values, double delta) {
        detail::require_usage(values.size() >= 2, "TiltProfile: need at least two grid values");
        TiltProfile tp;
        const double n = static_cast<double>(values.size() - 1);
        tp.slope.resize(values.size());
        for (std::size_t k = 0; k + 1 < values.size(); ++k) tp.slope[k] = (values[k + 1] - values[k]) * n;
        tp.slope.back() = tp.slope[values.size() - 2];
        tp.g = std::move(values);
        tp.delta = delta;
        return tp;
    }

    static TiltProfile zero(std::size_t n, double delta) { return from_values(std::vector<double>(n + 1, 0.0), delta); }

    std::size_t cells() const { return g.size() - 1; }

    // g'(u) on the cell containing u in [0, 1]
    double slope_at(double u) const {
        const auto n = cells();
        const auto k = std::min(static_cast<std::size_t>(std::max(u, 0.0) * static_cast<double>(n)), n - 1);
        return slope[k];
    }

    double kinetic() const {
        double acc = 0.0;
        for (std::size_t k = 0; k < cells(); ++k) acc += slope[k] * slope[k];
        return 0.5 * acc / static_cast<double>(cells());
    }
};

namespace detail {

/// Evaluates fn(i) for i in [0, n) on `workers` threads; output order is by index.
template <class Fn>
auto map_paths(std::size_t n, std::size_t workers, Fn&& fn) {
    using Result = std::invoke_result_t<Fn&, std::uint64_t>;
    std::vector<Result> out(n);
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(static_cast<std::uint64_t>(i));
        return out;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) out[i] = fn(static_cast<std::uint64_t>(i));
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

/// Mean and standard error of per-path contributions, summed in index order.
inline std::pair<double, double> mean_and_stderr(std::span<const double> values) {
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

inline SurvivalEstimate summarize(std::span<const double> values, double t, Scheme scheme) {
    const auto [mean, se] = mean_and_stderr(values);
    return {mean, se, values.size(), t, scheme};
}

// Driftless crossing probability of the barrier at 0 within one step.
inline double bridge_crossing(double x_old, double x_new, double dt) { return std::exp(-2.0 * x_old * x_new / dt); }

struct StepResult {
    double x = 0.0;
    bool absorbed = false;
    bool capped = false;
};

/// One absorbed Euler step with drift `b` and an extra uncapped drift `shift`.
inline StepResult euler_step(double x, double b, double shift, double dt, double z, const SimConfig& cfg,
                             const CounterRng& rng, std::uint64_t path, std::uint64_t step) {
    const double sq = std::sqrt(dt);
    double inc = b * dt;
    const double cap = cfg.drift_cap * sq;
    StepResult r;
    if (std::abs(inc) > cap) {
        inc = std::copysign(cap, inc);
        r.capped = true;
    }
    r.x = x + inc + shift * dt + sq * z;
    if (r.x <= cfg.absorb_at) {
        r.absorbed = true;
    } else if (cfg.bridge_correction) {
        const double pc = bridge_crossing(x, r.x, dt);
        if (pc > 0.0 && rng.uniform(path, step) < pc) r.absorbed = true;
    }
    return r;
}

inline bool reached(double s, double horizon) { return s >= horizon * (1.0 - 1e-14); }

}  // namespace detail

/// Absorbed Euler-Maruyama path of dX = dB + b(X) dt from x0 up to cfg.horizon.
inline PathRecord simulate_path(const DriftSpec& spec, double x0, const SimConfig& cfg, std::uint64_t path_index,
                                bool keep_trajectory = false) {
    cfg.validate();
    detail::require_usage(x0 > cfg.absorb_at, "simulate_path: x0 must exceed the absorption threshold");
    const CounterRng rng(cfg.seed);
    PathRecord rec;
    double x = x0;
    double s = 0.0;
    std::uint64_t k = 0;
    if (keep_trajectory) rec.trajectory.push_back({0, 0.0, x});
    while (!detail::reached(s, cfg.horizon)) {
        const double dt = cfg.step_size(x, cfg.horizon - s);
        const double z = rng.normal(path_index, k);
        const auto st = detail::euler_step(x, spec(x), 0.0, dt, z, cfg, rng, path_index, k);
        s += dt;
        ++k;
        rec.capped_steps += st.capped ? 1 : 0;
        if (st.absorbed) {
            rec.hit_time = s;
            x = 0.0;
            if (keep_trajectory) rec.trajectory.push_back({k, s, x});
            break;
        }
        x = st.x;
        if (keep_trajectory) rec.trajectory.push_back({k, s, x});
    }
    rec.steps = k;
    rec.endpoint = x;
    return rec;
}

/// Direct estimator of P_x(tau_0 > t): fraction of paths alive at t.
inline SurvivalEstimate estimate_survival(const DriftSpec& spec, double x0, double t, const SimConfig& cfg) {
    cfg.validate();
    detail::require_usage(t > 0.0 && t <= cfg.horizon, "estimate_survival: need 0 < t <= horizon");
    SimConfig run = cfg;
    run.horizon = t;
    const auto alive = detail::map_paths(cfg.n_paths, cfg.workers, [&](std::uint64_t i) {
        return simulate_path(spec, x0, run, i).hit_time ? 0.0 : 1.0;
    });
    return detail::summarize(alive, t, Scheme::Direct);
}

/// Direct estimates at several times from one set of paths run to max(ts).
inline std::vector<SurvivalEstimate> estimate_survival_curve(const DriftSpec& spec, double x0,
                                                             std::span<const double> ts, const SimConfig& cfg) {
    cfg.validate();
    detail::require_usage(!ts.empty(), "estimate_survival_curve: empty time grid");
    const double t_max = *std::max_element(ts.begin(), ts.end());
    detail::require_usage(ts.front() > 0.0 && t_max <= cfg.horizon, "estimate_survival_curve: need 0 < t <= horizon");
    SimConfig run = cfg;
    run.horizon = t_max;
    const auto hits = detail::map_paths(cfg.n_paths, cfg.workers, [&](std::uint64_t i) {
        return simulate_path(spec, x0, run, i).hit_time.value_or(std::numeric_limits<double>::infinity());
    });
    std::vector<SurvivalEstimate> out;
    std::vector<double> alive(hits.size());
    for (double t : ts) {
        detail::require_usage(t > 0.0, "estimate_survival_curve: need t > 0");
        for (std::size_t i = 0; i < hits.size(); ++i) alive[i] = hits[i] > t ? 1.0 : 0.0;
        out.push_back(detail::summarize(alive, t, Scheme::Direct));
    }
    return out;
}

struct TwoSidedEstimate {
    double p_hat = 0.0;  // P(tau_{r1} < tau_{r2})
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::size_t censored = 0;  // paths still inside (r1, r2) at the horizon; counted as not reaching r1
};

/// Frequency of reaching r1 before r2, with bridge correction at both barriers.
inline TwoSidedEstimate estimate_two_sided(const DriftSpec& spec, double x0, double r1, double r2,
                                           const SimConfig& cfg) {
    cfg.validate();
    detail::require_usage(r1 > 0.0 && r1 < x0 && x0 < r2, "estimate_two_sided: need 0 < r1 < x0 < r2");
    const CounterRng rng(cfg.seed);
    // per path: 1 = r1 first, 0 = r2 first, -1 = censored
    const auto outcome = detail::map_paths(cfg.n_paths, cfg.workers, [&](std::uint64_t path) {
        double x = x0;
        double s = 0.0;
        std::uint64_t k = 0;
        while (!detail::reached(s, cfg.horizon)) {
            const double dt = cfg.step_size(x, cfg.horizon - s);
            const double sq = std::sqrt(dt);
            double inc = spec(x) * dt;
            inc = std::clamp(inc, -cfg.drift_cap * sq, cfg.drift_cap * sq);
            const double xn = x + inc + sq * rng.normal(path, k);
            if (xn <= r1) return 1;
            if (xn >= r2) return 0;
            if (cfg.bridge_correction) {
                const double p_low = std::exp(-2.0 * (x - r1) * (xn - r1) / dt);
                const double p_up = std::exp(-2.0 * (r2 - x) * (r2 - xn) / dt);
                if (p_low > 0.0 || p_up > 0.0) {
                    const double u = rng.uniform(path, k);
                    if (u < p_low) return 1;
                    if (u > 1.0 - p_up) return 0;
                }
            }
            x = xn;
            s += dt;
            ++k;
        }
        return -1;
    });
    std::vector<double> first_low(outcome.size());
    std::size_t censored = 0;
    for (std::size_t i = 0; i < outcome.size(); ++i) {
        first_low[i] = outcome[i] == 1 ? 1.0 : 0.0;
        censored += outcome[i] < 0 ? 1 : 0;
    }
    const auto [mean, se] = detail::mean_and_stderr(first_low);
    return {mean, se, outcome.size(), censored};
}

namespace detail {

// Brownian paths from x0 with deterministic extra drift theta(s), weighted by
// exp(\int V(B) ds) h(B_t) / h(x0) and the Girsanov factor of the shift.
template <class Theta>
std::vector<double> feynman_kac_weights(const DriftSpec& spec, double x0, double t, const SimConfig& cfg,
                                        Theta theta_at, bool shifted) {
    const HTransformPair ht(spec);
    const CounterRng rng(cfg.seed);
    const double log_h0 = ht.log_h(x0);
    double mid_mass = 0.0;
    if (spec.is_piecewise_power()) {
        const auto [m1, m2] = spec.junctions();
        mid_mass = spec.mid_bound() * (m2 - m1);
    }
    // without a shift, below this accumulated log-weight the contribution underflows to exactly 0
    const double cutoff = -760.0 - mid_mass - std::abs(log_h0);

    return map_paths(cfg.n_paths, cfg.workers, [&](std::uint64_t path) {
        double x = x0;
        double v_old = ht.V(x);
        double s = 0.0;
        double acc = 0.0;
        double log_girsanov = 0.0;
        std::uint64_t k = 0;
        while (!reached(s, t)) {
            const double dt = cfg.step_size(x, t - s);
            const double theta = shifted ? theta_at(s) : 0.0;
            const double z = rng.normal(path, k);
            const auto st = euler_step(x, 0.0, theta, dt, z, cfg, rng, path, k);
            if (st.absorbed) return 0.0;
            const double v_new = ht.V(st.x);
            acc += 0.5 * (v_old + v_new) * dt;
            if (!shifted && acc < cutoff) return 0.0;
            log_girsanov += -theta * std::sqrt(dt) * z - 0.5 * theta * theta * dt;
            x = st.x;
            v_old = v_new;
            s += dt;
            ++k;
        }
        return std::exp(acc + ht.log_h(x) - log_h0 + log_girsanov);
    });
}

}  // namespace detail

/// Feynman-Kac estimator: driftless paths weighted by exp(\int V(B) ds) h(B_t) / h(x0).
inline SurvivalEstimate feynman_kac_estimate(const DriftSpec& spec, double x0, double t, const SimConfig& cfg) {
    cfg.validate();
    detail::require_usage(spec.is_c1() && !spec.is_slowly_varying(),
                          "feynman_kac_estimate: needs a C^1 drift (SmoothBridge mid segment)");
    detail::require_usage(t > 0.0 && t <= cfg.horizon, "feynman_kac_estimate: need 0 < t <= horizon");
    detail::require_usage(x0 > cfg.absorb_at, "feynman_kac_estimate: x0 must exceed the absorption threshold");
    const auto weights = detail::feynman_kac_weights(spec, x0, t, cfg, [](double) { return 0.0; }, false);
    return detail::summarize(weights, t, Scheme::FeynmanKac);
}

/// Importance sampler for deep tails.
///
/// The Brownian paths of the Feynman-Kac representation are shifted, in the
/// rescaled frame u = s/t, by (g(u) + delta u)/sqrt(eps) with
/// eps = t^{-(1-p)/(1+p)}; in physical time this is the extra drift
/// theta(s) = (g'(s/t) + delta)/sqrt(eps t). Each surviving path carries the
/// Feynman-Kac weight times exp(-\sum theta dW - 1/2 \sum theta^2 dt), which
/// is the exact likelihood ratio of the discretized shift.
inline SurvivalEstimate tilted_survival(const DriftSpec& spec, double x0, double t, const TiltProfile& tilt,
                                        const SimConfig& cfg) {
    cfg.validate();
    detail::require_usage(t > 0.0, "tilted_survival: need t > 0");
    detail::require_usage(x0 > cfg.absorb_at, "tilted_survival: x0 must exceed the absorption threshold");
    detail::require_usage(spec.is_c1() && !spec.is_slowly_varying(),
                          "tilted_survival: needs a C^1 drift (SmoothBridge mid segment)");
    detail::require_usage(tilt.g.size() >= 2 && tilt.delta > 0.0,
                          "tilted_survival: degenerate tilt (need delta > 0 so g + delta stays positive)");
    for (double v : tilt.g) detail::require_usage(v >= 0.0 && std::isfinite(v), "tilted_survival: tilt must be >= 0");
    const double p = spec.tail_exponent();
    detail::require_usage(p < 1.0, "tilted_survival: needs a tail exponent p < 1");
    const double scale = 1.0 / std::sqrt(tail_scale(t, p) * t);
    const auto theta = [&](double s) { return (tilt.slope_at(s / t) + tilt.delta) * scale; };
    const auto weights = detail::feynman_kac_weights(spec, x0, t, cfg, theta, true);
    return detail::summarize(weights, t, Scheme::Tilted);
}

struct CoupledReport {
    double violation_fraction = 0.0;
    double max_gap = 0.0;  // largest X_low - X_high seen (negative when always ordered)
    std::size_t samples = 0;
    std::size_t violations = 0;
};

/// Drives dX = dB + b_low dt and dY = dB + b_high dt with the same noise and
/// step sizes and counts (path, step) samples where X > Y + tolerance.
/// Absorbed coordinates sit at 0; the bridge test shares one uniform.
inline CoupledReport coupled_compare(const DriftSpec& low, const DriftSpec& high, double x0, double t,
                                     const SimConfig& cfg, double ordering_tolerance = 1e-12) {
    cfg.validate();
    detail::require_usage(t > 0.0, "coupled_compare: need t > 0");
    detail::require_usage(x0 > cfg.absorb_at, "coupled_compare: x0 must exceed the absorption threshold");
    if (ordering_excess(low, high, log_grid(1e-6, 1e6, kDefaultGridPoints)) > 0.0)
        throw UsageError("coupled_compare: b_low <= b_high fails on the pre-check grid");
    const CounterRng rng(cfg.seed);

    struct PathTally {
        std::size_t samples = 0;
        std::size_t violations = 0;
        double max_gap = -std::numeric_limits<double>::infinity();
    };
    const auto tallies = detail::map_paths(cfg.n_paths, cfg.workers, [&](std::uint64_t path) {
        PathTally tally;
        double xl = x0;
        double xh = x0;
        bool live_l = true;
        bool live_h = true;
        double s = 0.0;
        std::uint64_t k = 0;
        while (!detail::reached(s, t) && (live_l || live_h)) {
            const double ref = live_l && live_h ? std::min(xl, xh) : (live_l ? xl : xh);
            const double dt = cfg.step_size(ref, t - s);
            const double z = rng.normal(path, k);
            if (live_l) {
                const auto st = detail::euler_step(xl, low(xl), 0.0, dt, z, cfg, rng, path, k);
                live_l = !st.absorbed;
                xl = live_l ? st.x : 0.0;
            }
            if (live_h) {
                const auto st = detail::euler_step(xh, high(xh), 0.0, dt, z, cfg, rng, path, k);
                live_h = !st.absorbed;
                xh = live_h ? st.x : 0.0;
            }
            s += dt;
            ++k;
            ++tally.samples;
            const double gap = xl - xh;
            tally.max_gap = std::max(tally.max_gap, gap);
            if (gap > ordering_tolerance * std::max(1.0, std::abs(xh))) ++tally.violations;
        }
        return tally;
    });

    CoupledReport rep;
    rep.max_gap = -std::numeric_limits<double>::infinity();
    for (const auto& tl : tallies) {
        rep.samples += tl.samples;
        rep.violations += tl.violations;
        rep.max_gap = std::max(rep.max_gap, tl.max_gap);
    }
    rep.violation_fraction =
        rep.samples > 0 ? static_cast<double>(rep.violations) / static_cast<double>(rep.samples) : 0.0;
    return rep;
}

struct TailSample {
    double t = 0.0;
    double log_p = 0.0;      // log p_hat
    double std_error = 0.0;  // standard error of p_hat
};

struct RateFitResult {
    double exponent_hat = 0.0;
    double rate_hat = 0.0;
    double residual_rms = 0.0;
    std::size_t points_used = 0;
    std::size_t dropped = 0;
};

namespace detail {

struct TailFitData {
    std::vector<double> t, y, w;
};

// best c for log p = -c t^a and its weighted residual sum of squares
inline std::pair<double, double> solve_rate(const TailFitData& d, double a) {
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        const double x = std::pow(d.t[i], a);
        sxy += d.w[i] * x * d.y[i];
        sxx += d.w[i] * x * x;
    }
    const double c = -sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        const double r = d.y[i] + c * std::pow(d.t[i], a);
        rss += d.w[i] * r * r;
    }
    return {c, rss};
}

}  // namespace detail

/// Weighted least squares of log p_hat against -c t^a.
///
/// With p_hint the exponent is pinned to (1-p)/(1+p); otherwise a is located
/// by a grid scan and golden-section refinement with c solved in closed form,
/// then polished by Gauss-Newton on (a, c). Weights are 1/se(log p_hat)^2
/// when every sample carries a positive standard error, uniform otherwise.
inline RateFitResult fit_tail_exponent(std::span<const TailSample> samples, std::optional<double> p_hint = {}) {
    detail::TailFitData d;
    RateFitResult res;
    bool all_weighted = true;
    std::vector<double> sigma;
    for (const auto& s : samples) {
        if (!std::isfinite(s.log_p)) {
            ++res.dropped;
            std::clog << "fit_tail_exponent: dropping sample at t=" << s.t << " with p_hat = 0\n";
            continue;
        }
        detail::require_usage(s.t > 0.0, "fit_tail_exponent: sample times must be positive");
        d.t.push_back(s.t);
        d.y.push_back(s.log_p);
        const double sig = s.std_error * std::exp(-s.log_p);
        sigma.push_back(sig);
        all_weighted = all_weighted && sig > 0.0 && std::isfinite(sig);
    }
    if (d.t.size() < 3) throw UsageError("fit_tail_exponent: fewer than 3 usable samples");
    {
        auto ts = d.t;
        std::sort(ts.begin(), ts.end());
        detail::require_usage(std::adjacent_find(ts.begin(), ts.end()) == ts.end(),
                              "fit_tail_exponent: sample times must be distinct");
    }
    d.w.resize(d.t.size());
    for (std::size_t i = 0; i < d.t.size(); ++i) d.w[i] = all_weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;

    double a = 0.0;
    if (p_hint) {
        detail::require_usage(*p_hint > 0.0 && *p_hint < 1.0, "fit_tail_exponent: p_hint must lie in (0,1)");
        a = (1.0 - *p_hint) / (1.0 + *p_hint);
    } else {
        constexpr double kLo = 0.005;
        constexpr double kHi = 0.995;
        constexpr int kScan = 199;
        double best_a = kLo;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < kScan; ++i) {
            const double ai = kLo + (kHi - kLo) * i / (kScan - 1);
            const double rss = detail::solve_rate(d, ai).second;
            if (rss < best) {
                best = rss;
                best_a = ai;
            }
        }
        const double h = (kHi - kLo) / (kScan - 1);
        double lo = std::max(kLo, best_a - h);
        double hi = std::min(kHi, best_a + h);
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - phi * (hi - lo);
        double x2 = lo + phi * (hi - lo);
        double f1 = detail::solve_rate(d, x1).second;
        double f2 = detail::solve_rate(d, x2).second;
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = detail::solve_rate(d, x1).second;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = detail::solve_rate(d, x2).second;
            }
        }
        a = 0.5 * (lo + hi);
        // Gauss-Newton on (a, c): residual r_i = y_i + c t_i^a
        double c = detail::solve_rate(d, a).first;
        double rss = detail::solve_rate(d, a).second;
        for (int it = 0; it < 20; ++it) {
            double j11 = 0, j12 = 0, j22 = 0, g1 = 0, g2 = 0;
            for (std::size_t i = 0; i < d.t.size(); ++i) {
                const double x = std::pow(d.t[i], a);
                const double r = d.y[i] + c * x;
                const double da = c * x * std::log(d.t[i]);
                j11 += d.w[i] * da * da;
                j12 += d.w[i] * da * x;
                j22 += d.w[i] * x * x;
                g1 += d.w[i] * da * r;
                g2 += d.w[i] * x * r;
            }
            const double det = j11 * j22 - j12 * j12;
            if (!(std::abs(det) > 0.0)) break;
            const double step_a = -(j22 * g1 - j12 * g2) / det;
            const double step_c = -(j11 * g2 - j12 * g1) / det;
            const double na = a + step_a;
            if (!(na > 0.0 && na < 1.0)) break;
            const double nc = c + step_c;
            double nrss = 0.0;
            for (std::size_t i = 0; i < d.t.size(); ++i) {
                const double r = d.y[i] + nc * std::pow(d.t[i], na);
                nrss += d.w[i] * r * r;
            }
            if (!(nrss <= rss)) break;
            a = na;
            c = nc;
            rss = nrss;
        }
    }
    const auto [c, rss] = detail::solve_rate(d, a);
    double wsum = 0.0;
    for (double w : d.w) wsum += w;
    res.exponent_hat = a;
    res.rate_hat = c;
    res.residual_rms = std::sqrt(rss / wsum);
    res.points_used = d.t.size();
    return res;
}

}  // namespace sdrift
