#pragma once

#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sdrift/analytic.hpp"
#include "sdrift/config.hpp"
#include "sdrift/csv.hpp"
#include "sdrift/drift.hpp"
#include "sdrift/errors.hpp"
#include "sdrift/mc.hpp"
#include "sdrift/variational.hpp"

namespace sdrift {

enum ExitCode : int {
    kExitOk = 0,
    kExitOther = 1,
    kExitConfig = 2,
    kExitDomain = 3,
    kExitUsage = 4,
    kExitNumeric = 5,
    kExitConstruction = 6,
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out;
};

inline void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
    if (o.seed) cfg.sim.seed = *o.seed;
    if (o.workers) cfg.sim.workers = *o.workers;
    if (o.out) cfg.run.output = *o.out;
}

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::vector<std::string> estimate_header() {
    return {"scheme", "x0", "t", "p_hat", "stderr", "n_paths", "dt_max", "seed"};
}

inline void write_estimate(CsvWriter& csv, const SurvivalEstimate& e, double x0, const SimConfig& sim) {
    csv.row(std::string(scheme_name(e.scheme)), x0, e.t, e.p_hat, e.std_error, e.n_paths, sim.dt_max, sim.seed);
}

inline double combined_z(const SurvivalEstimate& a, const SurvivalEstimate& b) {
    const double se = std::hypot(a.std_error, b.std_error);
    return se > 0.0 ? std::abs(a.p_hat - b.p_hat) / se : (a.p_hat == b.p_hat ? 0.0 : INFINITY);
}

inline SimConfig with_horizon(SimConfig sim, const std::vector<double>& ts) {
    for (double t : ts) sim.horizon = std::max(sim.horizon, t);
    return sim;
}

inline std::string run_rate(const ExperimentConfig& cfg) {
    const double p = cfg.drift.tail_exponent();
    const double beta = cfg.drift.tail_beta();
    const double g = gamma_rate(p, beta);
    CsvWriter csv(cfg.run.output, {"p", "beta", "gamma"});
    csv.row(p, beta, g);
    return "gamma(p=" + fmt("%g", p) + ", beta=" + fmt("%g", beta) + ") = " + fmt("%.4g", g);
}

inline std::string run_survival_closed(const ExperimentConfig& cfg) {
    const auto* pw = std::get_if<PurePower>(&cfg.drift.params());
    require_usage(pw != nullptr, "survival-closed: needs a pure_power drift");
    const bool bessel = pw->p == 1.0;
    require_usage(bessel || std::abs(pw->beta) <= 1e-9,
                  "survival-closed: closed forms exist for p = 1 or for a driftless proxy (|beta| <= 1e-9)");
    CsvWriter csv(cfg.run.output, {"formula", "x0", "t", "survival"});
    std::string summary;
    for (double t : cfg.run.t) {
        const double s = bessel ? bessel_like_survival(cfg.run.x0, t, pw->beta) : bm_survival(cfg.run.x0, t);
        csv.row(std::string(bessel ? "bessel_like" : "brownian"), cfg.run.x0, t, s);
        summary += (summary.empty() ? "" : " ") + std::string("P(t=") + fmt("%g", t) + ")=" + fmt("%.6f", s);
    }
    return summary;
}

inline std::string run_survival_mc(const ExperimentConfig& cfg) {
    const auto sim = with_horizon(cfg.sim, cfg.run.t);
    const auto est = estimate_survival_curve(cfg.drift, cfg.run.x0, cfg.run.t, sim);
    CsvWriter csv(cfg.run.output, estimate_header());
    std::string summary;
    for (const auto& e : est) {
        write_estimate(csv, e, cfg.run.x0, sim);
        summary += (summary.empty() ? "" : " ") + std::string("p_hat(t=") + fmt("%g", e.t) +
                   ")=" + fmt("%.6f", e.p_hat) + "+-" + fmt("%.2g", e.std_error);
    }
    return summary;
}

inline std::string run_fk_check(const ExperimentConfig& cfg) {
    const auto sim = with_horizon(cfg.sim, cfg.run.t);
    CsvWriter csv(cfg.run.output, estimate_header());
    double worst = 0.0;
    for (double t : cfg.run.t) {
        const auto direct = estimate_survival(cfg.drift, cfg.run.x0, t, sim);
        const auto fk = feynman_kac_estimate(cfg.drift, cfg.run.x0, t, sim);
        write_estimate(csv, direct, cfg.run.x0, sim);
        write_estimate(csv, fk, cfg.run.x0, sim);
        worst = std::max(worst, combined_z(direct, fk));
    }
    return "direct vs feynman_kac: worst |diff|/combined stderr = " + fmt("%.3f", worst);
}

inline std::string run_two_sided(const ExperimentConfig& cfg) {
    const auto& r = cfg.run;
    const auto mc = estimate_two_sided(cfg.drift, r.x0, r.r1, r.r2, cfg.sim);
    const double exact =
        cfg.drift.is_slowly_varying() ? NAN : two_sided_exit_prob(cfg.drift, r.x0, r.r1, r.r2);
    CsvWriter csv(r.output, {"x0", "r1", "r2", "analytic", "p_hat", "stderr", "n_paths", "censored", "seed"});
    csv.row(r.x0, r.r1, r.r2, exact, mc.p_hat, mc.std_error, mc.n_paths, mc.censored, cfg.sim.seed);
    std::string s = "P(tau_r1 < tau_r2): analytic=" + fmt("%.6f", exact) + " mc=" + fmt("%.6f", mc.p_hat) + "+-" +
                    fmt("%.2g", mc.std_error);
    if (mc.censored > 0) s += " censored=" + std::to_string(mc.censored);
    return s;
}

inline std::vector<SurvivalEstimate> tilted_curve(const ExperimentConfig& cfg) {
    const auto tilt = optimal_tilt(cfg.drift.tail_exponent(), cfg.drift.tail_beta(), cfg.run.n, cfg.run.tilt_delta);
    std::vector<SurvivalEstimate> out;
    for (double t : cfg.run.t) {
        SimConfig sim = cfg.sim;
        sim.horizon = t;
        out.push_back(tilted_survival(cfg.drift, cfg.run.x0, t, tilt, sim));
    }
    return out;
}

inline std::string run_tilt_mc(const ExperimentConfig& cfg) {
    const auto est = tilted_curve(cfg);
    CsvWriter csv(cfg.run.output, estimate_header());
    std::string summary;
    for (const auto& e : est) {
        write_estimate(csv, e, cfg.run.x0, cfg.sim);
        summary += (summary.empty() ? "" : " ") + std::string("p_hat(t=") + fmt("%g", e.t) +
                   ")=" + fmt("%.4e", e.p_hat) + "+-" + fmt("%.2g", e.std_error);
    }
    return summary;
}

inline std::string run_varmin(const ExperimentConfig& cfg) {
    const double p = cfg.drift.tail_exponent();
    const double beta = cfg.drift.tail_beta();
    const auto& r = cfg.run;
    const auto res = minimize_F(p, beta, r.n, r.tol, r.max_iters, r.init);
    CsvWriter csv(r.output, {"u", "omega"});
    for (std::size_t k = 0; k < res.path.values.size(); ++k) csv.row(res.path.u(k), res.path.values[k]);
    const double g = gamma_rate(p, beta);
    const std::string s = "min F = " + fmt("%.6f", res.value) + " gamma = " + fmt("%.6f", g) +
                          " rel gap = " + fmt("%.4f", (res.value - g) / g) +
                          " iterations = " + std::to_string(res.iterations);
    if (!res.converged) throw NumericError("varmin did not converge (" + s + ")");
    return s;
}

inline std::string run_compare(const ExperimentConfig& cfg) {
    std::optional<SandwichPair> pair;
    if (cfg.run.coupling == "sandwich") pair = sandwich_drifts(cfg.drift, cfg.run.delta, cfg.run.eps);
    const DriftSpec& low = pair ? pair->lower : cfg.drift;
    const DriftSpec& high = pair ? pair->upper : cfg.drift;
    const double t = cfg.run.t.front();
    const auto dts = cfg.run.dt_list.empty() ? std::vector<double>{cfg.sim.dt_max} : cfg.run.dt_list;
    CsvWriter csv(cfg.run.output, {"dt_max", "dt_floor", "violation_fraction", "max_gap", "samples", "violations"});
    std::string summary;
    for (double dt : dts) {
        SimConfig sim = cfg.sim;
        sim.dt_max = dt;
        sim.dt_floor = cfg.run.uniform_steps ? dt : std::min(sim.dt_floor, dt);
        sim.horizon = std::max(sim.horizon, t);
        const auto rep = coupled_compare(low, high, cfg.run.x0, t, sim);
        csv.row(dt, sim.dt_floor, rep.violation_fraction, rep.max_gap, rep.samples, rep.violations);
        summary += (summary.empty() ? "" : " ") + std::string("viol(dt=") + fmt("%g", dt) +
                   ")=" + fmt("%.3e", rep.violation_fraction);
    }
    return summary;
}

inline std::string run_tailfit(const ExperimentConfig& cfg) {
    std::vector<SurvivalEstimate> est;
    if (cfg.run.scheme == "tilted") {
        est = tilted_curve(cfg);
    } else {
        est = estimate_survival_curve(cfg.drift, cfg.run.x0, cfg.run.t, with_horizon(cfg.sim, cfg.run.t));
    }
    std::vector<TailSample> samples;
    CsvWriter csv(cfg.run.output, {"scheme", "x0", "t", "p_hat", "stderr", "log_p_hat", "n_paths", "seed"});
    for (const auto& e : est) {
        const double lp = e.p_hat > 0.0 ? std::log(e.p_hat) : -INFINITY;
        csv.row(std::string(scheme_name(e.scheme)), cfg.run.x0, e.t, e.p_hat, e.std_error, lp, e.n_paths,
                cfg.sim.seed);
        samples.push_back({e.t, lp, e.std_error});
    }
    const auto fit = fit_tail_exponent(samples, cfg.run.p_hint);
    const double g = gamma_rate(cfg.drift.tail_exponent(), cfg.drift.tail_beta());
    return "exponent_hat = " + fmt("%.4f", fit.exponent_hat) + " rate_hat = " + fmt("%.4f", fit.rate_hat) +
           " gamma = " + fmt("%.4f", g) + " points = " + std::to_string(fit.points_used);
}

inline std::string run_potter(const ExperimentConfig& cfg) {
    const auto* sv = std::get_if<SlowlyVarying>(&cfg.drift.params());
    require_usage(sv != nullptr, "potter: needs a slowly_varying drift");
    const auto& r = cfg.run;
    CsvWriter csv(r.output, {"factor", "A", "delta", "M", "potter_holds", "worst_ratio", "sandwich_holds",
                             "worst_excess", "grid_lo", "grid_hi"});
    std::string summary;
    const std::pair<const char*, std::pair<const SlowVaryFn*, double>> items[] = {{"ell1", {&sv->ell1, sv->m1}},
                                                                                 {"ell2", {&sv->ell2, sv->m2}}};
    for (const auto& [name, item] : items) {
        const auto pot = potter_check(*item.first, r.potter_a, r.delta, item.second, r.pairs);
        const auto sw = sandwich_bounds(*item.first, r.delta, item.second);
        csv.row(std::string(name), r.potter_a, r.delta, item.second, pot.holds, pot.worst_ratio, sw.holds,
                sw.worst_excess, pot.grid_lo, pot.grid_hi);
        summary += (summary.empty() ? "" : " ") + std::string(name) + ": potter " + (pot.holds ? "holds" : "fails") +
                   " (worst " + fmt("%.4f", pot.worst_ratio) + "), sandwich " + (sw.holds ? "holds" : "fails");
    }
    return summary;
}

}  // namespace detail

/// Runs one experiment and returns the summary line (without the output path).
inline std::string run_experiment(const ExperimentConfig& cfg) {
    cfg.sim.validate();
    const auto& s = cfg.run.subcommand;
    if (s == "rate") return detail::run_rate(cfg);
    if (s == "survival-closed") return detail::run_survival_closed(cfg);
    if (s == "survival-mc") return detail::run_survival_mc(cfg);
    if (s == "fk-check") return detail::run_fk_check(cfg);
    if (s == "two-sided") return detail::run_two_sided(cfg);
    if (s == "tilt-mc") return detail::run_tilt_mc(cfg);
    if (s == "varmin") return detail::run_varmin(cfg);
    if (s == "compare") return detail::run_compare(cfg);
    if (s == "tailfit") return detail::run_tailfit(cfg);
    if (s == "potter") return detail::run_potter(cfg);
    throw ConfigError("unknown subcommand '" + s + "'");
}

/// Loads, runs and reports; maps each error category to its exit code.
inline int run(const std::string& config_path, const Overrides& overrides, std::ostream& out, std::ostream& err) {
    try {
        auto cfg = parse_experiment(load_ini(config_path));
        apply_overrides(cfg, overrides);
        const auto summary = run_experiment(cfg);
        out << cfg.run.subcommand << ": " << summary << " -> " << cfg.run.output << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const ConstructionError& e) {
        err << "construction error: " << e.what() << '\n';
        return kExitConstruction;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitOther;
    }
}

}  // namespace sdrift
