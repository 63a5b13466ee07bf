#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sdrift/drift.hpp"
#include "sdrift/errors.hpp"
#include "sdrift/mc.hpp"
#include "sdrift/variational.hpp"

namespace sdrift {

/// Flat INI file: [section] headers, `key = value` lines, `#` or `;` comments.
struct IniFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& name) const { return sections.count(name) > 0; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline IniFile parse_ini(const std::string& text) {
    IniFile ini;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            current = detail::trim(line.substr(1, line.size() - 2));
            if (current.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            if (ini.has(current)) throw ConfigError("duplicate section [" + current + "]");
            ini.sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (current.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        auto& sec = ini.sections[current];
        if (sec.count(key)) throw ConfigError("[" + current + "] duplicate key '" + key + "'");
        sec[key] = value;
    }
    return ini;
}

inline IniFile load_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_ini(ss.str());
}

/// One section with typed lookups; remembers which keys were read so leftovers can be rejected.
class Section {
public:
    Section(std::string name, std::map<std::string, std::string> entries)
        : name_(std::move(name)), entries_(std::move(entries)) {}

    const std::string& name() const { return name_; }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string text(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError("[" + name_ + "] missing required key '" + key + "'");
        used_.insert(key);
        return it->second;
    }

    std::string text_or(const std::string& key, const std::string& fallback) {
        return has(key) ? text(key) : fallback;
    }

    double real(const std::string& key) { return to_real(key, text(key)); }

    double real_or(const std::string& key, double fallback) { return has(key) ? real(key) : fallback; }

    std::uint64_t count(const std::string& key) {
        const auto s = text(key);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw ConfigError("[" + name_ + "] key '" + key + "' expects a non-negative integer, got '" + s + "'");
        return v;
    }

    std::uint64_t count_or(const std::string& key, std::uint64_t fallback) {
        return has(key) ? count(key) : fallback;
    }

    bool flag_or(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const auto s = text(key);
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        throw ConfigError("[" + name_ + "] key '" + key + "' expects a boolean, got '" + s + "'");
    }

    // comma-separated reals
    std::vector<double> reals(const std::string& key) {
        std::vector<double> out;
        std::stringstream ss(text(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_real(key, detail::trim(item)));
        if (out.empty()) throw ConfigError("[" + name_ + "] key '" + key + "' is an empty list");
        return out;
    }

    std::vector<double> reals_or(const std::string& key, std::vector<double> fallback) {
        return has(key) ? reals(key) : fallback;
    }

    void reject_unused() const {
        for (const auto& [key, value] : entries_)
            if (!used_.count(key)) throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
    }

private:
    std::string name_;
    std::map<std::string, std::string> entries_;
    std::set<std::string> used_;

    double to_real(const std::string& key, const std::string& s) const {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
            throw ConfigError("[" + name_ + "] key '" + key + "' expects a number, got '" + s + "'");
        return v;
    }
};

namespace detail {

inline MidSegment read_mid(Section& sec) {
    const auto kind = sec.text_or("mid.kind", "linear_bridge");
    if (kind == "linear_bridge") return MidSegment::linear_bridge();
    if (kind == "smooth_bridge") return MidSegment::smooth_bridge();
    if (kind == "constant") return MidSegment::constant(sec.real("mid.level"));
    throw ConfigError("[" + sec.name() + "] mid.kind must be constant, linear_bridge or smooth_bridge");
}

// `name = c` for a constant, or name.base / name.amp / name.rate
inline CoefFn read_coef(Section& sec, const std::string& name) {
    if (sec.has(name)) return CoefFn::constant(sec.real(name));
    if (!sec.has(name + ".base")) throw ConfigError("[" + sec.name() + "] missing required key '" + name + "'");
    return {sec.real(name + ".base"), sec.real_or(name + ".amp", 0.0), sec.real_or(name + ".rate", 0.0)};
}

inline SlowVaryFn read_ell(Section& sec, const std::string& name, SlowVaryFn::Domain domain) {
    const auto kind = sec.text_or(name + ".kind", "one");
    if (kind == "one") return SlowVaryFn::one(domain);
    if (kind == "log_power") return SlowVaryFn::log_power(sec.real(name + ".r"), domain);
    if (kind == "iter_log") return SlowVaryFn::iter_log(domain);
    if (kind == "table") return SlowVaryFn::table(sec.reals(name + ".x"), sec.reals(name + ".v"), domain);
    throw ConfigError("[" + sec.name() + "] " + name + ".kind must be one, log_power, iter_log or table");
}

}  // namespace detail

/// Builds a DriftSpec from a [drift] section; `variant` picks the family.
inline DriftSpec drift_from_section(Section& sec) {
    const auto variant = sec.text("variant");
    if (variant == "piecewise_power") {
        PiecewisePower pp;
        pp.alpha = sec.real("alpha");
        pp.q = sec.real("q");
        pp.beta = sec.real("beta");
        pp.p = sec.real("p");
        pp.m1 = sec.real("m1");
        pp.m2 = sec.real("m2");
        pp.mid = detail::read_mid(sec);
        return DriftSpec(pp);
    }
    if (variant == "pure_power") {
        PurePower pw;
        pw.beta = sec.real("beta");
        pw.p = sec.real("p");
        return DriftSpec(pw);
    }
    if (variant == "slowly_varying") {
        SlowlyVarying sv;
        sv.alpha = detail::read_coef(sec, "alpha");
        sv.beta = detail::read_coef(sec, "beta");
        sv.q = sec.real("q");
        sv.p = sec.real("p");
        sv.m1 = sec.real("m1");
        sv.m2 = sec.real("m2");
        sv.ell1 = detail::read_ell(sec, "ell1", SlowVaryFn::Domain::AtZero);
        sv.ell2 = detail::read_ell(sec, "ell2", SlowVaryFn::Domain::AtInfinity);
        sv.mid = detail::read_mid(sec);
        return DriftSpec(sv);
    }
    throw ConfigError("[drift] variant must be piecewise_power, pure_power or slowly_varying");
}

inline SimConfig sim_from_section(Section& sec) {
    SimConfig c;
    c.dt_max = sec.real_or("dt_max", c.dt_max);
    c.dt_floor = sec.real_or("dt_floor", c.dt_floor);
    c.dt_scale = sec.real_or("dt_scale", c.dt_scale);
    c.absorb_at = sec.real_or("absorb_at", c.absorb_at);
    c.bridge_correction = sec.flag_or("bridge_correction", c.bridge_correction);
    c.horizon = sec.real_or("horizon", c.horizon);
    c.seed = sec.count_or("seed", c.seed);
    c.n_paths = sec.count_or("n_paths", c.n_paths);
    c.drift_cap = sec.real_or("drift_cap", c.drift_cap);
    return c;
}

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"rate",    "survival-closed", "survival-mc", "fk-check", "two-sided",
                                                "tilt-mc", "varmin",          "compare",     "tailfit",  "potter"};
    return names;
}

inline bool needs_sim(const std::string& sub) {
    return sub == "survival-mc" || sub == "fk-check" || sub == "two-sided" || sub == "tilt-mc" || sub == "compare" ||
           sub == "tailfit";
}

/// [run] settings; keys irrelevant to the chosen subcommand are rejected.
struct RunSettings {
    std::string subcommand;
    std::string output;
    double x0 = 1.0;
    std::vector<double> t{1.0};
    // two-sided
    double r1 = 0.5;
    double r2 = 2.0;
    // varmin, tilt-mc, tailfit
    std::size_t n = 2048;
    double tol = 1e-10;
    std::size_t max_iters = 100000;
    InitKind init = InitKind::PowerLaw;
    double tilt_delta = kDefaultTiltDelta;
    // tailfit
    std::string scheme = "tilted";
    std::optional<double> p_hint;
    // compare
    std::string coupling = "sandwich";
    double delta = 0.1;
    double eps = 0.1;
    std::vector<double> dt_list;
    bool uniform_steps = false;  // dt_floor = dt_max for every entry of dt_list
    // potter
    double potter_a = 2.0;
    std::size_t pairs = 10000;
};

struct ExperimentConfig {
    DriftSpec drift;
    SimConfig sim;
    RunSettings run;
};

inline RunSettings run_from_section(Section& sec) {
    RunSettings r;
    r.subcommand = sec.text("subcommand");
    const auto& subs = subcommands();
    if (std::find(subs.begin(), subs.end(), r.subcommand) == subs.end())
        throw ConfigError("[run] unknown subcommand '" + r.subcommand + "'");
    const auto& s = r.subcommand;
    r.output = sec.text_or("output", s + ".csv");
    if (s == "potter") {
        r.delta = sec.real_or("delta", r.delta);
        r.potter_a = sec.real_or("A", r.potter_a);
        r.pairs = sec.count_or("pairs", r.pairs);
        return r;
    }
    if (s == "rate") return r;
    if (s == "varmin") {
        r.n = sec.count_or("n", r.n);
        r.tol = sec.real_or("tol", r.tol);
        r.max_iters = sec.count_or("max_iters", r.max_iters);
        const auto init = sec.text_or("init", "power_law");
        if (init == "linear")
            r.init = InitKind::Linear;
        else if (init != "power_law")
            throw ConfigError("[run] init must be power_law or linear");
        return r;
    }
    r.x0 = sec.real_or("x0", r.x0);
    if (s == "two-sided") {
        r.r1 = sec.real("r1");
        r.r2 = sec.real("r2");
        return r;
    }
    r.t = sec.reals_or("t", r.t);
    if (s == "tilt-mc" || s == "tailfit") {
        r.n = sec.count_or("n", r.n);
        r.tilt_delta = sec.real_or("tilt_delta", r.tilt_delta);
    }
    if (s == "tailfit") {
        r.scheme = sec.text_or("scheme", r.scheme);
        if (r.scheme != "tilted" && r.scheme != "direct") throw ConfigError("[run] scheme must be tilted or direct");
        if (sec.has("p_hint")) r.p_hint = sec.real("p_hint");
    }
    if (s == "compare") {
        r.coupling = sec.text_or("coupling", r.coupling);
        if (r.coupling != "sandwich" && r.coupling != "identical")
            throw ConfigError("[run] coupling must be sandwich or identical");
        r.delta = sec.real_or("delta", r.delta);
        r.eps = sec.real_or("eps", r.eps);
        r.dt_list = sec.reals_or("dt_list", {});
        r.uniform_steps = sec.flag_or("uniform_steps", r.uniform_steps);
        if (r.t.size() != 1) throw ConfigError("[run] compare takes a single t");
    }
    return r;
}

/// Parses and validates a whole experiment; every section is checked for unknown keys.
inline ExperimentConfig parse_experiment(const IniFile& ini) {
    for (const auto& [name, entries] : ini.sections)
        if (name != "drift" && name != "sim" && name != "run") throw ConfigError("unknown section [" + name + "]");
    if (!ini.has("run")) throw ConfigError("missing section [run]");
    Section run(std::string("run"), ini.sections.at("run"));
    ExperimentConfig cfg;
    cfg.run = run_from_section(run);
    if (!ini.has("drift")) throw ConfigError("missing section [drift]");
    Section drift("drift", ini.sections.at("drift"));
    cfg.drift = drift_from_section(drift);
    drift.reject_unused();
    if (needs_sim(cfg.run.subcommand)) {
        if (!ini.has("sim")) throw ConfigError("missing section [sim] for subcommand " + cfg.run.subcommand);
        Section sim("sim", ini.sections.at("sim"));
        cfg.sim = sim_from_section(sim);
        sim.reject_unused();
    } else if (ini.has("sim")) {
        throw ConfigError("section [sim] is not used by subcommand " + cfg.run.subcommand);
    }
    cfg.sim.workers = run.count_or("workers", 1);
    run.reject_unused();
    return cfg;
}

}  // namespace sdrift
