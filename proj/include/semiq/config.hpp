#pragma once

// Run configuration: UTF-8 "key = value" files with dotted section keys and
// '#' comments, plus --key=value flag overrides. Unknown keys are hard
// errors; omitted keys fall back to the documented defaults.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "semiq/chaos.hpp"
#include "semiq/errors.hpp"
#include "semiq/integrate.hpp"
#include "semiq/limits.hpp"
#include "semiq/model.hpp"

namespace semiq {

struct ParseError : ConfigError {
    explicit ParseError(const std::string& what) : ConfigError(what) {}
};

struct ValidationError : ConfigError {
    explicit ValidationError(const std::string& what) : ConfigError(what) {}
};

enum class Experiment { simulate, limit, lyapunov, poincare, sweep };

inline const char* to_string(Experiment e) {
    switch (e) {
        case Experiment::simulate: return "simulate";
        case Experiment::limit: return "limit";
        case Experiment::lyapunov: return "lyapunov";
        case Experiment::poincare: return "poincare";
        default: return "sweep";
    }
}

struct RunConfig {
    ModelParams model;

    Representation representation = Representation::expectations;
    ExpectationState initial_evs{1.0, 1.0, 0.0, 1.0, 0.0};
    MultiplierState initial_multipliers{1.0, 1.0, 0.0, 1.0, 0.0};

    IntegratorConfig integrator;
    Experiment experiment = Experiment::simulate;

    LimitOrdering limit_ordering = LimitOrdering::i_first;
    std::vector<double> limit_hbar_seq = {1.0, 1e-1, 1e-2, 1e-3};
    std::vector<double> limit_gap_seq = {1e-2, 1e-3, 1e-4, 1e-5};
    double limit_t_end = 50.0;

    LyapunovParams lyapunov;
    long poincare_max_points = -1;  // -1: unlimited

    std::vector<double> sweep_grid = {1.3, 1.6, 1.9, 2.2};
    SweepThresholds sweep_thresholds;
    unsigned sweep_threads = 1;

    std::string output = "out.csv";
    std::uint64_t seed = 1;

    /// Initial state as moments, converting from multipliers when needed.
    ExpectationState initial_as_evs() const {
        return representation == Representation::expectations
                   ? initial_evs
                   : multipliers_to_evs(initial_multipliers, model);
    }

    void validate() const {
        try {
            model.validate();
            integrator.validate();
            lyapunov.validate();
            sweep_thresholds.validate();
            if (representation == Representation::multipliers) {
                if (!model.quantum())
                    throw ConfigError(
                        "multiplier representation requires model.hbar > 0; use the "
                        "expectation-value representation at hbar = 0");
                initial_multipliers.validate();
            } else {
                initial_evs.validate(model.hbar);
            }
            if (experiment == Experiment::limit) {
                LimitSchedule sched = limit_schedule();
                sched.validate();
            }
            if (experiment == Experiment::sweep) {
                if (sweep_grid.empty()) throw ConfigError("sweep.e_r_grid must be nonempty");
                for (std::size_t i = 1; i < sweep_grid.size(); ++i)
                    if (!(sweep_grid[i] > sweep_grid[i - 1]))
                        throw ConfigError("sweep.e_r_grid must be strictly increasing");
                if (sweep_threads < 1) throw ConfigError("sweep.threads must be >= 1");
            }
            if (output.empty()) throw ConfigError("output path must be nonempty");
        } catch (const Error& e) {
            throw ValidationError(e.what());
        }
    }

    LimitSchedule limit_schedule() const {
        LimitSchedule sched;
        sched.ordering = limit_ordering;
        sched.hbar_seq = limit_hbar_seq;
        sched.gap_seq = limit_gap_seq;
        sched.base_initial = initial_as_evs();
        sched.t_end = limit_t_end;
        return sched;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& v, const std::string& where) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ParseError(where + ": expected a number, got '" + v + "'");
    }
    if (pos != v.size()) throw ParseError(where + ": trailing characters in '" + v + "'");
    return out;
}

inline long parse_long(const std::string& v, const std::string& where) {
    std::size_t pos = 0;
    long out = 0;
    try {
        out = std::stol(v, &pos);
    } catch (const std::exception&) {
        throw ParseError(where + ": expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) throw ParseError(where + ": trailing characters in '" + v + "'");
    return out;
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& where) {
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw ParseError(where + ": expected an unsigned integer, got '" + v + "'");
    }
    if (pos != v.size()) throw ParseError(where + ": trailing characters in '" + v + "'");
    return static_cast<std::uint64_t>(out);
}

inline std::vector<double> parse_list(const std::string& v, const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ParseError(where + ": empty element in list '" + v + "'");
        out.push_back(parse_double(item, where));
    }
    if (out.empty()) throw ParseError(where + ": empty list");
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

/// Key registry: defines the accepted key set, the parse actions, and the
/// echo order used by the run manifest.
inline const std::vector<std::pair<std::string, Setter>>& config_keys() {
    static const std::vector<std::pair<std::string, Setter>> keys = {
        {"model.m_q", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.model.m_q = parse_double(v, w);
         }},
        {"model.m_cl", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.model.m_cl = parse_double(v, w);
         }},
        {"model.omega_q", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.model.omega_q = parse_double(v, w);
         }},
        {"model.e", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.model.e = parse_double(v, w);
         }},
        {"model.hbar", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.model.hbar = parse_double(v, w);
         }},
        {"initial.representation", [](RunConfig& c, const std::string& v, const std::string& w) {
             if (v == "expectations")
                 c.representation = Representation::expectations;
             else if (v == "multipliers")
                 c.representation = Representation::multipliers;
             else
                 throw ParseError(w + ": expected 'expectations' or 'multipliers', got '" + v +
                                  "'");
         }},
        {"initial.x2", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.initial_evs.x2 = parse_double(v, w);
         }},
        {"initial.p2", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.initial_evs.p2 = parse_double(v, w);
         }},
        {"initial.l", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.initial_evs.l = parse_double(v, w);
         }},
        {"initial.lambda1", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.initial_multipliers.lambda1 = parse_double(v, w);
         }},
        {"initial.lambda2", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.initial_multipliers.lambda2 = parse_double(v, w);
         }},
        {"initial.lambda3", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.initial_multipliers.lambda3 = parse_double(v, w);
         }},
        {"initial.a", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.initial_evs.a = parse_double(v, w);
             c.initial_multipliers.a = c.initial_evs.a;
         }},
        {"initial.p_a", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.initial_evs.p_a = parse_double(v, w);
             c.initial_multipliers.p_a = c.initial_evs.p_a;
         }},
        {"integrator.method", [](RunConfig& c, const std::string& v, const std::string& w) {
             if (v == "rk45-adaptive")
                 c.integrator.method = Method::rk45_adaptive;
             else if (v == "rk4-fixed")
                 c.integrator.method = Method::rk4_fixed;
             else
                 throw ParseError(w + ": expected 'rk45-adaptive' or 'rk4-fixed', got '" + v +
                                  "'");
         }},
        {"integrator.rel_tol", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.integrator.rel_tol = parse_double(v, w);
         }},
        {"integrator.abs_tol", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.integrator.abs_tol = parse_double(v, w);
         }},
        {"integrator.dt_init", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.integrator.dt_init = parse_double(v, w);
         }},
        {"integrator.t_end", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.integrator.t_end = parse_double(v, w);
         }},
        {"integrator.sample_stride", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.integrator.sample_stride = static_cast<int>(parse_long(v, w));
         }},
        {"integrator.drift_tol", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.integrator.drift_tol = parse_double(v, w);
         }},
        {"experiment", [](RunConfig& c, const std::string& v, const std::string& w) {
             if (v == "simulate") c.experiment = Experiment::simulate;
             else if (v == "limit") c.experiment = Experiment::limit;
             else if (v == "lyapunov") c.experiment = Experiment::lyapunov;
             else if (v == "poincare") c.experiment = Experiment::poincare;
             else if (v == "sweep") c.experiment = Experiment::sweep;
             else throw ParseError(w + ": unknown experiment '" + v + "'");
         }},
        {"limit.ordering", [](RunConfig& c, const std::string& v, const std::string& w) {
             if (v == "hbar_first") c.limit_ordering = LimitOrdering::hbar_first;
             else if (v == "i_first") c.limit_ordering = LimitOrdering::i_first;
             else throw ParseError(w + ": expected 'hbar_first' or 'i_first', got '" + v + "'");
         }},
        {"limit.hbar_seq", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.limit_hbar_seq = parse_list(v, w);
         }},
        {"limit.gap_seq", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.limit_gap_seq = parse_list(v, w);
         }},
        {"limit.t_end", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.limit_t_end = parse_double(v, w);
         }},
        {"lyapunov.renorm_dt", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.lyapunov.renorm_dt = parse_double(v, w);
         }},
        {"lyapunov.horizon", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.lyapunov.horizon = parse_double(v, w);
         }},
        {"lyapunov.d0", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.lyapunov.d0 = parse_double(v, w);
         }},
        {"poincare.max_points", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.poincare_max_points = parse_long(v, w);
         }},
        {"sweep.e_r_grid", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.sweep_grid = parse_list(v, w);
         }},
        {"sweep.threads", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.sweep_threads = static_cast<unsigned>(parse_long(v, w));
         }},
        {"sweep.lambda_low", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.sweep_thresholds.lambda_low = parse_double(v, w);
         }},
        {"sweep.lambda_high", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.sweep_thresholds.lambda_high = parse_double(v, w);
         }},
        {"sweep.dist_tol", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.sweep_thresholds.classical_dist_tol = parse_double(v, w);
         }},
        {"sweep.dist_horizon", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.sweep_thresholds.dist_horizon = parse_double(v, w);
         }},
        {"output", [](RunConfig& c, const std::string& v, const std::string&) { c.output = v; }},
        {"seed", [](RunConfig& c, const std::string& v, const std::string& w) {
             c.seed = parse_u64(v, w);
         }},
    };
    return keys;
}

inline const Setter* find_key(const std::string& key) {
    for (const auto& [name, setter] : config_keys())
        if (name == key) return &setter;
    return nullptr;
}

inline void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value,
                            const std::string& where) {
    const Setter* setter = find_key(key);
    if (!setter) throw ParseError(where + ": unknown key '" + key + "'");
    (*setter)(cfg, value, where);
}

}  // namespace detail

/// Parses a config file plus flag overrides of the form "key=value". Flags
/// win over file values; an empty path yields the pure default config.
inline RunConfig parse_config(const std::string& path,
                              const std::vector<std::string>& overrides = {}) {
    RunConfig cfg;

    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open config file '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            const std::string where = path + ":" + std::to_string(lineno);
            if (eq == std::string::npos)
                throw ParseError(where + ": expected 'key = value', got '" + line + "'");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty()) throw ParseError(where + ": empty key");
            detail::apply_key_value(cfg, key, value, where);
        }
    }

    for (const std::string& ov : overrides) {
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw ParseError("flag '--" + ov + "': expected --key=value");
        const std::string key = detail::trim(ov.substr(0, eq));
        const std::string value = detail::trim(ov.substr(eq + 1));
        detail::apply_key_value(cfg, key, value, "flag --" + key);
    }

    return cfg;
}

}  // namespace semiq
