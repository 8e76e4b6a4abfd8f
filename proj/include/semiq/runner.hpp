#pragma once

// Experiment orchestration for the CLI: runs the selected experiment from a
// RunConfig and emits the CSV artifact plus a flat key = value manifest
// (config echo, frozen k_nl, initial invariants, drift summary) alongside.

#include <string>
#include <utility>
#include <vector>

#include "semiq/algebra.hpp"
#include "semiq/chaos.hpp"
#include "semiq/config.hpp"
#include "semiq/csv.hpp"
#include "semiq/integrate.hpp"
#include "semiq/limits.hpp"
#include "semiq/version.hpp"

namespace semiq {

namespace detail {

/// Resolved config in registry order, for the manifest echo.
inline std::vector<std::pair<std::string, std::string>> echo_config(const RunConfig& c) {
    const auto list = [](const std::vector<double>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            out += fmt17(v[i]);
        }
        return out;
    };
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("model.m_q", fmt17(c.model.m_q));
    kv.emplace_back("model.m_cl", fmt17(c.model.m_cl));
    kv.emplace_back("model.omega_q", fmt17(c.model.omega_q));
    kv.emplace_back("model.e", fmt17(c.model.e));
    kv.emplace_back("model.hbar", fmt17(c.model.hbar));
    kv.emplace_back("initial.representation",
                    c.representation == Representation::expectations ? "expectations"
                                                                     : "multipliers");
    if (c.representation == Representation::expectations) {
        kv.emplace_back("initial.x2", fmt17(c.initial_evs.x2));
        kv.emplace_back("initial.p2", fmt17(c.initial_evs.p2));
        kv.emplace_back("initial.l", fmt17(c.initial_evs.l));
    } else {
        kv.emplace_back("initial.lambda1", fmt17(c.initial_multipliers.lambda1));
        kv.emplace_back("initial.lambda2", fmt17(c.initial_multipliers.lambda2));
        kv.emplace_back("initial.lambda3", fmt17(c.initial_multipliers.lambda3));
    }
    kv.emplace_back("initial.a", fmt17(c.initial_evs.a));
    kv.emplace_back("initial.p_a", fmt17(c.initial_evs.p_a));
    kv.emplace_back("integrator.method", c.integrator.method == Method::rk45_adaptive
                                             ? "rk45-adaptive"
                                             : "rk4-fixed");
    kv.emplace_back("integrator.rel_tol", fmt17(c.integrator.rel_tol));
    kv.emplace_back("integrator.abs_tol", fmt17(c.integrator.abs_tol));
    kv.emplace_back("integrator.dt_init", fmt17(c.integrator.dt_init));
    kv.emplace_back("integrator.t_end", fmt17(c.integrator.t_end));
    kv.emplace_back("integrator.sample_stride", std::to_string(c.integrator.sample_stride));
    kv.emplace_back("integrator.drift_tol", fmt17(c.integrator.drift_tol));
    kv.emplace_back("experiment", to_string(c.experiment));
    switch (c.experiment) {
        case Experiment::limit:
            kv.emplace_back("limit.ordering", c.limit_ordering == LimitOrdering::hbar_first
                                                  ? "hbar_first"
                                                  : "i_first");
            kv.emplace_back("limit.hbar_seq", list(c.limit_hbar_seq));
            kv.emplace_back("limit.gap_seq", list(c.limit_gap_seq));
            kv.emplace_back("limit.t_end", fmt17(c.limit_t_end));
            break;
        case Experiment::lyapunov:
            kv.emplace_back("lyapunov.renorm_dt", fmt17(c.lyapunov.renorm_dt));
            kv.emplace_back("lyapunov.horizon", fmt17(c.lyapunov.horizon));
            kv.emplace_back("lyapunov.d0", fmt17(c.lyapunov.d0));
            break;
        case Experiment::poincare:
            kv.emplace_back("poincare.max_points", std::to_string(c.poincare_max_points));
            break;
        case Experiment::sweep:
            kv.emplace_back("sweep.e_r_grid", list(c.sweep_grid));
            kv.emplace_back("sweep.threads", std::to_string(c.sweep_threads));
            kv.emplace_back("sweep.lambda_low", fmt17(c.sweep_thresholds.lambda_low));
            kv.emplace_back("sweep.lambda_high", fmt17(c.sweep_thresholds.lambda_high));
            kv.emplace_back("sweep.dist_tol", fmt17(c.sweep_thresholds.classical_dist_tol));
            kv.emplace_back("sweep.dist_horizon", fmt17(c.sweep_thresholds.dist_horizon));
            kv.emplace_back("lyapunov.renorm_dt", fmt17(c.lyapunov.renorm_dt));
            kv.emplace_back("lyapunov.horizon", fmt17(c.lyapunov.horizon));
            kv.emplace_back("lyapunov.d0", fmt17(c.lyapunov.d0));
            break;
        default:
            break;
    }
    kv.emplace_back("output", c.output);
    kv.emplace_back("seed", std::to_string(c.seed));
    return kv;
}

class ManifestBuilder {
public:
    explicit ManifestBuilder(const RunConfig& cfg) {
        add("version", k_version);
        for (const auto& [k, v] : echo_config(cfg)) add("config." + k, v);
    }

    void add(const std::string& key, const std::string& value) {
        text_ += key + " = " + value + "\n";
    }
    void add(const std::string& key, double value) { add(key, num_field(value)); }

    /// Frozen k_nl and the invariant set of the initial state.
    void add_initial(const RunConfig& cfg) {
        const ExpectationState evs = cfg.initial_as_evs();
        const InvariantSet inv = invariants_of(evs, cfg.model);
        double k_nl = detail::nan_value();
        if (std::isfinite(inv.i_lambda) && inv.i_lambda > 0.0)
            k_nl = std::sqrt(inv.i_uncert) / inv.i_lambda;
        add("run.k_nl", k_nl);
        add("run.initial.i", inv.i_uncert);
        add("run.initial.i_lambda", inv.i_lambda);
        add("run.initial.energy", inv.energy);
        add("run.initial.e_r", inv.e_r);
        add("run.initial.t", inv.t_val);
        add("run.initial.lambda0", inv.lambda0);
        add("run.initial.entropy", inv.entropy);
    }

    const std::string& text() const { return text_; }

private:
    std::string text_;
};

inline std::vector<std::string> simulate_row(double t, const Vec5& state, Representation rep,
                                             const InvariantSet& inv, const ModelParams& p) {
    double l1 = nan_value(), l2 = nan_value(), l3 = nan_value();
    ExpectationState evs;
    if (rep == Representation::multipliers) {
        const MultiplierState s = multiplier_state(state);
        l1 = s.lambda1;
        l2 = s.lambda2;
        l3 = s.lambda3;
        evs = multipliers_to_evs(s, p);
    } else {
        evs = expectation_state(state);
        // multiplier columns are defined away from the pure/delta limit only
        if (p.quantum()) {
            if (inv.i_uncert > 0.25 * p.hbar * p.hbar * (1.0 + k_eps_pure)) {
                const MultiplierState s = evs_to_multipliers(evs, p);
                l1 = s.lambda1;
                l2 = s.lambda2;
                l3 = s.lambda3;
            }
        } else if (inv.i_uncert > k_eps_pure) {
            const ClassicalRelations r = classical_relations(evs);
            l1 = r.lambda1_cl;
            l2 = r.lambda2_cl;
            l3 = r.lambda3_cl;
        }
    }
    return {fmt17(t),           num_field(l1),        num_field(l2),
            num_field(l3),      fmt17(evs.a),         fmt17(evs.p_a),
            fmt17(evs.x2),      fmt17(evs.p2),        fmt17(evs.l),
            fmt17(inv.i_uncert), num_field(inv.i_lambda), fmt17(inv.energy),
            num_field(inv.e_r), num_field(inv.entropy)};
}

}  // namespace detail

struct RunArtifacts {
    std::string csv_path;
    std::string manifest_path;
};

/// Runs the configured experiment and writes CSV + manifest. Throws
/// semiq::Error subclasses; the CLI maps their categories to exit codes.
inline RunArtifacts run(const RunConfig& cfg) {
    cfg.validate();

    detail::ManifestBuilder manifest(cfg);
    manifest.add_initial(cfg);

    std::string csv_text;

    switch (cfg.experiment) {
        case Experiment::simulate: {
            Trajectory traj =
                cfg.representation == Representation::multipliers
                    ? integrate(cfg.initial_multipliers, cfg.model, cfg.integrator)
                    : integrate(cfg.initial_evs, cfg.model, cfg.integrator);
            CsvBuilder table({"t", "lambda1", "lambda2", "lambda3", "A", "P_A", "x2", "p2", "L",
                              "I", "I_lambda", "E", "E_r", "S"});
            for (std::size_t i = 0; i < traj.size(); ++i)
                table.append_row(detail::simulate_row(traj.times[i], traj.states[i], traj.rep,
                                                      traj.invariant_log[i], cfg.model));
            const DriftReport drift = monitor_invariants(traj, cfg.model);
            manifest.add("run.samples", std::to_string(traj.size()));
            manifest.add("run.drift.invariant", drift.invariant_drift);
            manifest.add("run.drift.energy", drift.energy_drift);
            csv_text = table.text();
            break;
        }
        case Experiment::limit: {
            const LimitReport report =
                run_limit(cfg.limit_schedule(), cfg.model, cfg.integrator);
            CsvBuilder table({"step", "hbar", "I", "I_lambda", "hbar_I_lambda", "purity", "S",
                              "lambda0", "p0", "distance"});
            for (std::size_t i = 0; i < report.records.size(); ++i) {
                const LimitRecord& r = report.records[i];
                table.append_row({std::to_string(i), fmt17(r.hbar), fmt17(r.i_uncert),
                                  fmt17(r.i_lambda), fmt17(r.z), fmt17(r.purity),
                                  fmt17(r.entropy), fmt17(r.lambda0), fmt17(r.p0),
                                  fmt17(r.distance)});
            }
            manifest.add("run.ordering", report.ordering == LimitOrdering::hbar_first
                                             ? "hbar_first"
                                             : "i_first");
            manifest.add("run.floor_ok", report.floor_ok ? "1" : "0");
            manifest.add("run.trend_ok", report.trend_ok ? "1" : "0");
            manifest.add("run.fitted_order", report.fitted_order);
            manifest.add("run.final.purity", report.records.back().purity);
            manifest.add("run.final.entropy", report.records.back().entropy);
            manifest.add("run.drift.invariant", report.max_invariant_drift);
            manifest.add("run.drift.energy", report.max_energy_drift);
            csv_text = table.text();
            break;
        }
        case Experiment::lyapunov: {
            const LyapunovResult res = lyapunov_max(cfg.initial_as_evs(), cfg.model,
                                                    cfg.integrator, cfg.lyapunov, cfg.seed);
            CsvBuilder table({"t", "lambda_running"});
            for (std::size_t i = 0; i < res.times.size(); ++i)
                table.append_row({fmt17(res.times[i]), fmt17(res.estimates[i])});
            manifest.add("run.lambda_max", res.lambda_max);
            manifest.add("run.uncertainty", res.uncertainty);
            manifest.add("run.converged", res.converged ? "1" : "0");
            manifest.add("run.drift.invariant", res.invariant_drift);
            manifest.add("run.drift.energy", res.energy_drift);
            csv_text = table.text();
            break;
        }
        case Experiment::poincare: {
            const std::size_t cap = cfg.poincare_max_points < 0
                                        ? static_cast<std::size_t>(-1)
                                        : static_cast<std::size_t>(cfg.poincare_max_points);
            const PoincareSection section =
                poincare(cfg.initial_as_evs(), cfg.model, cfg.integrator, cap);
            CsvBuilder table({"n", "t", "x2", "p2", "L", "P_A"});
            for (std::size_t i = 0; i < section.size(); ++i)
                table.append_row({std::to_string(i), fmt17(section.crossing_times[i]),
                                  fmt17(section.points[i][0]), fmt17(section.points[i][1]),
                                  fmt17(section.points[i][2]), fmt17(section.points[i][3])});
            manifest.add("run.crossings", std::to_string(section.size()));
            manifest.add("run.drift.invariant", section.invariant_drift);
            manifest.add("run.drift.energy", section.energy_drift);
            csv_text = table.text();
            break;
        }
        case Experiment::sweep: {
            const RegimeSweep sweep =
                regime_sweep(cfg.initial_as_evs(), cfg.model, cfg.integrator, cfg.sweep_grid,
                             cfg.lyapunov, cfg.sweep_thresholds, cfg.sweep_threads, cfg.seed);
            CsvBuilder table({"e_r", "I", "l0", "reachable", "lambda_max",
                              "lambda_uncertainty", "converged", "section_points",
                              "invariant_drift", "energy_drift", "classical_distance",
                              "label"});
            std::size_t reachable = 0;
            for (const SweepPoint& pt : sweep.points) {
                if (!pt.reachable) {
                    table.append_row({fmt17(pt.e_r), "", "", "0", "", "", "", "", "", "", "",
                                      to_string(pt.label)});
                    continue;
                }
                ++reachable;
                table.append_row({fmt17(pt.e_r), fmt17(pt.i_target), fmt17(pt.l0), "1",
                                  fmt17(pt.lambda_max), fmt17(pt.lambda_uncertainty),
                                  pt.converged ? "1" : "0", std::to_string(pt.section_points),
                                  fmt17(pt.invariant_drift), fmt17(pt.energy_drift),
                                  fmt17(pt.classical_distance), to_string(pt.label)});
            }
            double max_qd = 0.0, max_ed = 0.0;
            for (const SweepPoint& pt : sweep.points) {
                if (!pt.reachable) continue;
                max_qd = std::max(max_qd, pt.invariant_drift);
                max_ed = std::max(max_ed, pt.energy_drift);
            }
            manifest.add("run.points", std::to_string(sweep.points.size()));
            manifest.add("run.reachable_points", std::to_string(reachable));
            manifest.add("run.drift.invariant", max_qd);
            manifest.add("run.drift.energy", max_ed);
            csv_text = table.text();
            break;
        }
    }

    RunArtifacts artifacts;
    artifacts.csv_path = cfg.output;
    artifacts.manifest_path = cfg.output + ".manifest";
    write_text_file(artifacts.csv_path, csv_text);
    write_text_file(artifacts.manifest_path, manifest.text());
    return artifacts;
}

}  // namespace semiq
