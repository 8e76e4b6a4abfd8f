#pragma once

// Numerical realization of the two classical-limit orderings, the classical
// statistical reference, the delta-limit moment factorization check, and the
// ground-state moment check.

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "semiq/algebra.hpp"
#include "semiq/integrate.hpp"

namespace semiq {

enum class LimitOrdering { hbar_first, i_first };

/// Schedule for a limit study. hbar_seq drives the hbar_first ordering at the
/// fixed I of base_initial; gap_seq holds relative gaps (I - hbar^2/4)/hbar^2
/// for the i_first ordering at fixed hbar.
struct LimitSchedule {
    LimitOrdering ordering = LimitOrdering::i_first;
    std::vector<double> hbar_seq = {1.0, 1e-1, 1e-2, 1e-3};
    std::vector<double> gap_seq = {1e-2, 1e-3, 1e-4, 1e-5};
    ExpectationState base_initial{1.0, 1.0, 0.0, 0.5, 0.5};
    double t_end = 50.0;

    void validate() const {
        const auto strictly_decreasing_positive = [](const std::vector<double>& v) {
            if (v.empty()) return false;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!(v[i] > 0.0)) return false;
                if (i > 0 && !(v[i] < v[i - 1])) return false;
            }
            return true;
        };
        if (ordering == LimitOrdering::hbar_first && !strictly_decreasing_positive(hbar_seq))
            throw ConfigError("limit.hbar_seq must be strictly decreasing and positive");
        if (ordering == LimitOrdering::i_first && !strictly_decreasing_positive(gap_seq))
            throw ConfigError("limit.gap_seq must be strictly decreasing and positive");
        if (!(t_end > 0.0)) throw ConfigError("limit.t_end must be > 0");
    }
};

struct LimitRecord {
    double hbar = 0.0;
    double i_uncert = 0.0;
    double i_lambda = 0.0;
    double z = 0.0;  // hbar * I_lambda
    double purity = 0.0;
    double entropy = 0.0;
    double lambda0 = 0.0;
    double p0 = 0.0;       // largest eigenvalue of rho
    double distance = 0.0; // sup-norm distance to the classical reference
};

struct LimitReport {
    LimitOrdering ordering = LimitOrdering::i_first;
    std::vector<LimitRecord> records;
    double fitted_order = 0.0;  // hbar_first: order of |I_lambda - 1/(2 sqrt I)| in hbar
    bool floor_ok = false;      // I >= hbar^2/4 held at every step
    bool trend_ok = false;      // ordering-specific monotone trends held
    double max_invariant_drift = 0.0;  // worst I drift over all integrated legs
    double max_energy_drift = 0.0;
};

/// Replaces l so the state acquires the requested invariant I at unchanged
/// x2, p2, A, P_A (and hence unchanged energy). The sign of l is inherited
/// from the base state.
inline ExpectationState with_invariant(const ExpectationState& base, double i_target) {
    const double max_i = base.x2 * base.p2;
    if (i_target < 0.0 || i_target > max_i)
        throw ConfigError("with_invariant: requested I = " + std::to_string(i_target) +
                          " outside [0, x2*p2 = " + std::to_string(max_i) + "]");
    const double sign = base.l < 0.0 ? -1.0 : 1.0;
    ExpectationState out = base;
    out.l = sign * 2.0 * std::sqrt(max_i - i_target);
    return out;
}

/// Integrates the moment system as the classical statistical counterpart
/// (floor I_cl >= 0 regardless of the caller's hbar).
inline Trajectory classical_reference(const ExpectationState& initial, const ModelParams& p,
                                      const IntegratorConfig& cfg) {
    ModelParams classical = p;
    classical.hbar = 0.0;
    return integrate(initial, classical, cfg);
}

namespace detail {

inline std::vector<double> linspace(double t_end, std::size_t n) {
    std::vector<double> ts(n);
    for (std::size_t i = 0; i < n; ++i)
        ts[i] = t_end * static_cast<double>(i) / static_cast<double>(n - 1);
    ts.back() = t_end;
    return ts;
}

inline std::size_t distance_samples(double t_end) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(t_end * 10.0) + 1, 101, 2001);
}

/// Moment states on a fixed time grid (classical floor; the moment equations
/// themselves do not involve hbar).
inline std::vector<Vec5> sample_moments(const ExpectationState& initial, const ModelParams& p,
                                        const IntegratorConfig& cfg,
                                        const std::vector<double>& ts) {
    ModelParams classical = p;
    classical.hbar = 0.0;
    initial.validate(0.0);
    std::vector<Vec5> out;
    out.reserve(ts.size());
    Vec5 y = to_vec(initial);
    integrate_at(ExpectationRhs{classical}, y, 0.0, ts, cfg,
                 [&](double, const Vec5& v) { out.push_back(v); });
    return out;
}

/// sup_t ||a(t) - b(t)|| / ||a(0)||.
inline double sup_distance(const std::vector<Vec5>& a, const std::vector<Vec5>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, vec::distance(a[i], b[i]));
    return worst / vec::norm(a.front());
}

/// I and E drift across a sampled moment trajectory (same scales as the
/// trajectory drift monitor).
inline std::pair<double, double> drift_of_moment_samples(const std::vector<Vec5>& samples,
                                                         const ModelParams& p) {
    const double q0 = conserved_of(samples.front(), Representation::expectations);
    const double q_scale = invariant_scale(samples.front(), Representation::expectations);
    const double e0 = energy(expectation_state(samples.front()), p);
    double qd = 0.0, ed = 0.0;
    for (const Vec5& v : samples) {
        qd = std::max(qd, std::abs(conserved_of(v, Representation::expectations) - q0) / q_scale);
        ed = std::max(ed, std::abs(energy(expectation_state(v), p) - e0) / std::abs(e0));
    }
    return {qd, ed};
}

/// Least-squares slope of log(err) against log(h).
inline double fit_order(const std::vector<double>& h, const std::vector<double>& err) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Runs one ordering of the classical limit and reports per-step algebra plus
/// trajectory distances to the classical reference.
inline LimitReport run_limit(const LimitSchedule& sched, const ModelParams& p,
                             const IntegratorConfig& cfg) {
    sched.validate();
    p.validate();
    cfg.validate();

    LimitReport report;
    report.ordering = sched.ordering;
    report.floor_ok = true;

    const auto ts = detail::linspace(sched.t_end, detail::distance_samples(sched.t_end));
    IntegratorConfig leg_cfg = cfg;
    leg_cfg.t_end = sched.t_end;

    if (sched.ordering == LimitOrdering::hbar_first) {
        const double i0 = sched.base_initial.invariant();
        if (!(i0 > 0.0)) throw ConfigError("limit: base initial state must have I > 0");
        const auto reference = detail::sample_moments(sched.base_initial, p, leg_cfg, ts);
        std::tie(report.max_invariant_drift, report.max_energy_drift) =
            detail::drift_of_moment_samples(reference, p);

        std::vector<double> errs;
        const double i_lambda_cl = 0.5 / std::sqrt(i0);
        for (double hbar : sched.hbar_seq) {
            if (i0 < 0.25 * hbar * hbar) {
                report.floor_ok = false;
                throw ConfigError("limit: I = " + std::to_string(i0) +
                                  " violates the floor for hbar = " + std::to_string(hbar));
            }
            LimitRecord rec;
            rec.hbar = hbar;
            rec.i_uncert = i0;
            rec.i_lambda = ilambda_from_i(i0, hbar);
            rec.z = hbar * rec.i_lambda;
            rec.purity = std::tanh(rec.z);
            rec.entropy = entropy_from_z(rec.z);
            rec.lambda0 = lambda0(rec.i_lambda, hbar);
            rec.p0 = -std::expm1(-2.0 * rec.z);
            // the moment dynamics does not involve hbar, so the quantum
            // moment trajectory coincides with the classical statistical one
            const auto quantum = detail::sample_moments(sched.base_initial, p, leg_cfg, ts);
            rec.distance = detail::sup_distance(reference, quantum);
            const auto [qd, ed] = detail::drift_of_moment_samples(quantum, p);
            report.max_invariant_drift = std::max(report.max_invariant_drift, qd);
            report.max_energy_drift = std::max(report.max_energy_drift, ed);
            errs.push_back(std::abs(rec.i_lambda - i_lambda_cl));
            report.records.push_back(rec);
        }
        report.fitted_order = detail::fit_order(sched.hbar_seq, errs);

        report.trend_ok = true;
        for (std::size_t i = 1; i < report.records.size(); ++i) {
            const auto& prev = report.records[i - 1];
            const auto& cur = report.records[i];
            if (!(cur.z < prev.z) || !(cur.purity < prev.purity) || !(errs[i] < errs[i - 1]))
                report.trend_ok = false;
        }
        return report;
    }

    // i_first: fixed hbar, gap sequence onto I = hbar^2 (1/4 + gap)
    if (!p.quantum()) throw ConfigError("limit: i_first ordering requires hbar > 0");
    const auto delta_state = with_invariant(sched.base_initial, 0.0);
    const auto reference = detail::sample_moments(delta_state, p, leg_cfg, ts);
    std::tie(report.max_invariant_drift, report.max_energy_drift) =
        detail::drift_of_moment_samples(reference, p);

    for (double gap : sched.gap_seq) {
        const double i_k = p.hbar * p.hbar * (0.25 + gap);
        const auto state_k = with_invariant(sched.base_initial, i_k);  // throws if infeasible
        LimitRecord rec;
        rec.hbar = p.hbar;
        rec.i_uncert = i_k;
        rec.i_lambda = ilambda_from_i(i_k, p.hbar);
        rec.z = p.hbar * rec.i_lambda;
        rec.purity = std::tanh(rec.z);
        rec.entropy = entropy_from_z(rec.z);
        rec.lambda0 = lambda0(rec.i_lambda, p.hbar);
        rec.p0 = -std::expm1(-2.0 * rec.z);
        const auto leg = detail::sample_moments(state_k, p, leg_cfg, ts);
        rec.distance = detail::sup_distance(reference, leg);
        const auto [qd, ed] = detail::drift_of_moment_samples(leg, p);
        report.max_invariant_drift = std::max(report.max_invariant_drift, qd);
        report.max_energy_drift = std::max(report.max_energy_drift, ed);
        report.records.push_back(rec);
    }
    report.fitted_order = detail::nan_value();

    report.trend_ok = true;
    for (std::size_t i = 1; i < report.records.size(); ++i) {
        const auto& prev = report.records[i - 1];
        const auto& cur = report.records[i];
        if (!(cur.i_lambda > prev.i_lambda) || !(cur.z > prev.z) ||
            !(cur.purity > prev.purity) || !(cur.entropy < prev.entropy))
            report.trend_ok = false;
    }
    return report;
}

/// Max relative residual between the squared point-classical trajectory and
/// the classical moment trajectory, over the requested moments:
/// (2,0) -> x^2 vs <x^2>, (0,2) -> p^2 vs <p^2>, (1,1) -> 2xp vs <L>.
/// The point trajectory starts from x = sign_x sqrt(x2), p = sign_p sqrt(p2).
inline double factorization_check(const ExpectationState& initial, int sign_x, int sign_p,
                                  const ModelParams& params, const IntegratorConfig& cfg,
                                  const std::vector<std::pair<int, int>>& moments = {
                                      {2, 0}, {0, 2}, {1, 1}}) {
    if (std::abs(sign_x) != 1 || std::abs(sign_p) != 1)
        throw ConfigError("factorization_check: signs must be +1 or -1");
    for (const auto& [n, m] : moments)
        if (!((n == 2 && m == 0) || (n == 0 && m == 2) || (n == 1 && m == 1)))
            throw ConfigError("factorization_check: only moments (2,0), (0,2), (1,1) are "
                              "carried by the closed moment system");
    if (initial.l * (sign_x * sign_p) < 0.0)
        throw ConfigError("factorization_check: sign of l(0) is inconsistent with the "
                          "requested sign_x * sign_p");

    ModelParams p = params;
    p.hbar = 0.0;  // delta-limit check lives in the classical treatment
    initial.validate(0.0);

    const auto ts = detail::linspace(cfg.t_end, detail::distance_samples(cfg.t_end));
    const auto ev = detail::sample_moments(initial, p, cfg, ts);

    Vec4 y{sign_x * std::sqrt(initial.x2), sign_p * std::sqrt(initial.p2), initial.a,
           initial.p_a};
    std::vector<Vec4> pt;
    pt.reserve(ts.size());
    integrate_at(PointClassicalRhs{p}, y, 0.0, ts, cfg,
                 [&](double, const Vec4& v) { pt.push_back(v); });

    double worst = 0.0;
    for (const auto& [n, m] : moments) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            double point_val, ev_val;
            if (n == 2) {
                point_val = pt[i][0] * pt[i][0];
                ev_val = ev[i][0];
            } else if (m == 2) {
                point_val = pt[i][1] * pt[i][1];
                ev_val = ev[i][1];
            } else {
                point_val = 2.0 * pt[i][0] * pt[i][1];
                ev_val = ev[i][2];
            }
            num = std::max(num, std::abs(point_val - ev_val));
            den = std::max(den, std::abs(ev_val));
        }
        worst = std::max(worst, num / (den > 0.0 ? den : 1.0));
    }
    return worst;
}

/// Moments of the limiting pure state in the transformed variables are
/// (hbar/2, hbar/2, 0), hence I = hbar^2/4, vanishing with hbar.
struct GroundStateCheck {
    double hbar = 0.0;
    double x2 = 0.0, p2 = 0.0, l = 0.0;
    double i_uncert = 0.0;
    bool ok = false;
};

inline GroundStateCheck ground_state_check(double hbar) {
    if (!(hbar > 0.0)) throw ConfigError("ground_state_check: hbar must be > 0");
    GroundStateCheck c;
    c.hbar = hbar;
    c.x2 = 0.5 * hbar;
    c.p2 = 0.5 * hbar;
    c.l = 0.0;
    c.i_uncert = invariant_i(ExpectationState{c.x2, c.p2, c.l, 0.0, 0.0});
    c.ok = c.i_uncert == 0.25 * hbar * hbar;
    return c;
}

}  // namespace semiq
