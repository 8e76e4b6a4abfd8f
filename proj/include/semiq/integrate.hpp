#pragma once

// Right-hand sides and adaptive integration for the three dynamical forms:
// multiplier, moment (expectation-value), and point-classical. The steppers
// are templated on the RHS functor and state dimension; all systems here are
// autonomous, so RHS signatures take no time argument.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "semiq/algebra.hpp"
#include "semiq/errors.hpp"
#include "semiq/model.hpp"

namespace semiq {

template <std::size_t N>
using StateVec = std::array<double, N>;

using Vec5 = StateVec<5>;  // (lambda1,lambda2,lambda3,A,P_A) or (x2,p2,L,A,P_A)
using Vec4 = StateVec<4>;  // point-classical (x,p,A,P_A)

namespace vec {

template <std::size_t N>
double norm(const StateVec<N>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

template <std::size_t N>
double distance(const StateVec<N>& a, const StateVec<N>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace vec

inline Vec5 to_vec(const MultiplierState& s) { return {s.lambda1, s.lambda2, s.lambda3, s.a, s.p_a}; }
inline Vec5 to_vec(const ExpectationState& e) { return {e.x2, e.p2, e.l, e.a, e.p_a}; }
inline MultiplierState multiplier_state(const Vec5& y) { return {y[0], y[1], y[2], y[3], y[4]}; }
inline ExpectationState expectation_state(const Vec5& y) { return {y[0], y[1], y[2], y[3], y[4]}; }

/// Closed multiplier-form system. k_nl = T(I_lambda)/I_lambda = sqrt(I)/I_lambda
/// is a constant of the motion, frozen from the initial state.
struct MultiplierRhs {
    ModelParams params;
    double k_nl;

    void operator()(const Vec5& y, Vec5& dydt) const {
        const double w2 = params.omega2(y[3]);
        dydt[0] = 2.0 * params.m_q * w2 * y[2];
        dydt[1] = -2.0 / params.m_q * y[2];
        dydt[2] = -y[0] / params.m_q + params.m_q * w2 * y[1];
        dydt[3] = y[4] / params.m_cl;
        dydt[4] = -params.e * params.e * params.m_q * y[3] * k_nl * y[1];
    }
};

/// Moment-form system; the same functional form serves the quantum moments
/// and the classical statistical moments.
struct ExpectationRhs {
    ModelParams params;

    void operator()(const Vec5& y, Vec5& dydt) const {
        const double w2 = params.omega2(y[3]);
        dydt[0] = y[2] / params.m_q;
        dydt[1] = -params.m_q * w2 * y[2];
        dydt[2] = 2.0 * y[1] / params.m_q - 2.0 * params.m_q * w2 * y[0];
        dydt[3] = y[4] / params.m_cl;
        dydt[4] = -params.e * params.e * params.m_q * y[3] * y[0];
    }
};

/// Point-classical system (x, p, A, P_A): the delta-limit dynamics whose
/// squared coordinates reproduce the classical moment trajectories.
struct PointClassicalRhs {
    ModelParams params;

    void operator()(const Vec4& y, Vec4& dydt) const {
        const double w2 = params.omega2(y[2]);
        dydt[0] = y[1] / params.m_q;
        dydt[1] = -params.m_q * w2 * y[0];
        dydt[2] = y[3] / params.m_cl;
        dydt[3] = -params.e * params.e * params.m_q * y[2] * y[0] * y[0];
    }
};

/// Reverses the flow; used for time-reversal checks.
template <class Rhs, std::size_t N>
struct NegatedRhs {
    Rhs inner;
    void operator()(const StateVec<N>& y, StateVec<N>& dydt) const {
        inner(y, dydt);
        for (double& d : dydt) d = -d;
    }
};

enum class Method { rk4_fixed, rk45_adaptive };
enum class Representation { multipliers, expectations };

struct IntegratorConfig {
    Method method = Method::rk45_adaptive;
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double dt_init = 1e-3;  // fixed step for rk4, first trial step for rk45
    double t_end = 100.0;
    int sample_stride = 1;   // store every n-th accepted step
    double drift_tol = 1e-6;

    void validate() const {
        if (!(rel_tol > 0.0)) throw ConfigError("integrator.rel_tol must be > 0");
        if (!(abs_tol > 0.0)) throw ConfigError("integrator.abs_tol must be > 0");
        if (!(dt_init > 0.0)) throw ConfigError("integrator.dt_init must be > 0");
        if (!(t_end > 0.0)) throw ConfigError("integrator.t_end must be > 0");
        if (sample_stride < 1) throw ConfigError("integrator.sample_stride must be >= 1");
        if (!(drift_tol > 0.0)) throw ConfigError("integrator.drift_tol must be > 0");
    }
};

/// One accepted step, with derivatives at both ends for Hermite interpolation.
template <std::size_t N>
struct StepRecord {
    double t0, t1;
    const StateVec<N>& y0;
    const StateVec<N>& f0;
    const StateVec<N>& y1;
    const StateVec<N>& f1;
};

/// Cubic Hermite interpolation of an accepted step at t in [t0, t1].
template <std::size_t N>
StateVec<N> hermite_eval(const StepRecord<N>& s, double t) {
    const double h = s.t1 - s.t0;
    const double u = (t - s.t0) / h;
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    StateVec<N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = h00 * s.y0[i] + h10 * h * s.f0[i] + h01 * s.y1[i] + h11 * h * s.f1[i];
    return out;
}

namespace detail {

// Dormand-Prince 5(4) tableau; the last stage is FSAL.
template <std::size_t N, class Rhs>
double dopri5_attempt(const Rhs& rhs, const StateVec<N>& y, const StateVec<N>& f0, double dt,
                      double rel_tol, double abs_tol, StateVec<N>& y_out, StateVec<N>& f_out) {
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    StateVec<N> k2, k3, k4, k5, k6, tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + dt * a21 * f0[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + dt * (a31 * f0[i] + a32 * k2[i]);
    rhs(tmp, k3);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + dt * (a41 * f0[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + dt * (a51 * f0[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
        tmp[i] = y[i] + dt * (a61 * f0[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(tmp, k6);
    for (std::size_t i = 0; i < N; ++i)
        y_out[i] = y[i] + dt * (b1 * f0[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(y_out, f_out);  // FSAL: k7

    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double ei = dt * (e1 * f0[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                e7 * f_out[i]);
        const double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(y_out[i]));
        err += (ei / sc) * (ei / sc);
    }
    return std::sqrt(err / static_cast<double>(N));
}

template <std::size_t N, class Rhs>
void rk4_step(const Rhs& rhs, const StateVec<N>& y, const StateVec<N>& f0, double dt,
              StateVec<N>& y_out) {
    StateVec<N> k2, k3, k4, tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * dt * f0[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + dt * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
        y_out[i] = y[i] + dt / 6.0 * (f0[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

}  // namespace detail

inline constexpr double k_min_step = 1e-12;

/// Integrates y from t0 to t_end, invoking obs(StepRecord) after every
/// accepted step. The final step is clamped so the last record reports
/// t1 == t_end exactly.
template <std::size_t N, class Rhs, class Observer>
void integrate_steps(const Rhs& rhs, StateVec<N>& y, double t0, double t_end,
                     const IntegratorConfig& cfg, Observer&& obs) {
    if (t_end <= t0) return;
    double t = t0;
    StateVec<N> f, y_new, f_new;
    rhs(y, f);

    if (cfg.method == Method::rk4_fixed) {
        while (t < t_end) {
            const bool last = t_end - t <= cfg.dt_init;
            const double dt = last ? t_end - t : cfg.dt_init;
            const double t1 = last ? t_end : t + dt;
            detail::rk4_step(rhs, y, f, dt, y_new);
            rhs(y_new, f_new);
            obs(StepRecord<N>{t, t1, y, f, y_new, f_new});
            y = y_new;
            f = f_new;
            t = t1;
        }
        return;
    }

    double dt = std::min(cfg.dt_init, t_end - t0);
    while (t < t_end) {
        const bool last = t_end - t <= dt;
        const double dt_try = last ? t_end - t : dt;
        const double err =
            detail::dopri5_attempt(rhs, y, f, dt_try, cfg.rel_tol, cfg.abs_tol, y_new, f_new);
        const double factor = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        if (err <= 1.0) {
            const double t1 = last ? t_end : t + dt_try;
            obs(StepRecord<N>{t, t1, y, f, y_new, f_new});
            t = t1;
            y = y_new;
            f = f_new;  // FSAL
            dt = dt_try * factor;
        } else {
            dt = dt_try * std::min(factor, 1.0);
        }
        if (dt < k_min_step && t < t_end)
            throw StepUnderflowError("integrate: adaptive step fell below " +
                                     std::to_string(k_min_step) + " at t = " + std::to_string(t));
    }
}

/// Integrates through the given strictly increasing checkpoint times and
/// invokes on_sample(t, y) at each one (the state lands on each checkpoint
/// exactly, by step clamping). times[0] may equal t0.
template <std::size_t N, class Rhs, class OnSample>
void integrate_at(const Rhs& rhs, StateVec<N>& y, double t0, const std::vector<double>& times,
                  const IntegratorConfig& cfg, OnSample&& on_sample) {
    double t = t0;
    for (double target : times) {
        if (target < t)
            throw NumericalError("integrate_at: checkpoint times must be non-decreasing");
        if (target > t) {
            integrate_steps(rhs, y, t, target, cfg, [](const StepRecord<N>&) {});
            t = target;
        }
        on_sample(t, y);
    }
}

/// Sampled trajectory in one representation, with per-sample invariants.
struct Trajectory {
    Representation rep = Representation::expectations;
    double k_nl = 0.0;  // frozen sqrt(I)/I_lambda (NaN when undefined)
    std::vector<double> times;
    std::vector<Vec5> states;
    std::vector<InvariantSet> invariant_log;

    std::size_t size() const { return times.size(); }

    ExpectationState evs_at(std::size_t i, const ModelParams& p) const {
        return rep == Representation::expectations
                   ? expectation_state(states[i])
                   : multipliers_to_evs(multiplier_state(states[i]), p);
    }
};

struct DriftReport {
    double invariant_drift = 0.0;  // I_lambda (multiplier rep) or I (moment rep)
    double energy_drift = 0.0;
};

namespace detail {

/// Drift of the conserved quantity, relative to a reference scale. For the
/// moment representation I is a difference of products, so near the delta
/// limit the honest scale is x2*p2 rather than |I| itself.
inline double invariant_scale(const Vec5& y0, Representation rep) {
    if (rep == Representation::multipliers) return i_lambda(multiplier_state(y0));
    const ExpectationState e = expectation_state(y0);
    return std::max(std::abs(e.invariant()), e.x2 * e.p2);
}

inline double conserved_of(const Vec5& y, Representation rep) {
    return rep == Representation::multipliers ? i_lambda(multiplier_state(y))
                                              : expectation_state(y).invariant();
}

template <class Rhs>
Trajectory record_trajectory(const Rhs& rhs, Vec5 y, Representation rep, const ModelParams& p,
                             const IntegratorConfig& cfg) {
    Trajectory traj;
    traj.rep = rep;

    const double q0 = detail::conserved_of(y, rep);
    const double q_scale = detail::invariant_scale(y, rep);

    const auto sample = [&](double t, const Vec5& v) {
        const double drift = std::abs(detail::conserved_of(v, rep) - q0) / q_scale;
        if (drift > cfg.drift_tol)
            throw DriftExceededError("integrate: invariant drift " + std::to_string(drift) +
                                     " exceeded tolerance " + std::to_string(cfg.drift_tol) +
                                     " at t = " + std::to_string(t));
        traj.times.push_back(t);
        traj.states.push_back(v);
        traj.invariant_log.push_back(invariants_of(
            rep == Representation::multipliers ? multipliers_to_evs(multiplier_state(v), p)
                                               : expectation_state(v),
            p));
    };

    sample(0.0, y);
    long accepted = 0;
    integrate_steps(rhs, y, 0.0, cfg.t_end, cfg, [&](const StepRecord<5>& s) {
        ++accepted;
        if (accepted % cfg.sample_stride == 0 || s.t1 == cfg.t_end) sample(s.t1, s.y1);
    });
    return traj;
}

}  // namespace detail

/// Integrates an initial state in the requested representation and returns the
/// sampled trajectory. Multiplier runs require hbar > 0 and I strictly above
/// the pure limit; moment runs accept any state admissible for the mode
/// implied by hbar (quantum floor hbar^2/4, classical floor 0).
inline Trajectory integrate(const MultiplierState& initial, const ModelParams& p,
                            const IntegratorConfig& cfg) {
    p.validate();
    cfg.validate();
    initial.validate();
    if (!p.quantum())
        throw PureLimitError("integrate: multiplier representation requires hbar > 0");
    const double il = i_lambda(initial);
    const double k_nl = t_of_ilambda(il, p.hbar) / il;
    Trajectory traj = detail::record_trajectory(MultiplierRhs{p, k_nl}, to_vec(initial),
                                                Representation::multipliers, p, cfg);
    traj.k_nl = k_nl;
    return traj;
}

inline Trajectory integrate(const ExpectationState& initial, const ModelParams& p,
                            const IntegratorConfig& cfg) {
    p.validate();
    cfg.validate();
    initial.validate(p.hbar);
    Trajectory traj = detail::record_trajectory(ExpectationRhs{p}, to_vec(initial),
                                                Representation::expectations, p, cfg);
    const double i0 = initial.invariant();
    if (p.quantum()) {
        const double floor = 0.25 * p.hbar * p.hbar;
        traj.k_nl = i0 > floor * (1.0 + k_eps_pure)
                        ? std::sqrt(i0) / ilambda_from_i(i0, p.hbar)
                        : detail::nan_value();
    } else {
        traj.k_nl = i0 > 0.0 ? 2.0 * i0 : detail::nan_value();  // sqrt(I)/(1/(2 sqrt I))
    }
    return traj;
}

/// Max relative drift over the samples of the conserved pair: I_lambda (or I,
/// in the moment representation) and the energy.
inline DriftReport monitor_invariants(const Trajectory& traj, const ModelParams& p) {
    if (traj.size() == 0) throw NumericalError("monitor_invariants: empty trajectory");
    DriftReport rep;
    const double q0 = detail::conserved_of(traj.states.front(), traj.rep);
    const double q_scale = detail::invariant_scale(traj.states.front(), traj.rep);
    const double e0 = energy(traj.evs_at(0, p), p);  // strictly positive for valid states
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double q = detail::conserved_of(traj.states[i], traj.rep);
        rep.invariant_drift = std::max(rep.invariant_drift, std::abs(q - q0) / q_scale);
        rep.energy_drift = std::max(
            rep.energy_drift, std::abs(energy(traj.evs_at(i, p), p) - e0) / std::abs(e0));
    }
    return rep;
}

}  // namespace semiq
