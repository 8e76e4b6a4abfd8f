#pragma once

// Chaos quantifiers: maximal Lyapunov exponent (two-trajectory Benettin
// scheme), Poincare sections on the plane A = 0 (upward crossings), and the
// relative-energy sweep across the quasiclassical / transitional / classical
// regimes.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "semiq/algebra.hpp"
#include "semiq/integrate.hpp"
#include "semiq/limits.hpp"

namespace semiq {

struct LyapunovParams {
    double renorm_dt = 1.0;
    double horizon = 1e4;
    double d0 = 1e-8;  // separation reset after each renormalization

    void validate() const {
        if (!(renorm_dt > 0.0)) throw ConfigError("lyapunov.renorm_dt must be > 0");
        if (!(horizon > renorm_dt)) throw ConfigError("lyapunov.horizon must exceed renorm_dt");
        if (!(d0 >= 1e-10 && d0 <= 1e-6))
            throw ConfigError("lyapunov.d0 must lie in [1e-10, 1e-6]");
    }
};

struct LyapunovResult {
    double lambda_max = 0.0;
    double uncertainty = 0.0;  // final-window variation of the running estimate
    bool converged = false;
    double renorm_interval = 0.0;
    double horizon = 0.0;
    double invariant_drift = 0.0;  // audit on the reference trajectory
    double energy_drift = 0.0;
    std::vector<double> times;      // renormalization instants
    std::vector<double> estimates;  // running estimates at those instants
};

namespace detail {

/// Portable Box-Muller normal deviates from the raw 64-bit stream, so a seed
/// reproduces bit-identical directions across standard libraries.
class NormalDeviates {
public:
    explicit NormalDeviates(std::uint64_t seed) : gen_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    double uniform() { return std::ldexp(static_cast<double>(gen_() >> 11), -53); }

    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline Vec5 unit_direction(std::uint64_t seed) {
    NormalDeviates normal(seed);
    Vec5 u;
    double norm = 0.0;
    while (true) {
        for (double& c : u) c = normal();
        norm = vec::norm(u);
        if (norm > 1e-3) break;  // reject the (vanishingly unlikely) tiny draw
    }
    for (double& c : u) c /= norm;
    return u;
}

}  // namespace detail

/// Benettin estimate of the maximal Lyapunov exponent in the moment
/// representation. Does not throw on non-convergence; inspect .converged.
inline LyapunovResult lyapunov_max_estimate(const ExpectationState& initial,
                                            const ModelParams& p, const IntegratorConfig& cfg,
                                            const LyapunovParams& lp, std::uint64_t seed) {
    p.validate();
    cfg.validate();
    lp.validate();
    initial.validate(p.hbar);

    const ExpectationRhs rhs{p};
    Vec5 ref = to_vec(initial);
    Vec5 pert = ref;
    const Vec5 dir = detail::unit_direction(seed);
    for (std::size_t i = 0; i < 5; ++i) pert[i] += lp.d0 * dir[i];

    const double i0 = detail::conserved_of(ref, Representation::expectations);
    const double i_scale = detail::invariant_scale(ref, Representation::expectations);
    const double e0 = energy(initial, p);

    LyapunovResult res;
    res.renorm_interval = lp.renorm_dt;
    res.horizon = lp.horizon;

    double t = 0.0;
    double log_sum = 0.0;
    const auto ignore = [](const StepRecord<5>&) {};
    while (t < lp.horizon - 1e-12) {
        const double t_next = std::min(t + lp.renorm_dt, lp.horizon);
        integrate_steps(rhs, ref, t, t_next, cfg, ignore);
        integrate_steps(rhs, pert, t, t_next, cfg, ignore);
        t = t_next;

        const double d1 = vec::distance(pert, ref);
        if (!(d1 > 0.0) || !std::isfinite(d1))
            throw NumericalError("lyapunov: separation collapsed or diverged at t = " +
                                 std::to_string(t));
        log_sum += std::log(d1 / lp.d0);
        res.times.push_back(t);
        res.estimates.push_back(log_sum / t);

        const double shrink = lp.d0 / d1;
        for (std::size_t i = 0; i < 5; ++i) pert[i] = ref[i] + shrink * (pert[i] - ref[i]);

        res.invariant_drift =
            std::max(res.invariant_drift,
                     std::abs(detail::conserved_of(ref, Representation::expectations) - i0) /
                         i_scale);
        res.energy_drift = std::max(
            res.energy_drift, std::abs(energy(expectation_state(ref), p) - e0) / std::abs(e0));
    }

    res.lambda_max = res.estimates.back();

    // final-window variation, measured against the estimate or the intrinsic
    // resolution ~ln/horizon of the method, whichever is larger
    double lo = res.lambda_max, hi = res.lambda_max;
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        if (res.times[i] < 0.8 * lp.horizon) continue;
        lo = std::min(lo, res.estimates[i]);
        hi = std::max(hi, res.estimates[i]);
    }
    res.uncertainty = hi - lo;
    const double scale = std::max(std::abs(res.lambda_max), 20.0 / lp.horizon);
    res.converged = res.uncertainty <= 0.2 * scale;
    return res;
}

/// Throwing variant: raises NonConvergedError when the final window of the
/// running estimate varies by more than 20%.
inline LyapunovResult lyapunov_max(const ExpectationState& initial, const ModelParams& p,
                                   const IntegratorConfig& cfg, const LyapunovParams& lp,
                                   std::uint64_t seed) {
    LyapunovResult res = lyapunov_max_estimate(initial, p, cfg, lp, seed);
    if (!res.converged)
        throw NonConvergedError("lyapunov: final-window variation " +
                                std::to_string(res.uncertainty) + " exceeds 20% of " +
                                std::to_string(res.lambda_max));
    return res;
}

/// Section points on the plane A = 0 with dA/dt > 0, i.e. P_A > 0.
struct PoincareSection {
    static constexpr double crossing_tol = 1e-9;

    std::vector<double> crossing_times;
    std::vector<std::array<double, 4>> points;  // (x2, p2, L, P_A) at each crossing
    double invariant_drift = 0.0;               // audit over the generating trajectory
    double energy_drift = 0.0;

    std::size_t size() const { return points.size(); }
};

/// Locates upward A = 0 crossings of the moment trajectory; each crossing is
/// refined on the local cubic Hermite interpolant until |A| <= crossing_tol.
inline PoincareSection poincare(const ExpectationState& initial, const ModelParams& p,
                                const IntegratorConfig& cfg,
                                std::size_t max_points = static_cast<std::size_t>(-1)) {
    p.validate();
    cfg.validate();
    initial.validate(p.hbar);

    PoincareSection section;
    const ExpectationRhs rhs{p};
    Vec5 y = to_vec(initial);

    const double i0 = detail::conserved_of(y, Representation::expectations);
    const double i_scale = detail::invariant_scale(y, Representation::expectations);
    const double e0 = energy(initial, p);

    integrate_steps(rhs, y, 0.0, cfg.t_end, cfg, [&](const StepRecord<5>& s) {
        section.invariant_drift = std::max(
            section.invariant_drift,
            std::abs(detail::conserved_of(s.y1, Representation::expectations) - i0) / i_scale);
        section.energy_drift =
            std::max(section.energy_drift,
                     std::abs(energy(expectation_state(s.y1), p) - e0) / std::abs(e0));
        if (section.size() >= max_points) return;
        if (!(s.y0[3] < 0.0 && s.y1[3] >= 0.0)) return;

        // bisect the Hermite interpolant for the A component
        double t_lo = s.t0, t_hi = s.t1;
        Vec5 at = s.y1;
        double t_mid = s.t1;
        for (int iter = 0; iter < 200; ++iter) {
            t_mid = 0.5 * (t_lo + t_hi);
            at = hermite_eval(s, t_mid);
            if (std::abs(at[3]) <= PoincareSection::crossing_tol) break;
            if (at[3] < 0.0)
                t_lo = t_mid;
            else
                t_hi = t_mid;
        }
        if (std::abs(at[3]) > PoincareSection::crossing_tol) return;  // degenerate step
        if (!(at[4] > 0.0)) return;  // grazing: not an upward crossing

        section.crossing_times.push_back(t_mid);
        section.points.push_back({at[0], at[1], at[2], at[4]});
    });

    if (section.points.empty())
        throw NoCrossingsError("poincare: trajectory never crossed A = 0 upward by t = " +
                               std::to_string(cfg.t_end));
    return section;
}

enum class RegimeLabel { quasiclassical, transitional, classical, unreachable };

inline const char* to_string(RegimeLabel label) {
    switch (label) {
        case RegimeLabel::quasiclassical: return "quasiclassical";
        case RegimeLabel::transitional: return "transitional";
        case RegimeLabel::classical: return "classical";
        default: return "unreachable";
    }
}

/// Calibration thresholds for the regime labels. The classical label demands
/// both a large exponent and trajectory-level agreement with the delta-limit
/// point dynamics.
struct SweepThresholds {
    double lambda_low = 1e-3;
    double lambda_high = 5e-2;
    double classical_dist_tol = 1e-2;
    double dist_horizon = 50.0;

    void validate() const {
        if (!(lambda_low > 0.0) || !(lambda_high > lambda_low))
            throw ConfigError("sweep thresholds must satisfy 0 < lambda_low < lambda_high");
        if (!(classical_dist_tol > 0.0)) throw ConfigError("sweep.dist_tol must be > 0");
        if (!(dist_horizon > 0.0)) throw ConfigError("sweep.dist_horizon must be > 0");
    }
};

struct SweepPoint {
    double e_r = 0.0;
    double i_target = 0.0;
    double l0 = 0.0;       // initial <L> realizing the target invariant
    bool reachable = false;
    std::string note;
    double lambda_max = 0.0;
    double lambda_uncertainty = 0.0;
    bool converged = false;
    double invariant_drift = 0.0;
    double energy_drift = 0.0;
    std::size_t section_points = 0;
    double classical_distance = 0.0;
    RegimeLabel label = RegimeLabel::unreachable;
};

struct RegimeSweep {
    std::vector<double> e_r_values;
    std::vector<SweepPoint> points;
};

namespace detail {

/// Moments of the point-classical trajectory started at the factorized image
/// of `state` (x = sqrt(x2), p carrying the sign of l), on the grid ts.
inline std::vector<Vec5> point_reference_moments(const ExpectationState& state,
                                                 const ModelParams& p,
                                                 const IntegratorConfig& cfg,
                                                 const std::vector<double>& ts) {
    ModelParams classical = p;
    classical.hbar = 0.0;
    const double sign_p = state.l < 0.0 ? -1.0 : 1.0;
    Vec4 y{std::sqrt(state.x2), sign_p * std::sqrt(state.p2), state.a, state.p_a};
    std::vector<Vec5> out;
    out.reserve(ts.size());
    integrate_at(PointClassicalRhs{classical}, y, 0.0, ts, cfg, [&](double, const Vec4& v) {
        out.push_back(Vec5{v[0] * v[0], v[1] * v[1], 2.0 * v[0] * v[1], v[2], v[3]});
    });
    return out;
}

}  // namespace detail

/// Builds the initial state for one sweep target: E_r is driven by lowering I
/// at exactly fixed E (only l changes between points). Throws PureLimitError
/// when the requested E_r implies I < hbar^2/4 in quantum mode, ConfigError
/// when it implies I above the base pattern's ceiling x2*p2.
inline ExpectationState sweep_state(const ExpectationState& base, double e_r,
                                    const ModelParams& p) {
    if (!(e_r > 0.0)) throw ConfigError("sweep: E_r values must be > 0");
    const double e_total = energy(base, p);
    const double root_i = std::abs(e_total) / (e_r * p.omega_q);
    const double i_target = root_i * root_i;
    if (i_target > base.x2 * base.p2)
        throw ConfigError("sweep: E_r = " + std::to_string(e_r) + " needs I = " +
                          std::to_string(i_target) + " above the pattern ceiling x2*p2 = " +
                          std::to_string(base.x2 * base.p2));
    if (p.quantum() && i_target < 0.25 * p.hbar * p.hbar * (1.0 + k_eps_pure))
        throw PureLimitError("sweep: E_r = " + std::to_string(e_r) + " needs I = " +
                             std::to_string(i_target) + " below the quantum floor hbar^2/4 = " +
                             std::to_string(0.25 * p.hbar * p.hbar));
    return with_invariant(base, i_target);
}

/// Sweeps an increasing E_r grid. Points are independent tasks executed in a
/// small worker pool; results are assembled by grid index, so output order is
/// deterministic regardless of thread count.
inline RegimeSweep regime_sweep(const ExpectationState& base, const ModelParams& p,
                                const IntegratorConfig& cfg,
                                const std::vector<double>& e_r_grid, const LyapunovParams& lp,
                                const SweepThresholds& th, unsigned threads,
                                std::uint64_t seed) {
    p.validate();
    cfg.validate();
    lp.validate();
    th.validate();
    if (e_r_grid.empty()) throw ConfigError("sweep: E_r grid must be nonempty");
    for (std::size_t i = 1; i < e_r_grid.size(); ++i)
        if (!(e_r_grid[i] > e_r_grid[i - 1]))
            throw ConfigError("sweep: E_r grid must be strictly increasing");

    RegimeSweep sweep;
    sweep.e_r_values = e_r_grid;
    sweep.points.resize(e_r_grid.size());
    std::vector<std::exception_ptr> failures(e_r_grid.size());

    const auto run_point = [&](std::size_t idx) {
        SweepPoint& pt = sweep.points[idx];
        pt.e_r = e_r_grid[idx];
        ExpectationState state;
        try {
            state = sweep_state(base, pt.e_r, p);
        } catch (const Error& err) {
            pt.reachable = false;
            pt.label = RegimeLabel::unreachable;
            pt.note = err.what();
            return;
        }
        pt.reachable = true;
        pt.i_target = state.invariant();
        pt.l0 = state.l;

        const LyapunovResult lyap = lyapunov_max_estimate(state, p, cfg, lp, seed);
        pt.lambda_max = lyap.lambda_max;
        pt.lambda_uncertainty = lyap.uncertainty;
        pt.converged = lyap.converged;
        pt.invariant_drift = lyap.invariant_drift;
        pt.energy_drift = lyap.energy_drift;

        try {
            pt.section_points = poincare(state, p, cfg).size();
        } catch (const NoCrossingsError&) {
            pt.section_points = 0;
        }

        IntegratorConfig dist_cfg = cfg;
        dist_cfg.t_end = th.dist_horizon;
        const auto ts =
            detail::linspace(th.dist_horizon, detail::distance_samples(th.dist_horizon));
        const auto moments = detail::sample_moments(state, p, dist_cfg, ts);
        const auto reference = detail::point_reference_moments(state, p, dist_cfg, ts);
        pt.classical_distance = detail::sup_distance(moments, reference);

        if (pt.lambda_max <= th.lambda_low)
            pt.label = RegimeLabel::quasiclassical;
        else if (pt.lambda_max <= th.lambda_high ||
                 pt.classical_distance > th.classical_dist_tol)
            pt.label = RegimeLabel::transitional;
        else
            pt.label = RegimeLabel::classical;
    };

    const unsigned n_workers = std::max(1u, std::min<unsigned>(
                                                threads, static_cast<unsigned>(e_r_grid.size())));
    if (n_workers == 1) {
        for (std::size_t i = 0; i < e_r_grid.size(); ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t idx = next.fetch_add(1);
                    if (idx >= sweep.points.size()) return;
                    try {
                        run_point(idx);
                    } catch (...) {
                        failures[idx] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th_ : pool) th_.join();
    }
    for (auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return sweep;
}

}  // namespace semiq
