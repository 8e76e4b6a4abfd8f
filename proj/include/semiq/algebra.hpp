#pragma once

// Closed-form algebra of the maximum-entropy Gaussian statistical operator:
// invariants, multiplier <-> moment maps, partition function, entropy and
// spectrum, plus the classical statistical counterparts. Everything here is
// a pure function of value inputs and safe to call concurrently.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "semiq/errors.hpp"
#include "semiq/model.hpp"

namespace semiq {

namespace detail {

/// ln(1 - e^{-x}) for x > 0 without cancellation on either end.
inline double log1mexp(double x) {
    // Split at ln 2: below it expm1 keeps precision, above it log1p does.
    return (x < 0.6931471805599453) ? std::log(-std::expm1(-x)) : std::log1p(-std::exp(-x));
}

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace detail

/// Invariant I_lambda = sqrt(lambda1 lambda2 - lambda3^2), the multiplier-space
/// image of I and a constant of the motion.
inline double i_lambda(const MultiplierState& s) {
    const double disc = s.discriminant();
    if (!(disc > 0.0))
        throw NumericalError("i_lambda: lambda1*lambda2 - lambda3^2 = " + std::to_string(disc) +
                             " <= 0, statistical operator not normalizable");
    return std::sqrt(disc);
}

/// T(I_lambda) = (hbar/2) coth(hbar I_lambda), equal to sqrt(I).
/// hbar = 0 yields the classical limit 1/(2 I_lambda). The coth form through
/// tanh is monotone-safe: large hbar*I_lambda saturates at hbar/2 without
/// overflow, small hbar*I_lambda recovers 1/(2 I_lambda) without cancellation.
inline double t_of_ilambda(double il, double hbar) {
    if (!(il > 0.0)) throw NumericalError("t_of_ilambda: I_lambda must be > 0");
    if (hbar == 0.0) return 1.0 / (2.0 * il);
    return 0.5 * hbar / std::tanh(hbar * il);
}

/// lambda0 = -ln(e^{hbar I_lambda} - e^{-hbar I_lambda}), i.e. ln Z of the
/// statistical operator. Evaluated as -z - ln(1 - e^{-2z}) with z = hbar I_lambda,
/// which degrades gracefully to the asymptote -z for large z.
inline double lambda0(double il, double hbar) {
    if (!(il > 0.0)) throw NumericalError("lambda0: I_lambda must be > 0");
    if (!(hbar > 0.0)) throw NumericalError("lambda0: hbar must be > 0");
    const double z = hbar * il;
    if (z > 700.0) return -z;  // e^{-2z} underflows; asymptotic branch
    return -z - detail::log1mexp(2.0 * z);
}

/// I = <x^2><p^2> - <L>^2/4. The result may be below the quantum floor;
/// classifying that is the caller's job.
inline double invariant_i(const ExpectationState& e) { return e.invariant(); }

/// I_lambda as a function of I: (1/2 hbar) ln[(sqrt(I)+hbar/2)/(sqrt(I)-hbar/2)],
/// the inverse of T(I_lambda) = sqrt(I). hbar = 0 gives 1/(2 sqrt(I)).
/// Throws PureLimitError when I is within k_eps_pure (relative) of hbar^2/4,
/// where the multipliers diverge and the moment representation must be used.
inline double ilambda_from_i(double i_uncert, double hbar) {
    if (!(i_uncert > 0.0)) throw NumericalError("ilambda_from_i: I must be > 0");
    const double root_i = std::sqrt(i_uncert);
    if (hbar == 0.0) return 0.5 / root_i;
    const double floor = 0.25 * hbar * hbar;
    if (i_uncert <= floor * (1.0 + k_eps_pure))
        throw PureLimitError("ilambda_from_i: I = " + std::to_string(i_uncert) +
                             " is at the pure limit hbar^2/4 = " + std::to_string(floor));
    // log1p keeps precision when hbar << sqrt(I)
    return std::log1p(hbar / (root_i - 0.5 * hbar)) / (2.0 * hbar);
}

/// Moments from multipliers:
///   <x^2> = (T/I_lambda) lambda2, <p^2> = (T/I_lambda) lambda1,
///   <L>   = -2 (T/I_lambda) lambda3.
/// Classical variables pass through unchanged.
inline ExpectationState multipliers_to_evs(const MultiplierState& s, const ModelParams& p) {
    const double il = i_lambda(s);
    const double ratio = t_of_ilambda(il, p.hbar) / il;
    return ExpectationState{ratio * s.lambda2, ratio * s.lambda1, -2.0 * ratio * s.lambda3, s.a,
                            s.p_a};
}

/// Inverse map: multipliers from moments, via I_lambda(I). Round-trips with
/// multipliers_to_evs. Throws PureLimitError at or below I = hbar^2/4.
inline MultiplierState evs_to_multipliers(const ExpectationState& e, const ModelParams& p) {
    const double i = invariant_i(e);
    const double il = ilambda_from_i(i, p.hbar);  // throws at the pure limit
    const double scale = il / std::sqrt(i);
    return MultiplierState{scale * e.p2, scale * e.x2, -0.5 * scale * e.l, e.a, e.p_a};
}

/// Total energy <H> = (1/2)(<p^2>/m_q + P_A^2/m_cl + m_q omega^2 <x^2>)
/// with omega^2 = omega_q^2 + e^2 A^2.
inline double energy(const ExpectationState& e, const ModelParams& p) {
    return 0.5 * (e.p2 / p.m_q + e.p_a * e.p_a / p.m_cl + p.m_q * p.omega2(e.a) * e.x2);
}

/// Relative energy E_r = |E| / (sqrt(I) omega_q), the control parameter of the
/// quasiclassical -> transitional -> classical progression.
inline double relative_energy(double energy_value, double i_uncert, double omega_q) {
    if (!(i_uncert > 0.0)) throw NumericalError("relative_energy: I must be > 0");
    if (!(omega_q > 0.0)) throw NumericalError("relative_energy: omega_q must be > 0");
    return std::abs(energy_value) / (std::sqrt(i_uncert) * omega_q);
}

/// Entropy as a function of z = hbar I_lambda, in the cancellation-free form
///   S = 2 z q/(1-q) - ln(1-q),   q = e^{-2z},
/// algebraically identical to lambda0 + 2 I_lambda sqrt(I).
inline double entropy_from_z(double z) {
    if (!(z > 0.0)) throw NumericalError("entropy: hbar*I_lambda must be > 0");
    if (z > 700.0) return 0.0;  // pure-state asymptote
    const double one_minus_q = -std::expm1(-2.0 * z);
    const double q = std::exp(-2.0 * z);
    return 2.0 * z * q / one_minus_q - std::log(one_minus_q);
}

/// von Neumann entropy S = lambda0 + sum_i lambda_i <O_i>, which collapses to
/// lambda0 + 2 I_lambda sqrt(I). Non-negative, zero only at the pure limit.
inline double entropy(const MultiplierState& s, const ModelParams& p) {
    if (!(p.hbar > 0.0)) throw NumericalError("entropy: hbar must be > 0");
    return entropy_from_z(p.hbar * i_lambda(s));
}

/// Exact geometric spectrum p_n = (1-q) q^n, q = e^{-2 hbar I_lambda}, from the
/// harmonic-like spectrum hbar(2n+1) of X^2 + P^2. Purity and entropy are
/// computed from the full series in closed form, not from the stored prefix.
inline SpectrumSummary spectrum(double il, double hbar, int n_max) {
    if (!(il > 0.0)) throw NumericalError("spectrum: I_lambda must be > 0");
    if (!(hbar > 0.0)) throw NumericalError("spectrum: hbar must be > 0");
    if (n_max < 1) throw NumericalError("spectrum: n_max must be >= 1");
    const double z = hbar * il;
    const double q = std::exp(-2.0 * z);
    const double p0 = -std::expm1(-2.0 * z);  // 1 - q

    SpectrumSummary out;
    out.probs.reserve(static_cast<std::size_t>(n_max));
    double pn = p0;
    double mass = 0.0;
    for (int n = 0; n < n_max; ++n) {
        out.probs.push_back(pn);
        mass += pn;
        pn *= q;
    }
    out.truncation_mass = std::max(0.0, 1.0 - mass);
    out.purity = std::tanh(z);
    out.spectral_entropy = entropy_from_z(z);
    return out;
}

/// lambda_V = sqrt(lambda1 lambda2) + lambda3, lambda_T = sqrt(lambda1 lambda2) - lambda3.
/// Their product equals I_lambda^2.
inline TransformCoeffs transform_coeffs(const MultiplierState& s) {
    if (!(s.lambda1 > 0.0) || !(s.lambda2 > 0.0))
        throw NumericalError("transform_coeffs: lambda1, lambda2 must be > 0");
    const double root = std::sqrt(s.lambda1 * s.lambda2);
    const TransformCoeffs c{root + s.lambda3, root - s.lambda3};
    if (!(c.lambda_v > 0.0) || !(c.lambda_t > 0.0))
        throw NumericalError("transform_coeffs: coefficients must be positive");
    return c;
}

/// Classical statistical counterparts: I_lambda_cl = 1/(2 sqrt(I_cl)),
/// the same multiplier relations with sqrt(I_cl)/I_lambda_cl in place of
/// T/I_lambda, and lambda0_cl = ln(pi / I_lambda_cl).
struct ClassicalRelations {
    double i_cl = 0.0;
    double i_lambda_cl = 0.0;
    double lambda1_cl = 0.0;
    double lambda2_cl = 0.0;
    double lambda3_cl = 0.0;
    double lambda0_cl = 0.0;
};

inline ClassicalRelations classical_relations(const ExpectationState& e) {
    const double i_cl = invariant_i(e);
    if (i_cl <= k_eps_pure)
        throw DeltaLimitError("classical_relations: I_cl = " + std::to_string(i_cl) +
                              " is at the delta limit; the density degenerates");
    const double root = std::sqrt(i_cl);
    const double il = 0.5 / root;
    const double scale = il / root;  // = 1/(2 I_cl)
    ClassicalRelations r;
    r.i_cl = i_cl;
    r.i_lambda_cl = il;
    r.lambda1_cl = scale * e.p2;
    r.lambda2_cl = scale * e.x2;
    r.lambda3_cl = -0.5 * scale * e.l;
    r.lambda0_cl = std::log(std::numbers::pi / il);
    return r;
}

/// All conserved/derived scalars of a moment state. In quantum mode the
/// multiplier-image quantities turn NaN at/below the pure limit (where the
/// state is pure: entropy 0); in classical mode they turn NaN only at the
/// delta limit I_cl = 0.
inline InvariantSet invariants_of(const ExpectationState& e, const ModelParams& p) {
    InvariantSet inv;
    inv.i_uncert = invariant_i(e);
    inv.energy = energy(e, p);
    inv.e_r = inv.i_uncert > 0.0 ? relative_energy(inv.energy, inv.i_uncert, p.omega_q)
                                 : detail::nan_value();
    inv.t_val = inv.i_uncert >= 0.0 ? std::sqrt(inv.i_uncert) : detail::nan_value();
    if (p.quantum()) {
        const double floor = 0.25 * p.hbar * p.hbar;
        if (inv.i_uncert > floor * (1.0 + k_eps_pure)) {
            inv.i_lambda = ilambda_from_i(inv.i_uncert, p.hbar);
            inv.lambda0 = lambda0(inv.i_lambda, p.hbar);
            inv.entropy = entropy_from_z(p.hbar * inv.i_lambda);
        } else {
            // pure limit: multipliers diverge, the state itself is pure
            inv.i_lambda = detail::nan_value();
            inv.lambda0 = detail::nan_value();
            inv.entropy = inv.i_uncert >= floor * (1.0 - k_eps_pure) ? 0.0 : detail::nan_value();
        }
    } else {
        if (inv.i_uncert > k_eps_pure) {
            const ClassicalRelations r = classical_relations(e);
            inv.i_lambda = r.i_lambda_cl;
            inv.lambda0 = r.lambda0_cl;
            // differential entropy of the classical Gaussian: lambda0_cl + 1
            inv.entropy = r.lambda0_cl + 1.0;
        } else {
            inv.i_lambda = detail::nan_value();
            inv.lambda0 = detail::nan_value();
            inv.entropy = detail::nan_value();
        }
    }
    return inv;
}

}  // namespace semiq
