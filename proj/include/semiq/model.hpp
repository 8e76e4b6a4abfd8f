#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "semiq/errors.hpp"

namespace semiq {

/// Relative width of the band above I = hbar^2/4 (or above I_cl = 0) inside
/// which the multiplier representation is treated as degenerate.
inline constexpr double k_eps_pure = 1e-12;

/// Physical constants of the coupled quantum/classical oscillator model.
/// hbar = 0 selects the classical statistical treatment.
struct ModelParams {
    double m_q = 1.0;      // quantum mass
    double m_cl = 1.0;     // classical mass
    double omega_q = 1.0;  // bare frequency
    double e = 1.0;        // coupling strength
    double hbar = 1.0;

    /// Effective squared frequency omega^2 = omega_q^2 + e^2 A^2.
    double omega2(double a) const { return omega_q * omega_q + e * e * a * a; }

    bool quantum() const { return hbar > 0.0; }

    void validate() const {
        if (!(m_q > 0.0)) throw ConfigError("model.m_q must be > 0");
        if (!(m_cl > 0.0)) throw ConfigError("model.m_cl must be > 0");
        if (!(omega_q > 0.0)) throw ConfigError("model.omega_q must be > 0");
        if (!(e >= 0.0)) throw ConfigError("model.e must be >= 0");
        if (!(hbar >= 0.0)) throw ConfigError("model.hbar must be >= 0");
    }
};

/// Lagrange multipliers of the statistical operator plus the classical pair:
/// the 5-dimensional phase point of the multiplier-form dynamics.
/// lambda0 is not stored; it is a derived function of I_lambda.
struct MultiplierState {
    double lambda1 = 1.0;  // multiplier of x^2
    double lambda2 = 1.0;  // multiplier of p^2
    double lambda3 = 0.0;  // multiplier of L = xp + px
    double a = 0.0;
    double p_a = 0.0;

    double discriminant() const { return lambda1 * lambda2 - lambda3 * lambda3; }

    void validate() const {
        if (!(lambda1 > 0.0)) throw ConfigError("initial.lambda1 must be > 0");
        if (!(lambda2 > 0.0)) throw ConfigError("initial.lambda2 must be > 0");
        if (!(discriminant() > 0.0))
            throw ConfigError("lambda1*lambda2 - lambda3^2 must be > 0 (normalizable operator)");
    }
};

/// Second moments <x^2>, <p^2>, <L> plus the classical pair. The same struct
/// serves the fully classical statistical system (hbar = 0), in which case
/// L = 2 x p and the admissible floor for I drops from hbar^2/4 to 0.
struct ExpectationState {
    double x2 = 1.0;
    double p2 = 1.0;
    double l = 0.0;
    double a = 0.0;
    double p_a = 0.0;

    double invariant() const { return x2 * p2 - 0.25 * l * l; }

    void validate(double hbar) const {
        if (!(x2 > 0.0)) throw ConfigError("initial.x2 must be > 0");
        if (!(p2 > 0.0)) throw ConfigError("initial.p2 must be > 0");
        const double i = invariant();
        const double floor = 0.25 * hbar * hbar;
        // slack of a few ulps of the constituent products, so states sitting
        // exactly on the floor survive rounding
        const double slack = 64.0 * std::numeric_limits<double>::epsilon() * x2 * p2;
        if (i < floor - slack)
            throw ConfigError("x2*p2 - l^2/4 = " + std::to_string(i) +
                              " violates the uncertainty floor " + std::to_string(floor));
    }
};

/// Conserved and derived scalars of a state. Fields that are undefined for a
/// given state (e.g. lambda0 at the pure limit) are stored as quiet NaN.
struct InvariantSet {
    double i_uncert = 0.0;  // I = <x^2><p^2> - <L>^2/4
    double i_lambda = 0.0;  // sqrt(lambda1 lambda2 - lambda3^2)
    double energy = 0.0;    // <H>
    double e_r = 0.0;       // |E| / (sqrt(I) omega_q)
    double t_val = 0.0;     // T(I_lambda) = sqrt(I)
    double lambda0 = 0.0;
    double entropy = 0.0;
};

/// Leading eigenvalues of the statistical operator and closed-form summaries.
struct SpectrumSummary {
    std::vector<double> probs;      // p_n = (1-q) q^n, n = 0..n_max-1
    double purity = 0.0;            // Tr rho^2 = tanh(hbar I_lambda)
    double spectral_entropy = 0.0;  // -sum p_n ln p_n over the full series
    double truncation_mass = 0.0;   // 1 - sum of stored probs
};

/// Coefficients of the decoupling transformation to the (X, P) operators.
struct TransformCoeffs {
    double lambda_v = 0.0;  // sqrt(lambda1 lambda2) + lambda3
    double lambda_t = 0.0;  // sqrt(lambda1 lambda2) - lambda3
};

}  // namespace semiq
