#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "semiq/algebra.hpp"

using namespace semiq;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("i_lambda") {
    CHECK(i_lambda({5, 5, 3, 0, 0}) == 4.0);
    CHECK(i_lambda({1, 1, 0, 0, 0}) == 1.0);
    // high-precision evaluation of sqrt(4 - 3.61)
    CHECK_THAT(i_lambda({2, 2, -1.9, 0, 0}), WithinRel(0.62449979983983982, 1e-14));
    CHECK_THROWS_AS(i_lambda({1, 1, 1.5, 0, 0}), NumericalError);
    CHECK_THROWS_AS(i_lambda({1, 1, 1.0, 0, 0}), NumericalError);  // disc == 0
}

TEST_CASE("t_of_ilambda") {
    CHECK_THAT(t_of_ilambda(std::log(3.0) / 2.0, 1.0), WithinRel(1.0, 1e-14));
    CHECK_THAT(t_of_ilambda(1e6, 1.0), WithinAbs(0.5, 1e-12));  // ground-state limit hbar/2
    CHECK(t_of_ilambda(2.0, 0.0) == 0.25);                      // classical 1/(2 I_lambda)
    CHECK_THROWS_AS(t_of_ilambda(0.0, 1.0), NumericalError);
    CHECK_THROWS_AS(t_of_ilambda(-1.0, 1.0), NumericalError);

    SECTION("small hbar*I_lambda approaches the classical value smoothly") {
        const double il = 3.0;
        for (double hbar : {1e-4, 1e-6, 1e-8})
            CHECK_THAT(t_of_ilambda(il, hbar), WithinRel(1.0 / (2.0 * il), 1e-7));
    }
}

TEST_CASE("lambda0") {
    CHECK_THAT(lambda0(std::log(2.0), 1.0), WithinRel(-0.40546510810816438, 1e-14));
    // series check: e^z - e^{-z} ~ 2z for small z
    CHECK_THAT(lambda0(0.01, 1.0), WithinRel(3.9120063388170346, 1e-13));
    // asymptote -hbar*I_lambda once e^{-2z} underflows
    CHECK(lambda0(800.0, 1.0) == -800.0);
    CHECK_THAT(lambda0(30.0, 1.0), WithinRel(-30.0, 1e-12));
    CHECK_THROWS_AS(lambda0(0.0, 1.0), NumericalError);
    CHECK_THROWS_AS(lambda0(1.0, 0.0), NumericalError);
}

TEST_CASE("multipliers_to_evs") {
    const ModelParams p;  // hbar = 1

    SECTION("frozen example") {
        const auto e = multipliers_to_evs({1, 1, 0, 0.3, -0.7}, p);
        CHECK_THAT(e.x2, WithinRel(0.65651764274966565, 1e-14));  // (1/2) coth(1)
        CHECK_THAT(e.p2, WithinRel(0.65651764274966565, 1e-14));
        CHECK(e.l == 0.0);
        CHECK(e.a == 0.3);    // classical pair passes through
        CHECK(e.p_a == -0.7);
    }

    SECTION("T(I_lambda)^2 = I for random states") {
        auto g = oracle::rng();
        for (int k = 0; k < 2000; ++k) {
            const auto s = oracle::random_multipliers(g);
            const double t = t_of_ilambda(i_lambda(s), p.hbar);
            CHECK_THAT(invariant_i(multipliers_to_evs(s, p)), WithinRel(t * t, 1e-10));
        }
    }

    SECTION("symmetric multipliers give symmetric moments") {
        const auto e = multipliers_to_evs({2.5, 2.5, 0.4, 0, 0}, p);
        CHECK(e.x2 == e.p2);
    }
}

TEST_CASE("evs_to_multipliers") {
    const ModelParams p;

    SECTION("round-trips the frozen example") {
        const auto s = evs_to_multipliers({0.65651764274966565, 0.65651764274966565, 0, 0, 0}, p);
        CHECK_THAT(s.lambda1, WithinRel(1.0, 1e-9));
        CHECK_THAT(s.lambda2, WithinRel(1.0, 1e-9));
        CHECK_THAT(s.lambda3, WithinAbs(0.0, 1e-12));
    }

    SECTION("I = 1, hbar = 1 maps to I_lambda = ln(3)/2") {
        CHECK_THAT(ilambda_from_i(1.0, 1.0), WithinRel(0.54930614433405484, 1e-14));
    }

    SECTION("pure limit raises") {
        // I = x2*p2 = 0.25 is exactly hbar^2/4
        CHECK_THROWS_AS(evs_to_multipliers({0.5, 0.5, 0, 0, 0}, p), PureLimitError);
        CHECK_THROWS_AS(ilambda_from_i(0.25 * (1.0 + 1e-13), 1.0), PureLimitError);
    }

    SECTION("I_lambda diverges approaching the pure limit") {
        double prev = 0.0;
        for (double gap : {1e-2, 1e-4, 1e-6, 1e-8}) {
            const double il = ilambda_from_i(0.25 + gap, 1.0);
            CHECK(il > prev);
            prev = il;
        }
        CHECK(prev > 9.0);  // ~ (1/2) ln(1/gap) at hbar = 1
    }

    SECTION("ilambda_from_i and T(t_of_ilambda) are mutual inverses") {
        for (double hbar : {1e-3, 1.0}) {
            const double lo = 0.25 * hbar * hbar * (1.0 + 1e-6) + 1e-6;
            for (double i = lo; i <= 1e6; i *= 3.7) {
                const double t = t_of_ilambda(ilambda_from_i(i, hbar), hbar);
                CHECK_THAT(t * t, WithinRel(i, 1e-9));
            }
        }
    }

    SECTION("round-trip is the identity on random states") {
        auto g = oracle::rng(7);
        int checked = 0;
        for (int k = 0; k < 5000; ++k) {
            const auto s = oracle::random_multipliers(g);
            const auto e = multipliers_to_evs(s, p);
            if (invariant_i(e) <= 0.25 * p.hbar * p.hbar + 1e-6) continue;
            const auto s2 = evs_to_multipliers(e, p);
            CHECK_THAT(s2.lambda1, WithinRel(s.lambda1, 1e-9));
            CHECK_THAT(s2.lambda2, WithinRel(s.lambda2, 1e-9));
            CHECK_THAT(s2.lambda3, WithinAbs(s.lambda3, 1e-9 * std::abs(s.lambda3) + 1e-12));
            ++checked;
        }
        CHECK(checked > 1000);
    }
}

TEST_CASE("invariant_i") {
    CHECK(invariant_i({1, 1, 0, 0, 0}) == 1.0);
    CHECK(invariant_i({2, 2, 4, 0, 0}) == 0.0);  // classical boundary
    CHECK(invariant_i({0.5, 0.5, 0, 0, 0}) == 0.25);  // ground state at hbar = 1
}

TEST_CASE("energy") {
    ModelParams p;
    CHECK(energy({1, 1, 0, 0, 0}, p) == 1.0);

    SECTION("decoupled additivity at e = 0") {
        p.e = 0.0;
        const ExpectationState st{1.5, 2.0, 0.3, 5.0, 3.0};
        const double e_quantum = 0.5 * (st.p2 / p.m_q + p.m_q * p.omega_q * p.omega_q * st.x2);
        CHECK_THAT(energy(st, p), WithinRel(e_quantum + 0.5 * st.p_a * st.p_a / p.m_cl, 1e-15));
    }
}

TEST_CASE("relative_energy") {
    CHECK(relative_energy(1.0, 1.0, 1.0) == 1.0);
    CHECK(relative_energy(-2.0, 4.0, 1.0) == 1.0);
    CHECK(relative_energy(1.0, 1e-12, 1.0) == 1e6);  // E_r -> infinity as I -> 0
    CHECK_THROWS_AS(relative_energy(1.0, 0.0, 1.0), NumericalError);
}

TEST_CASE("entropy") {
    const ModelParams p;

    SECTION("closed form against frozen value at I = 1") {
        const auto s = evs_to_multipliers({1, 1, 0, 0, 0}, p);
        CHECK_THAT(entropy(s, p), WithinRel(0.95477125244221923, 1e-12));
    }

    SECTION("equals the spectral entropy summed over eigenvalues") {
        for (double z : {1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0, 10.0, 30.0})
            CHECK_THAT(entropy_from_z(z), WithinRel(oracle::spectral_entropy_by_summation(z),
                                                    1e-11));
    }

    SECTION("vanishes at the pure limit") {
        CHECK(entropy_from_z(750.0) == 0.0);
        CHECK(entropy_from_z(40.0) < 1e-15);
    }

    SECTION("strictly decreasing as I decreases toward hbar^2/4") {
        double prev = std::numeric_limits<double>::infinity();
        for (double i : {4.0, 1.0, 0.5, 0.3, 0.26, 0.2500001}) {
            const double s = entropy_from_z(p.hbar * ilambda_from_i(i, p.hbar));
            CHECK(s < prev);
            CHECK(s >= 0.0);
            prev = s;
        }
    }
}

TEST_CASE("spectrum") {
    SECTION("geometric ratio 1/2") {
        // q = e^{-2z} = 1/2
        const double z = 0.5 * std::log(2.0);
        const auto sp = spectrum(z, 1.0, 8);
        REQUIRE(sp.probs.size() == 8);
        CHECK_THAT(sp.probs[0], WithinRel(0.5, 1e-14));
        CHECK_THAT(sp.probs[1], WithinRel(0.25, 1e-14));
        CHECK_THAT(sp.probs[2], WithinRel(0.125, 1e-14));
        CHECK_THAT(sp.purity, WithinRel(1.0 / 3.0, 1e-14));
        CHECK_THAT(sp.truncation_mass, WithinAbs(std::pow(0.5, 8), 1e-14));
    }

    SECTION("pure limit: probs -> (1, 0, 0, ...)") {
        const auto sp = spectrum(50.0, 1.0, 4);
        CHECK_THAT(sp.probs[0], WithinRel(1.0, 1e-12));
        CHECK(sp.probs[1] < 1e-40);
        CHECK_THAT(sp.purity, WithinRel(1.0, 1e-12));
    }

    SECTION("mixed limit: flat prefix") {
        const auto sp = spectrum(1e-8, 1.0, 3);
        CHECK_THAT(sp.probs[1] / sp.probs[0], WithinRel(1.0, 1e-7));
        CHECK(sp.purity < 1e-7);
    }

    SECTION("invariants of the sequence") {
        const auto sp = spectrum(0.7, 1.3, 32);
        double mass = 0.0;
        for (std::size_t n = 1; n < sp.probs.size(); ++n) CHECK(sp.probs[n] < sp.probs[n - 1]);
        for (double pr : sp.probs) {
            CHECK(pr > 0.0);
            mass += pr;
        }
        CHECK(mass <= 1.0 + 1e-15);
        CHECK(sp.truncation_mass >= 0.0);
        CHECK_THAT(mass + sp.truncation_mass, WithinRel(1.0, 1e-12));
    }

    SECTION("purity equals tanh(hbar I_lambda)") {
        auto g = oracle::rng(11);
        for (int k = 0; k < 200; ++k) {
            const double z = oracle::log_uniform(g, 1e-3, 30.0);
            const auto sp = spectrum(z / 2.0, 2.0, 2);
            const double q = std::exp(-2.0 * z);
            CHECK_THAT(sp.purity, WithinRel((1.0 - q) / (1.0 + q), 1e-12));
        }
    }
}

TEST_CASE("transform_coeffs") {
    CHECK(transform_coeffs({1, 1, 0, 0, 0}).lambda_v == 1.0);
    CHECK(transform_coeffs({1, 1, 0, 0, 0}).lambda_t == 1.0);

    const auto c = transform_coeffs({5, 5, 3, 0, 0});
    CHECK(c.lambda_v == 8.0);
    CHECK(c.lambda_t == 2.0);
    CHECK(c.lambda_v * c.lambda_t == 16.0);  // = I_lambda^2

    SECTION("product identity on random states") {
        auto g = oracle::rng(13);
        for (int k = 0; k < 2000; ++k) {
            const auto s = oracle::random_multipliers(g);
            const auto tc = transform_coeffs(s);
            CHECK_THAT(tc.lambda_v * tc.lambda_t, WithinRel(s.discriminant(), 1e-12));
        }
    }

    SECTION("throws when a coefficient is non-positive") {
        CHECK_THROWS_AS(transform_coeffs({0.25, 1, 0.6, 0, 0}), NumericalError);
        CHECK_THROWS_AS(transform_coeffs({0.25, 1, -0.5, 0, 0}), NumericalError);
    }
}

TEST_CASE("classical_relations") {
    SECTION("unit example") {
        const auto r = classical_relations({1, 1, 0, 0, 0});
        CHECK(r.i_cl == 1.0);
        CHECK(r.i_lambda_cl == 0.5);
        CHECK(r.lambda1_cl == 0.5);
        CHECK(r.lambda2_cl == 0.5);
        CHECK(r.lambda3_cl == 0.0);
        CHECK_THAT(r.lambda0_cl, WithinRel(std::log(2.0 * std::numbers::pi), 1e-14));
    }

    SECTION("round-trips back to the moments") {
        const ExpectationState e{2.0, 0.8, 1.1, 0, 0};
        const auto r = classical_relations(e);
        const double ratio = std::sqrt(r.i_cl) / r.i_lambda_cl;
        CHECK_THAT(ratio * r.lambda2_cl, WithinRel(e.x2, 1e-13));
        CHECK_THAT(ratio * r.lambda1_cl, WithinRel(e.p2, 1e-13));
        CHECK_THAT(-2.0 * ratio * r.lambda3_cl, WithinRel(e.l, 1e-13));
    }

    SECTION("moments recovered by quadrature over the Gaussian density") {
        const ExpectationState e{1.4, 0.6, -0.8, 0, 0};
        const auto r = classical_relations(e);
        const auto m =
            oracle::classical_moments_by_quadrature(r.lambda1_cl, r.lambda2_cl, r.lambda3_cl);
        CHECK_THAT(m.x2, WithinRel(e.x2, 1e-9));
        CHECK_THAT(m.p2, WithinRel(e.p2, 1e-9));
        CHECK_THAT(m.l, WithinRel(e.l, 1e-9));
    }

    SECTION("quantum map at hbar = 0 coincides with the classical relations") {
        ModelParams p;
        p.hbar = 0.0;
        const ExpectationState e{1.7, 0.9, 0.6, 0, 0};
        const auto s = evs_to_multipliers(e, p);
        const auto r = classical_relations(e);
        CHECK_THAT(s.lambda1, WithinRel(r.lambda1_cl, 1e-13));
        CHECK_THAT(s.lambda2, WithinRel(r.lambda2_cl, 1e-13));
        CHECK_THAT(s.lambda3, WithinRel(r.lambda3_cl, 1e-13));
    }

    SECTION("quantum map converges to the classical one at order hbar^2") {
        const ExpectationState e{1.7, 0.9, 0.6, 0, 0};
        const double target = classical_relations(e).i_lambda_cl;
        double prev_err = 1.0;
        std::vector<double> errs;
        for (double hbar : {1e-1, 1e-2, 1e-3}) {
            const double err = std::abs(ilambda_from_i(invariant_i(e), hbar) - target);
            errs.push_back(err);
            CHECK(err < prev_err);
            prev_err = err;
        }
        // fitted order from successive decades
        const double order = std::log10(errs[0] / errs[2]) / 2.0;
        CHECK(order > 1.9);
        CHECK(order < 2.1);
    }

    SECTION("delta limit raises") {
        CHECK_THROWS_AS(classical_relations({2, 2, 4, 0, 0}), DeltaLimitError);
    }
}

TEST_CASE("invariants_of") {
    ModelParams p;

    SECTION("quantum state above the floor") {
        const ExpectationState e{1, 1, 0, 0.5, 2.0};
        const auto inv = invariants_of(e, p);
        CHECK(inv.i_uncert == 1.0);
        CHECK_THAT(inv.i_lambda, WithinRel(0.54930614433405484, 1e-13));
        CHECK_THAT(inv.t_val, WithinRel(1.0, 1e-14));
        CHECK(inv.entropy > 0.0);
        CHECK_THAT(inv.e_r, WithinRel(inv.energy, 1e-13));  // sqrt(I) = omega_q = 1
    }

    SECTION("pure limit marks multiplier fields NaN, entropy zero") {
        const ExpectationState e{0.5, 0.5, 0, 0, 0};  // I = 0.25 = hbar^2/4
        const auto inv = invariants_of(e, p);
        CHECK(std::isnan(inv.i_lambda));
        CHECK(std::isnan(inv.lambda0));
        CHECK(inv.entropy == 0.0);
        CHECK(inv.t_val == 0.5);
    }

    SECTION("classical mode uses the classical relations") {
        p.hbar = 0.0;
        const ExpectationState e{1, 1, 0, 0, 0};
        const auto inv = invariants_of(e, p);
        CHECK(inv.i_lambda == 0.5);
        CHECK_THAT(inv.entropy, WithinRel(std::log(2.0 * std::numbers::pi) + 1.0, 1e-13));
    }

    SECTION("classical delta limit") {
        p.hbar = 0.0;
        const ExpectationState e{2, 2, 4, 0, 0};  // I_cl = 0
        const auto inv = invariants_of(e, p);
        CHECK(inv.i_uncert == 0.0);
        CHECK(std::isnan(inv.i_lambda));
        CHECK(std::isnan(inv.entropy));
        CHECK(inv.t_val == 0.0);
    }
}

TEST_CASE("model validation") {
    ModelParams p;
    p.m_q = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);

    MultiplierState s{1, 1, 1.5, 0, 0};
    CHECK_THROWS_AS(s.validate(), ConfigError);

    ExpectationState e{1, 1, 2.1, 0, 0};  // I < 0
    CHECK_THROWS_AS(e.validate(0.0), ConfigError);
    CHECK_THROWS_AS(e.validate(1.0), ConfigError);
    const ExpectationState boundary{2, 2, 4, 0, 0};  // I = 0
    CHECK_NOTHROW(boundary.validate(0.0));           // admissible classically
    CHECK_THROWS_AS(boundary.validate(1.0), ConfigError);
}
