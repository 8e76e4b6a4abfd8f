#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "semiq/chaos.hpp"

using namespace semiq;
using Catch::Matchers::WithinAbs;

namespace {

// calibrated states: see configs/ for the same values used by the CLI
const ExpectationState k_chaotic{1.0, 1.0, 1.4907, 0.0, 0.6};     // E_r ~ 1.77, lambda ~ 0.12
const ExpectationState k_quasiclassical{1.0, 1.0, 0.1876, 0.0, 0.5};  // E_r ~ 1.13

IntegratorConfig cfg_for(double t_end) {
    IntegratorConfig cfg;
    cfg.t_end = t_end;
    return cfg;
}

}  // namespace

TEST_CASE("lyapunov on the integrable e = 0 system") {
    ModelParams p;
    p.e = 0.0;
    LyapunovParams lp;
    lp.horizon = 1e4;
    const auto res = lyapunov_max(ExpectationState{1.0, 1.0, 0.3, -1.0, 1.0}, p,
                                  cfg_for(1.0), lp, 42);
    CHECK(std::abs(res.lambda_max) <= 1e-3);
    CHECK(res.converged);
    CHECK(res.invariant_drift < 1e-6);
}

TEST_CASE("lyapunov on the quasiclassical configuration") {
    ModelParams p;
    LyapunovParams lp;
    lp.horizon = 1e4;
    const auto res = lyapunov_max_estimate(k_quasiclassical, p, cfg_for(1.0), lp, 20260810);
    CHECK(std::abs(res.lambda_max) <= 1e-3);
    CHECK(res.invariant_drift < 1e-6);
}

TEST_CASE("lyapunov on the chaotic configuration") {
    ModelParams p;
    LyapunovParams lp;
    lp.horizon = 2000.0;
    const auto res = lyapunov_max(k_chaotic, p, cfg_for(1.0), lp, 20260810);

    CHECK(res.lambda_max > 5e-2);
    CHECK(res.converged);

    std::size_t positive = 0;
    for (double est : res.estimates) positive += est > 0.0;
    CHECK(static_cast<double>(positive) >= 0.95 * static_cast<double>(res.estimates.size()));

    // chaos is dynamical, not numerical
    CHECK(res.invariant_drift < 1e-6);
    CHECK(res.energy_drift < 1e-6);
}

TEST_CASE("lyapunov estimate is robust to method knobs") {
    ModelParams p;
    const auto cfg = cfg_for(1.0);

    LyapunovParams a;
    a.horizon = 1e4;
    a.renorm_dt = 1.0;
    a.d0 = 1e-8;
    const auto ra = lyapunov_max_estimate(k_chaotic, p, cfg, a, 20260810);

    SECTION("halving the renormalization interval") {
        LyapunovParams b = a;
        b.renorm_dt = 0.5;
        const auto rb = lyapunov_max_estimate(k_chaotic, p, cfg, b, 20260810);
        CHECK(std::abs(ra.lambda_max - rb.lambda_max) <=
              1.5 * (ra.uncertainty + rb.uncertainty));
    }

    SECTION("changing the seed separation d0") {
        LyapunovParams b = a;
        b.d0 = 1e-9;
        const auto rb = lyapunov_max_estimate(k_chaotic, p, cfg, b, 20260810);
        CHECK(std::abs(ra.lambda_max - rb.lambda_max) <=
              1.5 * (ra.uncertainty + rb.uncertainty));
    }
}

TEST_CASE("lyapunov parameter validation") {
    LyapunovParams lp;
    lp.d0 = 1e-5;  // outside [1e-10, 1e-6]
    CHECK_THROWS_AS(lp.validate(), ConfigError);
    lp.d0 = 1e-8;
    lp.renorm_dt = 2.0;
    lp.horizon = 1.0;
    CHECK_THROWS_AS(lp.validate(), ConfigError);
}

TEST_CASE("poincare on free classical motion") {
    ModelParams p;
    p.e = 0.0;  // A moves linearly: single upward crossing at t = -A0 m_cl / P_A
    const ExpectationState init{1.0, 1.0, 0.0, -1.0, 1.0};
    const auto section = poincare(init, p, cfg_for(10.0));

    REQUIRE(section.size() == 1);
    CHECK_THAT(section.crossing_times[0], WithinAbs(1.0, 1e-9));
    CHECK(section.points[0][3] == 1.0);  // P_A preserved exactly at e = 0
}

TEST_CASE("poincare on the chaotic configuration") {
    ModelParams p;
    const auto section = poincare(k_chaotic, p, cfg_for(300.0));

    CHECK(section.size() > 10);
    for (std::size_t i = 1; i < section.size(); ++i)
        CHECK(section.crossing_times[i] > section.crossing_times[i - 1]);
    for (const auto& pt : section.points) {
        CHECK(pt[0] > 0.0);  // x2
        CHECK(pt[1] > 0.0);  // p2
        CHECK(pt[3] > 0.0);  // P_A: upward crossings only
    }
}

TEST_CASE("poincare distinguishes regular from chaotic structure") {
    // occupied-cell fraction on a coarse (x2, P_A) grid: points of a regular
    // orbit revisit a thin curve, chaotic points fill an area
    const auto occupancy = [](const PoincareSection& s) {
        double xlo = 1e300, xhi = -1e300, plo = 1e300, phi = -1e300;
        for (const auto& pt : s.points) {
            xlo = std::min(xlo, pt[0]);
            xhi = std::max(xhi, pt[0]);
            plo = std::min(plo, pt[3]);
            phi = std::max(phi, pt[3]);
        }
        std::set<int> cells;
        for (const auto& pt : s.points) {
            const int ix = std::min(23, static_cast<int>(24.0 * (pt[0] - xlo) / (xhi - xlo)));
            const int ip = std::min(23, static_cast<int>(24.0 * (pt[3] - plo) / (phi - plo)));
            cells.insert(ix * 24 + ip);
        }
        return static_cast<double>(cells.size()) / static_cast<double>(s.size());
    };

    ModelParams p;
    const auto cfg = cfg_for(3000.0);
    const auto regular = poincare(k_quasiclassical, p, cfg);
    const auto chaotic = poincare(k_chaotic, p, cfg);
    REQUIRE(regular.size() > 200);
    REQUIRE(chaotic.size() > 200);
    CHECK(occupancy(regular) < 0.25);
    CHECK(occupancy(chaotic) > 0.25);
}

TEST_CASE("poincare with no crossings") {
    ModelParams p;
    p.e = 0.0;
    const ExpectationState init{1.0, 1.0, 0.0, 1.0, 1.0};  // A runs away from the plane
    CHECK_THROWS_AS(poincare(init, p, cfg_for(10.0)), NoCrossingsError);
}

TEST_CASE("sweep_state holds the energy exactly") {
    ModelParams p;
    const ExpectationState base{1.0, 1.0, 0.0, 0.0, 0.5};
    const double e0 = energy(base, p);
    for (double er : {1.2, 1.5, 2.0}) {
        const auto st = sweep_state(base, er, p);
        CHECK(energy(st, p) == e0);
        CHECK_THAT(relative_energy(e0, st.invariant(), p.omega_q), WithinAbs(er, 1e-12));
    }

    SECTION("unreachable targets") {
        // below the pattern floor E/sqrt(x2 p2)
        CHECK_THROWS_AS(sweep_state(base, 1.0, p), ConfigError);
        // beyond the quantum floor hbar^2/4 at hbar = 1
        CHECK_THROWS_AS(sweep_state(base, 2.5, p), PureLimitError);
    }
}

TEST_CASE("regime_sweep over a short grid") {
    ModelParams p;
    const ExpectationState base{1.0, 1.0, 0.0, 0.0, 0.5};
    IntegratorConfig cfg = cfg_for(100.0);
    LyapunovParams lp;
    lp.horizon = 800.0;
    SweepThresholds th;
    th.dist_horizon = 10.0;

    const std::vector<double> grid{1.0, 1.3, 1.6, 2.0, 2.5};
    const auto sweep = regime_sweep(base, p, cfg, grid, lp, th, 3, 99);
    REQUIRE(sweep.points.size() == grid.size());

    SECTION("reachability bookkeeping") {
        CHECK_FALSE(sweep.points[0].reachable);  // I above the pattern ceiling
        CHECK(sweep.points[0].label == RegimeLabel::unreachable);
        CHECK_FALSE(sweep.points[4].reachable);  // I below the quantum floor
        CHECK(sweep.points[4].note.find("hbar") != std::string::npos);
        for (std::size_t i = 1; i <= 3; ++i) CHECK(sweep.points[i].reachable);
    }

    SECTION("chaos grows along the grid") {
        CHECK(sweep.points[1].lambda_max < sweep.points[3].lambda_max);
        CHECK(sweep.points[3].lambda_max > 5e-2);
        CHECK(sweep.points[3].label != RegimeLabel::quasiclassical);
        for (std::size_t i = 1; i <= 3; ++i) {
            CHECK(sweep.points[i].section_points > 0);
            CHECK(sweep.points[i].invariant_drift < 1e-6);
        }
    }

    SECTION("classical distance shrinks with I") {
        CHECK(sweep.points[3].classical_distance < sweep.points[1].classical_distance);
    }

    SECTION("deterministic under a different worker count") {
        const auto again = regime_sweep(base, p, cfg, grid, lp, th, 1, 99);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(again.points[i].lambda_max == sweep.points[i].lambda_max);
            CHECK(again.points[i].classical_distance == sweep.points[i].classical_distance);
            CHECK(again.points[i].label == sweep.points[i].label);
        }
    }
}

TEST_CASE("regime_sweep validation") {
    ModelParams p;
    const ExpectationState base{1.0, 1.0, 0.0, 0.0, 0.5};
    const auto cfg = cfg_for(10.0);
    const LyapunovParams lp;
    const SweepThresholds th;
    CHECK_THROWS_AS(regime_sweep(base, p, cfg, {}, lp, th, 1, 0), ConfigError);
    CHECK_THROWS_AS(regime_sweep(base, p, cfg, {2.0, 1.5}, lp, th, 1, 0), ConfigError);
}
