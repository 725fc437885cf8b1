#include <doctest.h>

#include <cmath>

#include "fastexec/errors.hpp"
#include "fastexec/hjb.hpp"
#include "support.hpp"

using namespace fastexec;
using fastexec::testing::paper_params;

namespace {

// Sweep-friendly parameters: unit-epsilon reversion speeds slowed so the
// epsilon terms are visible above the discretization floor, same stationary
// law as the calibrated factors.
ModelParams sweep_params() {
    ModelParams p = paper_params();
    p.gamma = 0.0;
    p.A = 1.0;
    p.kappa_lo = 0.15;
    const double s = 32.0;
    p.factors.lambda1 /= s;
    p.factors.lambda2 /= s;
    p.factors.eta1 /= std::sqrt(s);
    p.factors.eta2 /= std::sqrt(s);
    return p;
}

}  // namespace

TEST_CASE("terminal condition holds at every node") {
    ModelParams p = sweep_params();
    p.epsilon = 0.1;
    const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
    const auto grid = FactorGrid::make_for_factor(f1, 5.0, 51);
    const auto sol = solve_hjb(p, grid, 2048, HjbMode::kappa_1d);
    CHECK(sol.times.back() == doctest::Approx(p.T));
    for (double v : sol.values.back()) CHECK(v == -p.A);
    // negativity throughout
    for (const auto& level : sol.values)
        for (double v : level) CHECK(v < 0.0);
}

TEST_CASE("degenerate clamps collapse the PDE to the averaged ODE") {
    ModelParams p = paper_params();
    p.gamma = 1e-3;
    p.A = 1.0;
    p.epsilon = 0.01;
    p.kappa_lo = p.kappa_hi = 0.38;
    p.sigma_lo = p.sigma_hi = 4.5;
    const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
    const auto grid = FactorGrid::make_for_factor(f1, 5.0, 5);

    const auto coeffs = averaged_base_coefficients(p);
    const auto curve = solve_z0(p, coeffs, 65536);

    const int n_time = 1 << 20;
    HjbOptions opts;
    opts.store_stride = 1 << 8;
    const auto sol = solve_hjb(p, grid, n_time, HjbMode::kappa_1d, opts);

    double sup = 0.0, ydep = 0.0;
    for (size_t k = 0; k < sol.times.size(); ++k) {
        for (double v : sol.values[k])
            sup = std::max(sup, std::abs(v - curve.eval(sol.times[k])));
        for (double v : sol.values[k]) ydep = std::max(ydep, std::abs(v - sol.values[k][0]));
    }
    CHECK(ydep <= 1e-12);  // solution independent of the factor
    CHECK(sup <= 1e-6);
}

TEST_CASE("time-step refinement converges at first order or better") {
    ModelParams p = sweep_params();
    p.epsilon = 0.05;
    const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
    const auto grid = FactorGrid::make_for_factor(f1, 5.0, 101);
    const auto fine = solve_hjb(p, grid, 16384, HjbMode::kappa_1d);
    double errs[2];
    int idx = 0;
    for (int nt : {2048, 4096}) {
        const auto sol = solve_hjb(p, grid, nt, HjbMode::kappa_1d);
        double sup = 0.0;
        for (size_t k = 0; k < sol.times.size(); ++k)
            for (int i = 1; i < grid.n[0] - 1; ++i)
                sup = std::max(sup,
                               std::abs(sol.values[k][i] -
                                        fine.eval(sol.times[k], grid.node(0, i))));
        errs[idx++] = sup;
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 0.8);
}

TEST_CASE("stability precheck demands enough time steps") {
    ModelParams p = sweep_params();
    p.epsilon = 0.1;
    const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
    const auto grid = FactorGrid::make_for_factor(f1, 5.0, 51);
    CHECK_THROWS_WITH_AS(solve_hjb(p, grid, 128, HjbMode::kappa_1d),
                         doctest::Contains("n_time_steps"), NumericError);
}

TEST_CASE("clamp-bound envelopes bracket the solution") {
    ModelParams p = sweep_params();
    p.epsilon = 0.05;
    const int nt = 4096;
    const auto env = hjb_envelopes(p, nt);
    CHECK(env.lower.back() == doctest::Approx(p.A));
    CHECK(env.upper.back() == doctest::Approx(p.A));
    for (size_t k = 0; k < env.lower.size(); ++k) {
        CHECK(env.lower[k] <= env.upper[k] + 1e-15);
        CHECK(env.lower[k] > 0.0);
    }
    const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
    const auto grid = FactorGrid::make_for_factor(f1, 5.0, 101);
    const auto sol = solve_hjb(p, grid, nt, HjbMode::kappa_1d);
    for (size_t k = 0; k < sol.times.size(); ++k) {
        const int level = static_cast<int>(std::round(sol.times[k] / (p.T / nt)));
        for (int i = 1; i < grid.n[0] - 1; ++i) {
            const double u = -sol.values[k][i];
            CHECK(u >= env.lower[level] - 1e-9);
            CHECK(u <= env.upper[level] + 1e-9);
        }
    }
}

TEST_CASE("epsilon halving halves the order-0 error within ratio bounds") {
    const ModelParams p = sweep_params();
    SweepOptions opts;
    opts.n_time_steps = 32768;
    const auto rep = accuracy_sweep(p, {0.1, 0.05, 0.025}, 0, 0.0, HjbMode::kappa_1d, opts);
    REQUIRE(rep.rows.size() == 3);
    const double r1 = rep.rows[0].error / rep.rows[1].error;
    const double r2 = rep.rows[1].error / rep.rows[2].error;
    CHECK(r1 >= 1.5);
    CHECK(r1 <= 2.5);
    CHECK(r2 >= 1.5);
    CHECK(r2 <= 2.5);
    CHECK(rep.monotone);
}

TEST_CASE("sweep input validation") {
    const ModelParams p = sweep_params();
    CHECK_THROWS_WITH_AS(accuracy_sweep(p, {0.1}, 0, 0.0, HjbMode::kappa_1d),
                         doctest::Contains("3 epsilons"), DataError);
    CHECK_THROWS_AS(accuracy_sweep(p, {0.1, 0.2, 0.3}, 0, 0.0, HjbMode::kappa_1d), DataError);
    CHECK_THROWS_AS(accuracy_sweep(p, {0.1, 0.05, 0.025}, 1, 0.0, HjbMode::kappa_1d), DataError);
    CHECK_THROWS_AS(accuracy_sweep(p, {0.1, 0.05, 0.025}, 2, 0.1, HjbMode::kappa_1d), DataError);
}

TEST_CASE("sigma-mode solve runs and respects the terminal condition") {
    ModelParams p = sweep_params();
    p.gamma = 1e-3;
    p.epsilon = 0.1;
    const OuFactor1d f2{p.factors.lambda2, p.factors.m2, p.factors.eta2};
    const auto grid = FactorGrid::make_for_factor(f2, 5.0, 51);
    const auto sol = solve_hjb(p, grid, 8192, HjbMode::sigma_1d);
    for (double v : sol.values.back()) CHECK(v == -p.A);
    for (double v : sol.values.front()) CHECK(v < 0.0);
}

TEST_CASE("2D solve smoke test with correlation") {
    ModelParams p = sweep_params();
    p.gamma = 1e-4;
    p.epsilon = 0.1;
    const auto grid = FactorGrid::make_for_factors(p.factors, 5.0, 31, 31);
    const auto sol = solve_hjb(p, grid, 4096, HjbMode::full_2d);
    CHECK(sol.values.front().size() == static_cast<size_t>(grid.size()));
    for (double v : sol.values.back()) CHECK(v == -p.A);
    for (double v : sol.values.front()) CHECK(v < 0.0);
}

TEST_CASE("ergodic averaging decays with epsilon") {
    ModelParams p = paper_params();
    p.factors = {3.0, 2.0, 0.0, 0.0, 1.0, 1.0, 0.3};
    p.kappa_lo = 0.05;
    p.kappa_hi = 20.0;
    p.sigma_lo = -2.0;
    p.sigma_hi = 2.0;

    SUBCASE("identically zero function") {
        const auto rows = ergodic_average_check(
            p, [](double, double) { return 0.0; }, {0.4, 0.2, 0.1}, 0.0, 0.25, {5.0, 0.0}, 200, 5);
        for (const auto& r : rows) CHECK(r.estimate == 0.0);
    }
    SUBCASE("linear function obeys the exact conditional-mean bound") {
        const auto rows = ergodic_average_check(
            p, [](double y1, double) { return y1; }, {0.4, 0.2, 0.1}, 0.0, 0.25, {5.0, 0.0},
            20000, 5);
        for (const auto& r : rows) {
            const double bound = std::exp(-3.0 * 0.25 / r.eps) * 5.0;
            CHECK(std::abs(r.estimate) <= bound + 2.0 * r.std_error);
        }
        // decay within Monte Carlo noise slack
        for (size_t k = 1; k < rows.size(); ++k)
            CHECK(std::abs(rows[k].estimate) <=
                  std::abs(rows[k - 1].estimate) + 2.0 * rows[k].std_error);
    }
    SUBCASE("centered clamped integrand decays") {
        const double mean = pi_average(
            p, [&](double y1, double) { return std::pow(p.kappa_map(y1), -1.0 / p.phi); });
        const auto rows = ergodic_average_check(
            p,
            [&](double y1, double) { return std::pow(p.kappa_map(y1), -1.0 / p.phi) - mean; },
            {0.4, 0.2, 0.1}, 0.0, 0.25, {5.0, 0.0}, 20000, 5);
        for (size_t k = 1; k < rows.size(); ++k)
            CHECK(std::abs(rows[k].estimate) <=
                  std::abs(rows[k - 1].estimate) + 2.0 * rows[k].std_error);
    }
    SUBCASE("non-centered integrand is rejected") {
        CHECK_THROWS_AS(ergodic_average_check(p, [](double y1, double) { return y1 + 1.0; },
                                              {0.2, 0.1, 0.05}, 0.0, 0.25, {0.0, 0.0}, 100, 5),
                        DataError);
    }
}
