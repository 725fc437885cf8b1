#include <doctest.h>

#include <cmath>

#include "fastexec/errors.hpp"
#include "fastexec/model.hpp"
#include "fastexec/rng.hpp"
#include "support.hpp"

using namespace fastexec;
using fastexec::testing::mc_pi_oracle;
using fastexec::testing::paper_params;

TEST_CASE("kappa map clamps to the liquidity bounds") {
    const ModelParams p = paper_params();
    CHECK(p.kappa_map(0.3782) == doctest::Approx(0.3782));
    CHECK(p.kappa_map(-5.0) == doctest::Approx(0.01));
    CHECK(p.kappa_map(2.0) == doctest::Approx(1.1));
}

TEST_CASE("sigma map exponentiates the clamped factor") {
    const ModelParams p = paper_params();
    CHECK(p.sigma_map(4.7810) == doctest::Approx(std::exp(4.7810)));
    CHECK(p.sigma_map(4.7810) == doctest::Approx(119.22).epsilon(1e-3));
    CHECK(p.sigma_map(0.0) == doctest::Approx(std::exp(2.0)));
    CHECK(p.sigma_map(10.0) == doctest::Approx(std::exp(7.0)));
}

TEST_CASE("clamp maps are idempotent and identity inside the bounds") {
    const ModelParams p = paper_params();
    for (double y = -2.0; y <= 3.0; y += 0.01) {
        const double k = p.kappa_map(y);
        CHECK(p.kappa_map(k) == k);
        if (y >= p.kappa_lo && y <= p.kappa_hi) CHECK(k == y);
        CHECK(p.sigma_map(y) == std::exp(std::clamp(y, p.sigma_lo, p.sigma_hi)));
    }
}

TEST_CASE("stationary covariance closed form") {
    SUBCASE("diagonal identity case") {
        OuFactorParams f{2.0, 2.0, 0.0, 0.0, 2.0, 2.0, 0.0};
        const auto law = stationary_covariance(f);
        CHECK(law.cov[0][0] == doctest::Approx(1.0));
        CHECK(law.cov[1][1] == doctest::Approx(1.0));
        CHECK(law.cov[0][1] == doctest::Approx(0.0));
    }
    SUBCASE("calibrated parameters") {
        const auto law = stationary_covariance(paper_params().factors);
        CHECK(law.cov[0][0] ==
              doctest::Approx(4.0134 * 4.0134 / (2.0 * 1905.2180)).epsilon(1e-12));
        CHECK(law.cov[0][0] == doctest::Approx(4.2271e-3).epsilon(1e-4));
        CHECK(law.mean[0] == doctest::Approx(0.3782));
    }
    SUBCASE("off-diagonal entry") {
        OuFactorParams f{1.0, 3.0, 0.0, 0.0, 1.0, 1.0, 0.5};
        CHECK(stationary_covariance(f).cov[0][1] == doctest::Approx(0.125));
    }
    SUBCASE("rejects invalid parameters") {
        OuFactorParams f{1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0};
        CHECK_THROWS_AS(stationary_covariance(f), DataError);
        f.rho = 0.0;
        f.lambda1 = -1.0;
        CHECK_THROWS_AS(stationary_covariance(f), DataError);
    }
}

TEST_CASE("Lyapunov identity holds on random valid parameter draws") {
    PathRng rng(2024, 0);
    for (int i = 0; i < 1000; ++i) {
        OuFactorParams f;
        f.lambda1 = 0.1 + 100.0 * rng.uniform();
        f.lambda2 = 0.1 + 100.0 * rng.uniform();
        f.m1 = 4.0 * rng.uniform() - 2.0;
        f.m2 = 4.0 * rng.uniform() - 2.0;
        f.eta1 = 0.1 + 10.0 * rng.uniform();
        f.eta2 = 0.1 + 10.0 * rng.uniform();
        f.rho = 1.8 * rng.uniform() - 0.9;
        const auto law = stationary_covariance(f);  // throws if the identity fails at 1e-12
        CHECK(law.cov[0][0] > 0.0);
        const double det = law.cov[0][0] * law.cov[1][1] - law.cov[0][1] * law.cov[0][1];
        CHECK(det > 0.0);
    }
}

TEST_CASE("pi_average normalization and first moments") {
    const ModelParams p = paper_params();
    CHECK(pi_average(p, [](double, double) { return 1.0; }) == doctest::Approx(1.0));
    CHECK(pi_average(p, [](double y1, double) { return y1; }) ==
          doctest::Approx(p.factors.m1).epsilon(1e-12));
    CHECK(pi_average(p, [](double, double y2) { return y2; }) ==
          doctest::Approx(p.factors.m2).epsilon(1e-12));
}

TEST_CASE("Gauss-Hermite tensor rule is exact for low-degree polynomials") {
    // k nodes per axis integrate polynomials of degree <= 2k-1 exactly;
    // closed-form central moments of the correlated Gaussian as reference.
    const ModelParams p = paper_params();
    const auto law = stationary_covariance(p.factors);
    const double a11 = law.cov[0][0], a12 = law.cov[0][1], a22 = law.cov[1][1];
    const double m1 = law.mean[0], m2 = law.mean[1];
    const int k = 4;

    auto avg = [&](auto f) { return pi_average(p, f, k); };
    CHECK(avg([&](double y1, double) { return (y1 - m1) * (y1 - m1); }) ==
          doctest::Approx(a11).epsilon(1e-12));
    CHECK(avg([&](double y1, double y2) { return (y1 - m1) * (y2 - m2); }) ==
          doctest::Approx(a12).epsilon(1e-12));
    CHECK(avg([&](double y1, double) { return std::pow(y1 - m1, 4.0); }) ==
          doctest::Approx(3.0 * a11 * a11).epsilon(1e-12));
    CHECK(avg([&](double y1, double y2) {
              return (y1 - m1) * (y1 - m1) * (y2 - m2) * (y2 - m2);
          }) == doctest::Approx(a11 * a22 + 2.0 * a12 * a12).epsilon(1e-12));
    CHECK(avg([&](double y1, double y2) { return std::pow(y1 - m1, 3.0) * (y2 - m2); }) ==
          doctest::Approx(3.0 * a11 * a12).epsilon(1e-12));
    // E[u^3 v^3] = 9 a11 a12 a22 + 6 a12^3 (Isserlis pairing count)
    CHECK(avg([&](double y1, double y2) {
              return std::pow(y1 - m1, 3.0) * std::pow(y2 - m2, 3.0);
          }) == doctest::Approx(9.0 * a11 * a12 * a22 + 6.0 * a12 * a12 * a12).epsilon(1e-12));
}

TEST_CASE("pi_average matches the Monte Carlo oracle on the clamped integrand") {
    const ModelParams p = paper_params();
    const double inv_phi = 1.0 / p.phi;
    auto f = [&](double y1, double) { return std::pow(p.kappa_map(y1), -inv_phi); };
    const auto mc = mc_pi_oracle(p.factors, f, 1000000, 77);
    const double quad = pi_average(p, f);
    CHECK(std::abs(quad - mc.mean) <= 3.0 * mc.std_error);
}

TEST_CASE("pi_average flags non-finite integrands") {
    const ModelParams p = paper_params();
    CHECK_THROWS_AS(pi_average(p, [](double, double) { return std::nan(""); }), NumericError);
}

TEST_CASE("centered averages are invariant under rho flip with axis reflection") {
    ModelParams p = paper_params();
    auto f = [](double u, double v) { return std::sin(u * 3.0) * v + u * u * v * v; };
    const auto law = stationary_covariance(p.factors);
    const double m1 = law.mean[0], m2 = law.mean[1];
    const double with_rho =
        pi_average(p, [&](double y1, double y2) { return f(y1 - m1, y2 - m2); });
    p.factors.rho = -p.factors.rho;
    const double flipped =
        pi_average(p, [&](double y1, double y2) { return f(y1 - m1, -(y2 - m2)); });
    CHECK(with_rho == doctest::Approx(flipped).epsilon(1e-13));
}

TEST_CASE("averaged coefficients: degenerate and zero cases") {
    ModelParams p = paper_params();
    SUBCASE("degenerate clamps give the constant power") {
        p.kappa_lo = p.kappa_hi = 0.42;
        const auto c = averaged_base_coefficients(p);
        CHECK(c.avg_kappa_neg == doctest::Approx(std::pow(0.42, -1.0 / p.phi)).epsilon(1e-12));
    }
    SUBCASE("zero corrector grids give zero corrector averages") {
        const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
        const OuFactor1d f2{p.factors.lambda2, p.factors.m2, p.factors.eta2};
        PoissonSolution phi0, phi1;
        phi0.grid = FactorGrid::make_for_factor(f1, corrector_span_sd(p, CorrectorSource::phi0), 401);
        phi0.values.assign(phi0.grid.size(), 0.0);
        phi1.grid = FactorGrid::make_for_factor(f2, corrector_span_sd(p, CorrectorSource::phi1), 401);
        phi1.values.assign(phi1.grid.size(), 0.0);
        const auto c = averaged_coefficients(p, phi0, phi1);
        CHECK(c.avg_phi0_over_kappa == 0.0);
        CHECK(c.avg_phi1_over_kappa == 0.0);
        CHECK(c.quad_nodes == kDefaultQuadratureNodes);
    }
    SUBCASE("grid too small for the quadrature nodes") {
        const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
        PoissonSolution phi0, phi1;
        phi0.grid = FactorGrid::make_for_factor(f1, 5.0, 201);  // 64-node rule reaches further
        phi0.values.assign(phi0.grid.size(), 0.0);
        phi1 = phi0;
        CHECK_THROWS_AS(averaged_coefficients(p, phi0, phi1), NumericError);
    }
}

namespace {

// Adaptive Simpson quadrature, the deterministic oracle for 1D averages.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double simpson_gauss_average(const std::function<double(double)>& f, double mean, double sd,
                             double span_sd, double tol) {
    auto integrand = [&](double x) {
        return f(mean + sd * x) * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    };
    const double a = -span_sd, b = span_sd, m = 0.0;
    const double fa = integrand(a), fm = integrand(m), fb = integrand(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(integrand, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

TEST_CASE("corrector average at paper clamps matches a deterministic quadrature oracle") {
    // The liquidity tail (kappa near its lower clamp, ~5 sd out) carries a
    // material share of <phi0/kappa^{1/phi}>; a plain Monte Carlo average
    // undersamples it, so the oracle here is adaptive Simpson.
    const ModelParams p = paper_params();
    const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
    const OuFactor1d f2{p.factors.lambda2, p.factors.m2, p.factors.eta2};
    const auto phi0 = solve_corrector(
        CorrectorSource::phi0, p,
        FactorGrid::make_for_factor(f1, corrector_span_sd(p, CorrectorSource::phi0), 1601));
    const auto phi1 = solve_corrector(
        CorrectorSource::phi1, p,
        FactorGrid::make_for_factor(f2, corrector_span_sd(p, CorrectorSource::phi1), 1601));
    const auto c = averaged_coefficients(p, phi0, phi1);
    CHECK(std::isfinite(c.avg_phi0_over_kappa));
    CHECK(std::isfinite(c.avg_phi1_over_kappa));

    const double inv_phi = 1.0 / p.phi;
    const double span = corrector_span_sd(p, CorrectorSource::phi0) - 0.5;
    const double oracle = simpson_gauss_average(
        [&](double y1) { return phi0.eval1(y1) * std::pow(p.kappa_map(y1), -inv_phi); },
        f1.m, f1.stationary_sd(), span, 1e-12);
    CHECK(c.avg_phi0_over_kappa == doctest::Approx(oracle).epsilon(2e-2));
}

TEST_CASE("averaged corrector terms agree with the Monte Carlo oracle at tame clamps") {
    // With the lower clamp inside the bulk (~3.5 sd), the Monte Carlo
    // oracle sees the whole integrand and the quadrature must match it.
    ModelParams p = paper_params();
    p.kappa_lo = 0.15;
    const OuFactor1d f1{p.factors.lambda1, p.factors.m1, p.factors.eta1};
    const OuFactor1d f2{p.factors.lambda2, p.factors.m2, p.factors.eta2};
    const auto phi0 = solve_corrector(
        CorrectorSource::phi0, p,
        FactorGrid::make_for_factor(f1, corrector_span_sd(p, CorrectorSource::phi0), 1601));
    const auto phi1 = solve_corrector(
        CorrectorSource::phi1, p,
        FactorGrid::make_for_factor(f2, corrector_span_sd(p, CorrectorSource::phi1), 1601));
    const auto c = averaged_coefficients(p, phi0, phi1);

    const double inv_phi = 1.0 / p.phi;
    const auto mc0 = mc_pi_oracle(
        p.factors,
        [&](double y1, double) { return phi0.eval1(y1) * std::pow(p.kappa_map(y1), -inv_phi); },
        1000000, 1234);
    const auto mc1 = mc_pi_oracle(
        p.factors,
        [&](double y1, double y2) { return phi1.eval1(y2) * std::pow(p.kappa_map(y1), -inv_phi); },
        1000000, 1235);
    CHECK(std::abs(c.avg_phi0_over_kappa - mc0.mean) <= 3.0 * mc0.std_error);
    CHECK(std::abs(c.avg_phi1_over_kappa - mc1.mean) <= 3.0 * mc1.std_error);
}

TEST_CASE("model params config round-trip uses the exact key names") {
    const ModelParams p = paper_params();
    const std::string path = "test_params_roundtrip.json";
    save_model_params(p, path);
    const ModelParams q = load_model_params(path);
    CHECK(q.phi == p.phi);
    CHECK(q.factors.rho == p.factors.rho);
    CHECK(q.factors.eta2 == p.factors.eta2);
    CHECK(q.A == p.A);
    std::remove(path.c_str());
}
