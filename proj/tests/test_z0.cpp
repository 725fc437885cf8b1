#include <doctest.h>

#include <cmath>

#include "fastexec/errors.hpp"
#include "fastexec/rng.hpp"
#include "fastexec/z0.hpp"
#include "support.hpp"

using namespace fastexec;
using fastexec::testing::paper_params;

namespace {

AveragedCoefficients make_coeffs(double kappa_neg, double sigma_pow) {
    AveragedCoefficients c;
    c.avg_kappa_neg = kappa_neg;
    c.avg_sigma_pow = sigma_pow;
    return c;
}

// F^{-1} representation oracle. In terms of u = -z0 the time-to-level map is
// tau(u) = int_A^u dv / (gamma S - phi K v^{1+1/phi}), positive and monotone
// in the distance from A toward the stationary level; evaluated by Simpson
// on a fine partition and inverted by bisection on tau = T - t.
double z0_via_f_inverse(const ModelParams& p, const AveragedCoefficients& c, double t) {
    const double K = c.avg_kappa_neg, S = p.gamma * c.avg_sigma_pow;
    auto rate = [&](double v) { return S - p.phi * K * std::pow(v, 1.0 + 1.0 / p.phi); };
    auto tau_of = [&](double u) {
        const int n = 20000;
        const double h = (u - p.A) / n;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = p.A + i * h;
            acc += h / 6.0 * (1.0 / rate(a) + 4.0 / rate(a + 0.5 * h) + 1.0 / rate(a + h));
        }
        return acc;
    };
    const double tau = p.T - t;
    const double level =
        p.gamma == 0.0 ? 0.0 : std::pow(S / (p.phi * K), p.phi / (p.phi + 1.0));
    const double dir = level > p.A ? 1.0 : -1.0;
    double s_lo = 0.0, s_hi = std::abs(level - p.A) * (1.0 - 1e-14);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (s_lo + s_hi);
        if (tau_of(p.A + dir * mid) < tau)
            s_lo = mid;
        else
            s_hi = mid;
    }
    return -(p.A + dir * 0.5 * (s_lo + s_hi));
}

}  // namespace

TEST_CASE("terminal condition is exact") {
    const ModelParams p = paper_params();
    const auto c = make_coeffs(41.0, 500.0);
    const auto curve = solve_z0(p, c, 256);
    CHECK(curve.values.back() == -p.A);
    CHECK(curve.eval(p.T) == -p.A);
}

TEST_CASE("risk-neutral closed form matches the solver to 1e-8") {
    ModelParams p = paper_params();
    p.gamma = 0.0;
    p.A = 1.0;
    const auto c = make_coeffs(31.0, 0.0);
    const auto curve = solve_z0(p, c, 4096);
    double sup = 0.0;
    for (size_t i = 0; i < curve.times.size(); ++i)
        sup = std::max(sup,
                       std::abs(curve.values[i] - z0_closed_form_gamma0(p, c, curve.times[i])));
    CHECK(sup <= 1e-8);
}

TEST_CASE("phi=1 closed form matches the solver to 1e-8") {
    ModelParams p = paper_params();
    p.phi = 1.0;
    p.gamma = 1.0;
    p.A = 3.0;
    p.T = 1.0;
    const auto c = make_coeffs(1.0, 1.0);
    const auto curve = solve_z0(p, c, 4096);
    double sup = 0.0;
    for (size_t i = 0; i < curve.times.size(); ++i)
        sup = std::max(sup,
                       std::abs(curve.values[i] - z0_closed_form_phi1(p, c, curve.times[i])));
    CHECK(sup <= 1e-8);

    SUBCASE("terminal value and long-horizon limit") {
        CHECK(z0_closed_form_phi1(p, c, p.T) == doctest::Approx(-3.0).epsilon(1e-12));
        ModelParams q = p;
        q.T = 200.0;
        CHECK(z0_closed_form_phi1(q, c, 0.0) == doctest::Approx(-1.0).epsilon(1e-9));
    }
    SUBCASE("direct evaluation at unit coefficients") {
        // Riccati solution with gamma<sigma^2> = <1/kappa> = 1, A = 3, T - t = 1:
        // -z0 = (e^2 + 1/2) / (e^2 - 1/2)
        const double e2 = std::exp(2.0);
        CHECK(z0_closed_form_phi1(p, c, 0.0) ==
              doctest::Approx(-(e2 + 0.5) / (e2 - 0.5)).epsilon(1e-12));
        CHECK(z0_closed_form_phi1(p, c, 0.0) == doctest::Approx(-1.145156).epsilon(1e-6));
    }
    SUBCASE("pole at A equal to the stationary level degrades to the constant") {
        ModelParams q = p;
        q.A = 1.0;  // equals sqrt(gamma <sigma^2> / <1/kappa>)
        CHECK(z0_closed_form_phi1(q, c, 0.123) == doctest::Approx(-1.0));
    }
    SUBCASE("rejects phi != 1 and gamma = 0") {
        ModelParams q = p;
        q.phi = 0.5;
        CHECK_THROWS_AS(z0_closed_form_phi1(q, c, 0.0), DataError);
        q = p;
        q.gamma = 0.0;
        CHECK_THROWS_AS(z0_closed_form_phi1(q, c, 0.0), DataError);
    }
}

TEST_CASE("F-inverse representation agrees at random interior times") {
    ModelParams p = paper_params();
    p.gamma = 2e-3;
    p.A = 1.5;
    const auto c = make_coeffs(35.0, 420.0);
    const auto curve = solve_z0(p, c, 8192);
    PathRng rng(7, 0);
    for (int i = 0; i < 10; ++i) {
        const double t = 0.95 * p.T * rng.uniform();
        CHECK(curve.eval(t) == doctest::Approx(z0_via_f_inverse(p, c, t)).epsilon(1e-6));
    }
}

TEST_CASE("curve stays inside the bracket on random parameter draws") {
    PathRng rng(42, 0);
    for (int i = 0; i < 200; ++i) {
        ModelParams p = paper_params();
        p.phi = 0.1 + 0.9 * rng.uniform();
        p.gamma = rng.uniform() < 0.3 ? 0.0 : std::pow(10.0, -6.0 + 5.0 * rng.uniform());
        p.A = 0.2 + 4.0 * rng.uniform();
        p.T = 0.1 + 0.5 * rng.uniform();
        const auto c = make_coeffs(1.0 + 60.0 * rng.uniform(), 1.0 + 700.0 * rng.uniform());
        // step count sized to the stiffness of the draw
        const double level = p.gamma == 0.0
                                 ? 0.0
                                 : std::pow(p.gamma * c.avg_sigma_pow /
                                                (p.phi * c.avg_kappa_neg),
                                            p.phi / (p.phi + 1.0));
        const double lip = (1.0 + p.phi) * c.avg_kappa_neg *
                           std::pow(std::max(p.A, level), 1.0 / p.phi);
        const int n_steps = std::max(512, static_cast<int>(3.0 * p.T * lip));
        const auto curve = solve_z0(p, c, n_steps);
        const double lo = std::min(p.A, curve.stationary_level);
        const double hi = std::max(p.A, curve.stationary_level);
        bool monotone_ok = true;
        const double dir = -curve.values[0] <= -curve.values.back() ? 1.0 : -1.0;
        for (size_t k = 0; k < curve.times.size(); ++k) {
            const double u = -curve.values[k];
            CHECK(u > 0.0);
            CHECK(u >= lo - 1e-9 * hi);
            CHECK(u <= hi + 1e-9 * hi);
            if (k > 0 && dir * (-curve.values[k] + curve.values[k - 1]) < -1e-12 * hi)
                monotone_ok = false;
        }
        CHECK(monotone_ok);
    }
}

TEST_CASE("grid refinement converges at fourth order") {
    ModelParams p = paper_params();
    p.gamma = 1e-3;
    const auto c = make_coeffs(41.0, 520.0);
    const auto fine = solve_z0(p, c, 2048);
    double errs[2];
    int idx = 0;
    for (int n : {256, 512}) {
        const auto coarse = solve_z0(p, c, n);
        double sup = 0.0;
        for (size_t i = 0; i < coarse.times.size(); ++i)
            sup = std::max(sup, std::abs(coarse.values[i] - fine.eval(coarse.times[i])));
        errs[idx++] = sup;
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 3.5);
}

TEST_CASE("leading-order feedback rate") {
    const ModelParams p = paper_params();
    const auto c = make_coeffs(41.0, 500.0);
    const auto curve = solve_z0(p, c, 1024);
    SUBCASE("proportional control vanishes at zero inventory") {
        CHECK(nu0(0.1, 0.0, 0.3782, curve, p) == 0.0);
    }
    SUBCASE("selling when inventory is positive") {
        CHECK(nu0(0.1, 5.0, 0.3782, curve, p) < 0.0);
        CHECK(nu0(0.1, -5.0, 0.3782, curve, p) > 0.0);
    }
    SUBCASE("risk-neutral gain composed with the closed form") {
        ModelParams q = p;
        q.gamma = 0.0;
        q.kappa_lo = q.kappa_hi = 0.38;  // constant liquidity
        const double K = std::pow(0.38, -1.0 / q.phi);
        const auto cc = make_coeffs(K, 0.0);
        const auto rn = solve_z0(q, cc, 4096);
        for (double t : {0.0, 0.07, 0.21}) {
            const double z = z0_closed_form_gamma0(q, cc, t);
            const double expect = -std::pow(-z / 0.38, 1.0 / q.phi) * 3.0;
            CHECK(nu0(t, 3.0, 0.9, rn, q) == doctest::Approx(expect).epsilon(1e-6));
        }
    }
}

TEST_CASE("degenerate clamps reproduce the constant-parameter benchmark rate") {
    ModelParams p = paper_params();
    p.kappa_lo = p.kappa_hi = p.factors.m1;
    p.sigma_lo = p.sigma_hi = p.factors.m2;
    p.gamma = 1e-3;
    const auto c = averaged_base_coefficients(p);
    CHECK(c.avg_kappa_neg == doctest::Approx(std::pow(p.factors.m1, -1.0 / p.phi)));
    const auto curve = solve_z0(p, c, 4096);
    // the benchmark uses the same averaged ODE with the constant parameters
    const auto bench = solve_z0(p, make_coeffs(std::pow(p.factors.m1, -1.0 / p.phi),
                                               std::pow(std::exp(p.factors.m2), 1.0 + p.phi)),
                                4096);
    PathRng rng(3, 0);
    for (int i = 0; i < 50; ++i) {
        const double t = p.T * rng.uniform();
        const double q = 20.0 * rng.uniform() - 10.0;
        const double y = 3.0 * rng.uniform() - 1.0;
        const double ours = nu0(t, q, y, curve, p);
        const double ac = -std::pow(-bench.eval(t) / p.factors.m1, 1.0 / p.phi) * q;
        CHECK(ours == doctest::Approx(ac).epsilon(1e-12));
    }
}

TEST_CASE("bracket violation is reported for inconsistent coefficients") {
    ModelParams p = paper_params();
    p.gamma = 0.0;
    CHECK_THROWS_AS(solve_z0(p, make_coeffs(std::nan(""), 0.0), 64), NumericError);
}
