#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "fastexec/params.hpp"
#include "fastexec/rng.hpp"

namespace fastexec::testing {

/// Calibrated reference parameters used throughout the experiment suites:
/// clamp bounds, two-factor OU estimates, impact exponent, correlation, and
/// the fast-reversion scale, with a quarter-day horizon.
inline ModelParams paper_params() {
    ModelParams p;
    p.phi = 0.2833;
    p.gamma = 0.0;
    p.A = 2.5;
    p.T = 0.25;
    p.epsilon = 0.0008;
    p.kappa_lo = 0.01;
    p.kappa_hi = 1.1;
    p.sigma_lo = 2.0;
    p.sigma_hi = 7.0;
    p.factors.lambda1 = 1905.2180;
    p.factors.lambda2 = 1279.7954;
    p.factors.m1 = 0.3782;
    p.factors.m2 = 4.7810;
    p.factors.eta1 = 4.0134;
    p.factors.eta2 = 19.0326;
    p.factors.rho = 0.2096;
    return p;
}

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo oracle for Pi-averages: exact stationary draws from the
/// correlated bivariate Gaussian, independent of the quadrature path.
template <typename F>
McEstimate mc_pi_oracle(const OuFactorParams& factors, F&& f, int n_samples, uint64_t seed) {
    const InvariantGaussian law = stationary_covariance(factors);
    const double l11 = std::sqrt(law.cov[0][0]);
    const double l21 = law.cov[0][1] / l11;
    const double l22 = std::sqrt(law.cov[1][1] - l21 * l21);
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        PathRng rng(seed, static_cast<uint64_t>(i));
        const double x1 = rng.normal(), x2 = rng.normal();
        const double y1 = law.mean[0] + l11 * x1;
        const double y2 = law.mean[1] + l21 * x1 + l22 * x2;
        const double v = f(y1, y2);
        acc += v;
        acc2 += v * v;
    }
    McEstimate est;
    est.mean = acc / n_samples;
    const double var = std::max(acc2 / n_samples - est.mean * est.mean, 0.0);
    est.std_error = std::sqrt(var / n_samples);
    return est;
}

/// Exact-transition OU path sampler (unit epsilon), for calibration
/// round-trips.
inline std::vector<double> simulate_ou_exact(double lambda, double m, double eta, double dt,
                                             int n, uint64_t seed, double x0) {
    std::vector<double> xs(n);
    const double e = std::exp(-lambda * dt);
    const double sd = eta * std::sqrt((1.0 - e * e) / (2.0 * lambda));
    PathRng rng(seed, 0);
    double x = x0;
    for (int i = 0; i < n; ++i) {
        x = m + e * (x - m) + sd * rng.normal();
        xs[i] = x;
    }
    return xs;
}

}  // namespace fastexec::testing
