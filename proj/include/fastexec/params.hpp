#pragma once

#include <array>
#include <string>

namespace fastexec {

/// Two-factor Ornstein-Uhlenbeck driver of liquidity (factor 1) and
/// log-volatility (factor 2). Rates are per day; the dynamics used in
/// simulation and PDEs scale them by 1/epsilon (see ModelParams).
struct OuFactorParams {
    double lambda1 = 1.0;  ///< mean-reversion speed, factor 1 [1/day]
    double lambda2 = 1.0;  ///< mean-reversion speed, factor 2 [1/day]
    double m1 = 0.0;       ///< long-run mean, factor 1
    double m2 = 0.0;       ///< long-run mean, factor 2
    double eta1 = 1.0;     ///< diffusion coefficient, factor 1
    double eta2 = 1.0;     ///< diffusion coefficient, factor 2
    double rho = 0.0;      ///< driver correlation, |rho| < 1

    void validate() const;
};

/// Full execution-model parameter record. Immutable after construction by
/// convention; all solvers take it by const reference.
struct ModelParams {
    double phi = 0.5;      ///< impact exponent, in (0, 1]
    double gamma = 0.0;    ///< risk aversion (running inventory penalty)
    double A = 1.0;        ///< terminal inventory penalty coefficient
    double T = 0.25;       ///< horizon [days]
    double epsilon = 1.0;  ///< mean-reversion scale, > 0
    double kappa_lo = 0.01;
    double kappa_hi = 1.1;
    double sigma_lo = 2.0;
    double sigma_hi = 7.0;
    OuFactorParams factors;

    void validate() const;

    /// Liquidity map: y1 clamped to [kappa_lo, kappa_hi].
    double kappa_map(double y1) const;
    /// Volatility map: exp of y2 clamped to [sigma_lo, sigma_hi].
    double sigma_map(double y2) const;
};

/// Stationary law of the (unit-epsilon) factor process: a bivariate Gaussian
/// with mean (m1, m2) and covariance solving Lambda*A + A*Lambda = eta*eta^T.
struct InvariantGaussian {
    std::array<double, 2> mean{0.0, 0.0};
    std::array<std::array<double, 2>, 2> cov{{{1.0, 0.0}, {0.0, 1.0}}};

    double sd1() const;
    double sd2() const;
};

/// Mean and stationary covariance of the unit-epsilon factor process.
/// Verifies the Lyapunov identity Lambda*A + A*Lambda = eta*eta^T to 1e-12
/// relative before returning.
InvariantGaussian stationary_covariance(const OuFactorParams& factors);

ModelParams load_model_params(const std::string& path);
void save_model_params(const ModelParams& p, const std::string& path);

}  // namespace fastexec
