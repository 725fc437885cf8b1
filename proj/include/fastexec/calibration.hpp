#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fastexec/lob.hpp"

namespace fastexec {

/// Bagged power-law fit of the impact curve I = kappa nu^phi.
struct PowerLawFit {
    double phi_hat = 0.0;
    double phi_std = 0.0;  ///< standard deviation across trials
    std::vector<std::pair<double, double>> per_trial;  ///< (kappa_i, phi_i)
    int M = 0;
    int N = 0;
    uint64_t seed = 0;
    int skipped_trials = 0;
};

/// M bootstrap resamples of N snapshots each; per trial a nonlinear least
/// squares fit initialized from the log-log regression. Resamples draw from
/// the timestamp-sorted view of the dataset, so the estimate is invariant
/// under permutations of the input order.
PowerLawFit fit_power_law(const std::vector<LobSnapshot>& dataset, int M, int N, uint64_t seed);

/// Rolling through-origin regression of I on nu^phi over a lookback window
/// of w seconds: kappa_t = sum(I nu^phi) / sum(nu^{2 phi}). Empty windows
/// carry the previous estimate forward.
std::vector<std::pair<int64_t, double>> rolling_kappa(const std::vector<ImpactCurve>& curves,
                                                      double phi_hat, double w_seconds);

/// Two-scale realized variance over deduplicated prices. K = 1 collapses to
/// the plain realized variance. A negative bias-corrected value is floored
/// at zero (and flagged when the caller asks).
double tsrv(const std::vector<std::pair<int64_t, double>>& prices, int K,
            bool* floored = nullptr);

struct VolPathEntry {
    int64_t ts_ms = 0;
    double sigma = 0.0;   ///< [cash/volume/sqrt(day)]
    double tsrv_var = 0.0;
    double z = 0.0;       ///< normalized increment (p_t - p_{t-Delta}) / Sigma_t
};

struct VolPathOptions {
    int64_t delta_ms = 60000;       ///< lookback window
    int K = 5;                      ///< maximum subsampling bandwidth
    int64_t sample_every_ms = 15000;
    bool unit_omega = false;        ///< skip the in-sample variance correction
    /// analysis window for the omega^2 correction; empty = whole series
    std::optional<std::pair<int64_t, int64_t>> omega_window;
};

struct VolPath {
    std::vector<VolPathEntry> entries;
    double omega2 = 1.0;
    int skipped_windows = 0;
};

VolPath vol_path(const std::vector<std::pair<int64_t, double>>& prices,
                 const VolPathOptions& opts = {});

/// ARMA(1,1)-based OU parameter estimate from a uniformly sampled series.
struct OuFitResult {
    double lambda_hat = 0.0;
    double m_hat = 0.0;
    double eta_hat = 0.0;
    double a = 0.0, b = 0.0, c = 0.0;
    double gamma_resid = 0.0;
    double dt = 0.0;  ///< sampling step [days]
    int iterations = 0;
};

/// Conditional-sum-of-squares fit of x_i = a + b x_{i-1} + c eps_{i-1} + eps_i
/// (eps_0 = 0), then the parameter mapping lambda = -log(b)/dt, m = a/(1-b),
/// eta = gamma sqrt(-2 (b + b c^2 + b^2 c + c) log(b) / (dt (1-b^2) b)).
OuFitResult fit_ou(const std::vector<double>& series, double dt);

std::string power_law_fit_json(const PowerLawFit& fit);
std::string ou_fit_json(const OuFitResult& fit);

}  // namespace fastexec
