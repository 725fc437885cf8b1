#pragma once

#include <vector>

#include "fastexec/model.hpp"
#include "fastexec/params.hpp"

namespace fastexec {

/// Leading-order curve z0(t) on a uniform time grid over [0, T].
/// z0 is negative everywhere, z0(T) = -A exactly, and -z0 stays inside the
/// closed interval spanned by A and the stationary level.
struct Z0Curve {
    std::vector<double> times;
    std::vector<double> values;
    double stationary_level = 0.0;  ///< (gamma <sigma^{1+phi}> / (phi <kappa^{-1/phi}>))^{phi/(phi+1)}
    AveragedCoefficients coeffs;

    double eval(double t) const;  ///< linear interpolation, t clamped to [0, T]
};

/// Backward RK4 integration of d/dt z0 = gamma <sigma^{1+phi}>
/// - phi <kappa^{-1/phi}> |z0|^{1+1/phi} from z0(T) = -A.
Z0Curve solve_z0(const ModelParams& params, const AveragedCoefficients& coeffs, int n_steps = 4096);

/// Closed form for phi = 1 (Riccati case), gamma > 0. Requires phi == 1.
double z0_closed_form_phi1(const ModelParams& params, const AveragedCoefficients& coeffs,
                           double t);

/// Closed form for gamma = 0 (separable case), any phi.
double z0_closed_form_gamma0(const ModelParams& params, const AveragedCoefficients& coeffs,
                             double t);

/// Leading-order feedback trading rate -(-z0(t)/kappa(y1))^{1/phi} * q.
double nu0(double t, double q, double y1, const Z0Curve& curve, const ModelParams& params);

}  // namespace fastexec
