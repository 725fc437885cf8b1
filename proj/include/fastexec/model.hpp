#pragma once

#include <functional>

#include "fastexec/params.hpp"
#include "fastexec/poisson.hpp"
#include "fastexec/quadrature.hpp"

namespace fastexec {

/// Which factors are live. The reduced modes freeze the other map at its
/// long-run level; they back the 1D accuracy sweeps.
enum class ModelMode { two_factor, kappa_only, sigma_only };

/// E_Pi[f(y1, y2)] by Gauss-Hermite tensor quadrature against the stationary
/// law (reduced modes integrate the single live factor with the other
/// coordinate held at its mean).
double pi_average(const ModelParams& params, const std::function<double(double, double)>& f,
                  int nodes = kDefaultQuadratureNodes, ModelMode mode = ModelMode::two_factor);

/// The four stationary averages entering the z0 ODE and the boundary layer.
struct AveragedCoefficients {
    double avg_kappa_neg = 0.0;        ///< <kappa^{-1/phi}>
    double avg_sigma_pow = 0.0;        ///< <sigma^{1+phi}>
    double avg_phi0_over_kappa = 0.0;  ///< <phi0 / kappa^{1/phi}>
    double avg_phi1_over_kappa = 0.0;  ///< <phi1 / kappa^{1/phi}>
    int quad_nodes = 0;
};

/// Averages without corrector terms (enough for z0 and the benchmarks).
AveragedCoefficients averaged_base_coefficients(const ModelParams& params,
                                                int nodes = kDefaultQuadratureNodes,
                                                ModelMode mode = ModelMode::two_factor);

/// Full set. phi0 lives on a y1 grid and phi1 on a y2 grid; both are
/// interpolated at the quadrature nodes. Fails if any node falls outside its
/// grid (grid too small for the requested node count).
AveragedCoefficients averaged_coefficients(const ModelParams& params, const PoissonSolution& phi0,
                                           const PoissonSolution& phi1,
                                           int nodes = kDefaultQuadratureNodes,
                                           ModelMode mode = ModelMode::two_factor);

}  // namespace fastexec
