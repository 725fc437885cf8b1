#pragma once

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "fastexec/grid.hpp"
#include "fastexec/params.hpp"
#include "fastexec/quadrature.hpp"

namespace fastexec {

/// Discrete generator of the unit-epsilon factor diffusion on a grid.
/// Interior rows carry the operator stencil (central second differences;
/// drift by central differences where the mesh Peclet number allows it and
/// first-order upwind where the drift dominates, so the matrix keeps its
/// M-matrix sign structure on coarse grids). Boundary rows impose a zero
/// second derivative in the outward normal direction.
Eigen::SparseMatrix<double> build_generator(const OuFactor1d& factor, const FactorGrid& grid);
Eigen::SparseMatrix<double> build_generator(const OuFactorParams& factors, const FactorGrid& grid);

/// Normalized discrete Pi-quadrature weights on the grid nodes (trapezoid
/// against the stationary density). Used for the mean constraint, centering,
/// and L2(Pi) norms.
std::vector<double> pi_weights(const OuFactor1d& factor, const FactorGrid& grid);
std::vector<double> pi_weights(const OuFactorParams& factors, const FactorGrid& grid);

double weighted_mean(const std::vector<double>& w, const std::vector<double>& v);
double weighted_l2(const std::vector<double>& w, const std::vector<double>& v);

/// Centered solution of L phi = f with diagnostics.
struct PoissonSolution {
    FactorGrid grid;
    std::vector<double> values;
    double residual_sup = 0.0;  ///< sup |L phi - f| over interior nodes
    double pi_mean = 0.0;       ///< discrete Pi-mean after centering
    int iterations = 0;         ///< 0 for the direct solver

    double eval1(double y, bool* clamped = nullptr) const {
        return grid.interp1(values, y, clamped);
    }
    double eval2(double y1, double y2, bool* clamped = nullptr) const {
        return grid.interp2(values, y1, y2, clamped);
    }
};

/// Direct solve of the singular system via a bordered (Lagrange-multiplier)
/// formulation: a scalar absorbs the discrete incompatibility uniformly and
/// the appended row pins the quadrature mean to zero. The source must be
/// centered under the discrete weights (|<f>| <= 1e-8).
PoissonSolution solve_poisson_direct(const std::vector<double>& f, const OuFactor1d& factor,
                                     const FactorGrid& grid);
PoissonSolution solve_poisson_direct(const std::vector<double>& f, const OuFactorParams& factors,
                                     const FactorGrid& grid);

struct IterativeOptions {
    double eta = 0.0;  ///< shift; 0 selects 0.1 * min(lambda)
    double tol = 1e-10;
    int max_iter = 500;
};

/// Shifted iteration: solve (L + eta I) phi_{k+1} = f + eta phi_k from
/// phi_0 = 0, re-centering every iterate, until the L2(Pi) increment drops
/// below tol. Also records the increment-norm history for convergence
/// diagnostics.
struct IterativeReport {
    PoissonSolution solution;
    std::vector<double> increment_norms;
    bool eta_warning = false;  ///< eta >= half the smallest mean-reversion speed
};

IterativeReport solve_poisson_iterative(const std::vector<double>& f, const OuFactor1d& factor,
                                        const FactorGrid& grid, const IterativeOptions& opts = {});
IterativeReport solve_poisson_iterative(const std::vector<double>& f, const OuFactorParams& factors,
                                        const FactorGrid& grid, const IterativeOptions& opts = {});

/// Which corrector a reduced 1D problem feeds.
enum class CorrectorSource { phi0, phi1 };

/// Marginal 1D problem underlying each corrector of the reference two-factor
/// model: the liquidity source depends on y1 only and the volatility source
/// on y2 only, so each Poisson equation closes on a single OU factor.
struct Reduced1d {
    OuFactor1d factor;
    std::function<double(double)> source;  ///< centered with the marginal Gaussian
    double centered_mean = 0.0;            ///< the subtracted marginal average
};

Reduced1d reduce_to_1d(CorrectorSource which, const ModelParams& params,
                       int quad_nodes = kDefaultQuadratureNodes);

/// Half-width, in stationary-sd units of the corrector's own factor, that a
/// corrector grid needs so interpolation covers every node of the 2D tensor
/// quadrature (the decorrelating rotation widens the per-coordinate reach
/// beyond the 1D rule).
double corrector_span_sd(const ModelParams& params, CorrectorSource which,
                         int quad_nodes = kDefaultQuadratureNodes);

/// Samples a reduced source on the grid, tightens the centering under the
/// grid weights (the discrete compatibility condition), and solves directly.
PoissonSolution solve_corrector(CorrectorSource which, const ModelParams& params,
                                const FactorGrid& grid,
                                int quad_nodes = kDefaultQuadratureNodes);

}  // namespace fastexec
