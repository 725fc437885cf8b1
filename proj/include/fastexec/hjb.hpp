#pragma once

#include <functional>
#include <vector>

#include "fastexec/first_order.hpp"
#include "fastexec/grid.hpp"
#include "fastexec/model.hpp"
#include "fastexec/params.hpp"

namespace fastexec {

/// Which factor problem the PDE is posed on. The 1D modes freeze the other
/// map at its long-run level and make epsilon sweeps cheap.
enum class HjbMode { kappa_1d, sigma_1d, full_2d };

/// IMEX finite-difference solution of
///   dz/dt + (1/eps) L z + phi kappa^{-1/phi} |z|^{1+1/phi} - gamma sigma^{1+phi} = 0,
///   z(T) = -A.
/// The stiff generator is treated implicitly, the nonlinearity explicitly.
struct HjbGridSolution {
    FactorGrid grid;
    HjbMode mode = HjbMode::kappa_1d;
    double epsilon = 1.0;
    int n_time_steps = 0;
    int store_stride = 1;
    std::vector<double> times;                 ///< stored time levels (ascending)
    std::vector<std::vector<double>> values;   ///< grid function per stored level

    double eval(double t, double y1, double y2 = 0.0) const;
};

struct HjbOptions {
    int store_stride = 1;
    int quad_nodes = kDefaultQuadratureNodes;  ///< for mode coefficients in checks
};

HjbGridSolution solve_hjb(const ModelParams& params, const FactorGrid& grid, int n_time_steps,
                          HjbMode mode, const HjbOptions& opts = {});

/// Envelope form of the two-sided comparison bound: constant-coefficient
/// solutions at the clamp extremes bracket -z. Violation is a hard error
/// inside solve_hjb; this helper exposes the envelopes for tests.
struct EnvelopePair {
    std::vector<double> lower;  ///< per time level, on z's time grid
    std::vector<double> upper;
};
EnvelopePair hjb_envelopes(const ModelParams& params, int n_time_steps);

struct SweepRow {
    double eps = 0.0;
    double error = 0.0;  ///< sup over bulk window and t <= T - delta
};

struct SweepReport {
    int order = 0;
    double delta = 0.0;
    HjbMode mode = HjbMode::kappa_1d;
    std::vector<SweepRow> rows;
    double fitted_slope = 0.0;
    bool monotone = true;
};

struct SweepOptions {
    int n_time_steps = 32768;
    int grid_nodes = 201;
    double grid_halfwidth_sd = 5.0;
    double bulk_halfwidth_sd = 2.0;
    int quad_nodes = kDefaultQuadratureNodes;
};

/// Solves the PDE for each epsilon, assembles the order-0/1 approximation
/// from the same averaged coefficients, and fits the log-log convergence
/// slope of the sup-bulk error.
SweepReport accuracy_sweep(const ModelParams& params, const std::vector<double>& eps_list,
                           int order, double delta, HjbMode mode, const SweepOptions& opts = {});

struct ErgodicRow {
    double eps = 0.0;
    double estimate = 0.0;   ///< Monte Carlo E[g(y_T)]
    double std_error = 0.0;
};

/// Monte Carlo check of the exponential ergodic-averaging estimate: for a
/// centered g, |E_{t0,y0}[g(y^eps_T)]| decays toward zero as eps shrinks.
std::vector<ErgodicRow> ergodic_average_check(const ModelParams& params,
                                              const std::function<double(double, double)>& g,
                                              const std::vector<double>& eps_list, double t0,
                                              double T, std::array<double, 2> y0, int n_paths,
                                              uint64_t seed);

}  // namespace fastexec
