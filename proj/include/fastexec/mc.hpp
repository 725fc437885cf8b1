#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fastexec/first_order.hpp"
#include "fastexec/params.hpp"
#include "fastexec/z0.hpp"

namespace fastexec {

struct SimInit {
    double X0 = 0.0;
    double Q0 = 0.0;
    double S0 = 0.0;
    double y1_0 = 0.0;
    double y2_0 = 0.0;
};

enum class StrategyKind { ac, order0, order1 };
const char* strategy_name(StrategyKind k);

/// Feedback rates available to one experiment; null entries are skipped.
/// The AC benchmark curve solves the averaged ODE with the long-run constant
/// parameters and trades at the constant gain -(-z_ac(t)/m1)^{1/phi} q.
struct StrategySet {
    const Z0Curve* ac = nullptr;
    const Z0Curve* order0 = nullptr;
    const FirstOrderField* order1 = nullptr;
};

struct SimConfig {
    int n_steps = 5000;
    int n_paths = 10000;
    uint64_t seed = 1;
    int threads = 0;                 ///< 0 = hardware concurrency
    std::vector<int> record_paths;   ///< indices to keep full trajectories for
};

/// Full trajectory record of one path (only for requested indices): factor,
/// mapped coefficient, and price paths plus per-strategy inventory and cash.
struct PathBundle {
    int path_index = 0;
    std::vector<double> times, y1, y2, kappa, sigma, price;
    std::vector<StrategyKind> strategies;
    std::vector<std::vector<double>> inventory;  ///< [strategy][step]
    std::vector<std::vector<double>> cash;
};

struct StrategyRun {
    StrategyKind kind = StrategyKind::ac;
    std::vector<double> X_T, Q_T;  ///< per path
};

struct ExperimentResult {
    int n_steps = 0, n_paths = 0;
    uint64_t seed = 0;
    std::vector<double> S_T;  ///< per path, shared across strategies
    std::vector<StrategyRun> runs;
    std::vector<PathBundle> recorded;
    long steps_factor_exceeded = 0;  ///< steps with per-step liquidation factor >= 1
    double max_step_factor = 0.0;
    double max_bookkeeping_error = 0.0;  ///< relative cash-identity drift
};

/// Simulates all paths with exact joint OU transitions for the factors and
/// shared innovations across strategies. Deterministic for a given seed at
/// any thread count.
ExperimentResult simulate_experiment(const ModelParams& params, const SimInit& init,
                                     const SimConfig& cfg, const StrategySet& strategies);

/// Liquidation-adjusted terminal wealth X_T + Q_T (S_T - A |Q_T|^phi sgn Q_T).
double liquidation_value(double X_T, double Q_T, double S_T, const ModelParams& params);

struct Comparison {
    std::string label;
    double mean_bps = 0.0;
    double sd_bps = 0.0;
    double improvement_rate = 0.0;  ///< fraction of paths with positive relative performance
    double p_cash = 0.0;            ///< P(X^a_T > X^b_T)
    double p_inventory = 0.0;       ///< P(Q^a_T < Q^b_T)
    int excluded_paths = 0;         ///< benchmark W <= 0, excluded from the bps stats
    int n_paths = 0;

    double mean_std_error() const;
};

Comparison compare(const StrategyRun& a, const StrategyRun& b, const std::vector<double>& S_T,
                   const ModelParams& params, const std::string& label = "");

struct RunSummary {
    double mean_X_frac = 0.0, sd_X_frac = 0.0;  ///< X_T / (Q0 S0)
    double mean_Q_frac = 0.0, sd_Q_frac = 0.0;  ///< Q_T / Q0
    double mean_abs_Q = 0.0;
};

RunSummary summarize_run(const StrategyRun& run, const SimInit& init);

/// Order-fixed pairwise summation (parallelism-invariant aggregation).
double pairwise_sum(const double* v, size_t n);
double pairwise_sum(const std::vector<double>& v);

}  // namespace fastexec
