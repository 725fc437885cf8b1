#include "fastexec/mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "fastexec/errors.hpp"
#include "fastexec/rng.hpp"

namespace fastexec {

const char* strategy_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::ac: return "ac";
        case StrategyKind::order0: return "order0";
        case StrategyKind::order1: return "order1";
    }
    return "?";
}

double pairwise_sum(const double* v, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

double liquidation_value(double X_T, double Q_T, double S_T, const ModelParams& params) {
    const double sgn = Q_T > 0.0 ? 1.0 : (Q_T < 0.0 ? -1.0 : 0.0);
    return X_T + Q_T * (S_T - params.A * std::pow(std::abs(Q_T), params.phi) * sgn);
}

namespace {

struct WorkerStats {
    long factor_exceeded = 0;
    double max_factor = 0.0;
    double max_book_err = 0.0;
    std::exception_ptr error;
};

}  // namespace

ExperimentResult simulate_experiment(const ModelParams& params, const SimInit& init,
                                     const SimConfig& cfg, const StrategySet& strategies) {
    params.validate();
    if (cfg.n_steps < 100) throw DataError("simulate_experiment: need n_steps >= 100");
    if (cfg.n_paths < 1) throw DataError("simulate_experiment: need n_paths >= 1");
    if (!std::isfinite(init.y1_0) || !std::isfinite(init.y2_0))
        throw DataError("simulate_experiment: initial factors must be finite");

    std::vector<StrategyKind> kinds;
    if (strategies.ac) kinds.push_back(StrategyKind::ac);
    if (strategies.order0) kinds.push_back(StrategyKind::order0);
    if (strategies.order1) kinds.push_back(StrategyKind::order1);
    if (kinds.empty()) throw DataError("simulate_experiment: no strategies requested");
    const int n_strat = static_cast<int>(kinds.size());

    const auto& f = params.factors;
    const double dt = params.T / cfg.n_steps;
    const double sqdt = std::sqrt(dt);
    const InvariantGaussian law = stationary_covariance(f);
    const double e1 = std::exp(-f.lambda1 * dt / params.epsilon);
    const double e2 = std::exp(-f.lambda2 * dt / params.epsilon);
    const double v1 = law.cov[0][0] * (1.0 - e1 * e1);
    const double v2 = law.cov[1][1] * (1.0 - e2 * e2);
    const double cv = law.cov[0][1] * (1.0 - e1 * e2);
    const double l11 = std::sqrt(v1);
    const double l21 = l11 > 0.0 ? cv / l11 : 0.0;
    const double l22 = std::sqrt(std::max(v2 - l21 * l21, 0.0));
    const double ac_kappa = params.kappa_map(f.m1);
    const double inv_phi = 1.0 / params.phi;

    ExperimentResult result;
    result.n_steps = cfg.n_steps;
    result.n_paths = cfg.n_paths;
    result.seed = cfg.seed;
    result.S_T.resize(cfg.n_paths);
    result.runs.resize(n_strat);
    for (int s = 0; s < n_strat; ++s) {
        result.runs[s].kind = kinds[s];
        result.runs[s].X_T.resize(cfg.n_paths);
        result.runs[s].Q_T.resize(cfg.n_paths);
    }
    result.recorded.resize(cfg.record_paths.size());

    auto rate_of = [&](StrategyKind kind, double t, double q, double y1, double y2) {
        switch (kind) {
            case StrategyKind::ac: {
                if (q == 0.0) return 0.0;
                const double gain = std::pow(-strategies.ac->eval(t) / ac_kappa, inv_phi);
                return -gain * q;
            }
            case StrategyKind::order0:
                return nu0(t, q, y1, *strategies.order0, params);
            case StrategyKind::order1:
                return strategies.order1->nu1(t, q, y1, y2);
        }
        return 0.0;
    };

    auto run_path = [&](int p, WorkerStats& stats, PathBundle* record) {
        PathRng rng(cfg.seed, static_cast<uint64_t>(p));
        double y1 = init.y1_0, y2 = init.y2_0, S = init.S0;
        std::vector<double> Q(n_strat, init.Q0), X(n_strat, init.X0);
        std::vector<double> proceeds(n_strat, 0.0), costs(n_strat, 0.0);

        if (record) {
            record->path_index = p;
            record->strategies = kinds;
            record->inventory.assign(n_strat, {});
            record->cash.assign(n_strat, {});
        }
        auto snapshot = [&](double t) {
            record->times.push_back(t);
            record->y1.push_back(y1);
            record->y2.push_back(y2);
            record->kappa.push_back(params.kappa_map(y1));
            record->sigma.push_back(params.sigma_map(y2));
            record->price.push_back(S);
            for (int s = 0; s < n_strat; ++s) {
                record->inventory[s].push_back(Q[s]);
                record->cash[s].push_back(X[s]);
            }
        };
        if (record) snapshot(0.0);

        for (int k = 0; k < cfg.n_steps; ++k) {
            const double t = k * dt;
            const double kap = params.kappa_map(y1);
            for (int s = 0; s < n_strat; ++s) {
                const double nu = rate_of(kinds[s], t, Q[s], y1, y2);
                if (!std::isfinite(nu))
                    throw NumericError("simulate_experiment: non-finite rate for " +
                                       std::string(strategy_name(kinds[s])) + " at step " +
                                       std::to_string(k));
                if (Q[s] != 0.0) {
                    const double factor = std::abs(nu) * dt / std::abs(Q[s]);
                    stats.max_factor = std::max(stats.max_factor, factor);
                    if (factor >= 1.0) ++stats.factor_exceeded;
                }
                const double abs_nu = std::abs(nu);
                const double cost_rate = kap * std::pow(abs_nu, 1.0 + params.phi);
                X[s] -= S * nu * dt + cost_rate * dt;
                proceeds[s] += S * nu * dt;
                costs[s] += cost_rate * dt;
                Q[s] += nu * dt;
            }
            const double x1 = rng.normal();
            const double x2 = rng.normal();
            const double xp = rng.normal();
            y1 = f.m1 + e1 * (y1 - f.m1) + l11 * x1;
            y2 = f.m2 + e2 * (y2 - f.m2) + l21 * x1 + l22 * x2;
            S += params.sigma_map(y2) * sqdt * xp;
            if (record) snapshot((k + 1) * dt);
        }

        result.S_T[p] = S;
        for (int s = 0; s < n_strat; ++s) {
            result.runs[s].X_T[p] = X[s];
            result.runs[s].Q_T[p] = Q[s];
            const double recon = init.X0 - proceeds[s] - costs[s];
            const double err = std::abs(X[s] - recon) / std::max(1.0, std::abs(X[s]));
            stats.max_book_err = std::max(stats.max_book_err, err);
        }
    };

    int n_threads = cfg.threads > 0 ? cfg.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, cfg.n_paths);

    std::vector<WorkerStats> stats(n_threads);
    auto record_slot = [&](int p) -> PathBundle* {
        for (size_t r = 0; r < cfg.record_paths.size(); ++r)
            if (cfg.record_paths[r] == p) return &result.recorded[r];
        return nullptr;
    };

    if (n_threads == 1) {
        for (int p = 0; p < cfg.n_paths; ++p) run_path(p, stats[0], record_slot(p));
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int w = 0; w < n_threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int p = w; p < cfg.n_paths; p += n_threads)
                        run_path(p, stats[w], record_slot(p));
                } catch (...) {
                    stats[w].error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& s : stats)
            if (s.error) std::rethrow_exception(s.error);
    }

    for (const auto& s : stats) {
        result.steps_factor_exceeded += s.factor_exceeded;
        result.max_step_factor = std::max(result.max_step_factor, s.max_factor);
        result.max_bookkeeping_error = std::max(result.max_bookkeeping_error, s.max_book_err);
    }
    return result;
}

double Comparison::mean_std_error() const {
    const int n = n_paths - excluded_paths;
    return n > 1 ? sd_bps / std::sqrt(static_cast<double>(n)) : 0.0;
}

Comparison compare(const StrategyRun& a, const StrategyRun& b, const std::vector<double>& S_T,
                   const ModelParams& params, const std::string& label) {
    if (a.X_T.size() != b.X_T.size() || a.X_T.size() != S_T.size())
        throw DataError("compare: runs do not share a path grid");
    const int n = static_cast<int>(S_T.size());

    Comparison cmp;
    cmp.label = label.empty() ? std::string(strategy_name(a.kind)) + "_vs_" + strategy_name(b.kind)
                              : label;
    cmp.n_paths = n;

    std::vector<double> rel;
    rel.reserve(n);
    long improved = 0, cash_wins = 0, inv_wins = 0;
    for (int p = 0; p < n; ++p) {
        const double wa = liquidation_value(a.X_T[p], a.Q_T[p], S_T[p], params);
        const double wb = liquidation_value(b.X_T[p], b.Q_T[p], S_T[p], params);
        if (a.X_T[p] > b.X_T[p]) ++cash_wins;
        if (a.Q_T[p] < b.Q_T[p]) ++inv_wins;
        if (wb <= 0.0) {
            ++cmp.excluded_paths;
            continue;
        }
        const double r = (wa - wb) / wb * 1e4;
        if (r > 0.0) ++improved;
        rel.push_back(r);
    }
    if (!rel.empty()) {
        cmp.mean_bps = pairwise_sum(rel) / rel.size();
        std::vector<double> dev(rel.size());
        for (size_t i = 0; i < rel.size(); ++i)
            dev[i] = (rel[i] - cmp.mean_bps) * (rel[i] - cmp.mean_bps);
        cmp.sd_bps = std::sqrt(pairwise_sum(dev) / rel.size());
        cmp.improvement_rate = static_cast<double>(improved) / rel.size();
    }
    cmp.p_cash = static_cast<double>(cash_wins) / n;
    cmp.p_inventory = static_cast<double>(inv_wins) / n;
    return cmp;
}

RunSummary summarize_run(const StrategyRun& run, const SimInit& init) {
    RunSummary s;
    const size_t n = run.X_T.size();
    if (n == 0) return s;
    const double denom_x = init.Q0 * init.S0;
    std::vector<double> xf(n), qf(n), aq(n);
    for (size_t p = 0; p < n; ++p) {
        xf[p] = denom_x != 0.0 ? run.X_T[p] / denom_x : run.X_T[p];
        qf[p] = init.Q0 != 0.0 ? run.Q_T[p] / init.Q0 : run.Q_T[p];
        aq[p] = std::abs(run.Q_T[p]);
    }
    s.mean_X_frac = pairwise_sum(xf) / n;
    s.mean_Q_frac = pairwise_sum(qf) / n;
    s.mean_abs_Q = pairwise_sum(aq) / n;
    double vx = 0.0, vq = 0.0;
    for (size_t p = 0; p < n; ++p) {
        vx += (xf[p] - s.mean_X_frac) * (xf[p] - s.mean_X_frac);
        vq += (qf[p] - s.mean_Q_frac) * (qf[p] - s.mean_Q_frac);
    }
    s.sd_X_frac = std::sqrt(vx / n);
    s.sd_Q_frac = std::sqrt(vq / n);
    return s;
}

}  // namespace fastexec
