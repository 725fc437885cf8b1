#include "fastexec/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fastexec/errors.hpp"
#include "fastexec/rng.hpp"

namespace fastexec {

namespace {

struct FitPoints {
    std::vector<double> nu, impact;
};

// Points of one curve inside its [v_min, v_max] fitting range. Points on the
// pre-impact plateau (I = 0, at or below the first-layer depth) carry no
// curve information and no power law passes through them, so they are left
// out.
void append_fit_points(const ImpactCurve& curve, FitPoints& out) {
    for (const auto& p : curve.points) {
        if (p.impact > 0.0 && p.nu >= curve.v_min * (1.0 - 1e-12) &&
            p.nu <= curve.v_max * (1.0 + 1e-12)) {
            out.nu.push_back(p.nu);
            out.impact.push_back(p.impact);
        }
    }
}

// Nonlinear least squares for I = kappa nu^phi. kappa is profiled out
// exactly (through-origin regression of I on nu^phi), leaving a smooth
// one-parameter objective in phi: log-log start, damped Gauss-Newton step,
// golden-section safeguard when a step fails to descend.
bool fit_curve_power_law(const FitPoints& pts, double& kappa, double& phi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n_pos = 0;
    for (size_t i = 0; i < pts.nu.size(); ++i) {
        if (pts.impact[i] <= 0.0) continue;
        const double x = std::log(pts.nu[i]), y = std::log(pts.impact[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n_pos;
    }
    if (n_pos < 2) return false;
    const double denom = n_pos * sxx - sx * sx;
    if (std::abs(denom) < 1e-14) return false;
    phi = (n_pos * sxy - sx * sy) / denom;

    auto kappa_for = [&](double p) {
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < pts.nu.size(); ++i) {
            const double f = std::pow(pts.nu[i], p);
            num += pts.impact[i] * f;
            den += f * f;
        }
        return den > 0.0 ? num / den : 0.0;
    };
    auto sse_of = [&](double p) {
        const double k = kappa_for(p);
        double s = 0.0;
        for (size_t i = 0; i < pts.nu.size(); ++i) {
            const double r = pts.impact[i] - k * std::pow(pts.nu[i], p);
            s += r * r;
        }
        return s;
    };

    double sse = sse_of(phi);
    double damp = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double k = kappa_for(phi);
        double g = 0.0, h = 0.0;  // Gauss-Newton gradient and curvature in phi
        for (size_t i = 0; i < pts.nu.size(); ++i) {
            const double f = std::pow(pts.nu[i], phi);
            const double r = pts.impact[i] - k * f;
            const double d = -k * f * std::log(pts.nu[i]);
            g += d * r;
            h += d * d;
        }
        if (!(h > 0.0)) break;
        const double step = -damp * g / h;
        if (std::abs(step) <= 1e-13 * std::max(1.0, std::abs(phi))) break;
        const double phi_new = phi + step;
        const double sse_new = std::isfinite(phi_new) ? sse_of(phi_new) : sse + 1.0;
        if (sse_new <= sse) {
            phi = phi_new;
            sse = sse_new;
            damp = std::min(1.0, damp * 2.0);
        } else {
            damp *= 0.25;
            if (damp < 1e-12) break;
        }
    }
    // golden-section polish around the iterate (guards stalled descent)
    {
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = phi - 0.05, b = phi + 0.05;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = sse_of(x1), f2 = sse_of(x2);
        for (int it = 0; it < 80; ++it) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = sse_of(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = sse_of(x2);
            }
        }
        const double cand = 0.5 * (a + b);
        if (sse_of(cand) <= sse) phi = cand;
    }
    kappa = kappa_for(phi);
    return std::isfinite(kappa) && std::isfinite(phi) && kappa > 0.0;
}

}  // namespace

PowerLawFit fit_power_law(const std::vector<LobSnapshot>& dataset, int M, int N, uint64_t seed) {
    if (dataset.empty()) throw DataError("fit_power_law: empty dataset");
    if (M < 1 || N < 1) throw DataError("fit_power_law: M and N must be >= 1");

    // Curves are built once; resampling happens on the timestamp-sorted view
    // so dataset order does not matter.
    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dataset[a].ts_ms < dataset[b].ts_ms;
    });
    std::vector<ImpactCurve> curves(dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) {
        const LobSnapshot& book = dataset[order[i]];
        curves[i] = impact_curve(book, default_nu_grid(book));
    }

    PowerLawFit fit;
    fit.M = M;
    fit.N = N;
    fit.seed = seed;
    for (int trial = 0; trial < M; ++trial) {
        PathRng rng(seed, static_cast<uint64_t>(trial));
        FitPoints pts;
        for (int s = 0; s < N; ++s)
            append_fit_points(curves[rng.below(curves.size())], pts);
        double kappa = 0.0, phi = 0.0;
        if (fit_curve_power_law(pts, kappa, phi)) {
            fit.per_trial.emplace_back(kappa, phi);
        } else {
            ++fit.skipped_trials;
        }
    }
    if (fit.per_trial.empty())
        throw NumericError("fit_power_law: all trials degenerate (no positive impact points)");

    double mean = 0.0;
    for (const auto& t : fit.per_trial) mean += t.second;
    mean /= fit.per_trial.size();
    double var = 0.0;
    for (const auto& t : fit.per_trial) var += (t.second - mean) * (t.second - mean);
    fit.phi_hat = mean;
    fit.phi_std = std::sqrt(var / fit.per_trial.size());
    if (!(fit.phi_hat > 0.0 && fit.phi_hat <= 1.0))
        throw NumericError("fit_power_law: aggregate exponent " + std::to_string(fit.phi_hat) +
                           " outside (0, 1]");
    return fit;
}

std::vector<std::pair<int64_t, double>> rolling_kappa(const std::vector<ImpactCurve>& curves,
                                                      double phi_hat, double w_seconds) {
    if (curves.empty()) throw DataError("rolling_kappa: no curves");
    if (w_seconds < 0.0) throw DataError("rolling_kappa: w must be >= 0");
    for (size_t i = 1; i < curves.size(); ++i)
        if (curves[i].ts_ms < curves[i - 1].ts_ms)
            throw DataError("rolling_kappa: curves must be time-sorted");

    const int64_t w_ms = static_cast<int64_t>(w_seconds * 1000.0);
    std::vector<std::pair<int64_t, double>> out;
    out.reserve(curves.size());
    size_t lo = 0;
    for (size_t t = 0; t < curves.size(); ++t) {
        const int64_t t_ms = curves[t].ts_ms;
        const int64_t cutoff = t_ms - w_ms;
        while (curves[lo].ts_ms < cutoff) ++lo;
        double num = 0.0, den = 0.0;
        for (size_t s = lo; s <= t; ++s) {
            const ImpactCurve& c = curves[s];
            for (const auto& p : c.points) {
                if (p.impact <= 0.0) continue;  // pre-impact plateau
                if (p.nu < c.v_min * (1.0 - 1e-12) || p.nu > c.v_max * (1.0 + 1e-12)) continue;
                const double x = std::pow(p.nu, phi_hat);
                num += p.impact * x;
                den += x * x;
            }
        }
        if (den > 0.0) {
            out.emplace_back(t_ms, num / den);
        } else if (!out.empty()) {
            out.emplace_back(t_ms, out.back().second);  // carry forward
        } else {
            throw NumericError("rolling_kappa: first window has no usable points");
        }
    }
    return out;
}

double tsrv(const std::vector<std::pair<int64_t, double>>& prices, int K, bool* floored) {
    if (K < 1) throw DataError("tsrv: K must be >= 1");
    if (floored) *floored = false;

    std::vector<double> p;
    p.reserve(prices.size());
    for (const auto& [ts, px] : prices)
        if (p.empty() || px != p.back()) p.push_back(px);

    const int n = static_cast<int>(p.size()) - 1;  // number of increments
    if (n + 1 < K + 2)
        throw DataError("tsrv: insufficient observations (" + std::to_string(p.size()) +
                        " distinct prices, need " + std::to_string(K + 2) + ")");

    double rv_all = 0.0;
    for (int i = 1; i <= n; ++i) rv_all += (p[i] - p[i - 1]) * (p[i] - p[i - 1]);
    if (K == 1) return rv_all;  // definition collapses to plain realized variance

    double rv_avg = 0.0;
    for (int k = 0; k < K; ++k)
        for (int i = k + K; i <= n; i += K) rv_avg += (p[i] - p[i - K]) * (p[i] - p[i - K]);
    rv_avg /= K;

    const double n_bar = (n - K + 1) / static_cast<double>(K);
    double est = rv_avg - (n_bar / n) * rv_all;
    if (est < 0.0) {
        est = 0.0;
        if (floored) *floored = true;
    }
    return est;
}

VolPath vol_path(const std::vector<std::pair<int64_t, double>>& prices,
                 const VolPathOptions& opts) {
    if (!(opts.delta_ms > 0)) throw DataError("vol_path: delta must be positive");
    if (prices.size() < 2) throw DataError("vol_path: need at least two prices");

    VolPath out;
    const int64_t t_begin = prices.front().first + opts.delta_ms;
    const int64_t t_end = prices.back().first;

    auto price_at_or_before = [&](int64_t t) {
        auto it = std::upper_bound(prices.begin(), prices.end(), t,
                                   [](int64_t v, const auto& pr) { return v < pr.first; });
        return (--it)->second;
    };

    size_t lo = 0, hi = 0;
    for (int64_t t = t_begin; t <= t_end; t += opts.sample_every_ms) {
        const int64_t w_lo = t - opts.delta_ms;
        while (lo < prices.size() && prices[lo].first < w_lo) ++lo;
        while (hi < prices.size() && prices[hi].first <= t) ++hi;
        std::vector<std::pair<int64_t, double>> window(prices.begin() + lo, prices.begin() + hi);
        try {
            const double var = tsrv(window, opts.K);
            VolPathEntry e;
            e.ts_ms = t;
            e.tsrv_var = var;
            e.z = var > 0.0 ? (price_at_or_before(t) - price_at_or_before(w_lo)) / std::sqrt(var)
                            : 0.0;
            out.entries.push_back(e);
        } catch (const DataError&) {
            ++out.skipped_windows;  // gap recorded, window skipped
        }
    }

    if (!opts.unit_omega) {
        double s = 0.0, s2 = 0.0;
        int n = 0;
        for (const auto& e : out.entries) {
            if (opts.omega_window &&
                (e.ts_ms < opts.omega_window->first || e.ts_ms > opts.omega_window->second))
                continue;
            s += e.z;
            s2 += e.z * e.z;
            ++n;
        }
        if (n >= 2) {
            const double mean = s / n;
            out.omega2 = s2 / n - mean * mean;
        }
    }

    const double delta_days = opts.delta_ms / 86400000.0;
    for (auto& e : out.entries) e.sigma = std::sqrt(out.omega2 * e.tsrv_var / delta_days);
    return out;
}

OuFitResult fit_ou(const std::vector<double>& x, double dt) {
    const int n = static_cast<int>(x.size());
    if (n < 50) throw DataError("fit_ou: need at least 50 points");
    if (!(dt > 0.0)) throw DataError("fit_ou: dt must be positive");

    // AR(1) least squares start (c = 0)
    double mx = 0.0;
    for (double v : x) mx += v;
    mx /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 1; i < n; ++i) {
        sxx += (x[i - 1] - mx) * (x[i - 1] - mx);
        sxy += (x[i] - mx) * (x[i - 1] - mx);
    }
    double b = sxx > 0.0 ? sxy / sxx : 0.5;
    b = std::clamp(b, 0.01, 0.999);
    double a = mx * (1.0 - b);
    double c = 0.0;

    // Conditional sum of squares with recursive residuals and derivatives.
    const int n_obs = n - 1;
    auto css = [&](double pa, double pb, double pc, double* grad, double* hess) {
        double eps = 0.0, da = 0.0, db = 0.0, dc = 0.0;
        double sse = 0.0;
        if (grad) grad[0] = grad[1] = grad[2] = 0.0;
        if (hess) std::fill(hess, hess + 9, 0.0);
        for (int i = 1; i < n; ++i) {
            const double da_new = -1.0 - pc * da;
            const double db_new = -x[i - 1] - pc * db;
            const double dc_new = -eps - pc * dc;
            eps = x[i] - pa - pb * x[i - 1] - pc * eps;
            da = da_new;
            db = db_new;
            dc = dc_new;
            sse += eps * eps;
            if (grad) {
                grad[0] += 2.0 * eps * da;
                grad[1] += 2.0 * eps * db;
                grad[2] += 2.0 * eps * dc;
            }
            if (hess) {
                const double d[3] = {da, db, dc};
                for (int r = 0; r < 3; ++r)
                    for (int s = 0; s < 3; ++s) hess[3 * r + s] += 2.0 * d[r] * d[s];
            }
        }
        return sse;
    };

    double grad[3], hess[9];
    double sse = css(a, b, c, grad, hess);
    double lm = 1e-6;
    int iterations = 0;
    for (int it = 0; it < 200; ++it) {
        ++iterations;
        // damped Newton (Gauss-Newton Hessian) step
        double h[9];
        std::copy(hess, hess + 9, h);
        for (int r = 0; r < 3; ++r) h[3 * r + r] *= 1.0 + lm;
        // 3x3 solve by Cramer
        const double det = h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
                           h[2] * (h[3] * h[7] - h[4] * h[6]);
        if (std::abs(det) < 1e-300) break;
        auto solve3 = [&](int col) {
            double m[9];
            std::copy(h, h + 9, m);
            m[col] = -grad[0];
            m[col + 3] = -grad[1];
            m[col + 6] = -grad[2];
            return (m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                    m[2] * (m[3] * m[7] - m[4] * m[6])) /
                   det;
        };
        const double step_a = solve3(0), step_b = solve3(1), step_c = solve3(2);
        const double a_new = a + step_a;
        const double b_new = b + step_b;
        const double c_new = std::clamp(c + step_c, -0.999, 0.999);
        const double sse_new = css(a_new, b_new, c_new, nullptr, nullptr);
        if (sse_new <= sse) {
            const bool converged = sse - sse_new <= 1e-14 * (1.0 + sse);
            a = a_new;
            b = b_new;
            c = c_new;
            sse = css(a, b, c, grad, hess);
            lm = std::max(lm * 0.25, 1e-12);
            if (converged) break;
        } else {
            lm *= 10.0;
            if (lm > 1e12)
                throw NumericError("fit_ou: optimizer failed to converge (sse=" +
                                   std::to_string(sse) + ", iter=" + std::to_string(it) + ")");
        }
    }

    if (!(b > 0.0 && b < 1.0))
        throw NumericError("fit_ou: non-mean-reverting fit (b=" + std::to_string(b) + ")");

    OuFitResult res;
    res.a = a;
    res.b = b;
    res.c = c;
    res.dt = dt;
    res.iterations = iterations;
    res.gamma_resid = std::sqrt(sse / n_obs);
    res.lambda_hat = -std::log(b) / dt;
    res.m_hat = a / (1.0 - b);
    const double num = -2.0 * (b + b * c * c + b * b * c + c) * std::log(b);
    const double den = dt * (1.0 - b * b) * b;
    if (!(num / den > 0.0))
        throw NumericError("fit_ou: eta mapping undefined for fitted (b, c)");
    res.eta_hat = res.gamma_resid * std::sqrt(num / den);
    return res;
}

std::string power_law_fit_json(const PowerLawFit& fit) {
    nlohmann::json j;
    j["phi_hat"] = fit.phi_hat;
    j["phi_std"] = fit.phi_std;
    j["M"] = fit.M;
    j["N"] = fit.N;
    j["seed"] = fit.seed;
    j["skipped_trials"] = fit.skipped_trials;
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& [k, p] : fit.per_trial) trials.push_back({{"kappa", k}, {"phi", p}});
    j["per_trial"] = trials;
    return j.dump(2);
}

std::string ou_fit_json(const OuFitResult& fit) {
    nlohmann::json j;
    j["lambda_hat"] = fit.lambda_hat;
    j["m_hat"] = fit.m_hat;
    j["eta_hat"] = fit.eta_hat;
    j["a"] = fit.a;
    j["b"] = fit.b;
    j["c"] = fit.c;
    j["gamma_resid"] = fit.gamma_resid;
    j["dt"] = fit.dt;
    j["iterations"] = fit.iterations;
    return j.dump(2);
}

}  // namespace fastexec
