#include "fastexec/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SparseLU>

#include "fastexec/errors.hpp"
#include "fastexec/rng.hpp"

namespace fastexec {

namespace {

struct ModeView {
    bool kappa_live = false;
    bool sigma_live = false;
    OuFactor1d factor1d;  // live factor for the 1D modes
};

ModeView make_view(const ModelParams& p, HjbMode mode) {
    ModeView v;
    const auto& f = p.factors;
    switch (mode) {
        case HjbMode::kappa_1d:
            v.kappa_live = true;
            v.factor1d = {f.lambda1, f.m1, f.eta1};
            break;
        case HjbMode::sigma_1d:
            v.sigma_live = true;
            v.factor1d = {f.lambda2, f.m2, f.eta2};
            break;
        case HjbMode::full_2d:
            v.kappa_live = v.sigma_live = true;
            break;
    }
    return v;
}

// Per-node kappa^{-1/phi} and gamma * sigma^{1+phi}.
void node_coefficients(const ModelParams& p, const FactorGrid& grid, HjbMode mode,
                       std::vector<double>& kap_neg, std::vector<double>& sig_pen) {
    const double inv_phi = 1.0 / p.phi;
    const double pow_sig = 1.0 + p.phi;
    kap_neg.resize(grid.size());
    sig_pen.resize(grid.size());
    for (int j = 0; j < grid.n[1]; ++j) {
        for (int i = 0; i < grid.n[0]; ++i) {
            double y1 = p.factors.m1, y2 = p.factors.m2;
            if (mode == HjbMode::kappa_1d) y1 = grid.node(0, i);
            if (mode == HjbMode::sigma_1d) y2 = grid.node(0, i);
            if (mode == HjbMode::full_2d) {
                y1 = grid.node(0, i);
                y2 = grid.node(1, j);
            }
            const int k = grid.index(i, j);
            kap_neg[k] = std::pow(p.kappa_map(y1), -inv_phi);
            sig_pen[k] = p.gamma * std::pow(p.sigma_map(y2), pow_sig);
        }
    }
}

// Constant-coefficient comparison envelope: dU/dtau = S - phi K U^{1+1/phi},
// evolved by the same explicit Euler step as the scheme's nonlinear part so
// the discrete comparison is exact on interior rows.
struct Envelope {
    double K, S, u;
    void step(double dt, double phi) {
        u += dt * (S - phi * K * std::pow(u, 1.0 + 1.0 / phi));
    }
};

}  // namespace

double HjbGridSolution::eval(double t, double y1, double y2) const {
    const double t0 = times.front(), t1 = times.back();
    t = std::clamp(t, t0, t1);
    const double h = times.size() > 1 ? times[1] - times[0] : 1.0;
    const double s = (t - t0) / h;
    const int i = std::min(static_cast<int>(s), static_cast<int>(times.size()) - 2);
    const double w = s - i;
    auto at = [&](int k) {
        return grid.dims == 1 ? grid.interp1(values[k], y1) : grid.interp2(values[k], y1, y2);
    };
    if (times.size() == 1) return at(0);
    return (1.0 - w) * at(i) + w * at(i + 1);
}

EnvelopePair hjb_envelopes(const ModelParams& params, int n_time_steps) {
    const double inv_phi = 1.0 / params.phi;
    const double dt = params.T / n_time_steps;
    Envelope lo{std::pow(params.kappa_lo, -inv_phi),
                params.gamma * std::exp(params.sigma_lo * (1.0 + params.phi)), params.A};
    Envelope hi{std::pow(params.kappa_hi, -inv_phi),
                params.gamma * std::exp(params.sigma_hi * (1.0 + params.phi)), params.A};
    // The lower envelope can be far stiffer than the PDE (kappa_lo is an
    // extreme bound), so its integration is sub-stepped for stability.
    auto substeps = [&](const Envelope& e) {
        const double lip = (1.0 + params.phi) * e.K * std::pow(params.A, inv_phi);
        return std::max(1, static_cast<int>(dt * lip / 0.25) + 1);
    };
    const int sub_lo = substeps(lo), sub_hi = substeps(hi);
    EnvelopePair out;
    out.lower.resize(n_time_steps + 1);
    out.upper.resize(n_time_steps + 1);
    out.lower[n_time_steps] = out.upper[n_time_steps] = params.A;
    for (int k = n_time_steps; k > 0; --k) {
        for (int s = 0; s < sub_lo; ++s) lo.step(dt / sub_lo, params.phi);
        for (int s = 0; s < sub_hi; ++s) hi.step(dt / sub_hi, params.phi);
        out.lower[k - 1] = lo.u;
        out.upper[k - 1] = hi.u;
    }
    return out;
}

namespace {

// Backward IMEX sweep. The visitor sees every stored level, latest first.
void step_hjb(const ModelParams& params, const FactorGrid& grid, int n_time_steps, HjbMode mode,
              int store_stride,
              const std::function<void(int, double, const std::vector<double>&)>& visit) {
    params.validate();
    grid.validate();
    const ModeView view = make_view(params, mode);
    if ((mode == HjbMode::full_2d) != (grid.dims == 2))
        throw DataError("solve_hjb: grid dimensionality does not match mode");

    std::vector<double> kap_neg, sig_pen;
    node_coefficients(params, grid, mode, kap_neg, sig_pen);

    const double dt = params.T / n_time_steps;
    const double inv_phi = 1.0 / params.phi;

    // stability of the explicit nonlinear sub-step over the comparison bracket
    const double level_hi =
        params.gamma == 0.0
            ? 0.0
            : std::pow(params.gamma * std::exp(params.sigma_hi * (1.0 + params.phi)) /
                           (params.phi * std::pow(params.kappa_hi, -inv_phi)),
                       params.phi / (1.0 + params.phi));
    const double u_max = std::max(params.A, level_hi);
    const double kap_neg_max = *std::max_element(kap_neg.begin(), kap_neg.end());
    const double lipschitz = (1.0 + params.phi) * kap_neg_max * std::pow(u_max, inv_phi);
    if (dt * lipschitz >= 0.5) {
        const int needed = static_cast<int>(params.T * lipschitz / 0.5) + 1;
        throw NumericError("solve_hjb: explicit sub-step unstable; need n_time_steps >= " +
                           std::to_string(needed));
    }

    const Eigen::SparseMatrix<double> L =
        grid.dims == 1 ? build_generator(view.factor1d, grid) : build_generator(params.factors, grid);

    // M = I - (dt/eps) L on operator rows; boundary rows keep their constraint.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(L.nonZeros()) + grid.size());
    for (int col = 0; col < L.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(L, col); it; ++it) {
            const int i1 = static_cast<int>(it.row()) % grid.n[0];
            const int i2 = static_cast<int>(it.row()) / grid.n[0];
            if (grid.is_boundary(i1, i2))
                trip.emplace_back(it.row(), it.col(), it.value());
            else
                trip.emplace_back(it.row(), it.col(), -(dt / params.epsilon) * it.value());
        }
    }
    for (int j = 0; j < grid.n[1]; ++j)
        for (int i = 0; i < grid.n[0]; ++i)
            if (!grid.is_boundary(i, j)) trip.emplace_back(grid.index(i, j), grid.index(i, j), 1.0);
    Eigen::SparseMatrix<double> M(grid.size(), grid.size());
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(M);
    if (lu.info() != Eigen::Success)
        throw NumericError("solve_hjb: time-step matrix factorization failed");

    // Comparison monitor built from the grid-extremal coefficients and the
    // scheme's own explicit nonlinear map: the discrete solution is bracketed
    // exactly (M-matrix inverse and a monotone explicit map), and the grid
    // extremes are no stiffer than the scheme itself. The clamp-bound
    // envelopes of hjb_envelopes() contain these by construction.
    const double kap_neg_min = *std::min_element(kap_neg.begin(), kap_neg.end());
    const double sig_pen_min = *std::min_element(sig_pen.begin(), sig_pen.end());
    const double sig_pen_max = *std::max_element(sig_pen.begin(), sig_pen.end());
    Envelope env_lo{kap_neg_max, sig_pen_min, params.A};
    Envelope env_hi{kap_neg_min, sig_pen_max, params.A};

    std::vector<double> z(grid.size(), -params.A);
    visit(n_time_steps, params.T, z);

    Eigen::VectorXd rhs(grid.size());
    for (int k = n_time_steps; k > 0; --k) {
        for (int j = 0; j < grid.n[1]; ++j) {
            for (int i = 0; i < grid.n[0]; ++i) {
                const int idx = grid.index(i, j);
                if (grid.is_boundary(i, j)) {
                    rhs[idx] = 0.0;
                } else {
                    const double nl = params.phi * kap_neg[idx] *
                                          std::pow(std::abs(z[idx]), 1.0 + inv_phi) -
                                      sig_pen[idx];
                    rhs[idx] = z[idx] + dt * nl;
                }
            }
        }
        Eigen::VectorXd next = lu.solve(rhs);
        if (lu.info() != Eigen::Success) throw NumericError("solve_hjb: back-substitution failed");
        std::copy(next.data(), next.data() + next.size(), z.begin());

        env_lo.step(dt, params.phi);
        env_hi.step(dt, params.phi);
        const double slack = 1e-9 + 1e-6 * env_hi.u;
        for (int j = 0; j < grid.n[1]; ++j) {
            for (int i = 0; i < grid.n[0]; ++i) {
                if (grid.is_boundary(i, j)) continue;
                const double u = -z[grid.index(i, j)];
                if (!(u >= env_lo.u - slack && u <= env_hi.u + slack))
                    throw NumericError(
                        "solve_hjb: comparison-bracket violation at t=" +
                        std::to_string((k - 1) * dt) + ", node " + std::to_string(i) + "," +
                        std::to_string(j) + " (-z=" + std::to_string(u) + ", envelope [" +
                        std::to_string(env_lo.u) + ", " + std::to_string(env_hi.u) + "])");
            }
        }
        if ((k - 1) % store_stride == 0) visit(k - 1, (k - 1) * dt, z);
    }
}

}  // namespace

HjbGridSolution solve_hjb(const ModelParams& params, const FactorGrid& grid, int n_time_steps,
                          HjbMode mode, const HjbOptions& opts) {
    HjbGridSolution sol;
    sol.grid = grid;
    sol.mode = mode;
    sol.epsilon = params.epsilon;
    sol.n_time_steps = n_time_steps;
    sol.store_stride = opts.store_stride;
    step_hjb(params, grid, n_time_steps, mode, opts.store_stride,
             [&](int, double t, const std::vector<double>& z) {
                 sol.times.push_back(t);
                 sol.values.push_back(z);
             });
    std::reverse(sol.times.begin(), sol.times.end());
    std::reverse(sol.values.begin(), sol.values.end());
    return sol;
}

namespace {

ModelMode to_model_mode(HjbMode m) {
    switch (m) {
        case HjbMode::kappa_1d: return ModelMode::kappa_only;
        case HjbMode::sigma_1d: return ModelMode::sigma_only;
        default: return ModelMode::two_factor;
    }
}

PoissonSolution zero_solution(const OuFactor1d& f, double span_sd, int n) {
    PoissonSolution s;
    s.grid = FactorGrid::make_for_factor(f, span_sd, n);
    s.values.assign(s.grid.size(), 0.0);
    return s;
}

}  // namespace

SweepReport accuracy_sweep(const ModelParams& params, const std::vector<double>& eps_list,
                           int order, double delta, HjbMode mode, const SweepOptions& opts) {
    if (eps_list.size() < 3) throw DataError("accuracy_sweep: need >= 3 epsilons");
    for (size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw DataError("accuracy_sweep: epsilon list must be decreasing");
    if (order != 0 && order != 1) throw DataError("accuracy_sweep: order must be 0 or 1");
    if (order == 1 && !(delta > 0.0)) throw DataError("accuracy_sweep: order 1 needs delta > 0");

    const ModeView view = make_view(params, mode);
    if (mode == HjbMode::full_2d)
        throw DataError("accuracy_sweep: 2D sweeps not supported; use a 1D mode");
    const ModelMode mmode = to_model_mode(mode);

    // Epsilon-free pieces, shared across the sweep. The 1D modes integrate
    // against the marginal law, so the marginal quadrature reach suffices.
    const GaussHermite gh(opts.quad_nodes);
    const double marginal_span = std::max(opts.grid_halfwidth_sd, gh.max_node() + 1.0);
    const auto& fac = params.factors;
    const OuFactor1d f1{fac.lambda1, fac.m1, fac.eta1};
    const OuFactor1d f2{fac.lambda2, fac.m2, fac.eta2};

    PoissonSolution phi0 = mode == HjbMode::sigma_1d
                               ? zero_solution(f1, marginal_span, 201)
                               : solve_corrector(CorrectorSource::phi0, params,
                                                 FactorGrid::make_for_factor(f1, marginal_span, 1601),
                                                 opts.quad_nodes);
    PoissonSolution phi1 = mode == HjbMode::kappa_1d
                               ? zero_solution(f2, marginal_span, 201)
                               : solve_corrector(CorrectorSource::phi1, params,
                                                 FactorGrid::make_for_factor(f2, marginal_span, 1601),
                                                 opts.quad_nodes);
    const AveragedCoefficients coeffs =
        averaged_coefficients(params, phi0, phi1, opts.quad_nodes, mmode);
    const Z0Curve z0curve = solve_z0(params, coeffs, 8192);
    const BoundaryLayer layer = boundary_layer(z0curve, coeffs, params);

    const FactorGrid pde_grid = FactorGrid::make_for_factor(view.factor1d, opts.grid_halfwidth_sd,
                                                            opts.grid_nodes);
    const double sd = view.factor1d.stationary_sd();
    const double bulk_lo = view.factor1d.m - opts.bulk_halfwidth_sd * sd;
    const double bulk_hi = view.factor1d.m + opts.bulk_halfwidth_sd * sd;

    SweepReport rep;
    rep.order = order;
    rep.delta = delta;
    rep.mode = mode;

    for (double eps : eps_list) {
        ModelParams p_eps = params;
        p_eps.epsilon = eps;
        FirstOrderField field(z0curve, phi0, phi1, layer, p_eps, opts.quad_nodes);

        double sup_err = 0.0;
        const int stride = std::max(1, opts.n_time_steps / 4096);
        step_hjb(p_eps, pde_grid, opts.n_time_steps, mode, stride,
                 [&](int, double t, const std::vector<double>& z) {
                     if (t > params.T - delta) return;
                     for (int i = 1; i < pde_grid.n[0] - 1; ++i) {
                         const double y = pde_grid.node(0, i);
                         if (y < bulk_lo || y > bulk_hi) continue;
                         double approx;
                         if (order == 0) {
                             approx = z0curve.eval(t);
                         } else if (mode == HjbMode::kappa_1d) {
                             approx = field.zbar1(t, y, fac.m2);
                         } else {
                             approx = field.zbar1(t, fac.m1, y);
                         }
                         sup_err = std::max(sup_err, std::abs(z[i] - approx));
                     }
                 });
        rep.rows.push_back({eps, sup_err});
    }

    // log-log least squares for the observed order
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(rep.rows.size());
    for (const auto& r : rep.rows) {
        const double x = std::log(r.eps), y = std::log(std::max(r.error, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    for (size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].error > rep.rows[i - 1].error) rep.monotone = false;
    return rep;
}

std::vector<ErgodicRow> ergodic_average_check(const ModelParams& params,
                                              const std::function<double(double, double)>& g,
                                              const std::vector<double>& eps_list, double t0,
                                              double T, std::array<double, 2> y0, int n_paths,
                                              uint64_t seed) {
    if (!(T > t0)) throw DataError("ergodic_average_check: need T > t0");
    const double mean_g = pi_average(params, g, kDefaultQuadratureNodes);
    if (std::abs(mean_g) > 1e-6)
        throw DataError("ergodic_average_check: g is not centered (<g> = " +
                        std::to_string(mean_g) + ")");

    const auto& f = params.factors;
    const InvariantGaussian law = stationary_covariance(f);
    std::vector<ErgodicRow> rows;
    for (double eps : eps_list) {
        const double tau = (T - t0) / eps;
        const double e1 = std::exp(-f.lambda1 * tau);
        const double e2 = std::exp(-f.lambda2 * tau);
        const double v1 = law.cov[0][0] * (1.0 - e1 * e1);
        const double v2 = law.cov[1][1] * (1.0 - e2 * e2);
        const double cv = law.cov[0][1] * (1.0 - e1 * e2);
        const double l11 = std::sqrt(v1);
        const double l21 = l11 > 0.0 ? cv / l11 : 0.0;
        const double l22 = std::sqrt(std::max(v2 - l21 * l21, 0.0));

        double acc = 0.0, acc2 = 0.0;
        for (int p = 0; p < n_paths; ++p) {
            PathRng rng(seed, static_cast<uint64_t>(p));
            const double x1 = rng.normal(), x2 = rng.normal();
            const double y1 = f.m1 + e1 * (y0[0] - f.m1) + l11 * x1;
            const double y2 = f.m2 + e2 * (y0[1] - f.m2) + l21 * x1 + l22 * x2;
            const double v = g(y1, y2);
            acc += v;
            acc2 += v * v;
        }
        ErgodicRow row;
        row.eps = eps;
        row.estimate = acc / n_paths;
        const double var = std::max(acc2 / n_paths - row.estimate * row.estimate, 0.0);
        row.std_error = std::sqrt(var / n_paths);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fastexec
