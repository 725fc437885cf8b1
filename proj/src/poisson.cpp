#include "fastexec/poisson.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>

#include "fastexec/errors.hpp"

namespace fastexec {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Drift discretization on one axis: central unless the mesh Peclet number
// exceeds 1, in which case first-order upwind keeps the row diagonally
// dominant.
void add_drift(Triplets& trip, int row, int idx_lo, int idx_mid, int idx_hi, double drift,
               double h, double diffusion) {
    if (drift == 0.0) return;
    const bool central = std::abs(drift) * h <= 2.0 * diffusion;
    if (central) {
        trip.emplace_back(row, idx_hi, drift / (2.0 * h));
        trip.emplace_back(row, idx_lo, -drift / (2.0 * h));
    } else if (drift > 0.0) {
        trip.emplace_back(row, idx_hi, drift / h);
        trip.emplace_back(row, idx_mid, -drift / h);
    } else {
        trip.emplace_back(row, idx_mid, drift / h);
        trip.emplace_back(row, idx_lo, -drift / h);
    }
}

}  // namespace

Eigen::SparseMatrix<double> build_generator(const OuFactor1d& factor, const FactorGrid& grid) {
    if (grid.dims != 1) throw DataError("build_generator: grid must be 1D");
    const int n = grid.n[0];
    const double h = grid.spacing(0);
    const double diff = 0.5 * factor.eta * factor.eta;
    Triplets trip;
    trip.reserve(3 * static_cast<size_t>(n));
    for (int i = 1; i < n - 1; ++i) {
        trip.emplace_back(i, i - 1, diff / (h * h));
        trip.emplace_back(i, i, -2.0 * diff / (h * h));
        trip.emplace_back(i, i + 1, diff / (h * h));
        const double drift = factor.lambda * (factor.m - grid.node(0, i));
        add_drift(trip, i, i - 1, i, i + 1, drift, h, diff);
    }
    // boundary rows: zero second derivative in the outward direction
    trip.emplace_back(0, 0, 1.0 / (h * h));
    trip.emplace_back(0, 1, -2.0 / (h * h));
    trip.emplace_back(0, 2, 1.0 / (h * h));
    trip.emplace_back(n - 1, n - 1, 1.0 / (h * h));
    trip.emplace_back(n - 1, n - 2, -2.0 / (h * h));
    trip.emplace_back(n - 1, n - 3, 1.0 / (h * h));

    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
}

Eigen::SparseMatrix<double> build_generator(const OuFactorParams& factors,
                                            const FactorGrid& grid) {
    if (grid.dims != 2) throw DataError("build_generator: grid must be 2D");
    const int n1 = grid.n[0], n2 = grid.n[1];
    const double h1 = grid.spacing(0), h2 = grid.spacing(1);
    const double d1 = 0.5 * factors.eta1 * factors.eta1;
    const double d2 = 0.5 * factors.eta2 * factors.eta2;
    const double cross = factors.rho * factors.eta1 * factors.eta2;
    Triplets trip;
    trip.reserve(9 * static_cast<size_t>(grid.size()));

    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) {
            const int row = grid.index(i, j);
            if (i == 0 || i == n1 - 1) {
                const int s = (i == 0) ? 1 : -1;
                trip.emplace_back(row, grid.index(i, j), 1.0 / (h1 * h1));
                trip.emplace_back(row, grid.index(i + s, j), -2.0 / (h1 * h1));
                trip.emplace_back(row, grid.index(i + 2 * s, j), 1.0 / (h1 * h1));
                continue;
            }
            if (j == 0 || j == n2 - 1) {
                const int s = (j == 0) ? 1 : -1;
                trip.emplace_back(row, grid.index(i, j), 1.0 / (h2 * h2));
                trip.emplace_back(row, grid.index(i, j + s), -2.0 / (h2 * h2));
                trip.emplace_back(row, grid.index(i, j + 2 * s), 1.0 / (h2 * h2));
                continue;
            }
            trip.emplace_back(row, grid.index(i - 1, j), d1 / (h1 * h1));
            trip.emplace_back(row, grid.index(i + 1, j), d1 / (h1 * h1));
            trip.emplace_back(row, grid.index(i, j - 1), d2 / (h2 * h2));
            trip.emplace_back(row, grid.index(i, j + 1), d2 / (h2 * h2));
            trip.emplace_back(row, row, -2.0 * d1 / (h1 * h1) - 2.0 * d2 / (h2 * h2));
            if (cross != 0.0) {
                const double c = cross / (4.0 * h1 * h2);
                trip.emplace_back(row, grid.index(i + 1, j + 1), c);
                trip.emplace_back(row, grid.index(i - 1, j - 1), c);
                trip.emplace_back(row, grid.index(i + 1, j - 1), -c);
                trip.emplace_back(row, grid.index(i - 1, j + 1), -c);
            }
            const double drift1 = factors.lambda1 * (factors.m1 - grid.node(0, i));
            const double drift2 = factors.lambda2 * (factors.m2 - grid.node(1, j));
            add_drift(trip, row, grid.index(i - 1, j), row, grid.index(i + 1, j), drift1, h1, d1);
            add_drift(trip, row, grid.index(i, j - 1), row, grid.index(i, j + 1), drift2, h2, d2);
        }
    }

    Eigen::SparseMatrix<double> L(grid.size(), grid.size());
    L.setFromTriplets(trip.begin(), trip.end());
    return L;
}

namespace {

std::vector<double> normalize_trapezoid(std::vector<double> w, const FactorGrid& grid) {
    const int n1 = grid.n[0], n2 = grid.n[1];
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) {
            double fac = (i == 0 || i == n1 - 1) ? 0.5 : 1.0;
            if (grid.dims == 2 && (j == 0 || j == n2 - 1)) fac *= 0.5;
            w[grid.index(i, j)] *= fac;
        }
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return w;
}

}  // namespace

std::vector<double> pi_weights(const OuFactor1d& factor, const FactorGrid& grid) {
    const double sd = factor.stationary_sd();
    std::vector<double> w(grid.size());
    for (int i = 0; i < grid.n[0]; ++i) {
        const double z = (grid.node(0, i) - factor.m) / sd;
        w[i] = std::exp(-0.5 * z * z);
    }
    return normalize_trapezoid(std::move(w), grid);
}

std::vector<double> pi_weights(const OuFactorParams& factors, const FactorGrid& grid) {
    const InvariantGaussian law = stationary_covariance(factors);
    const double a11 = law.cov[0][0], a12 = law.cov[0][1], a22 = law.cov[1][1];
    const double det = a11 * a22 - a12 * a12;
    std::vector<double> w(grid.size());
    for (int j = 0; j < grid.n[1]; ++j) {
        for (int i = 0; i < grid.n[0]; ++i) {
            const double u = grid.node(0, i) - law.mean[0];
            const double v = grid.node(1, j) - law.mean[1];
            const double q = (a22 * u * u - 2.0 * a12 * u * v + a11 * v * v) / det;
            w[grid.index(i, j)] = std::exp(-0.5 * q);
        }
    }
    return normalize_trapezoid(std::move(w), grid);
}

double weighted_mean(const std::vector<double>& w, const std::vector<double>& v) {
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) acc += w[i] * v[i];
    return acc;
}

double weighted_l2(const std::vector<double>& w, const std::vector<double>& v) {
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) acc += w[i] * v[i] * v[i];
    return std::sqrt(acc);
}

namespace {

void check_centered(const std::vector<double>& w, const std::vector<double>& f) {
    const double mean = weighted_mean(w, f);
    if (std::abs(mean) > 1e-8)
        throw NumericError("solve_poisson: source not centered (discrete mean " +
                           std::to_string(mean) + ")");
}

double interior_residual_sup(const Eigen::SparseMatrix<double>& L, const FactorGrid& grid,
                             const std::vector<double>& phi, const std::vector<double>& f) {
    Eigen::Map<const Eigen::VectorXd> u(phi.data(), static_cast<Eigen::Index>(phi.size()));
    Eigen::VectorXd r = L * u;
    double sup = 0.0;
    for (int j = 0; j < grid.n[1]; ++j)
        for (int i = 0; i < grid.n[0]; ++i)
            if (!grid.is_boundary(i, j)) {
                const int k = grid.index(i, j);
                sup = std::max(sup, std::abs(r[k] - f[k]));
            }
    return sup;
}

// Bordered formulation of the singular system: a scalar multiplier absorbs
// the discrete incompatibility uniformly over the operator rows while the
// appended row pins the quadrature mean to zero. The shifted iteration of
// the appendix algorithm has exactly this solution as its fixed point, so
// the two solvers agree to iteration tolerance.
PoissonSolution direct_impl(const std::vector<double>& f, const Eigen::SparseMatrix<double>& L,
                            const std::vector<double>& w, const FactorGrid& grid) {
    if (static_cast<int>(f.size()) != grid.size())
        throw DataError("solve_poisson_direct: source size does not match grid");
    check_centered(w, f);

    const int n = grid.size();
    Triplets trip;
    trip.reserve(static_cast<size_t>(L.nonZeros()) + 2 * n + 1);
    for (int col = 0; col < L.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(L, col); it; ++it)
            trip.emplace_back(it.row(), it.col(), it.value());
    const double scale = 1.0 / grid.spacing(0);
    for (int j = 0; j < grid.n[1]; ++j)
        for (int i = 0; i < grid.n[0]; ++i)
            if (!grid.is_boundary(i, j)) trip.emplace_back(grid.index(i, j), n, 1.0);
    for (int k = 0; k < n; ++k)
        if (w[k] != 0.0) trip.emplace_back(n, k, w[k] * scale);
    Eigen::SparseMatrix<double> bordered(n + 1, n + 1);
    bordered.setFromTriplets(trip.begin(), trip.end());
    bordered.makeCompressed();

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    for (int j = 0; j < grid.n[1]; ++j)
        for (int i = 0; i < grid.n[0]; ++i)
            if (!grid.is_boundary(i, j)) rhs[grid.index(i, j)] = f[grid.index(i, j)];

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(bordered);
    if (lu.info() != Eigen::Success)
        throw NumericError("solve_poisson_direct: factorization failed (conditioning)");
    Eigen::VectorXd u = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw NumericError("solve_poisson_direct: back-substitution failed");

    PoissonSolution sol;
    sol.grid = grid;
    sol.values.assign(u.data(), u.data() + n);
    const double mean = weighted_mean(w, sol.values);
    for (double& v : sol.values) v -= mean;
    sol.pi_mean = weighted_mean(w, sol.values);
    sol.residual_sup = interior_residual_sup(L, grid, sol.values, f);
    sol.iterations = 0;
    return sol;
}

IterativeReport iterative_impl(const std::vector<double>& f, const Eigen::SparseMatrix<double>& L,
                               const std::vector<double>& w, const FactorGrid& grid,
                               double min_lambda, IterativeOptions opts) {
    if (static_cast<int>(f.size()) != grid.size())
        throw DataError("solve_poisson_iterative: source size does not match grid");
    check_centered(w, f);
    if (opts.eta == 0.0) opts.eta = 0.1 * min_lambda;
    if (!(opts.eta > 0.0)) throw DataError("solve_poisson_iterative: eta must be positive");

    IterativeReport rep;
    rep.eta_warning = opts.eta >= 0.5 * min_lambda;

    // Shift only the operator rows; boundary rows stay pure constraints.
    Eigen::SparseMatrix<double> shifted = L;
    Triplets trip;
    for (int j = 0; j < grid.n[1]; ++j)
        for (int i = 0; i < grid.n[0]; ++i)
            if (!grid.is_boundary(i, j)) trip.emplace_back(grid.index(i, j), grid.index(i, j), opts.eta);
    Eigen::SparseMatrix<double> shift(grid.size(), grid.size());
    shift.setFromTriplets(trip.begin(), trip.end());
    shifted += shift;
    shifted.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(shifted);
    if (lu.info() != Eigen::Success)
        throw NumericError("solve_poisson_iterative: shifted system singular for eta=" +
                           std::to_string(opts.eta));

    std::vector<double> phi(grid.size(), 0.0);
    Eigen::VectorXd rhs(grid.size());
    for (int it = 1; it <= opts.max_iter; ++it) {
        for (int k = 0; k < grid.size(); ++k) rhs[k] = f[k] + opts.eta * phi[k];
        for (int j = 0; j < grid.n[1]; ++j)
            for (int i = 0; i < grid.n[0]; ++i)
                if (grid.is_boundary(i, j)) rhs[grid.index(i, j)] = 0.0;
        Eigen::VectorXd u = lu.solve(rhs);

        std::vector<double> next(u.data(), u.data() + u.size());
        const double mean = weighted_mean(w, next);
        for (double& v : next) v -= mean;

        std::vector<double> inc(next.size());
        for (size_t k = 0; k < next.size(); ++k) inc[k] = next[k] - phi[k];
        const double inc_norm = weighted_l2(w, inc);
        rep.increment_norms.push_back(inc_norm);
        phi = std::move(next);

        if (inc_norm < opts.tol) {
            rep.solution.grid = grid;
            rep.solution.values = std::move(phi);
            rep.solution.pi_mean = weighted_mean(w, rep.solution.values);
            rep.solution.residual_sup = interior_residual_sup(L, grid, rep.solution.values, f);
            rep.solution.iterations = it;
            return rep;
        }
    }
    throw NumericError("solve_poisson_iterative: no convergence in " +
                       std::to_string(opts.max_iter) + " iterations (last increment " +
                       std::to_string(rep.increment_norms.back()) + ")");
}

}  // namespace

PoissonSolution solve_poisson_direct(const std::vector<double>& f, const OuFactor1d& factor,
                                     const FactorGrid& grid) {
    return direct_impl(f, build_generator(factor, grid), pi_weights(factor, grid), grid);
}

PoissonSolution solve_poisson_direct(const std::vector<double>& f, const OuFactorParams& factors,
                                     const FactorGrid& grid) {
    return direct_impl(f, build_generator(factors, grid), pi_weights(factors, grid), grid);
}

IterativeReport solve_poisson_iterative(const std::vector<double>& f, const OuFactor1d& factor,
                                        const FactorGrid& grid, const IterativeOptions& opts) {
    return iterative_impl(f, build_generator(factor, grid), pi_weights(factor, grid), grid,
                          factor.lambda, opts);
}

IterativeReport solve_poisson_iterative(const std::vector<double>& f, const OuFactorParams& factors,
                                        const FactorGrid& grid, const IterativeOptions& opts) {
    return iterative_impl(f, build_generator(factors, grid), pi_weights(factors, grid), grid,
                          std::min(factors.lambda1, factors.lambda2), opts);
}

Reduced1d reduce_to_1d(CorrectorSource which, const ModelParams& params, int quad_nodes) {
    params.validate();
    Reduced1d out;
    GaussHermite gh(quad_nodes);
    if (which == CorrectorSource::phi0) {
        out.factor = {params.factors.lambda1, params.factors.m1, params.factors.eta1};
        const double sd = out.factor.stationary_sd();
        const double inv_phi = 1.0 / params.phi;
        auto g = [params, inv_phi](double y) { return std::pow(params.kappa_map(y), -inv_phi); };
        double avg = 0.0;
        for (size_t i = 0; i < gh.nodes.size(); ++i)
            avg += gh.weights[i] * g(out.factor.m + sd * gh.nodes[i]);
        out.centered_mean = avg;
        out.source = [g, avg](double y) { return avg - g(y); };
    } else {
        out.factor = {params.factors.lambda2, params.factors.m2, params.factors.eta2};
        const double sd = out.factor.stationary_sd();
        const double p = 1.0 + params.phi;
        auto g = [params, p](double y) { return std::pow(params.sigma_map(y), p); };
        double avg = 0.0;
        for (size_t i = 0; i < gh.nodes.size(); ++i)
            avg += gh.weights[i] * g(out.factor.m + sd * gh.nodes[i]);
        out.centered_mean = avg;
        out.source = [g, avg](double y) { return g(y) - avg; };
    }
    return out;
}

double corrector_span_sd(const ModelParams& params, CorrectorSource which, int quad_nodes) {
    const PiQuadrature quad(stationary_covariance(params.factors), quad_nodes);
    const auto& f = params.factors;
    const double reach =
        which == CorrectorSource::phi0 ? quad.reach1() : quad.reach2();
    const double sd = which == CorrectorSource::phi0
                          ? OuFactor1d{f.lambda1, f.m1, f.eta1}.stationary_sd()
                          : OuFactor1d{f.lambda2, f.m2, f.eta2}.stationary_sd();
    return std::max(5.0, reach / sd + 1.0);
}

PoissonSolution solve_corrector(CorrectorSource which, const ModelParams& params,
                                const FactorGrid& grid, int quad_nodes) {
    const Reduced1d red = reduce_to_1d(which, params, quad_nodes);
    std::vector<double> f(grid.size());
    for (int i = 0; i < grid.n[0]; ++i) f[i] = red.source(grid.node(0, i));
    const std::vector<double> w = pi_weights(red.factor, grid);
    const double m = weighted_mean(w, f);
    for (double& v : f) v -= m;  // discrete compatibility, exact on the grid
    return solve_poisson_direct(f, red.factor, grid);
}

}  // namespace fastexec
