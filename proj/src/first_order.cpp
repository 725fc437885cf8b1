#include "fastexec/first_order.hpp"

#include <algorithm>
#include <cmath>

#include "fastexec/errors.hpp"

namespace fastexec {

namespace {

double interp_on(const std::vector<double>& times, const std::vector<double>& vals, double t) {
    const double T = times.back();
    t = std::clamp(t, 0.0, T);
    const double h = times[1] - times[0];
    const double s = t / h;
    const int i = std::min(static_cast<int>(s), static_cast<int>(times.size()) - 2);
    const double w = s - i;
    return (1.0 - w) * vals[i] + w * vals[i + 1];
}

}  // namespace

double BoundaryLayer::eval_c(double t) const { return interp_on(times, c, t); }

BoundaryLayer boundary_layer(const Z0Curve& z0curve, const AveragedCoefficients& coeffs,
                             const ModelParams& params) {
    const double phi = params.phi;
    const double inv_phi = 1.0 / phi;
    const double K = coeffs.avg_kappa_neg;
    const double P0 = coeffs.avg_phi0_over_kappa;
    const double P1 = coeffs.avg_phi1_over_kappa;

    auto b0_of = [&](double z) { return -(1.0 + phi) * std::pow(-z, inv_phi) * K; };
    auto b1_of = [&](double z) {
        const double u = -z;
        return (1.0 + phi) * std::pow(u, inv_phi) *
               (-phi * std::pow(u, 1.0 + inv_phi) * P0 - params.gamma * P1);
    };

    BoundaryLayer layer;
    layer.times = z0curve.times;
    const int n = static_cast<int>(layer.times.size());
    layer.b0.resize(n);
    layer.b1.resize(n);
    layer.c.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        layer.b0[i] = b0_of(z0curve.values[i]);
        layer.b1[i] = b1_of(z0curve.values[i]);
    }

    // backward RK4 on c' = -b0 c - b1, c(T) = 0
    const double dt = layer.times[1] - layer.times[0];
    for (int i = n - 1; i > 0; --i) {
        const double t = layer.times[i];
        const double zm = z0curve.eval(t - 0.5 * dt);
        const double b0m = b0_of(zm), b1m = b1_of(zm);
        const double b00 = layer.b0[i], b10 = layer.b1[i];
        const double b01 = layer.b0[i - 1], b11 = layer.b1[i - 1];
        auto f = [](double b0, double b1, double c) { return -b0 * c - b1; };
        const double h = -dt;
        const double c = layer.c[i];
        const double k1 = f(b00, b10, c);
        const double k2 = f(b0m, b1m, c + 0.5 * h * k1);
        const double k3 = f(b0m, b1m, c + 0.5 * h * k2);
        const double k4 = f(b01, b11, c + h * k3);
        layer.c[i - 1] = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return layer;
}

FirstOrderField::FirstOrderField(Z0Curve z0curve, PoissonSolution phi0, PoissonSolution phi1,
                                 BoundaryLayer layer, const ModelParams& params, int quad_nodes)
    : z0_(std::move(z0curve)),
      phi0_(std::move(phi0)),
      phi1_(std::move(phi1)),
      layer_(std::move(layer)),
      phi_(params.phi),
      gamma_(params.gamma),
      epsilon_(params.epsilon),
      kappa_lo_(params.kappa_lo),
      kappa_hi_(params.kappa_hi) {
    // Shift each corrector so its quadrature mean under the marginal Gaussian
    // vanishes; the grid solver centers under trapezoid weights, which differ
    // by a discretization-sized constant.
    GaussHermite gh(quad_nodes);
    auto quad_mean = [&](const PoissonSolution& sol, const OuFactor1d& f) {
        const double sd = f.stationary_sd();
        double acc = 0.0;
        for (size_t i = 0; i < gh.nodes.size(); ++i) {
            bool clamped = false;
            const double v = sol.eval1(f.m + sd * gh.nodes[i], &clamped);
            if (clamped)
                throw NumericError(
                    "FirstOrderField: corrector grid does not cover the quadrature nodes");
            acc += gh.weights[i] * v;
        }
        return acc;
    };
    const auto& fac = params.factors;
    const double m0 = quad_mean(phi0_, {fac.lambda1, fac.m1, fac.eta1});
    for (double& v : phi0_.values) v -= m0;
    const double m1 = quad_mean(phi1_, {fac.lambda2, fac.m2, fac.eta2});
    for (double& v : phi1_.values) v -= m1;
}

double FirstOrderField::zbar1(double t, double y1, double y2) const {
    const double z0 = z0_.eval(t);
    const double u = -z0;
    bool clamped = false;
    const double p0 = phi0_.eval1(y1, &clamped);
    const double p1 = gamma_ != 0.0 ? phi1_.eval1(y2, &clamped) : 0.0;
    if (clamped) clamped_.fetch_add(1, std::memory_order_relaxed);
    const double spatial = phi_ * std::pow(u, 1.0 + 1.0 / phi_) * p0 + gamma_ * p1;
    return z0 + epsilon_ * (spatial + layer_.eval_c(t));
}

double FirstOrderField::nu1(double t, double q, double y1, double y2) const {
    const double z = zbar1(t, y1, y2);
    if (z >= 0.0)
        throw NumericError("nu1: correction breaks negativity of zbar1 at t=" + std::to_string(t) +
                           " (epsilon outside the asymptotic regime)");
    if (q == 0.0) return 0.0;
    const double kappa = std::clamp(y1, kappa_lo_, kappa_hi_);
    return -std::pow(-z / kappa, 1.0 / phi_) * q;
}

}  // namespace fastexec
