#include "fastexec/z0.hpp"

#include <algorithm>
#include <cmath>

#include "fastexec/errors.hpp"

namespace fastexec {

double Z0Curve::eval(double t) const {
    const double T = times.back();
    t = std::clamp(t, 0.0, T);
    const double h = times[1] - times[0];
    const double s = t / h;
    const int i = std::min(static_cast<int>(s), static_cast<int>(times.size()) - 2);
    const double w = s - i;
    return (1.0 - w) * values[i] + w * values[i + 1];
}

Z0Curve solve_z0(const ModelParams& params, const AveragedCoefficients& coeffs, int n_steps) {
    params.validate();
    if (n_steps < 16) throw DataError("solve_z0: need n_steps >= 16");
    if (!std::isfinite(coeffs.avg_kappa_neg) || !std::isfinite(coeffs.avg_sigma_pow))
        throw NumericError("solve_z0: non-finite averaged coefficients");

    const double K = coeffs.avg_kappa_neg;
    const double S = params.gamma * coeffs.avg_sigma_pow;
    const double p = 1.0 + 1.0 / params.phi;

    Z0Curve curve;
    curve.coeffs = coeffs;
    curve.stationary_level =
        (params.gamma == 0.0)
            ? 0.0
            : std::pow(S / (params.phi * K), params.phi / (params.phi + 1.0));

    const double lo = std::min(params.A, curve.stationary_level);
    const double hi = std::max(params.A, curve.stationary_level);
    const double slack = 1e-9 * std::max(1.0, hi);

    auto rhs = [&](double z) { return S - params.phi * K * std::pow(std::abs(z), p); };

    const double dt = params.T / n_steps;
    curve.times.resize(n_steps + 1);
    curve.values.resize(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i) curve.times[i] = i * dt;
    curve.values[n_steps] = -params.A;

    for (int i = n_steps; i > 0; --i) {
        const double z = curve.values[i];
        const double h = -dt;  // stepping backward in time
        const double k1 = rhs(z);
        const double k2 = rhs(z + 0.5 * h * k1);
        const double k3 = rhs(z + 0.5 * h * k2);
        const double k4 = rhs(z + h * k3);
        const double znew = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double u = -znew;
        if (!(u >= lo - slack && u <= hi + slack))
            throw NumericError("solve_z0: ODE bracket violation at t=" +
                               std::to_string(curve.times[i - 1]) +
                               " (bad coefficients or too-coarse grid)");
        curve.values[i - 1] = znew;
    }
    return curve;
}

double z0_closed_form_phi1(const ModelParams& params, const AveragedCoefficients& coeffs,
                           double t) {
    if (params.phi != 1.0) throw DataError("z0_closed_form_phi1: requires phi = 1");
    if (!(params.gamma > 0.0)) throw DataError("z0_closed_form_phi1: requires gamma > 0");
    const double g = params.gamma * coeffs.avg_sigma_pow;  // gamma <sigma^2>
    const double k = coeffs.avg_kappa_neg;                 // <1/kappa>
    const double level = std::sqrt(g / k);                 // stationary -z0
    const double rate = std::sqrt(g * k);
    const double ratio = (params.A - level) / (params.A + level);
    const double e = std::exp(2.0 * rate * (params.T - t));
    return -level * (e + ratio) / (e - ratio);
}

double z0_closed_form_gamma0(const ModelParams& params, const AveragedCoefficients& coeffs,
                             double t) {
    const double K = coeffs.avg_kappa_neg;
    const double inv_phi = 1.0 / params.phi;
    return -std::pow(std::pow(params.A, -inv_phi) + K * (params.T - t), -params.phi);
}

double nu0(double t, double q, double y1, const Z0Curve& curve, const ModelParams& params) {
    if (q == 0.0) return 0.0;
    const double gain = std::pow(-curve.eval(t) / params.kappa_map(y1), 1.0 / params.phi);
    return -gain * q;
}

}  // namespace fastexec
