#include "fastexec/model.hpp"

#include <cmath>

#include "fastexec/errors.hpp"

namespace fastexec {

namespace {

double marginal_average(const OuFactor1d& factor, const std::function<double(double)>& f,
                        int nodes) {
    GaussHermite gh(nodes);
    const double sd = factor.stationary_sd();
    double acc = 0.0;
    for (size_t i = 0; i < gh.nodes.size(); ++i) {
        const double v = f(factor.m + sd * gh.nodes[i]);
        if (!std::isfinite(v)) throw NumericError("pi_average: integrand non-finite");
        acc += gh.weights[i] * v;
    }
    return acc;
}

}  // namespace

double pi_average(const ModelParams& params, const std::function<double(double, double)>& f,
                  int nodes, ModelMode mode) {
    const auto& fac = params.factors;
    switch (mode) {
        case ModelMode::two_factor: {
            PiQuadrature quad(stationary_covariance(fac), nodes);
            return quad.average(f);
        }
        case ModelMode::kappa_only:
            return marginal_average({fac.lambda1, fac.m1, fac.eta1},
                                    [&](double y1) { return f(y1, fac.m2); }, nodes);
        case ModelMode::sigma_only:
            return marginal_average({fac.lambda2, fac.m2, fac.eta2},
                                    [&](double y2) { return f(fac.m1, y2); }, nodes);
    }
    throw DataError("pi_average: bad mode");
}

AveragedCoefficients averaged_base_coefficients(const ModelParams& params, int nodes,
                                                ModelMode mode) {
    params.validate();
    const double inv_phi = 1.0 / params.phi;
    const double pow_sigma = 1.0 + params.phi;
    AveragedCoefficients c;
    c.quad_nodes = nodes;
    if (mode == ModelMode::sigma_only) {
        c.avg_kappa_neg = std::pow(params.kappa_map(params.factors.m1), -inv_phi);
    } else {
        c.avg_kappa_neg = pi_average(
            params, [&](double y1, double) { return std::pow(params.kappa_map(y1), -inv_phi); },
            nodes, mode);
    }
    if (mode == ModelMode::kappa_only) {
        c.avg_sigma_pow = std::pow(params.sigma_map(params.factors.m2), pow_sigma);
    } else {
        c.avg_sigma_pow = pi_average(
            params, [&](double, double y2) { return std::pow(params.sigma_map(y2), pow_sigma); },
            nodes, mode);
    }
    return c;
}

AveragedCoefficients averaged_coefficients(const ModelParams& params, const PoissonSolution& phi0,
                                           const PoissonSolution& phi1, int nodes,
                                           ModelMode mode) {
    AveragedCoefficients c = averaged_base_coefficients(params, nodes, mode);
    const double inv_phi = 1.0 / params.phi;

    auto eval_checked = [](const PoissonSolution& sol, double y, const char* name) {
        bool clamped = false;
        const double v = sol.eval1(y, &clamped);
        if (clamped)
            throw NumericError(std::string("averaged_coefficients: quadrature node outside the ") +
                               name + " grid; enlarge the corrector grid");
        return v;
    };

    c.avg_phi0_over_kappa = pi_average(
        params,
        [&](double y1, double) {
            return eval_checked(phi0, y1, "phi0") * std::pow(params.kappa_map(y1), -inv_phi);
        },
        nodes, mode);
    if (mode == ModelMode::kappa_only) {
        // sigma frozen: the phi1 corrector vanishes identically.
        c.avg_phi1_over_kappa = 0.0;
    } else {
        c.avg_phi1_over_kappa = pi_average(
            params,
            [&](double y1, double y2) {
                return eval_checked(phi1, y2, "phi1") * std::pow(params.kappa_map(y1), -inv_phi);
            },
            nodes, mode);
    }
    return c;
}

}  // namespace fastexec
