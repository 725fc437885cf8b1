#pragma once

#include <atomic>
#include <vector>

#include "fastexec/model.hpp"
#include "fastexec/poisson.hpp"
#include "fastexec/z0.hpp"

namespace fastexec {

/// Boundary-layer coefficients on the z0 time grid. c solves the linear ODE
/// c' + b0 c + b1 = 0 with c(T) = 0; b0 < 0 everywhere because z0 < 0.
struct BoundaryLayer {
    std::vector<double> times;
    std::vector<double> b0;
    std::vector<double> b1;
    std::vector<double> c;

    double eval_c(double t) const;
};

BoundaryLayer boundary_layer(const Z0Curve& z0curve, const AveragedCoefficients& coeffs,
                             const ModelParams& params);

/// First-order corrected field
///   zbar1(t, y) = z0(t) + eps (phi |z0|^{1+1/phi} phi0(y1) + gamma phi1(y2) + c(t)).
/// The correctors are shifted at assembly so their quadrature Pi-mean is zero
/// under the same Gauss-Hermite rule used for the averages; this makes the
/// terminal centering <zbar1(T,.) - z0(T)> exact.
class FirstOrderField {
public:
    FirstOrderField(Z0Curve z0curve, PoissonSolution phi0, PoissonSolution phi1,
                    BoundaryLayer layer, const ModelParams& params,
                    int quad_nodes = kDefaultQuadratureNodes);

    double zbar1(double t, double y1, double y2) const;

    /// First-order feedback rate -(-zbar1(t,y)/kappa(y1))^{1/phi} q.
    /// Throws NumericError if zbar1 >= 0 (epsilon outside the asymptotic regime).
    double nu1(double t, double q, double y1, double y2) const;

    const Z0Curve& z0() const { return z0_; }
    const BoundaryLayer& layer() const { return layer_; }
    const PoissonSolution& phi0() const { return phi0_; }
    const PoissonSolution& phi1() const { return phi1_; }
    double epsilon() const { return epsilon_; }
    long clamped_evaluations() const { return clamped_.load(); }

private:
    Z0Curve z0_;
    PoissonSolution phi0_;
    PoissonSolution phi1_;
    BoundaryLayer layer_;
    double phi_;
    double gamma_;
    double epsilon_;
    double kappa_lo_, kappa_hi_;
    mutable std::atomic<long> clamped_{0};
};

}  // namespace fastexec
