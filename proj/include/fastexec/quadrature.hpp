#pragma once

#include <functional>
#include <vector>

#include "fastexec/params.hpp"

namespace fastexec {

/// Gauss-Hermite rule in probabilists' normalization: sum_i w_i f(x_i)
/// approximates E[f(X)] for X ~ N(0,1), exact for polynomials of degree
/// <= 2n - 1.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussHermite(int n);

    double max_node() const { return nodes.back(); }
};

/// Tensor quadrature against a correlated bivariate Gaussian. Decorrelation
/// uses the symmetric square root of the covariance, so both factors are
/// treated alike and the construction is deterministic.
class PiQuadrature {
public:
    PiQuadrature(const InvariantGaussian& law, int nodes_per_axis);

    /// E_Pi[f(y1, y2)]. Throws NumericError if f is non-finite at any node.
    double average(const std::function<double(double, double)>& f) const;

    int nodes_per_axis() const { return n_; }
    /// Largest |y_i - mean_i| visited on axis i, in physical units.
    double reach1() const { return reach1_; }
    double reach2() const { return reach2_; }

private:
    int n_;
    std::vector<double> y1_, y2_, w_;  // flattened tensor nodes and weights
    double reach1_ = 0.0, reach2_ = 0.0;
};

inline constexpr int kDefaultQuadratureNodes = 64;

}  // namespace fastexec
