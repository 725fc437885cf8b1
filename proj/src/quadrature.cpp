#include "fastexec/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "fastexec/errors.hpp"

namespace fastexec {

GaussHermite::GaussHermite(int n) {
    if (n < 2) throw DataError("GaussHermite: need at least 2 nodes");
    // Golub-Welsch on the Jacobi matrix of the monic Hermite recurrence for
    // the N(0,1) weight: zero diagonal, off-diagonal sqrt(k).
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        weights[i] = v0 * v0;  // total mass of N(0,1) is 1
    }
}

PiQuadrature::PiQuadrature(const InvariantGaussian& law, int nodes_per_axis)
    : n_(nodes_per_axis) {
    GaussHermite gh(nodes_per_axis);

    Eigen::Matrix2d cov;
    cov << law.cov[0][0], law.cov[0][1], law.cov[1][0], law.cov[1][1];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw NumericError("PiQuadrature: covariance not positive definite");
    const Eigen::Matrix2d sqrt_cov = es.operatorSqrt();

    y1_.reserve(static_cast<size_t>(n_) * n_);
    y2_.reserve(static_cast<size_t>(n_) * n_);
    w_.reserve(static_cast<size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            const Eigen::Vector2d x(gh.nodes[i], gh.nodes[j]);
            const Eigen::Vector2d y = sqrt_cov * x;
            y1_.push_back(law.mean[0] + y(0));
            y2_.push_back(law.mean[1] + y(1));
            w_.push_back(gh.weights[i] * gh.weights[j]);
            reach1_ = std::max(reach1_, std::abs(y(0)));
            reach2_ = std::max(reach2_, std::abs(y(1)));
        }
    }
}

double PiQuadrature::average(const std::function<double(double, double)>& f) const {
    double acc = 0.0;
    for (size_t i = 0; i < w_.size(); ++i) {
        const double v = f(y1_[i], y2_[i]);
        if (!std::isfinite(v))
            throw NumericError("pi_average: integrand non-finite at quadrature node (y1=" +
                               std::to_string(y1_[i]) + ", y2=" + std::to_string(y2_[i]) + ")");
        acc += w_[i] * v;
    }
    return acc;
}

}  // namespace fastexec
