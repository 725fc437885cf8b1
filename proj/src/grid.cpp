#include "fastexec/grid.hpp"

#include <algorithm>
#include <cmath>

#include "fastexec/errors.hpp"

namespace fastexec {

double OuFactor1d::stationary_sd() const { return eta / std::sqrt(2.0 * lambda); }

FactorGrid FactorGrid::make_1d(double lo, double hi, int n) {
    FactorGrid g;
    g.dims = 1;
    g.lo = {lo, 0.0};
    g.hi = {hi, 0.0};
    g.n = {n, 1};
    g.validate();
    return g;
}

FactorGrid FactorGrid::make_2d(double lo1, double hi1, int n1, double lo2, double hi2, int n2) {
    FactorGrid g;
    g.dims = 2;
    g.lo = {lo1, lo2};
    g.hi = {hi1, hi2};
    g.n = {n1, n2};
    g.validate();
    return g;
}

FactorGrid FactorGrid::make_for_factor(const OuFactor1d& f, double k_sd, int n) {
    const double r = k_sd * f.stationary_sd();
    return make_1d(f.m - r, f.m + r, n);
}

FactorGrid FactorGrid::make_for_factors(const OuFactorParams& f, double k_sd, int n1, int n2) {
    const double r1 = k_sd * OuFactor1d{f.lambda1, f.m1, f.eta1}.stationary_sd();
    const double r2 = k_sd * OuFactor1d{f.lambda2, f.m2, f.eta2}.stationary_sd();
    return make_2d(f.m1 - r1, f.m1 + r1, n1, f.m2 - r2, f.m2 + r2, n2);
}

double FactorGrid::spacing(int axis) const { return (hi[axis] - lo[axis]) / (n[axis] - 1); }

double FactorGrid::node(int axis, int i) const { return lo[axis] + i * spacing(axis); }

int FactorGrid::size() const { return n[0] * n[1]; }

bool FactorGrid::is_boundary(int i1, int i2) const {
    if (i1 == 0 || i1 == n[0] - 1) return true;
    if (dims == 2 && (i2 == 0 || i2 == n[1] - 1)) return true;
    return false;
}

void FactorGrid::validate() const {
    if (dims != 1 && dims != 2) throw DataError("FactorGrid: dims must be 1 or 2");
    for (int a = 0; a < dims; ++a) {
        if (n[a] < 3 || n[a] % 2 == 0)
            throw DataError("FactorGrid: node counts must be odd and >= 3");
        if (!(lo[a] < hi[a])) throw DataError("FactorGrid: need lo < hi per axis");
    }
}

namespace {

// Clamped cell lookup: index of the left node and the in-cell fraction.
void locate(double lo, double h, int n, double y, int& i, double& t, bool* clamped) {
    double s = (y - lo) / h;
    if (s <= 0.0) {
        if (s < 0.0 && clamped) *clamped = true;
        i = 0;
        t = 0.0;
        return;
    }
    if (s >= n - 1) {
        if (s > n - 1 && clamped) *clamped = true;
        i = n - 2;
        t = 1.0;
        return;
    }
    i = static_cast<int>(s);
    t = s - i;
}

}  // namespace

double FactorGrid::interp1(const std::vector<double>& values, double y, bool* clamped) const {
    int i;
    double t;
    locate(lo[0], spacing(0), n[0], y, i, t, clamped);
    return (1.0 - t) * values[i] + t * values[i + 1];
}

double FactorGrid::interp2(const std::vector<double>& values, double y1, double y2,
                           bool* clamped) const {
    int i, j;
    double t, u;
    locate(lo[0], spacing(0), n[0], y1, i, t, clamped);
    locate(lo[1], spacing(1), n[1], y2, j, u, clamped);
    const double v00 = values[index(i, j)];
    const double v10 = values[index(i + 1, j)];
    const double v01 = values[index(i, j + 1)];
    const double v11 = values[index(i + 1, j + 1)];
    return (1.0 - t) * (1.0 - u) * v00 + t * (1.0 - u) * v10 + (1.0 - t) * u * v01 + t * u * v11;
}

}  // namespace fastexec
