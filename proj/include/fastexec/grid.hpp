#pragma once

#include <array>
#include <vector>

#include "fastexec/params.hpp"

namespace fastexec {

/// Single OU factor, used by the 1D solvers and the reduced reference
/// problems. Rates are the unit-epsilon ones.
struct OuFactor1d {
    double lambda = 1.0;
    double m = 0.0;
    double eta = 1.0;

    double stationary_sd() const;
};

/// Uniform tensor grid over factor space (1 or 2 axes). Node counts are odd
/// so the long-run mean sits on a node.
struct FactorGrid {
    int dims = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 0.0};
    std::array<int, 2> n{3, 1};

    static FactorGrid make_1d(double lo, double hi, int n);
    static FactorGrid make_2d(double lo1, double hi1, int n1, double lo2, double hi2, int n2);
    /// Grid centered on the factor mean spanning +- k_sd stationary sd.
    static FactorGrid make_for_factor(const OuFactor1d& f, double k_sd, int n);
    static FactorGrid make_for_factors(const OuFactorParams& f, double k_sd, int n1, int n2);

    double spacing(int axis) const;
    double node(int axis, int i) const;
    int size() const;
    int index(int i1, int i2 = 0) const { return i1 + n[0] * i2; }
    bool is_boundary(int i1, int i2 = 0) const;

    /// Linear (1D) / bilinear (2D) interpolation of a grid function, clamping
    /// coordinates to the grid box. Sets *clamped when an input was outside.
    double interp1(const std::vector<double>& values, double y, bool* clamped = nullptr) const;
    double interp2(const std::vector<double>& values, double y1, double y2,
                   bool* clamped = nullptr) const;

    void validate() const;
};

}  // namespace fastexec
