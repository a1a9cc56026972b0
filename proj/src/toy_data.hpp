#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "constraints.hpp"
#include "dataset.hpp"

namespace shapefit::toy {

inline constexpr int input_dim = 5;
inline constexpr double default_sigma = 0.03408;

struct ToySpec {
   double sigma = default_sigma;
   int n_train = 30;
   std::uint64_t seed = 0;
};

/// Separable test function on [0,1]^5:
///   0.1 + 0.12 (x1 - 0.5)^3 + 0.002 / (x2 + 0.1)^2 + 0.1 (x3 - 0.6)^2 (x3 - 2.4)^2
///       + 0.02 (x4 - 0.6)^2 (x4 - 2.4)^2 + 0.02 (x5 - 1.1)^2 (x5 - 3)^2
double eval(std::span<const double> x);

/// Univariate summand f_i (axis 0..4) and its derivatives of order 0, 1 or 2.
double component(int axis, double t, int order = 0);

/// order-th partial derivative of eval() along one axis.
double partial(std::span<const double> x, int axis, int order);

/// Uniform inputs on the unit cube, outputs eval(x) + N(0, sigma^2).
Dataset sample(const ToySpec& spec);

/// Shape constraints that eval() satisfies on the whole cube:
/// increasing in x1, decreasing and convex in x2, bounded by 0 and 1.
std::vector<ShapeConstraint> constraints();

} // namespace shapefit::toy
