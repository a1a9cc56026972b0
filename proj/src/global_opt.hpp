#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "constraints.hpp"
#include "polynomial.hpp"

namespace shapefit {

struct LowerLevelOptions {
   /// Full grid with this many nodes per axis when it fits in `budget`.
   int grid_per_axis = 20;
   /// Evaluation budget of the screening stage; above it Sobol points are used.
   /// Grid scans run by axis-wise contraction, so 20^5 nodes cost about 20 ms.
   std::size_t budget = std::size_t{1} << 22;
   /// Number of screening points refined by local ascent (grid local maxima first).
   int ascent_seeds = 10;
   /// Stop when the projected gradient step is shorter than this.
   double ascent_tol = 1e-10;
   int max_ascent_steps = 500;
   /// Offset into the Sobol sequence.
   std::uint64_t seed = 0;
};

struct LowerLevelCandidate {
   std::vector<double> x;
   double value = 0.0;
};

/// Approximate global maximum of a constraint function over the unit cube.
struct LowerLevelResult {
   std::vector<double> x_star;
   double value = 0.0;
   /// Screening spacing times the largest observed slope.
   double certified_gap = 0.0;
   /// End points of the local ascents, best first.
   std::vector<LowerLevelCandidate> local_maxima;
};

/// Global maximum (t, p(t)) over [0, 1] of ascending coefficients; checks endpoints and critical points.
std::pair<double, double> maximize_univariate(std::span<const double> coefs);

LowerLevelResult maximize_polynomial(const Polynomial& g, const LowerLevelOptions& opts = {});

LowerLevelResult maximize_constraint(const ShapeConstraint& c, const FeatureMap& fm, const Eigen::VectorXd& w,
                                     const LowerLevelOptions& opts = {});

/// Points of the screening stage for input dimension d (row-major n x d).
std::vector<double> screening_samples(int input_dim, const LowerLevelOptions& opts);

} // namespace shapefit
