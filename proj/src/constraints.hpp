#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "features.hpp"
#include "polynomial.hpp"

namespace shapefit {

enum class ConstraintKind {
   LowerBound,
   UpperBound,
   MonotoneIncreasing,
   MonotoneDecreasing,
   Convex,
   Concave,
   Rebound,
};

std::string_view to_string(ConstraintKind kind);
std::optional<ConstraintKind> parse_constraint_kind(std::string_view name);

/// One shape constraint g(w, x) <= 0 required for every x in the unit cube.
///
/// Rebound is the headroom surrogate  d_j y(x) <= rho * (cap - y(x)): the
/// slope along axis j may not exceed rho times the distance below the cap.
/// `relax` loosens the constraint by subtracting a constant from g.
struct ShapeConstraint {
   ConstraintKind kind = ConstraintKind::UpperBound;
   std::optional<int> axis;
   double level = 0.0;
   double rebound_factor = 0.0;
   double rebound_cap = 0.0;
   double relax = 0.0;

   static ShapeConstraint lower_bound(double level);
   static ShapeConstraint upper_bound(double level);
   static ShapeConstraint increasing(int axis);
   static ShapeConstraint decreasing(int axis);
   static ShapeConstraint convex(int axis);
   static ShapeConstraint concave(int axis);
   static ShapeConstraint rebound(int axis, double rho, double cap);

   bool needs_axis() const;

   /// Throws invalid_argument unless the record is consistent for input dimension d.
   void validate(int input_dim) const;

   std::string describe() const;

   friend bool operator==(const ShapeConstraint&, const ShapeConstraint&) = default;
};

/// The constraint at one fixed x, as an affine inequality a^T w <= b.
struct ConstraintRow {
   Eigen::VectorXd a;
   double b = 0.0;
};

ConstraintRow linearize(const ShapeConstraint& c, const FeatureMap& fm, std::span<const double> x);

/// g(w, x) = a(x)^T w - b(x); non-positive means satisfied at x.
double evaluate_constraint(const ShapeConstraint& c, const FeatureMap& fm, const Eigen::VectorXd& w,
                           std::span<const double> x);

/// g(w, .) as an explicit polynomial in x (including the constant -b).
Polynomial constraint_polynomial(const ShapeConstraint& c, const FeatureMap& fm, const Eigen::VectorXd& w);

/// Model polynomial x -> w^T phi(x).
Polynomial model_polynomial(const FeatureMap& fm, const Eigen::VectorXd& w);

} // namespace shapefit
