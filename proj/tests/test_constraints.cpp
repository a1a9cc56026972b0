#include <doctest.h>

#include <cmath>
#include <random>

#include "constraints.hpp"
#include "error.hpp"
#include "oracles.hpp"

using namespace shapefit;

namespace {

struct Fixture {
   FeatureMap fm = FeatureMap::enumerate(std::vector<int>{3, 2, 2});
   Eigen::VectorXd w;

   Fixture()
   {
      std::mt19937_64 rng(11);
      std::normal_distribution<double> n;
      w.resize(static_cast<Eigen::Index>(fm.dimension()));
      for (auto& v : w) {
         v = n(rng);
      }
   }

   double model(std::span<const double> x) const
   {
      double y = 0.0;
      for (std::size_t i = 0; i < fm.dimension(); ++i) {
         y += w[static_cast<Eigen::Index>(i)] * oracle::monomial(fm.indices()[i], x);
      }
      return y;
   }
};

// Reference g(w, x) from the definition of each constraint, using finite differences.
double reference_g(const ShapeConstraint& c, const Fixture& f, std::span<const double> x)
{
   const auto y = [&](std::span<const double> p) { return f.model(p); };
   const int a = c.axis.value_or(0);
   double g = 0.0;
   switch (c.kind) {
   case ConstraintKind::LowerBound:
      g = c.level - y(x);
      break;
   case ConstraintKind::UpperBound:
      g = y(x) - c.level;
      break;
   case ConstraintKind::MonotoneIncreasing:
      g = -oracle::central_difference(y, x, a, 1, 1e-6);
      break;
   case ConstraintKind::MonotoneDecreasing:
      g = oracle::central_difference(y, x, a, 1, 1e-6);
      break;
   case ConstraintKind::Convex:
      g = -oracle::central_difference(y, x, a, 2, 1e-4);
      break;
   case ConstraintKind::Concave:
      g = oracle::central_difference(y, x, a, 2, 1e-4);
      break;
   case ConstraintKind::Rebound:
      g = oracle::central_difference(y, x, a, 1, 1e-6) - c.rebound_factor * (c.rebound_cap - y(x));
      break;
   }
   return g - c.relax;
}

std::vector<ShapeConstraint> all_kinds()
{
   auto relaxed = ShapeConstraint::convex(2);
   relaxed.relax = 0.25;
   return {ShapeConstraint::lower_bound(-0.3), ShapeConstraint::upper_bound(1.2), ShapeConstraint::increasing(0),
           ShapeConstraint::decreasing(1),     ShapeConstraint::convex(0),         ShapeConstraint::concave(2),
           ShapeConstraint::rebound(1, 2.0, 1.5), relaxed};
}

} // namespace

TEST_CASE("linearized constraints match their definitions")
{
   const Fixture f;
   std::mt19937_64 rng(4);
   std::uniform_real_distribution<double> u(0.05, 0.95);
   for (const auto& c : all_kinds()) {
      CAPTURE(c.describe());
      for (int k = 0; k < 6; ++k) {
         const std::vector<double> x = {u(rng), u(rng), u(rng)};
         const double g = evaluate_constraint(c, f.fm, f.w, x);
         CHECK(std::abs(g - reference_g(c, f, x)) < 1e-5);
         const auto row = linearize(c, f.fm, x);
         CHECK(row.a.dot(f.w) - row.b == doctest::Approx(g).epsilon(1e-12));
      }
   }
}

TEST_CASE("constraint polynomial equals pointwise evaluation")
{
   const Fixture f;
   std::mt19937_64 rng(8);
   std::uniform_real_distribution<double> u(0.0, 1.0);
   for (const auto& c : all_kinds()) {
      CAPTURE(c.describe());
      const auto poly = constraint_polynomial(c, f.fm, f.w);
      for (int k = 0; k < 6; ++k) {
         const std::vector<double> x = {u(rng), u(rng), u(rng)};
         CHECK(poly(x) == doctest::Approx(evaluate_constraint(c, f.fm, f.w, x)).epsilon(1e-11));
      }
   }
   const auto mp = model_polynomial(f.fm, f.w);
   const std::vector<double> x = {0.3, 0.1, 0.9};
   CHECK(mp(x) == doctest::Approx(f.model(x)).epsilon(1e-12));
}

TEST_CASE("constraint validation")
{
   CHECK_NOTHROW(ShapeConstraint::increasing(2).validate(3));
   CHECK_THROWS_AS(ShapeConstraint::increasing(3).validate(3), Error);
   ShapeConstraint missing;
   missing.kind = ConstraintKind::Convex;
   CHECK_THROWS_AS(missing.validate(2), Error);
   CHECK_THROWS_AS(ShapeConstraint::rebound(0, -1.0, 1.0).validate(1), Error);
   auto bad = ShapeConstraint::upper_bound(1.0);
   bad.relax = -0.1;
   CHECK_THROWS_AS(bad.validate(1), Error);
   bad.relax = 0.0;
   bad.level = std::nan("");
   CHECK_THROWS_AS(bad.validate(1), Error);
   CHECK_FALSE(ShapeConstraint::lower_bound(0.0).needs_axis());
}

TEST_CASE("constraint kind names round trip")
{
   for (const auto& c : all_kinds()) {
      CHECK(parse_constraint_kind(to_string(c.kind)) == c.kind);
   }
   CHECK_FALSE(parse_constraint_kind("wiggly").has_value());
}
