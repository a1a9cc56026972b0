#include "constraints.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace shapefit {

namespace {

constexpr std::array<std::pair<ConstraintKind, std::string_view>, 7> kind_names{{
   {ConstraintKind::LowerBound, "lower_bound"},
   {ConstraintKind::UpperBound, "upper_bound"},
   {ConstraintKind::MonotoneIncreasing, "increasing"},
   {ConstraintKind::MonotoneDecreasing, "decreasing"},
   {ConstraintKind::Convex, "convex"},
   {ConstraintKind::Concave, "concave"},
   {ConstraintKind::Rebound, "rebound"},
}};

// g(w, x) = sum_t coef_t * (d^order_t / dx_axis^order_t) y_w(x) - b.
struct LinearForm {
   struct Term {
      double coef;
      int order;
   };
   std::vector<Term> terms;
   double b;
};

LinearForm linear_form(const ShapeConstraint& c)
{
   const double r = c.relax;
   switch (c.kind) {
   case ConstraintKind::UpperBound:
      return {{{1.0, 0}}, c.level + r};
   case ConstraintKind::LowerBound:
      return {{{-1.0, 0}}, -c.level + r};
   case ConstraintKind::MonotoneIncreasing:
      return {{{-1.0, 1}}, r};
   case ConstraintKind::MonotoneDecreasing:
      return {{{1.0, 1}}, r};
   case ConstraintKind::Convex:
      return {{{-1.0, 2}}, r};
   case ConstraintKind::Concave:
      return {{{1.0, 2}}, r};
   case ConstraintKind::Rebound:
      return {{{1.0, 1}, {c.rebound_factor, 0}}, c.rebound_factor * c.rebound_cap + r};
   }
   fail(ErrorCode::invalid_argument, "unknown constraint kind");
}

void check_axis(const ShapeConstraint& c, const FeatureMap& fm)
{
   if (c.needs_axis()) {
      require(c.axis.has_value(), std::string(to_string(c.kind)) + " constraint requires an axis");
      require(*c.axis >= 0 && *c.axis < fm.input_dim(),
              std::string(to_string(c.kind)) + " constraint axis out of range");
   }
}

} // namespace

std::string_view to_string(ConstraintKind kind)
{
   for (const auto& [k, name] : kind_names) {
      if (k == kind) {
         return name;
      }
   }
   return "unknown";
}

std::optional<ConstraintKind> parse_constraint_kind(std::string_view name)
{
   for (const auto& [k, n] : kind_names) {
      if (n == name) {
         return k;
      }
   }
   return std::nullopt;
}

ShapeConstraint ShapeConstraint::lower_bound(double level)
{
   ShapeConstraint c;
   c.kind = ConstraintKind::LowerBound;
   c.level = level;
   return c;
}

ShapeConstraint ShapeConstraint::upper_bound(double level)
{
   ShapeConstraint c;
   c.kind = ConstraintKind::UpperBound;
   c.level = level;
   return c;
}

ShapeConstraint ShapeConstraint::increasing(int axis)
{
   ShapeConstraint c;
   c.kind = ConstraintKind::MonotoneIncreasing;
   c.axis = axis;
   return c;
}

ShapeConstraint ShapeConstraint::decreasing(int axis)
{
   ShapeConstraint c;
   c.kind = ConstraintKind::MonotoneDecreasing;
   c.axis = axis;
   return c;
}

ShapeConstraint ShapeConstraint::convex(int axis)
{
   ShapeConstraint c;
   c.kind = ConstraintKind::Convex;
   c.axis = axis;
   return c;
}

ShapeConstraint ShapeConstraint::concave(int axis)
{
   ShapeConstraint c;
   c.kind = ConstraintKind::Concave;
   c.axis = axis;
   return c;
}

ShapeConstraint ShapeConstraint::rebound(int axis, double rho, double cap)
{
   ShapeConstraint c;
   c.kind = ConstraintKind::Rebound;
   c.axis = axis;
   c.rebound_factor = rho;
   c.rebound_cap = cap;
   return c;
}

bool ShapeConstraint::needs_axis() const
{
   return kind != ConstraintKind::LowerBound && kind != ConstraintKind::UpperBound;
}

void ShapeConstraint::validate(int input_dim) const
{
   const std::string name(to_string(kind));
   if (needs_axis()) {
      require(axis.has_value(), name + " constraint requires an axis");
      require(*axis >= 0 && *axis < input_dim,
              name + " constraint axis " + std::to_string(*axis) + " out of range for " +
                 std::to_string(input_dim) + " inputs");
   }
   require(std::isfinite(level) && std::isfinite(rebound_cap) && std::isfinite(relax) &&
              std::isfinite(rebound_factor),
           name + " constraint has a non-finite parameter");
   require(kind != ConstraintKind::Rebound || rebound_factor >= 0.0, "rebound factor must be non-negative");
   require(relax >= 0.0, "relaxation must be non-negative");
}

std::string ShapeConstraint::describe() const
{
   std::ostringstream os;
   os << to_string(kind);
   if (axis) {
      os << " axis " << *axis;
   }
   if (kind == ConstraintKind::LowerBound || kind == ConstraintKind::UpperBound) {
      os << " level " << level;
   }
   if (kind == ConstraintKind::Rebound) {
      os << " rho " << rebound_factor << " cap " << rebound_cap;
   }
   if (relax > 0.0) {
      os << " relax " << relax;
   }
   return os.str();
}

ConstraintRow linearize(const ShapeConstraint& c, const FeatureMap& fm, std::span<const double> x)
{
   check_axis(c, fm);
   const LinearForm form = linear_form(c);
   ConstraintRow row{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fm.dimension())), form.b};
   for (const auto& term : form.terms) {
      if (term.coef == 0.0) {
         continue;
      }
      if (term.order == 0) {
         row.a += term.coef * fm.eval(x);
      } else {
         row.a += term.coef * fm.derivative(x, *c.axis, term.order);
      }
   }
   return row;
}

double evaluate_constraint(const ShapeConstraint& c, const FeatureMap& fm, const Eigen::VectorXd& w,
                           std::span<const double> x)
{
   require(static_cast<std::size_t>(w.size()) == fm.dimension(), "weight vector has wrong dimension");
   const ConstraintRow row = linearize(c, fm, x);
   return row.a.dot(w) - row.b;
}

Polynomial constraint_polynomial(const ShapeConstraint& c, const FeatureMap& fm, const Eigen::VectorXd& w)
{
   check_axis(c, fm);
   require(static_cast<std::size_t>(w.size()) == fm.dimension(), "weight vector has wrong dimension");
   const LinearForm form = linear_form(c);
   Polynomial p(fm.degrees());
   std::vector<int> reduced(static_cast<std::size_t>(fm.input_dim()));
   for (const auto& term : form.terms) {
      if (term.coef == 0.0) {
         continue;
      }
      for (std::size_t i = 0; i < fm.dimension(); ++i) {
         const auto& alpha = fm.indices()[i];
         reduced = alpha;
         double factor = term.coef * w[static_cast<Eigen::Index>(i)];
         if (term.order > 0) {
            const auto j = static_cast<std::size_t>(*c.axis);
            if (alpha[j] < term.order) {
               continue;
            }
            factor *= falling_factorial(alpha[j], term.order);
            reduced[j] -= term.order;
         }
         p.add(reduced, factor);
      }
   }
   p.add(std::vector<int>(static_cast<std::size_t>(fm.input_dim()), 0), -form.b);
   return p;
}

Polynomial model_polynomial(const FeatureMap& fm, const Eigen::VectorXd& w)
{
   require(static_cast<std::size_t>(w.size()) == fm.dimension(), "weight vector has wrong dimension");
   Polynomial p(fm.degrees());
   for (std::size_t i = 0; i < fm.dimension(); ++i) {
      p.add(fm.indices()[i], w[static_cast<Eigen::Index>(i)]);
   }
   return p;
}

} // namespace shapefit
