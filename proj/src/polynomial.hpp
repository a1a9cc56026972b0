#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shapefit {

/// Dense multivariate polynomial on a box of per-axis exponent caps.
///
/// Coefficients are stored row-major over the exponent box (axis 0 slowest).
/// Point evaluation walks only the non-zero terms; grid evaluation contracts
/// one axis at a time, which is what makes full tensor-grid scans cheap.
class Polynomial {
public:
   Polynomial() = default;
   explicit Polynomial(std::vector<int> degree_caps);

   int input_dim() const { return static_cast<int>(caps_.size()); }
   const std::vector<int>& degree_caps() const { return caps_; }

   /// Adds `coef` to the coefficient of x^exponents.
   void add(std::span<const int> exponents, double coef);
   double coefficient(std::span<const int> exponents) const;

   double operator()(std::span<const double> x) const;

   /// Batch evaluation; `points` is row-major n x d, `out` has n entries.
   void evaluate_points(std::span<const double> points, std::span<double> out) const;

   /// Value and gradient at x; gradient has input_dim() entries.
   double value_and_gradient(std::span<const double> x, std::span<double> gradient) const;

   /// Univariate coefficients (ascending powers) of t -> p(anchor with x_axis = t).
   std::vector<double> restrict_to_axis(std::span<const double> anchor, int axis) const;

   /// Values on the tensor grid nodes[0] x ... x nodes[d-1], row-major with axis 0 slowest.
   std::vector<double> evaluate_grid(const std::vector<std::vector<double>>& nodes) const;

   /// Sum of |coefficient| over non-constant terms; zero iff the polynomial is constant.
   double variation_bound() const;

private:
   std::size_t flat_index(std::span<const int> exponents) const;

   std::vector<int> caps_;
   std::vector<std::size_t> strides_;
   std::vector<double> coefs_;

   struct Term {
      std::vector<int> exponents;
      std::size_t flat;
   };
   // Terms ever touched by add(), in insertion order; term_slot_ maps flat index -> term.
   std::vector<Term> terms_;
   std::vector<int> term_slot_;
};

/// Horner evaluation of ascending-power coefficients.
double horner(std::span<const double> coefs, double t);

} // namespace shapefit
