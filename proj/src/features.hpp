#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace shapefit {

/// Exponent vector of one monomial, one entry per input variable.
using MultiIndex = std::vector<int>;

/// Anisotropic polynomial feature map on the unit cube.
///
/// The basis holds every monomial x^a with a_j <= degrees[j] for each axis and
/// a total degree of at most max_j degrees[j]. Monomials are ordered by
/// ascending total degree, then by descending lexicographic order of the
/// exponent vector, so the constant term is always slot 0 and x_1 precedes
/// x_2 within a degree.
class FeatureMap {
public:
   FeatureMap() = default;

   /// Throws invalid_argument for an empty or negative degree vector.
   static FeatureMap enumerate(std::span<const int> degrees);

   int input_dim() const { return static_cast<int>(degrees_.size()); }
   std::size_t dimension() const { return indices_.size(); }
   const std::vector<int>& degrees() const { return degrees_; }
   const std::vector<MultiIndex>& indices() const { return indices_; }
   int max_degree() const { return max_degree_; }

   /// phi(x); 0^0 is taken as 1.
   Eigen::VectorXd eval(std::span<const double> x) const;

   /// order-th partial derivative of phi along one axis (order 1 or 2).
   Eigen::VectorXd derivative(std::span<const double> x, int axis, int order) const;

   /// Mixed partial derivative of phi; orders[j] is the derivative order in x_j.
   Eigen::VectorXd partial(std::span<const double> x, std::span<const int> orders) const;

   /// Rows phi(x^k) for each row x^k of `points` (n x d).
   Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& points) const;

   friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

private:
   void check_point(std::span<const double> x) const;

   std::vector<int> degrees_;
   std::vector<MultiIndex> indices_;
   int max_degree_ = 0;
};

/// a! / (a - k)!, zero when k > a.
double falling_factorial(int a, int k);

} // namespace shapefit
