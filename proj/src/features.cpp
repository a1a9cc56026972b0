#include "features.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "error.hpp"

namespace shapefit {

double falling_factorial(int a, int k)
{
   if (k > a) {
      return 0.0;
   }
   double result = 1.0;
   for (int i = 0; i < k; ++i) {
      result *= static_cast<double>(a - i);
   }
   return result;
}

namespace {

// Per-axis power table: table[j][k] = x_j^k for k <= degrees[j].
std::vector<std::vector<double>> power_table(std::span<const double> x, std::span<const int> degrees)
{
   std::vector<std::vector<double>> table(degrees.size());
   for (std::size_t j = 0; j < degrees.size(); ++j) {
      auto& row = table[j];
      row.resize(static_cast<std::size_t>(degrees[j]) + 1);
      row[0] = 1.0;
      for (int k = 1; k <= degrees[j]; ++k) {
         row[k] = row[k - 1] * x[j];
      }
   }
   return table;
}

} // namespace

FeatureMap FeatureMap::enumerate(std::span<const int> degrees)
{
   require(!degrees.empty(), "feature map needs at least one input dimension");
   for (int deg : degrees) {
      require(deg >= 0, "polynomial degrees must be non-negative");
   }

   FeatureMap fm;
   fm.degrees_.assign(degrees.begin(), degrees.end());
   fm.max_degree_ = *std::max_element(degrees.begin(), degrees.end());

   const std::size_t d = degrees.size();
   MultiIndex current(d, 0);
   // Odometer over the box of per-axis caps; keep indices within the total-degree cap.
   while (true) {
      int total = std::accumulate(current.begin(), current.end(), 0);
      if (total <= fm.max_degree_) {
         fm.indices_.push_back(current);
      }
      std::size_t j = 0;
      while (j < d && current[j] == degrees[j]) {
         current[j] = 0;
         ++j;
      }
      if (j == d) {
         break;
      }
      ++current[j];
   }

   std::sort(fm.indices_.begin(), fm.indices_.end(), [](const MultiIndex& a, const MultiIndex& b) {
      int ta = std::accumulate(a.begin(), a.end(), 0);
      int tb = std::accumulate(b.begin(), b.end(), 0);
      if (ta != tb) {
         return ta < tb;
      }
      return a > b;
   });
   return fm;
}

void FeatureMap::check_point(std::span<const double> x) const
{
   if (x.size() != degrees_.size()) {
      fail(ErrorCode::invalid_argument,
           "point has dimension " + std::to_string(x.size()) + ", feature map expects " +
              std::to_string(degrees_.size()));
   }
}

Eigen::VectorXd FeatureMap::eval(std::span<const double> x) const
{
   check_point(x);
   auto pw = power_table(x, degrees_);
   Eigen::VectorXd out(static_cast<Eigen::Index>(indices_.size()));
   for (std::size_t i = 0; i < indices_.size(); ++i) {
      double v = 1.0;
      const auto& alpha = indices_[i];
      for (std::size_t j = 0; j < alpha.size(); ++j) {
         v *= pw[j][alpha[j]];
      }
      out[static_cast<Eigen::Index>(i)] = v;
   }
   return out;
}

Eigen::VectorXd FeatureMap::derivative(std::span<const double> x, int axis, int order) const
{
   require(order == 1 || order == 2, "derivative order must be 1 or 2");
   require(axis >= 0 && axis < input_dim(), "derivative axis out of range");
   std::vector<int> orders(degrees_.size(), 0);
   orders[static_cast<std::size_t>(axis)] = order;
   return partial(x, orders);
}

Eigen::VectorXd FeatureMap::partial(std::span<const double> x, std::span<const int> orders) const
{
   check_point(x);
   require(orders.size() == degrees_.size(), "derivative order vector has wrong length");
   auto pw = power_table(x, degrees_);
   Eigen::VectorXd out(static_cast<Eigen::Index>(indices_.size()));
   for (std::size_t i = 0; i < indices_.size(); ++i) {
      const auto& alpha = indices_[i];
      double v = 1.0;
      for (std::size_t j = 0; j < alpha.size() && v != 0.0; ++j) {
         const int k = orders[j];
         if (k > alpha[j]) {
            v = 0.0;
         } else {
            v *= falling_factorial(alpha[j], k) * pw[j][alpha[j] - k];
         }
      }
      out[static_cast<Eigen::Index>(i)] = v;
   }
   return out;
}

Eigen::MatrixXd FeatureMap::design_matrix(const Eigen::MatrixXd& points) const
{
   require(points.cols() == input_dim(), "design points have the wrong number of columns");
   Eigen::MatrixXd phi(points.rows(), static_cast<Eigen::Index>(dimension()));
   std::vector<double> x(degrees_.size());
   for (Eigen::Index k = 0; k < points.rows(); ++k) {
      for (std::size_t j = 0; j < x.size(); ++j) {
         x[j] = points(k, static_cast<Eigen::Index>(j));
      }
      phi.row(k) = eval(x).transpose();
   }
   return phi;
}

} // namespace shapefit
