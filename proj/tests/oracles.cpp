#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/LU>

namespace oracle {

std::vector<std::vector<int>> multi_indices(std::span<const int> degrees)
{
   const int d = static_cast<int>(degrees.size());
   const int cap = *std::max_element(degrees.begin(), degrees.end());
   std::vector<std::vector<int>> out;
   std::vector<int> a(static_cast<std::size_t>(d), 0);
   while (true) {
      if (std::accumulate(a.begin(), a.end(), 0) <= cap) {
         out.push_back(a);
      }
      int j = d - 1;
      while (j >= 0 && a[static_cast<std::size_t>(j)] == degrees[static_cast<std::size_t>(j)]) {
         a[static_cast<std::size_t>(j)] = 0;
         --j;
      }
      if (j < 0) {
         break;
      }
      ++a[static_cast<std::size_t>(j)];
   }
   return out;
}

std::size_t feature_count(std::span<const int> degrees)
{
   // Counting DP over axes: ways[t] = number of partial vectors with total t.
   const int cap = *std::max_element(degrees.begin(), degrees.end());
   std::vector<std::size_t> ways(static_cast<std::size_t>(cap) + 1, 0);
   ways[0] = 1;
   for (int dj : degrees) {
      std::vector<std::size_t> next(ways.size(), 0);
      for (int t = 0; t <= cap; ++t) {
         for (int e = 0; e <= dj && t + e <= cap; ++e) {
            next[static_cast<std::size_t>(t + e)] += ways[static_cast<std::size_t>(t)];
         }
      }
      ways = next;
   }
   return std::accumulate(ways.begin(), ways.end(), std::size_t{0});
}

double monomial(std::span<const int> exponents, std::span<const double> x)
{
   double v = 1.0;
   for (std::size_t j = 0; j < exponents.size(); ++j) {
      for (int k = 0; k < exponents[j]; ++k) {
         v *= x[j];
      }
   }
   return v;
}

double central_difference(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                          int axis, int order, double h)
{
   std::vector<double> p(x.begin(), x.end());
   std::vector<double> m(x.begin(), x.end());
   p[static_cast<std::size_t>(axis)] += h;
   m[static_cast<std::size_t>(axis)] -= h;
   if (order == 1) {
      return (f(p) - f(m)) / (2.0 * h);
   }
   return (f(p) - 2.0 * f(x) + f(m)) / (h * h);
}

QpResult brute_force_qp(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets, double lambda,
                        const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi)
{
   const Eigen::Index m = design.cols();
   // Stack rows and box sides into one inequality system G w <= h.
   Eigen::MatrixXd G(A.rows() + 2 * m, m);
   Eigen::VectorXd h(A.rows() + 2 * m);
   G.topRows(A.rows()) = A;
   h.head(A.rows()) = b;
   for (Eigen::Index i = 0; i < m; ++i) {
      G.row(A.rows() + 2 * i).setZero();
      G(A.rows() + 2 * i, i) = 1.0;
      h(A.rows() + 2 * i) = hi(i);
      G.row(A.rows() + 2 * i + 1).setZero();
      G(A.rows() + 2 * i + 1, i) = -1.0;
      h(A.rows() + 2 * i + 1) = -lo(i);
   }
   const Eigen::MatrixXd P =
      2.0 * (design.transpose() * design + lambda * Eigen::MatrixXd::Identity(m, m));
   const Eigen::VectorXd c = -2.0 * design.transpose() * targets;
   const auto objective = [&](const Eigen::VectorXd& w) {
      return (design * w - targets).squaredNorm() + lambda * w.squaredNorm();
   };

   QpResult best;
   best.objective = std::numeric_limits<double>::infinity();
   const Eigen::Index k = G.rows();
   const unsigned long long subsets = 1ULL << k;
   for (unsigned long long mask = 0; mask < subsets; ++mask) {
      std::vector<Eigen::Index> act;
      for (Eigen::Index i = 0; i < k; ++i) {
         if (mask >> i & 1ULL) {
            act.push_back(i);
         }
      }
      if (static_cast<Eigen::Index>(act.size()) > m) {
         continue;
      }
      const auto na = static_cast<Eigen::Index>(act.size());
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + na, m + na);
      Eigen::VectorXd rhs(m + na);
      K.topLeftCorner(m, m) = P;
      rhs.head(m) = -c;
      for (Eigen::Index r = 0; r < na; ++r) {
         K.block(0, m + r, m, 1) = G.row(act[static_cast<std::size_t>(r)]).transpose();
         K.block(m + r, 0, 1, m) = G.row(act[static_cast<std::size_t>(r)]);
         rhs(m + r) = h(act[static_cast<std::size_t>(r)]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
      if (!lu.isInvertible()) {
         continue;
      }
      const Eigen::VectorXd sol = lu.solve(rhs);
      const Eigen::VectorXd w = sol.head(m);
      const Eigen::VectorXd mu = sol.tail(na);  // P w + c + G_S^T mu = 0
      if (na > 0 && mu.minCoeff() < -1e-9) {
         continue;
      }
      if (((G * w - h).array() > 1e-9).any()) {
         continue;
      }
      const double f = objective(w);
      if (f < best.objective) {
         best = {true, w, f};
      }
   }
   return best;
}

GridMax dense_grid_max(const std::function<double(std::span<const double>)>& f, int d, int n)
{
   GridMax best;
   best.value = -std::numeric_limits<double>::infinity();
   std::vector<int> idx(static_cast<std::size_t>(d), 0);
   std::vector<double> x(static_cast<std::size_t>(d), 0.0);
   while (true) {
      for (int j = 0; j < d; ++j) {
         x[static_cast<std::size_t>(j)] = static_cast<double>(idx[static_cast<std::size_t>(j)]) / (n - 1);
      }
      const double v = f(x);
      if (v > best.value) {
         best = {x, v};
      }
      int j = d - 1;
      while (j >= 0 && idx[static_cast<std::size_t>(j)] == n - 1) {
         idx[static_cast<std::size_t>(j)] = 0;
         --j;
      }
      if (j < 0) {
         break;
      }
      ++idx[static_cast<std::size_t>(j)];
   }
   return best;
}

std::vector<double> nearest_distances(const Eigen::MatrixXd& pool, const Eigen::MatrixXd& data)
{
   std::vector<double> out;
   for (Eigen::Index i = 0; i < pool.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < data.rows(); ++r) {
         best = std::min(best, (pool.row(i) - data.row(r)).norm());
      }
      out.push_back(best);
   }
   return out;
}

double sample_std(std::span<const double> v)
{
   const double n = static_cast<double>(v.size());
   double mean = 0.0;
   for (double x : v) {
      mean += x / n;
   }
   double ss = 0.0;
   for (double x : v) {
      ss += (x - mean) * (x - mean);
   }
   return std::sqrt(ss / (n - 1.0));
}

} // namespace oracle
