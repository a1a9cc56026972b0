#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's own algorithms beyond plain evaluation.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace oracle {

/// Every exponent vector with a_j <= degrees[j] and total degree <= max degree, by
/// brute force over the exponent box, in lexicographic order.
std::vector<std::vector<int>> multi_indices(std::span<const int> degrees);

/// Binomial-style count: number of exponent vectors returned by multi_indices.
std::size_t feature_count(std::span<const int> degrees);

double monomial(std::span<const int> exponents, std::span<const double> x);

/// Central difference of order 1 or 2 along `axis` with step h.
double central_difference(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                          int axis, int order, double h = 1e-4);

struct QpResult {
   bool feasible = false;
   Eigen::VectorXd w;
   double objective = 0.0;
};

/// min |Phi w - y|^2 + lambda |w|^2  s.t.  A w <= b,  lo <= w <= hi
/// by enumerating candidate active sets and keeping the feasible KKT point
/// (unique by strict convexity). Exponential; for tiny instances only.
QpResult brute_force_qp(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets, double lambda,
                        const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi);

struct GridMax {
   std::vector<double> x;
   double value = 0.0;
};

/// Maximum of f over a tensor grid with n nodes per axis on [0,1]^d.
GridMax dense_grid_max(const std::function<double(std::span<const double>)>& f, int d, int n);

/// Euclidean distance from each pool point to its nearest data point (rows).
std::vector<double> nearest_distances(const Eigen::MatrixXd& pool, const Eigen::MatrixXd& data);

/// Sample standard deviation (n - 1 denominator).
double sample_std(std::span<const double> v);

} // namespace oracle
