#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "constraints.hpp"

namespace shapefit {

enum class QpStatus { optimal, infeasible };

struct QpOptions {
   /// Absolute tolerance on row and box violation.
   double feasibility_tol = 1e-9;
   /// Stationarity tolerance, scaled by (1 + |Phi^T y|_inf).
   double stationarity_tol = 1e-8;
   /// Zero means 10 * (rows + 2 m) + 100.
   int max_iterations = 0;
};

struct QpSolution {
   QpStatus status = QpStatus::optimal;
   Eigen::VectorXd w;
   double objective = 0.0;
   double kkt_residual = 0.0;
   /// Multiplier of each row a^T w <= b (zero for inactive rows).
   Eigen::VectorXd row_multipliers;
   /// Rows that are active at the solution, usable as a warm start.
   std::vector<std::size_t> active_rows;
   /// For infeasible instances: rows whose combination proves infeasibility.
   std::vector<std::size_t> conflict_rows;
   bool conflict_involves_box = false;
   std::string certificate;
   int iterations = 0;
};

/// min |Phi w - y|^2 + lambda |w|^2  subject to  rows a^T w <= b  and  lo <= w <= hi.
struct QpInstance {
   Eigen::MatrixXd design;
   Eigen::VectorXd targets;
   double lambda = 1.0;
   std::vector<ConstraintRow> rows;
   Eigen::VectorXd lower;
   Eigen::VectorXd upper;
};

/// Strictly convex ridge QP with a fixed objective and box; rows vary per solve.
///
/// The Hessian is factored once at construction so repeated solves over a
/// growing row set (the discretized subproblems) only pay for the active-set
/// iterations. Coordinates with lo == hi are eliminated.
class RidgeQp {
public:
   RidgeQp(Eigen::MatrixXd design, Eigen::VectorXd targets, double lambda, Eigen::VectorXd lower,
           Eigen::VectorXd upper);

   std::size_t dimension() const { return static_cast<std::size_t>(lower_.size()); }

   /// Solves with every row bound b replaced by b - shift. `warm_start` lists
   /// row indices to try as the initial active set.
   QpSolution solve(std::span<const ConstraintRow> rows, const QpOptions& opts = {}, double shift = 0.0,
                    std::span<const std::size_t> warm_start = {}) const;

   double objective(const Eigen::VectorXd& w) const;

   /// Recomputes the KKT residual of (w, multipliers) from scratch.
   double kkt_residual(std::span<const ConstraintRow> rows, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& multipliers, double shift = 0.0) const;

private:
   Eigen::MatrixXd design_;
   Eigen::VectorXd targets_;
   double lambda_;
   Eigen::VectorXd lower_;
   Eigen::VectorXd upper_;

   std::vector<Eigen::Index> free_;
   Eigen::VectorXd fixed_w_;
   Eigen::LLT<Eigen::MatrixXd> hessian_;  // of the free block of 2 (Phi^T Phi + lambda I)
   Eigen::VectorXd linear_;               // free block of the gradient at w = fixed_w_
   Eigen::VectorXd transformed_linear_;   // L^{-1} linear_
   double gradient_scale_;
};

QpSolution solve_qp(const QpInstance& inst, const QpOptions& opts = {});

/// Solves (Phi^T Phi + lambda I) w = Phi^T y.
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets, double lambda);

double ridge_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets, double lambda,
                       const Eigen::VectorXd& w);

} // namespace shapefit
