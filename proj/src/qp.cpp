#include "qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/QR>

#include "error.hpp"

namespace shapefit {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Relative size below which a projected direction counts as zero
// (the new normal lies in the span of the active normals).
constexpr double dependence_tol = 1e-10;

// QR of the transformed active normals B = [L^{-1} n_i].
class ActiveBasis {
public:
   explicit ActiveBasis(Eigen::Index n)
      : n_(n)
   {
   }

   Eigen::Index size() const { return static_cast<Eigen::Index>(ids_.size()); }
   const std::vector<std::size_t>& ids() const { return ids_; }

   void push(std::size_t id, const Eigen::VectorXd& column)
   {
      ids_.push_back(id);
      cols_.push_back(column);
      refactor();
   }

   void erase(Eigen::Index k)
   {
      ids_.erase(ids_.begin() + k);
      cols_.erase(cols_.begin() + k);
      refactor();
   }

   // Least-squares coefficients r of c on the active columns, and the residual c - B r.
   void project(const Eigen::VectorXd& c, Eigen::VectorXd& r, Eigen::VectorXd& residual) const
   {
      if (ids_.empty()) {
         r.resize(0);
         residual = c;
         return;
      }
      r = qr_.solve(c);
      residual = c - matrix_ * r;
   }

   // Solves B^T B mu = rhs.
   Eigen::VectorXd normal_solve(const Eigen::VectorXd& rhs) const
   {
      const Eigen::Index k = size();
      const auto R = qr_.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
      Eigen::VectorXd tmp = R.transpose().solve(rhs);
      return R.solve(tmp);
   }

   const Eigen::MatrixXd& matrix() const { return matrix_; }

private:
   void refactor()
   {
      matrix_.resize(n_, size());
      for (Eigen::Index k = 0; k < size(); ++k) {
         matrix_.col(k) = cols_[static_cast<std::size_t>(k)];
      }
      if (!ids_.empty()) {
         qr_.compute(matrix_);
      }
   }

   Eigen::Index n_;
   std::vector<std::size_t> ids_;
   std::vector<Eigen::VectorXd> cols_;
   Eigen::MatrixXd matrix_;
   Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
};

} // namespace

RidgeQp::RidgeQp(Eigen::MatrixXd design, Eigen::VectorXd targets, double lambda, Eigen::VectorXd lower,
                 Eigen::VectorXd upper)
   : design_(std::move(design)),
     targets_(std::move(targets)),
     lambda_(lambda),
     lower_(std::move(lower)),
     upper_(std::move(upper))
{
   const Eigen::Index m = design_.cols();
   require(design_.rows() == targets_.size(), "design matrix and targets disagree in length");
   require(lower_.size() == m && upper_.size() == m, "parameter box has wrong dimension");
   require(lambda_ > 0.0, "regularization lambda must be positive");
   for (Eigen::Index j = 0; j < m; ++j) {
      require(std::isfinite(lower_[j]) && std::isfinite(upper_[j]) && lower_[j] <= upper_[j],
              "parameter box intervals must be finite and non-empty");
   }

   fixed_w_ = Eigen::VectorXd::Zero(m);
   for (Eigen::Index j = 0; j < m; ++j) {
      if (lower_[j] == upper_[j]) {
         fixed_w_[j] = lower_[j];
      } else {
         free_.push_back(j);
      }
   }

   const Eigen::MatrixXd full_hessian =
      2.0 * (design_.transpose() * design_ + lambda_ * Eigen::MatrixXd::Identity(m, m));
   const Eigen::VectorXd phi_ty = design_.transpose() * targets_;
   const Eigen::VectorXd full_linear = full_hessian * fixed_w_ - 2.0 * phi_ty;
   gradient_scale_ = 1.0 + (phi_ty.size() > 0 ? 2.0 * phi_ty.cwiseAbs().maxCoeff() : 0.0);

   const auto nf = static_cast<Eigen::Index>(free_.size());
   Eigen::MatrixXd h(nf, nf);
   linear_.resize(nf);
   for (Eigen::Index a = 0; a < nf; ++a) {
      linear_[a] = full_linear[free_[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < nf; ++b) {
         h(a, b) = full_hessian(free_[static_cast<std::size_t>(a)], free_[static_cast<std::size_t>(b)]);
      }
   }
   if (nf > 0) {
      hessian_.compute(h);
      transformed_linear_ = hessian_.matrixL().solve(linear_);
   }
}

double RidgeQp::objective(const Eigen::VectorXd& w) const
{
   return ridge_objective(design_, targets_, lambda_, w);
}

double RidgeQp::kkt_residual(std::span<const ConstraintRow> rows, const Eigen::VectorXd& w,
                             const Eigen::VectorXd& multipliers, double shift) const
{
   const Eigen::Index m = lower_.size();
   Eigen::VectorXd grad = 2.0 * (design_.transpose() * (design_ * w - targets_) + lambda_ * w);
   double primal = 0.0;
   double complementarity = 0.0;
   double dual = 0.0;
   for (std::size_t i = 0; i < rows.size(); ++i) {
      const double mu = multipliers[static_cast<Eigen::Index>(i)];
      const double slack = rows[i].b - shift - rows[i].a.dot(w);
      grad += mu * rows[i].a;
      primal = std::max(primal, -slack);
      complementarity = std::max(complementarity, std::abs(mu * slack));
      dual = std::max(dual, -mu);
   }
   double stationarity = 0.0;
   const double box_tol = 1e-9;
   for (Eigen::Index j = 0; j < m; ++j) {
      primal = std::max({primal, lower_[j] - w[j], w[j] - upper_[j]});
      if (lower_[j] == upper_[j]) {
         continue;
      }
      double r = grad[j];
      if (w[j] <= lower_[j] + box_tol) {
         r = std::max(0.0, -grad[j]);
      } else if (w[j] >= upper_[j] - box_tol) {
         r = std::max(0.0, grad[j]);
      }
      stationarity = std::max(stationarity, std::abs(r));
   }
   return std::max({stationarity / gradient_scale_, primal, complementarity, dual});
}

QpSolution RidgeQp::solve(std::span<const ConstraintRow> rows, const QpOptions& opts, double shift,
                          std::span<const std::size_t> warm_start) const
{
   const Eigen::Index m = lower_.size();
   const auto nf = static_cast<Eigen::Index>(free_.size());
   const std::size_t n_rows = rows.size();
   for (const auto& row : rows) {
      require(row.a.size() == m, "constraint row has wrong dimension");
   }

   QpSolution sol;
   sol.row_multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_rows));

   // General rows restricted to free coordinates: slack = rhs - A x.
   Eigen::MatrixXd A(static_cast<Eigen::Index>(n_rows), nf);
   Eigen::VectorXd rhs(static_cast<Eigen::Index>(n_rows));
   Eigen::VectorXd row_norm(static_cast<Eigen::Index>(n_rows));
   for (std::size_t i = 0; i < n_rows; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      for (Eigen::Index a = 0; a < nf; ++a) {
         A(ii, a) = rows[i].a[free_[static_cast<std::size_t>(a)]];
      }
      rhs[ii] = rows[i].b - shift - rows[i].a.dot(fixed_w_);
      row_norm[ii] = std::max(A.row(ii).norm(), 1e-300);
   }

   const std::size_t n_cons = n_rows + 2 * static_cast<std::size_t>(nf);
   // Constraint id -> (normal n, bound e) in the form n^T x >= e.
   auto normal = [&](std::size_t id) {
      Eigen::VectorXd n = Eigen::VectorXd::Zero(nf);
      if (id < n_rows) {
         n = -A.row(static_cast<Eigen::Index>(id)).transpose();
      } else if (id < n_rows + static_cast<std::size_t>(nf)) {
         n[static_cast<Eigen::Index>(id - n_rows)] = 1.0;
      } else {
         n[static_cast<Eigen::Index>(id - n_rows - static_cast<std::size_t>(nf))] = -1.0;
      }
      return n;
   };
   auto bound = [&](std::size_t id) {
      if (id < n_rows) {
         return -rhs[static_cast<Eigen::Index>(id)];
      }
      if (id < n_rows + static_cast<std::size_t>(nf)) {
         return lower_[free_[id - n_rows]];
      }
      return -upper_[free_[id - n_rows - static_cast<std::size_t>(nf)]];
   };
   auto transformed = [&](std::size_t id) -> Eigen::VectorXd { return hessian_.matrixL().solve(normal(id)); };

   auto assemble = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd w = fixed_w_;
      for (Eigen::Index a = 0; a < nf; ++a) {
         w[free_[static_cast<std::size_t>(a)]] = x[a];
      }
      return w;
   };

   Eigen::VectorXd x = Eigen::VectorXd::Zero(nf);
   ActiveBasis active(nf);
   Eigen::VectorXd u;  // multipliers of the active constraints, in active order

   // Equality-constrained optimum over the current active set.
   auto equality_solve = [&]() {
      if (active.size() == 0) {
         x = -hessian_.matrixU().solve(transformed_linear_);
         u.resize(0);
         return;
      }
      Eigen::VectorXd e(active.size());
      for (Eigen::Index k = 0; k < active.size(); ++k) {
         e[k] = bound(active.ids()[static_cast<std::size_t>(k)]);
      }
      u = active.normal_solve(e + active.matrix().transpose() * transformed_linear_);
      x = hessian_.matrixU().solve(active.matrix() * u - transformed_linear_);
   };

   if (nf == 0) {
      // Every coordinate is fixed; only feasibility remains to check.
      Eigen::VectorXd w = fixed_w_;
      for (std::size_t i = 0; i < n_rows; ++i) {
         if (rhs[static_cast<Eigen::Index>(i)] < -opts.feasibility_tol) {
            sol.status = QpStatus::infeasible;
            sol.conflict_rows = {i};
            sol.conflict_involves_box = true;
            sol.certificate = "row " + std::to_string(i) + " is violated by the fixed parameters";
            sol.w = w;
            sol.objective = objective(w);
            return sol;
         }
      }
      sol.w = w;
      sol.objective = objective(w);
      sol.kkt_residual = kkt_residual(rows, w, sol.row_multipliers, shift);
      return sol;
   }

   equality_solve();

   // Warm start: adopt independent rows, then shed negative multipliers until dual feasible.
   if (!warm_start.empty()) {
      Eigen::VectorXd r, residual;
      for (std::size_t id : warm_start) {
         if (id >= n_rows || active.size() >= nf) {
            continue;
         }
         const Eigen::VectorXd c = transformed(id);
         active.project(c, r, residual);
         if (residual.norm() > dependence_tol * c.norm()) {
            active.push(id, c);
         }
      }
      equality_solve();
      while (active.size() > 0) {
         Eigen::Index worst;
         if (u.minCoeff(&worst) >= 0.0) {
            break;
         }
         active.erase(worst);
         equality_solve();
      }
   }

   const int max_iter = opts.max_iterations > 0 ? opts.max_iterations
                                                : 10 * static_cast<int>(n_cons) + 100;
   std::vector<char> is_active(n_cons, 0);
   for (std::size_t id : active.ids()) {
      is_active[id] = 1;
   }

   auto slack = [&](std::size_t id) {
      if (id < n_rows) {
         const auto ii = static_cast<Eigen::Index>(id);
         return rhs[ii] - A.row(ii).dot(x);
      }
      return normal(id).dot(x) - bound(id);
   };

   int iter = 0;
   while (true) {
      // Most violated constraint, rows measured in the metric of their normals.
      std::size_t p = n_cons;
      double worst = 0.0;
      if (n_rows > 0) {
         const Eigen::VectorXd s = rhs - A * x;
         for (std::size_t i = 0; i < n_rows; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            if (!is_active[i] && s[ii] < -opts.feasibility_tol) {
               const double score = s[ii] / row_norm[ii];
               if (score < worst) {
                  worst = score;
                  p = i;
               }
            }
         }
      }
      for (Eigen::Index a = 0; a < nf; ++a) {
         const std::size_t lo_id = n_rows + static_cast<std::size_t>(a);
         const std::size_t hi_id = lo_id + static_cast<std::size_t>(nf);
         const double s_lo = x[a] - lower_[free_[static_cast<std::size_t>(a)]];
         const double s_hi = upper_[free_[static_cast<std::size_t>(a)]] - x[a];
         if (!is_active[lo_id] && s_lo < -opts.feasibility_tol && s_lo < worst) {
            worst = s_lo;
            p = lo_id;
         }
         if (!is_active[hi_id] && s_hi < -opts.feasibility_tol && s_hi < worst) {
            worst = s_hi;
            p = hi_id;
         }
      }
      if (p == n_cons) {
         break;
      }

      const Eigen::VectorXd cp = transformed(p);
      double sp = slack(p);
      double up = 0.0;
      bool added = false;
      while (!added) {
         if (++iter > max_iter) {
            fail(ErrorCode::convergence_failure,
                 "QP iteration budget of " + std::to_string(max_iter) + " exhausted");
         }
         Eigen::VectorXd r, zc;
         active.project(cp, r, zc);
         const double zn = zc.norm();
         const bool zero_step = zn <= dependence_tol * cp.norm();

         double t1 = inf;
         Eigen::Index drop = -1;
         for (Eigen::Index k = 0; k < active.size(); ++k) {
            if (r[k] > 1e-14) {
               const double ratio = u[k] / r[k];
               if (ratio < t1) {
                  t1 = ratio;
                  drop = k;
               }
            }
         }
         const double t2 = zero_step ? inf : -sp / (zn * zn);
         const double t = std::min(t1, t2);

         if (t == inf) {
            sol.status = QpStatus::infeasible;
            sol.conflict_involves_box = p >= n_rows;
            if (p < n_rows) {
               sol.conflict_rows.push_back(p);
            }
            for (Eigen::Index k = 0; k < active.size(); ++k) {
               const std::size_t id = active.ids()[static_cast<std::size_t>(k)];
               if (r[k] < -1e-14) {
                  if (id < n_rows) {
                     sol.conflict_rows.push_back(id);
                  } else {
                     sol.conflict_involves_box = true;
                  }
               }
            }
            std::ostringstream os;
            os << "no parameter vector satisfies";
            for (std::size_t id : sol.conflict_rows) {
               os << " row " << id;
            }
            if (sol.conflict_involves_box) {
               os << " together with the parameter box";
            }
            sol.certificate = os.str();
            sol.w = assemble(x);
            sol.objective = objective(sol.w);
            sol.iterations = iter;
            return sol;
         }

         if (active.size() > 0) {
            u -= t * r;
         }
         up += t;
         if (!zero_step) {
            x += t * hessian_.matrixU().solve(zc);
            sp += t * zn * zn;
         }

         if (t2 <= t1) {
            active.push(p, cp);
            is_active[p] = 1;
            equality_solve();
            added = true;
            // Numerical dust in the refined multipliers.
            u = u.cwiseMax(0.0);
         } else {
            is_active[active.ids()[static_cast<std::size_t>(drop)]] = 0;
            Eigen::VectorXd kept(active.size() - 1);
            for (Eigen::Index k = 0, j = 0; k < active.size(); ++k) {
               if (k != drop) {
                  kept[j++] = u[k];
               }
            }
            active.erase(drop);
            u = kept;
         }
      }
   }

   sol.w = assemble(x);
   sol.objective = objective(sol.w);
   sol.iterations = iter;
   for (Eigen::Index k = 0; k < active.size(); ++k) {
      const std::size_t id = active.ids()[static_cast<std::size_t>(k)];
      if (id < n_rows) {
         sol.row_multipliers[static_cast<Eigen::Index>(id)] = u[k];
         sol.active_rows.push_back(id);
      }
   }
   sol.kkt_residual = kkt_residual(rows, sol.w, sol.row_multipliers, shift);
   return sol;
}

QpSolution solve_qp(const QpInstance& inst, const QpOptions& opts)
{
   require(inst.design.cols() == inst.lower.size(), "parameter box has wrong dimension");
   RidgeQp qp(inst.design, inst.targets, inst.lambda, inst.lower, inst.upper);
   return qp.solve(inst.rows, opts);
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets, double lambda)
{
   require(lambda > 0.0, "regularization lambda must be positive");
   require(design.rows() == targets.size(), "design matrix and targets disagree in length");
   const Eigen::Index m = design.cols();
   const Eigen::MatrixXd normal = design.transpose() * design + lambda * Eigen::MatrixXd::Identity(m, m);
   return normal.llt().solve(design.transpose() * targets);
}

double ridge_objective(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets, double lambda,
                       const Eigen::VectorXd& w)
{
   return (design * w - targets).squaredNorm() + lambda * w.squaredNorm();
}

} // namespace shapefit
