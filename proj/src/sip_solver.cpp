#include "sip_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <boost/random/sobol.hpp>

namespace shapefit {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
   return std::chrono::duration<double>(Clock::now() - start).count();
}

// Discretized constraint rows with the constraint each row came from.
struct Discretization {
   std::vector<std::vector<std::vector<double>>> points;  // per constraint
   std::vector<ConstraintRow> rows;
   std::vector<std::size_t> owner;

   explicit Discretization(std::size_t n_constraints)
      : points(n_constraints)
   {
   }

   bool add(const SipProblem& p, std::size_t i, const std::vector<double>& x)
   {
      for (const auto& q : points[i]) {
         double dist = 0.0;
         for (std::size_t j = 0; j < x.size(); ++j) {
            dist = std::max(dist, std::abs(q[j] - x[j]));
         }
         if (dist <= 1e-12) {
            return false;
         }
      }
      points[i].push_back(x);
      rows.push_back(linearize(p.constraints[i], p.features, x));
      owner.push_back(i);
      return true;
   }

   std::vector<std::size_t> sizes() const
   {
      std::vector<std::size_t> out;
      for (const auto& pts : points) {
         out.push_back(pts.size());
      }
      return out;
   }

   std::vector<std::size_t> owners_of(const std::vector<std::size_t>& row_ids) const
   {
      std::set<std::size_t> ids;
      for (std::size_t r : row_ids) {
         ids.insert(owner[r]);
      }
      return {ids.begin(), ids.end()};
   }
};

std::vector<std::vector<double>> initial_points(int d, const SipOptions& opts)
{
   std::vector<std::vector<double>> pts;
   pts.emplace_back(static_cast<std::size_t>(d), 0.5);
   if (d < 63 && (std::size_t{1} << d) <= opts.initial_points_cap) {
      for (std::size_t c = 0; c < (std::size_t{1} << d); ++c) {
         std::vector<double> x(static_cast<std::size_t>(d));
         for (std::size_t j = 0; j < x.size(); ++j) {
            x[j] = static_cast<double>((c >> j) & 1U);
         }
         pts.push_back(std::move(x));
      }
   } else {
      boost::random::sobol engine(static_cast<unsigned>(d));
      engine.seed(opts.lower_level.seed);
      const double scale = 1.0 / (static_cast<double>(boost::random::sobol::max()) + 1.0);
      for (std::size_t k = 0; k < opts.initial_points_cap; ++k) {
         std::vector<double> x(static_cast<std::size_t>(d));
         for (auto& v : x) {
            v = static_cast<double>(engine()) * scale;
         }
         pts.push_back(std::move(x));
      }
   }
   return pts;
}

std::vector<LowerLevelResult> certify(const SipProblem& p, const Eigen::VectorXd& w, const SipOptions& opts)
{
   std::vector<LowerLevelResult> out;
   out.reserve(p.constraints.size());
   for (const auto& c : p.constraints) {
      out.push_back(maximize_constraint(c, p.features, w, opts.lower_level));
   }
   return out;
}

bool all_within(const std::vector<LowerLevelResult>& certs, double tol)
{
   return std::all_of(certs.begin(), certs.end(), [&](const auto& r) { return r.value <= tol; });
}

std::string describe_conflict(const SipProblem& p, const std::vector<std::size_t>& ids)
{
   std::ostringstream os;
   for (std::size_t k = 0; k < ids.size(); ++k) {
      os << (k ? "; " : "") << "#" << ids[k] << " " << p.constraints[ids[k]].describe();
   }
   return os.str();
}

} // namespace

ParameterBox ParameterBox::symmetric(std::size_t m, double halfwidth)
{
   require(halfwidth > 0.0 && std::isfinite(halfwidth), "box half-width must be positive and finite");
   const auto n = static_cast<Eigen::Index>(m);
   return {Eigen::VectorXd::Constant(n, -halfwidth), Eigen::VectorXd::Constant(n, halfwidth)};
}

SipProblem SipProblem::make(Dataset data, FeatureMap features, std::vector<ShapeConstraint> constraints,
                            double lambda, double box_halfwidth)
{
   SipProblem p;
   p.box = ParameterBox::symmetric(features.dimension(), box_halfwidth);
   p.data = std::move(data);
   p.features = std::move(features);
   p.constraints = std::move(constraints);
   p.lambda = lambda;
   return p;
}

void SipProblem::validate() const
{
   require(data.size() >= 1, "problem needs at least one data point");
   require(data.input_dim() == features.input_dim(), "dataset has " + std::to_string(data.input_dim()) +
                                                        " inputs but the feature map expects " +
                                                        std::to_string(features.input_dim()));
   require(lambda > 0.0, "regularization lambda must be positive");
   require(static_cast<std::size_t>(box.lower.size()) == features.dimension() &&
              static_cast<std::size_t>(box.upper.size()) == features.dimension(),
           "parameter box has wrong dimension");
   for (Eigen::Index k = 0; k < data.inputs.rows(); ++k) {
      for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) {
         const double v = data.inputs(k, j);
         require(v >= 0.0 && v <= 1.0, "training input row " + std::to_string(k + 1) + " lies outside the unit cube");
      }
   }
   for (const auto& c : constraints) {
      c.validate(features.input_dim());
   }
}

std::string_view to_string(SolveMode mode)
{
   switch (mode) {
   case SolveMode::adaptive:
      return "adaptive";
   case SolveMode::grid:
      return "grid";
   case SolveMode::ridge:
      return "ridge";
   }
   return "unknown";
}

std::optional<SolveMode> parse_solve_mode(std::string_view name)
{
   for (auto mode : {SolveMode::adaptive, SolveMode::grid, SolveMode::ridge}) {
      if (to_string(mode) == name) {
         return mode;
      }
   }
   return std::nullopt;
}

bool SolveReport::certified_feasible(double tol) const
{
   return all_within(certificates, tol);
}

SolveReport solve_adaptive(const SipProblem& p, double delta, const SipOptions& opts)
{
   const auto start = Clock::now();
   p.validate();
   require(delta > 0.0, "optimality precision delta must be positive");
   require(opts.shrink > 1.0, "epsilon shrink factor must exceed 1");

   const Eigen::MatrixXd design = p.features.design_matrix(p.data.inputs);
   const RidgeQp qp(design, p.data.targets, p.lambda, p.box.lower, p.box.upper);

   Discretization disc(p.constraints.size());
   for (const auto& x : initial_points(p.features.input_dim(), opts)) {
      for (std::size_t i = 0; i < p.constraints.size(); ++i) {
         disc.add(p, i, x);
      }
   }

   SolveReport report;
   report.mode = SolveMode::adaptive;
   report.delta = delta;
   double lower = -inf;
   double upper = inf;
   double eps = opts.initial_epsilon;
   std::optional<Eigen::VectorXd> incumbent;
   std::vector<LowerLevelResult> incumbent_certs;
   std::vector<std::size_t> warm_lower, warm_restricted;

   auto finish = [&](int iterations) {
      report.w = *incumbent;
      report.objective = qp.objective(*incumbent);
      report.lower_bound = lower;
      report.upper_bound = upper;
      report.gap = std::max(upper - lower, 0.0);
      report.iterations = iterations;
      report.discretization_sizes = disc.sizes();
      report.epsilon_final = eps;
      report.certificates = incumbent_certs;
      report.seconds = seconds_since(start);
      return report;
   };

   auto add_violators = [&](std::size_t i, const LowerLevelResult& r) {
      bool added = false;
      for (const auto& cand : r.local_maxima) {
         if (cand.value > opts.feasibility_tol) {
            added |= disc.add(p, i, cand.x);
         }
      }
      if (r.value > opts.feasibility_tol) {
         added |= disc.add(p, i, r.x_star);
      }
      return added;
   };

   for (int iter = 1; iter <= opts.max_iterations; ++iter) {
      // Lower bound: the discretized problem relaxes the semi-infinite one.
      const QpSolution sol_lower = qp.solve(disc.rows, opts.qp, 0.0, warm_lower);
      if (sol_lower.status == QpStatus::infeasible) {
         const auto ids = disc.owners_of(sol_lower.conflict_rows);
         throw SolveError(ErrorCode::not_strictly_feasible,
                          "constraints admit no common solution: " + describe_conflict(p, ids), ids);
      }
      warm_lower = sol_lower.active_rows;
      lower = std::max(lower, sol_lower.objective);

      const auto certs_lower = certify(p, sol_lower.w, opts);
      if (all_within(certs_lower, opts.feasibility_tol)) {
         const double f = qp.objective(sol_lower.w);
         if (f < upper) {
            upper = f;
            incumbent = sol_lower.w;
            incumbent_certs = certs_lower;
         }
      }
      for (std::size_t i = 0; i < p.constraints.size(); ++i) {
         add_violators(i, certs_lower[i]);
      }
      if (incumbent && upper - lower <= delta) {
         report.history.push_back({iter, lower, upper, eps, disc.rows.size()});
         return finish(iter);
      }

      // Restricted step: tighten every row by eps so the solution keeps slack off the grid.
      QpSolution sol_restricted;
      while (true) {
         sol_restricted = qp.solve(disc.rows, opts.qp, eps, warm_restricted);
         if (sol_restricted.status == QpStatus::optimal) {
            break;
         }
         eps /= opts.shrink;
         if (eps < opts.min_epsilon) {
            const auto ids = disc.owners_of(sol_restricted.conflict_rows);
            throw SolveError(ErrorCode::not_strictly_feasible,
                             "no strictly feasible point: restricted problem stays infeasible for every "
                             "restriction; involved constraints: " + describe_conflict(p, ids),
                             ids);
         }
      }
      warm_restricted = sol_restricted.active_rows;

      const auto certs_restricted = certify(p, sol_restricted.w, opts);
      if (all_within(certs_restricted, opts.feasibility_tol)) {
         const double f = qp.objective(sol_restricted.w);
         if (f < upper) {
            upper = f;
            incumbent = sol_restricted.w;
            incumbent_certs = certs_restricted;
         }
      } else {
         for (std::size_t i = 0; i < p.constraints.size(); ++i) {
            add_violators(i, certs_restricted[i]);
         }
      }
      report.history.push_back({iter, lower, upper, eps, disc.rows.size()});
      if (incumbent && upper - lower <= delta) {
         return finish(iter);
      }
      // Either way the restriction is relaxed: an infeasible restricted point
      // needs a finer discretization, a feasible one is too conservative.
      eps = std::max(eps / opts.shrink, opts.min_epsilon);
   }

   std::optional<SolveReport> best;
   if (incumbent) {
      best = finish(opts.max_iterations);
   }
   throw SolveError(ErrorCode::convergence_failure,
                    "iteration cap of " + std::to_string(opts.max_iterations) + " reached with gap " +
                       (incumbent ? std::to_string(upper - lower) : std::string("unbounded")),
                    {}, best);
}

SolveReport solve_grid(const SipProblem& p, int grid_points_per_dim, const SipOptions& opts)
{
   const auto start = Clock::now();
   p.validate();
   require(grid_points_per_dim >= 2, "grid needs at least two points per dimension");

   const Eigen::MatrixXd design = p.features.design_matrix(p.data.inputs);
   const RidgeQp qp(design, p.data.targets, p.lambda, p.box.lower, p.box.upper);
   const auto d = static_cast<std::size_t>(p.features.input_dim());
   const auto g = static_cast<std::size_t>(grid_points_per_dim);

   std::vector<std::vector<double>> nodes(d, std::vector<double>(g));
   for (auto& axis : nodes) {
      for (std::size_t i = 0; i < g; ++i) {
         axis[i] = static_cast<double>(i) / static_cast<double>(g - 1);
      }
   }
   auto grid_point = [&](std::size_t flat) {
      std::vector<double> x(d);
      for (std::size_t j = d; j-- > 0;) {
         x[j] = nodes[j][flat % g];
         flat /= g;
      }
      return x;
   };

   // Constraint generation over the finite grid: solve, add the worst grid
   // violators, repeat. Terminates with the exact grid-discretized solution.
   Discretization disc(p.constraints.size());
   std::vector<std::size_t> warm;
   QpSolution sol;
   int pass = 0;
   const int max_passes = std::max(opts.max_iterations, 1) * 10;
   while (true) {
      if (++pass > max_passes) {
         fail(ErrorCode::convergence_failure, "grid constraint generation did not settle");
      }
      sol = qp.solve(disc.rows, opts.qp, 0.0, warm);
      if (sol.status == QpStatus::infeasible) {
         const auto ids = disc.owners_of(sol.conflict_rows);
         throw SolveError(ErrorCode::infeasible, "grid-discretized problem is infeasible: " + describe_conflict(p, ids),
                          ids);
      }
      warm = sol.active_rows;
      bool added = false;
      for (std::size_t i = 0; i < p.constraints.size(); ++i) {
         const auto values = constraint_polynomial(p.constraints[i], p.features, sol.w).evaluate_grid(nodes);
         std::vector<std::size_t> violated;
         for (std::size_t k = 0; k < values.size(); ++k) {
            if (values[k] > opts.feasibility_tol) {
               violated.push_back(k);
            }
         }
         const std::size_t take = std::min(violated.size(), opts.grid_points_per_pass);
         std::partial_sort(violated.begin(), violated.begin() + static_cast<std::ptrdiff_t>(take), violated.end(),
                           [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });
         for (std::size_t k = 0; k < take; ++k) {
            added |= disc.add(p, i, grid_point(violated[k]));
         }
      }
      if (!added) {
         break;
      }
   }

   SolveReport report;
   report.mode = SolveMode::grid;
   report.grid_points = grid_points_per_dim;
   report.w = sol.w;
   report.objective = sol.objective;
   report.lower_bound = sol.objective;
   report.upper_bound = inf;
   report.gap = inf;
   report.iterations = pass;
   report.discretization_sizes = disc.sizes();
   report.certificates = certify(p, sol.w, opts);
   report.history.push_back({pass, sol.objective, inf, 0.0, disc.rows.size()});
   report.seconds = seconds_since(start);
   return report;
}

SolveReport solve_ridge_only(const SipProblem& p, const SipOptions& opts)
{
   const auto start = Clock::now();
   p.validate();
   const Eigen::MatrixXd design = p.features.design_matrix(p.data.inputs);
   SolveReport report;
   report.mode = SolveMode::ridge;
   report.w = solve_ridge(design, p.data.targets, p.lambda);
   report.objective = ridge_objective(design, p.data.targets, p.lambda, report.w);
   report.lower_bound = report.objective;
   report.upper_bound = inf;
   report.gap = inf;
   report.iterations = 1;
   report.discretization_sizes.assign(p.constraints.size(), 0);
   report.certificates = certify(p, report.w, opts);
   report.seconds = seconds_since(start);
   return report;
}

} // namespace shapefit
