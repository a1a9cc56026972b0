#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "constraints.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "features.hpp"
#include "global_opt.hpp"
#include "qp.hpp"

namespace shapefit {

inline constexpr double default_box_halfwidth = 1e5;

struct ParameterBox {
   Eigen::VectorXd lower;
   Eigen::VectorXd upper;

   static ParameterBox symmetric(std::size_t m, double halfwidth = default_box_halfwidth);
};

/// Shape-constrained ridge regression on the unit cube:
///   min |y - Phi w|^2 + lambda |w|^2  s.t.  g_i(w, x) <= 0 for all x, w in box.
struct SipProblem {
   Dataset data;  // inputs already scaled to [0, 1]
   FeatureMap features;
   std::vector<ShapeConstraint> constraints;
   double lambda = 1e-2;
   ParameterBox box;

   /// Builds a problem with the default symmetric box.
   static SipProblem make(Dataset data, FeatureMap features, std::vector<ShapeConstraint> constraints,
                          double lambda, double box_halfwidth = default_box_halfwidth);

   void validate() const;
};

struct SipOptions {
   double initial_epsilon = 1e-2;
   double shrink = 2.0;
   double min_epsilon = 1e-12;
   double feasibility_tol = 1e-9;
   int max_iterations = 200;
   /// Initial discretization uses the cube corners up to this many, else Sobol points.
   std::size_t initial_points_cap = 64;
   /// Grid mode: violated grid points added per constraint and pass.
   std::size_t grid_points_per_pass = 25;
   LowerLevelOptions lower_level;
   QpOptions qp;
};

enum class SolveMode { adaptive, grid, ridge };

std::string_view to_string(SolveMode mode);
std::optional<SolveMode> parse_solve_mode(std::string_view name);

struct IterationRecord {
   int iteration = 0;
   double lower_bound = 0.0;
   double upper_bound = 0.0;
   double epsilon = 0.0;
   std::size_t rows = 0;
};

struct SolveReport {
   SolveMode mode = SolveMode::adaptive;
   Eigen::VectorXd w;
   double lower_bound = 0.0;
   /// +infinity when no certified-feasible point is known (grid and ridge modes).
   double upper_bound = 0.0;
   double gap = 0.0;
   double objective = 0.0;  // objective at w
   int iterations = 0;
   std::vector<std::size_t> discretization_sizes;
   double epsilon_final = 0.0;
   std::vector<LowerLevelResult> certificates;
   std::vector<IterationRecord> history;
   double delta = 0.0;
   int grid_points = 0;
   double seconds = 0.0;

   /// Every certificate value is at most `tol`.
   bool certified_feasible(double tol) const;
};

/// Solver failure carrying the constraints involved and, when one exists,
/// the best certified-feasible incumbent.
class SolveError : public Error {
public:
   SolveError(ErrorCode code, const std::string& message, std::vector<std::size_t> conflicting = {},
              std::optional<SolveReport> incumbent = std::nullopt)
      : Error(code, message), conflicting_(std::move(conflicting)), incumbent_(std::move(incumbent))
   {
   }

   const std::vector<std::size_t>& conflicting_constraints() const { return conflicting_; }
   const std::optional<SolveReport>& incumbent() const { return incumbent_; }

private:
   std::vector<std::size_t> conflicting_;
   std::optional<SolveReport> incumbent_;
};

/// Adaptive feasible-point solve; the result is certified feasible and
/// within `delta` of the optimum (upper minus lower bound).
SolveReport solve_adaptive(const SipProblem& p, double delta, const SipOptions& opts = {});

/// Baseline: constraints enforced only on a tensor grid with `grid_points_per_dim` nodes per axis.
SolveReport solve_grid(const SipProblem& p, int grid_points_per_dim, const SipOptions& opts = {});

/// Unconstrained ridge fit with certificates for the problem's constraints.
SolveReport solve_ridge_only(const SipProblem& p, const SipOptions& opts = {});

} // namespace shapefit
