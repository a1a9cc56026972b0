#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "constraints.hpp"
#include "model_store.hpp"
#include "serialization.hpp"
#include "sip_solver.hpp"

namespace shapefit {

struct AuditOptions {
   std::size_t n_anchors = 10000;
   int n_line = 100;
   std::uint64_t seed = 0;
   double tol = 1e-7;
};

struct ConstraintAudit {
   std::size_t constraint = 0;
   bool violated = false;
   std::vector<double> worst_point;  // unit-cube coordinates
   double worst_value = 0.0;
   double violating_fraction = 0.0;
   std::size_t evaluations = 0;
};

struct ViolationReport {
   std::vector<ConstraintAudit> per_constraint;
   std::size_t total_violated = 0;
};

/// Anything whose shape can be audited, in unit-cube coordinates.
class ShapeOracle {
public:
   virtual ~ShapeOracle() = default;
   virtual int input_dim() const = 0;
   virtual double value(std::span<const double> x) const = 0;
   /// order 1 or 2 partial derivative along `axis`.
   virtual double derivative(std::span<const double> x, int axis, int order) const = 0;
};

/// Sampling audit: n_anchors uniform anchors; axis constraints are checked on
/// n_line equidistant points through each anchor along their axis, bound
/// constraints at the anchors themselves.
ViolationReport audit_violations(const FeatureMap& fm, const Eigen::VectorXd& w,
                                 const std::vector<ShapeConstraint>& constraints, const AuditOptions& opts = {});
ViolationReport audit_violations(const TrainedModel& model, const std::vector<ShapeConstraint>& constraints,
                                 const AuditOptions& opts = {});
ViolationReport audit_violations(const ShapeOracle& f, const std::vector<ShapeConstraint>& constraints,
                                 const AuditOptions& opts = {});

json to_json(const ViolationReport& r);
std::string violation_csv(const ViolationReport& r);

double rmse(std::span<const double> predicted, std::span<const double> observed);

/// RMSE between the model and `truth` on n_test uniform points of the model's input box.
double generalization_error(const TrainedModel& model, const std::function<double(std::span<const double>)>& truth,
                            std::size_t n_test = 5000, std::uint64_t seed = 0);

struct SolverSpec {
   SolveMode mode = SolveMode::adaptive;
   double delta = 1e-5;
   int grid_points = 20;
   /// Overrides the problem's lambda when set.
   std::optional<double> lambda;
   SipOptions options;
};

/// Runs the solver named by `spec`. A convergence failure with a certified
/// incumbent returns the incumbent.
SolveReport solve_with(const SipProblem& p, const SolverSpec& spec);

struct CvReport {
   std::string label;
   std::vector<double> fold_rmses;
   double mean = 0.0;
   double std = 0.0;  // sample standard deviation over folds
   double mean_train_seconds = 0.0;
   double mean_violations = 0.0;
   std::vector<std::size_t> fold_violations;
   std::size_t n_constraints = 0;
   std::uint64_t seed = 0;
};

/// Seeded k-fold cross-validation; folds may run on `jobs` threads without changing the result.
CvReport cross_validate(const SipProblem& p, int k, const SolverSpec& spec, std::uint64_t seed, int jobs = 1,
                        const AuditOptions& audit = {});

json to_json(const CvReport& r);
std::string cv_csv(const CvReport& r);

struct ComparisonRow {
   CvReport cv;
   std::optional<double> generalization;
   std::optional<std::size_t> full_fit_violations;
};

/// Result table: model, CV error +- std, mean training time h:m:s, violations "x out of N".
std::string render_table(const std::vector<ComparisonRow>& rows);
std::string format_hms(double seconds);

} // namespace shapefit
