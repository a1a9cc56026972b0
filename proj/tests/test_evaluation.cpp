#include <doctest.h>

#include <cmath>
#include <numeric>

#include "error.hpp"
#include "evaluation.hpp"
#include "oracles.hpp"
#include "toy_data.hpp"

using namespace shapefit;

namespace {

// y = x^3 - x on [0, 1]: decreasing below 1/sqrt(3), so "increasing" fails there.
TrainedModel cubic_model()
{
   auto fm = FeatureMap::enumerate(std::vector<int>{3});
   Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
   for (std::size_t i = 0; i < fm.dimension(); ++i) {
      const int a = fm.indices()[i][0];
      w[static_cast<Eigen::Index>(i)] = a == 3 ? 1.0 : (a == 1 ? -1.0 : 0.0);
   }
   return TrainedModel(fm, w, {{0.0, 1.0}}, {ShapeConstraint::increasing(0), ShapeConstraint::upper_bound(0.0)});
}

class ToyOracle : public ShapeOracle {
public:
   int input_dim() const override { return toy::input_dim; }
   double value(std::span<const double> x) const override { return toy::eval(x); }
   double derivative(std::span<const double> x, int axis, int order) const override
   {
      return toy::partial(x, axis, order);
   }
};

Dataset line_data(int n)
{
   Dataset d;
   d.columns = {"x", "y"};
   d.inputs.resize(n, 1);
   d.targets.resize(n);
   for (int k = 0; k < n; ++k) {
      const double x = (k + 0.5) / n;
      d.inputs(k, 0) = x;
      d.targets[k] = std::sin(3.0 * x) + 0.05 * std::cos(37.0 * k);
   }
   return d;
}

} // namespace

TEST_CASE("audit finds and measures a known violation")
{
   const auto m = cubic_model();
   AuditOptions opts;
   opts.n_anchors = 200;
   const auto r = audit_violations(m, m.constraints(), opts);
   REQUIRE(r.per_constraint.size() == 2);
   const auto& inc = r.per_constraint[0];
   CHECK(inc.violated);
   CHECK(inc.worst_value == doctest::Approx(1.0).epsilon(1e-9));
   CHECK(inc.worst_point[0] == 0.0);
   CHECK(inc.violating_fraction == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(0.03));
   CHECK(inc.evaluations == 200 * 100);
   // x^3 - x <= 0 on the whole cube, with the maximum 0 at both ends.
   CHECK_FALSE(r.per_constraint[1].violated);
   CHECK(r.total_violated == 1);
}

TEST_CASE("audits are reproducible for a seed")
{
   const auto m = cubic_model();
   AuditOptions opts;
   opts.n_anchors = 50;
   opts.seed = 9;
   const auto a = to_json(audit_violations(m, m.constraints(), opts)).dump();
   const auto b = to_json(audit_violations(m, m.constraints(), opts)).dump();
   CHECK(a == b);
   CHECK(violation_csv(audit_violations(m, m.constraints(), opts)).find("constraint") != std::string::npos);
}

TEST_CASE("the toy function passes its own audit")
{
   AuditOptions opts;
   opts.n_anchors = 500;
   const auto r = audit_violations(ToyOracle{}, toy::constraints(), opts);
   CHECK(r.total_violated == 0);
}

TEST_CASE("rmse and generalization error")
{
   const std::vector<double> a = {1.0, 2.0, 3.0};
   const std::vector<double> b = {1.0, 0.0, 3.0};
   CHECK(rmse(a, b) == doctest::Approx(std::sqrt(4.0 / 3.0)));
   const auto m = cubic_model();
   const auto self = [&](std::span<const double> x) { return predict(m, x).value; };
   CHECK(generalization_error(m, self, 1000, 3) < 1e-14);
   const auto shifted = [&](std::span<const double> x) { return predict(m, x).value + 0.5; };
   CHECK(generalization_error(m, shifted, 1000, 3) == doctest::Approx(0.5));
}

TEST_CASE("cross-validation statistics and thread independence")
{
   const auto p = SipProblem::make(line_data(37), FeatureMap::enumerate(std::vector<int>{4}),
                                   {ShapeConstraint::increasing(0)}, 1e-3);
   SolverSpec spec;
   spec.mode = SolveMode::ridge;
   AuditOptions audit;
   audit.n_anchors = 100;
   const auto r = cross_validate(p, 5, spec, 11, 1, audit);
   REQUIRE(r.fold_rmses.size() == 5);
   CHECK(r.mean == doctest::Approx(std::accumulate(r.fold_rmses.begin(), r.fold_rmses.end(), 0.0) / 5.0));
   CHECK(r.std == doctest::Approx(oracle::sample_std(r.fold_rmses)));
   CHECK(r.n_constraints == 1);
   CHECK(r.fold_violations.size() == 5);
   CHECK(r.seed == 11);

   const auto threaded = cross_validate(p, 5, spec, 11, 3, audit);
   CHECK(threaded.fold_rmses == r.fold_rmses);
   CHECK(threaded.fold_violations == r.fold_violations);
   const auto other = cross_validate(p, 5, spec, 12, 1, audit);
   CHECK(other.fold_rmses != r.fold_rmses);

   CHECK_THROWS_AS(cross_validate(p, 1, spec, 0), Error);
   CHECK_THROWS_AS(cross_validate(p, 38, spec, 0), Error);
   CHECK(to_json(r)["fold_rmses"].size() == 5);
   CHECK(cv_csv(r).find('\n') != std::string::npos);
}

TEST_CASE("adaptive cross-validation folds have no violations")
{
   const auto p = SipProblem::make(line_data(30), FeatureMap::enumerate(std::vector<int>{5}),
                                   {ShapeConstraint::increasing(0)}, 1e-3);
   SolverSpec spec;
   AuditOptions audit;
   audit.n_anchors = 200;
   const auto r = cross_validate(p, 3, spec, 0, 1, audit);
   CHECK(r.mean_violations == 0.0);
}

TEST_CASE("comparison table layout")
{
   CHECK(format_hms(0.4) == "00:00:00");
   CHECK(format_hms(3725.0) == "01:02:05");
   ComparisonRow a;
   a.cv.label = "adaptive";
   a.cv.mean = 0.0457612;
   a.cv.std = 0.00962345;
   a.cv.mean_train_seconds = 6.2;
   a.cv.mean_violations = 0.0;
   a.cv.n_constraints = 5;
   ComparisonRow b = a;
   b.cv.label = "ridge";
   b.cv.mean_violations = 3.4;
   b.generalization = 0.05125;
   const auto table = render_table({a, b});
   CHECK(table.find("Model") == 0);
   CHECK(table.find("CV Test Error") != std::string::npos);
   CHECK(table.find("0.04576 ± 0.009623") != std::string::npos);
   CHECK(table.find("00:00:06") != std::string::npos);
   CHECK(table.find("0 out of 5") != std::string::npos);
   CHECK(table.find("3.4 out of 5") != std::string::npos);
   CHECK(table.find("Generalization Error") != std::string::npos);
   CHECK(table.find("0.05125") != std::string::npos);
}
