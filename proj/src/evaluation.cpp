#include "evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "error.hpp"

namespace shapefit {

namespace {

// g from the value and the axis derivatives of the audited function.
double constraint_value(const ShapeConstraint& c, double v, double d1, double d2)
{
   const double r = c.relax;
   switch (c.kind) {
   case ConstraintKind::UpperBound:
      return v - c.level - r;
   case ConstraintKind::LowerBound:
      return c.level - v - r;
   case ConstraintKind::MonotoneIncreasing:
      return -d1 - r;
   case ConstraintKind::MonotoneDecreasing:
      return d1 - r;
   case ConstraintKind::Convex:
      return -d2 - r;
   case ConstraintKind::Concave:
      return d2 - r;
   case ConstraintKind::Rebound:
      return d1 + c.rebound_factor * v - c.rebound_factor * c.rebound_cap - r;
   }
   return 0.0;
}

std::vector<double> draw_anchors(int d, const AuditOptions& opts)
{
   std::mt19937_64 rng(opts.seed);
   std::uniform_real_distribution<double> unif(0.0, 1.0);
   std::vector<double> anchors(opts.n_anchors * static_cast<std::size_t>(d));
   for (auto& v : anchors) {
      v = unif(rng);
   }
   return anchors;
}

std::vector<double> line_nodes(int n_line)
{
   std::vector<double> t(static_cast<std::size_t>(n_line));
   for (int i = 0; i < n_line; ++i) {
      t[static_cast<std::size_t>(i)] = n_line == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n_line - 1);
   }
   return t;
}

struct Tally {
   ConstraintAudit audit;
   std::size_t violations = 0;
   bool any = false;

   void record(double value, std::span<const double> x, double tol)
   {
      ++audit.evaluations;
      if (value > tol) {
         ++violations;
      }
      if (!any || value > audit.worst_value) {
         any = true;
         audit.worst_value = value;
         audit.worst_point.assign(x.begin(), x.end());
      }
   }

   ConstraintAudit finish(double tol)
   {
      audit.violated = audit.worst_value > tol;
      audit.violating_fraction =
         audit.evaluations ? static_cast<double>(violations) / static_cast<double>(audit.evaluations) : 0.0;
      return audit;
   }
};

ViolationReport assemble(std::vector<ConstraintAudit> audits)
{
   ViolationReport report;
   for (auto& a : audits) {
      report.total_violated += a.violated ? 1 : 0;
      report.per_constraint.push_back(std::move(a));
   }
   return report;
}

} // namespace

ViolationReport audit_violations(const FeatureMap& fm, const Eigen::VectorXd& w,
                                 const std::vector<ShapeConstraint>& constraints, const AuditOptions& opts)
{
   require(opts.n_line >= 1, "audit needs at least one line point");
   const int d = fm.input_dim();
   const auto du = static_cast<std::size_t>(d);
   const auto anchors = draw_anchors(d, opts);
   const auto ts = line_nodes(opts.n_line);

   std::vector<ConstraintAudit> audits;
   std::vector<double> x(du);
   for (std::size_t i = 0; i < constraints.size(); ++i) {
      const auto& c = constraints[i];
      c.validate(d);
      const Polynomial g = constraint_polynomial(c, fm, w);
      Tally tally;
      tally.audit.constraint = i;
      if (c.needs_axis()) {
         const auto axis = static_cast<std::size_t>(*c.axis);
         for (std::size_t a = 0; a < opts.n_anchors; ++a) {
            std::span<const double> anchor(anchors.data() + a * du, du);
            const auto coefs = g.restrict_to_axis(anchor, *c.axis);
            std::copy(anchor.begin(), anchor.end(), x.begin());
            for (double t : ts) {
               x[axis] = t;
               tally.record(horner(coefs, t), x, opts.tol);
            }
         }
      } else {
         std::vector<double> values(opts.n_anchors);
         g.evaluate_points(anchors, values);
         for (std::size_t a = 0; a < opts.n_anchors; ++a) {
            tally.record(values[a], std::span<const double>(anchors.data() + a * du, du), opts.tol);
         }
      }
      audits.push_back(tally.finish(opts.tol));
   }
   return assemble(std::move(audits));
}

ViolationReport audit_violations(const TrainedModel& model, const std::vector<ShapeConstraint>& constraints,
                                 const AuditOptions& opts)
{
   return audit_violations(model.features(), model.weights(), constraints, opts);
}

ViolationReport audit_violations(const ShapeOracle& f, const std::vector<ShapeConstraint>& constraints,
                                 const AuditOptions& opts)
{
   require(opts.n_line >= 1, "audit needs at least one line point");
   const int d = f.input_dim();
   const auto du = static_cast<std::size_t>(d);
   const auto anchors = draw_anchors(d, opts);
   const auto ts = line_nodes(opts.n_line);

   std::vector<ConstraintAudit> audits;
   std::vector<double> x(du);
   for (std::size_t i = 0; i < constraints.size(); ++i) {
      const auto& c = constraints[i];
      c.validate(d);
      Tally tally;
      tally.audit.constraint = i;
      for (std::size_t a = 0; a < opts.n_anchors; ++a) {
         std::copy(anchors.begin() + static_cast<std::ptrdiff_t>(a * du),
                   anchors.begin() + static_cast<std::ptrdiff_t>((a + 1) * du), x.begin());
         if (!c.needs_axis()) {
            tally.record(constraint_value(c, f.value(x), 0.0, 0.0), x, opts.tol);
            continue;
         }
         const int axis = *c.axis;
         const bool needs_value = c.kind == ConstraintKind::Rebound;
         const bool second = c.kind == ConstraintKind::Convex || c.kind == ConstraintKind::Concave;
         for (double t : ts) {
            x[static_cast<std::size_t>(axis)] = t;
            const double v = needs_value ? f.value(x) : 0.0;
            const double d1 = second ? 0.0 : f.derivative(x, axis, 1);
            const double d2 = second ? f.derivative(x, axis, 2) : 0.0;
            tally.record(constraint_value(c, v, d1, d2), x, opts.tol);
         }
      }
      audits.push_back(tally.finish(opts.tol));
   }
   return assemble(std::move(audits));
}

json to_json(const ViolationReport& r)
{
   json j;
   j["total_violated"] = r.total_violated;
   j["constraints"] = json::array();
   for (const auto& a : r.per_constraint) {
      j["constraints"].push_back({{"constraint", a.constraint},
                                  {"violated", a.violated},
                                  {"worst_point", a.worst_point},
                                  {"worst_value", a.worst_value},
                                  {"violating_fraction", a.violating_fraction},
                                  {"evaluations", a.evaluations}});
   }
   return j;
}

std::string violation_csv(const ViolationReport& r)
{
   std::ostringstream os;
   os.precision(17);
   os << "constraint,violated,worst_value,violating_fraction,evaluations,worst_point\n";
   for (const auto& a : r.per_constraint) {
      os << a.constraint << ',' << (a.violated ? 1 : 0) << ',' << a.worst_value << ',' << a.violating_fraction << ','
         << a.evaluations << ',';
      for (std::size_t j = 0; j < a.worst_point.size(); ++j) {
         os << (j ? ";" : "") << a.worst_point[j];
      }
      os << '\n';
   }
   return os.str();
}

double rmse(std::span<const double> predicted, std::span<const double> observed)
{
   require(predicted.size() == observed.size() && !predicted.empty(), "RMSE needs two equal-length non-empty series");
   double sum = 0.0;
   for (std::size_t i = 0; i < predicted.size(); ++i) {
      const double e = predicted[i] - observed[i];
      sum += e * e;
   }
   return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double generalization_error(const TrainedModel& model, const std::function<double(std::span<const double>)>& truth,
                            std::size_t n_test, std::uint64_t seed)
{
   require(n_test >= 1, "generalization error needs at least one test point");
   std::mt19937_64 rng(seed);
   std::uniform_real_distribution<double> unif(0.0, 1.0);
   const auto d = static_cast<std::size_t>(model.input_dim());
   std::vector<double> unit(d), pred(n_test), obs(n_test);
   for (std::size_t k = 0; k < n_test; ++k) {
      for (auto& u : unit) {
         u = unif(rng);
      }
      const auto raw = model.from_unit(unit);
      pred[k] = model.predict_unit(unit);
      obs[k] = truth(raw);
   }
   return rmse(pred, obs);
}

SolveReport solve_with(const SipProblem& p, const SolverSpec& spec)
{
   const SipProblem* problem = &p;
   SipProblem adjusted;
   if (spec.lambda) {
      adjusted = p;
      adjusted.lambda = *spec.lambda;
      problem = &adjusted;
   }
   switch (spec.mode) {
   case SolveMode::adaptive:
      try {
         return solve_adaptive(*problem, spec.delta, spec.options);
      } catch (const SolveError& e) {
         if (e.code() == ErrorCode::convergence_failure && e.incumbent()) {
            return *e.incumbent();
         }
         throw;
      }
   case SolveMode::grid:
      return solve_grid(*problem, spec.grid_points, spec.options);
   case SolveMode::ridge:
      return solve_ridge_only(*problem, spec.options);
   }
   fail(ErrorCode::invalid_argument, "unknown solver mode");
}

CvReport cross_validate(const SipProblem& p, int k, const SolverSpec& spec, std::uint64_t seed, int jobs,
                        const AuditOptions& audit)
{
   p.validate();
   require(k >= 2, "cross-validation needs at least two folds");
   require(static_cast<std::size_t>(k) <= p.data.size(),
           "cross-validation with " + std::to_string(k) + " folds needs at least as many data points, got " +
              std::to_string(p.data.size()));

   std::vector<std::size_t> order(p.data.size());
   std::iota(order.begin(), order.end(), 0);
   std::mt19937_64 rng(seed);
   std::shuffle(order.begin(), order.end(), rng);

   const auto ku = static_cast<std::size_t>(k);
   std::vector<double> fold_rmse(ku), fold_seconds(ku);
   std::vector<std::size_t> fold_viol(ku);
   std::vector<std::exception_ptr> errors(ku);

   auto run_fold = [&](std::size_t f) {
      try {
         std::vector<std::size_t> train, test;
         for (std::size_t i = 0; i < order.size(); ++i) {
            (i % ku == f ? test : train).push_back(order[i]);
         }
         SipProblem fold = p;
         fold.data = p.data.subset(train);
         const auto start = std::chrono::steady_clock::now();
         const SolveReport rep = solve_with(fold, spec);
         fold_seconds[f] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

         const Dataset held_out = p.data.subset(test);
         const Eigen::VectorXd pred = p.features.design_matrix(held_out.inputs) * rep.w;
         fold_rmse[f] = rmse(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())),
                             std::span<const double>(held_out.targets.data(), held_out.size()));
         fold_viol[f] = audit_violations(p.features, rep.w, p.constraints, audit).total_violated;
      } catch (...) {
         errors[f] = std::current_exception();
      }
   };

   const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, k));
   if (workers == 1) {
      for (std::size_t f = 0; f < ku; ++f) {
         run_fold(f);
      }
   } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < workers; ++t) {
         pool.emplace_back([&, t] {
            for (std::size_t f = t; f < ku; f += workers) {
               run_fold(f);
            }
         });
      }
      for (auto& th : pool) {
         th.join();
      }
   }
   for (const auto& e : errors) {
      if (e) {
         std::rethrow_exception(e);
      }
   }

   CvReport r;
   r.label = std::string(to_string(spec.mode));
   r.seed = seed;
   r.n_constraints = p.constraints.size();
   r.fold_rmses = fold_rmse;
   r.fold_violations = fold_viol;
   const double n = static_cast<double>(k);
   r.mean = std::accumulate(fold_rmse.begin(), fold_rmse.end(), 0.0) / n;
   double ss = 0.0;
   for (double v : fold_rmse) {
      ss += (v - r.mean) * (v - r.mean);
   }
   r.std = std::sqrt(ss / (n - 1.0));
   r.mean_train_seconds = std::accumulate(fold_seconds.begin(), fold_seconds.end(), 0.0) / n;
   r.mean_violations =
      static_cast<double>(std::accumulate(fold_viol.begin(), fold_viol.end(), std::size_t{0})) / n;
   return r;
}

json to_json(const CvReport& r)
{
   return json{{"label", r.label},
               {"fold_rmses", r.fold_rmses},
               {"mean", r.mean},
               {"std", r.std},
               {"mean_train_seconds", r.mean_train_seconds},
               {"mean_violations", r.mean_violations},
               {"fold_violations", r.fold_violations},
               {"n_constraints", r.n_constraints},
               {"seed", r.seed}};
}

std::string cv_csv(const CvReport& r)
{
   std::ostringstream os;
   os.precision(17);
   os << "fold,rmse,violations\n";
   for (std::size_t f = 0; f < r.fold_rmses.size(); ++f) {
      os << f << ',' << r.fold_rmses[f] << ',' << r.fold_violations[f] << '\n';
   }
   return os.str();
}

std::string format_hms(double seconds)
{
   const auto total = static_cast<long long>(std::llround(std::max(seconds, 0.0)));
   std::ostringstream os;
   os << std::setfill('0') << std::setw(2) << total / 3600 << ':' << std::setw(2) << (total / 60) % 60 << ':'
      << std::setw(2) << total % 60;
   return os.str();
}

namespace {

std::string sig4(double v)
{
   std::ostringstream os;
   os << std::setprecision(4) << v;
   return os.str();
}

std::string count_text(double v)
{
   std::ostringstream os;
   if (std::abs(v - std::round(v)) < 1e-12) {
      os << static_cast<long long>(std::llround(v));
   } else {
      os << std::fixed << std::setprecision(1) << v;
   }
   return os.str();
}

} // namespace

std::string render_table(const std::vector<ComparisonRow>& rows)
{
   const bool with_gen = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.generalization.has_value(); });
   const bool with_full = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.full_fit_violations.has_value(); });
   std::vector<std::vector<std::string>> cells;
   std::vector<std::string> header{"Model", "CV Test Error", "Train Time", "Shape Violations"};
   if (with_full) {
      header.emplace_back("Full-Fit Violations");
   }
   if (with_gen) {
      header.emplace_back("Generalization Error");
   }
   cells.push_back(header);
   for (const auto& row : rows) {
      std::vector<std::string> line{row.cv.label, sig4(row.cv.mean) + " ± " + sig4(row.cv.std),
                                    format_hms(row.cv.mean_train_seconds),
                                    count_text(row.cv.mean_violations) + " out of " + std::to_string(row.cv.n_constraints)};
      if (with_full) {
         line.push_back(row.full_fit_violations ? std::to_string(*row.full_fit_violations) : "-");
      }
      if (with_gen) {
         line.push_back(row.generalization ? sig4(*row.generalization) : "-");
      }
      cells.push_back(line);
   }
   // Column widths in code points (the ± sign is two bytes in UTF-8).
   auto width = [](const std::string& s) {
      std::size_t n = 0;
      for (unsigned char ch : s) {
         n += (ch & 0xC0) != 0x80 ? 1 : 0;
      }
      return n;
   };
   std::vector<std::size_t> widths(header.size(), 0);
   for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) {
         widths[c] = std::max(widths[c], width(line[c]));
      }
   }
   std::ostringstream os;
   for (std::size_t r = 0; r < cells.size(); ++r) {
      for (std::size_t c = 0; c < cells[r].size(); ++c) {
         os << cells[r][c];
         if (c + 1 < cells[r].size()) {
            os << std::string(widths[c] - width(cells[r][c]) + 2, ' ');
         }
      }
      os << '\n';
      if (r == 0) {
         std::size_t total = 0;
         for (auto w : widths) {
            total += w + 2;
         }
         os << std::string(total - 2, '-') << '\n';
      }
   }
   return os.str();
}

} // namespace shapefit
