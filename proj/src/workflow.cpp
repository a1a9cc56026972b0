#include "workflow.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "error.hpp"
#include "toy_data.hpp"

namespace shapefit {

std::vector<InputRange> effective_ranges(const Dataset& raw, const RunConfig& cfg)
{
   if (!cfg.input_ranges) {
      return observed_ranges(raw);
   }
   require(cfg.input_ranges->size() == static_cast<std::size_t>(raw.input_dim()),
           "config gives " + std::to_string(cfg.input_ranges->size()) + " input ranges for " +
              std::to_string(raw.input_dim()) + " inputs");
   return *cfg.input_ranges;
}

SipProblem build_problem(const Dataset& raw, const std::vector<ShapeConstraint>& constraints, const RunConfig& cfg)
{
   require(!cfg.degrees.empty(), "config needs per-input degrees");
   require(cfg.degrees.size() == static_cast<std::size_t>(raw.input_dim()),
           "config gives " + std::to_string(cfg.degrees.size()) + " degrees but the data has " +
              std::to_string(raw.input_dim()) + " inputs");
   const auto ranges = effective_ranges(raw, cfg);
   for (std::size_t j = 0; j < ranges.size(); ++j) {
      const auto col = raw.inputs.col(static_cast<Eigen::Index>(j));
      if (raw.size() > 0 && (col.minCoeff() < ranges[j].min || col.maxCoeff() > ranges[j].max)) {
         fail(ErrorCode::invalid_argument, "input column " + std::to_string(j) + " has data outside its configured range");
      }
   }
   return SipProblem::make(scale_to_unit(raw, ranges), FeatureMap::enumerate(cfg.degrees), constraints, cfg.lambda,
                           cfg.box_halfwidth);
}

SolverSpec solver_spec(const RunConfig& cfg, SolveMode mode)
{
   SolverSpec spec;
   spec.mode = mode;
   spec.delta = cfg.delta;
   spec.grid_points = cfg.grid_points;
   if (mode == SolveMode::grid && cfg.grid_lambda) {
      spec.lambda = *cfg.grid_lambda;
   }
   spec.options.lower_level.seed = cfg.seed;
   return spec;
}

TrainedModel make_model(const SipProblem& p, const SolveReport& report, const std::vector<InputRange>& ranges,
                        const RunConfig& cfg)
{
   Provenance prov;
   prov.mode = std::string(to_string(report.mode));
   prov.delta = report.mode == SolveMode::adaptive ? cfg.delta : 0.0;
   prov.grid_points = report.mode == SolveMode::grid ? cfg.grid_points : 0;
   prov.lambda = report.mode == SolveMode::grid && cfg.grid_lambda ? *cfg.grid_lambda : cfg.lambda;
   prov.seed = cfg.seed;
   prov.timestamp = utc_timestamp();
   prov.gap = report.gap;
   return TrainedModel(p.features, report.w, ranges, p.constraints, prov);
}

FitOutcome fit_model(const Dataset& raw, const std::vector<ShapeConstraint>& constraints, const RunConfig& cfg)
{
   const SipProblem p = build_problem(raw, constraints, cfg);
   const auto ranges = effective_ranges(raw, cfg);
   const SolverSpec spec = solver_spec(cfg, cfg.mode);
   // Unlike solve_with, a convergence failure propagates here; the caller decides
   // whether the carried incumbent is good enough.
   SolveReport report = spec.mode == SolveMode::adaptive ? solve_adaptive(p, spec.delta, spec.options)
                                                         : solve_with(p, spec);
   return {make_model(p, report, ranges, cfg), std::move(report)};
}

CvReport run_cross_validation(const Dataset& raw, const std::vector<ShapeConstraint>& constraints,
                              const RunConfig& cfg, SolveMode mode)
{
   const SipProblem p = build_problem(raw, constraints, cfg);
   AuditOptions audit;
   audit.seed = cfg.seed;
   return cross_validate(p, cfg.folds, solver_spec(cfg, mode), cfg.seed, cfg.jobs, audit);
}

std::vector<ComparisonRow> run_comparison(const Dataset& raw, const std::vector<ShapeConstraint>& constraints,
                                          const RunConfig& cfg,
                                          const std::function<double(std::span<const double>)>& truth)
{
   const SipProblem p = build_problem(raw, constraints, cfg);
   const auto ranges = effective_ranges(raw, cfg);
   AuditOptions audit;
   audit.seed = cfg.seed;
   std::vector<ComparisonRow> rows;
   for (SolveMode mode : {SolveMode::adaptive, SolveMode::grid, SolveMode::ridge}) {
      const SolverSpec spec = solver_spec(cfg, mode);
      ComparisonRow row;
      row.cv = cross_validate(p, cfg.folds, spec, cfg.seed, cfg.jobs, audit);
      if (truth) {
         const SolveReport full = solve_with(p, spec);
         const TrainedModel model = make_model(p, full, ranges, cfg);
         row.generalization = generalization_error(model, truth, 5000, cfg.seed);
         row.full_fit_violations = audit_violations(p.features, full.w, p.constraints, audit).total_violated;
      }
      rows.push_back(std::move(row));
   }
   return rows;
}

json to_json(const std::vector<ComparisonRow>& rows)
{
   json out = json::array();
   for (const auto& r : rows) {
      json j = to_json(r.cv);
      if (r.generalization) {
         j["generalization_rmse"] = *r.generalization;
      }
      if (r.full_fit_violations) {
         j["full_fit_violations"] = *r.full_fit_violations;
      }
      out.push_back(j);
   }
   return out;
}

RunConfig toy_config(std::uint64_t seed)
{
   RunConfig cfg;
   cfg.degrees = {1, 5, 2, 2, 2};
   cfg.lambda = 0.01;
   cfg.delta = 1e-5;
   cfg.grid_points = 20;
   cfg.grid_lambda = 0.05;
   cfg.seed = seed;
   cfg.input_ranges = std::vector<InputRange>(toy::input_dim, InputRange{0.0, 1.0});
   return cfg;
}

std::string utc_timestamp()
{
   const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
   std::tm tm{};
   gmtime_r(&now, &tm);
   std::ostringstream os;
   os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
   return os.str();
}

} // namespace shapefit
