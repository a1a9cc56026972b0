#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "evaluation.hpp"
#include "model_store.hpp"
#include "serialization.hpp"
#include "sip_solver.hpp"

namespace shapefit {

struct FitOutcome {
   TrainedModel model;
   SolveReport report;
};

/// Ranges used for scaling: the configured ones, else the observed data ranges.
std::vector<InputRange> effective_ranges(const Dataset& raw, const RunConfig& cfg);

/// Scales the data and assembles the SIP for `cfg`.
SipProblem build_problem(const Dataset& raw, const std::vector<ShapeConstraint>& constraints, const RunConfig& cfg);

/// Solver settings for `mode`; grid mode uses grid_lambda when configured.
SolverSpec solver_spec(const RunConfig& cfg, SolveMode mode);

/// Fits in cfg.mode. Solver failures propagate as SolveError.
FitOutcome fit_model(const Dataset& raw, const std::vector<ShapeConstraint>& constraints, const RunConfig& cfg);

/// Wraps a solve report into a model carrying its provenance.
TrainedModel make_model(const SipProblem& p, const SolveReport& report, const std::vector<InputRange>& ranges,
                        const RunConfig& cfg);

CvReport run_cross_validation(const Dataset& raw, const std::vector<ShapeConstraint>& constraints,
                              const RunConfig& cfg, SolveMode mode);

/// Cross-validates adaptive, grid and ridge fits. With `truth`, each mode is also
/// fitted on all data and scored against it on 5000 clean points.
std::vector<ComparisonRow> run_comparison(const Dataset& raw, const std::vector<ShapeConstraint>& constraints,
                                          const RunConfig& cfg,
                                          const std::function<double(std::span<const double>)>& truth = {});

json to_json(const std::vector<ComparisonRow>& rows);

/// Run settings of the toy experiment: degrees (1,5,2,2,2), lambda 0.01,
/// delta 1e-5, grid lambda 0.05, inputs on the unit cube.
RunConfig toy_config(std::uint64_t seed = 0);

std::string utc_timestamp();

} // namespace shapefit
