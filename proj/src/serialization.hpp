#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "constraints.hpp"
#include "dataset.hpp"
#include "sip_solver.hpp"

namespace shapefit {

using json = nlohmann::json;

inline constexpr int constraint_file_version = 1;

/// Settings shared by fit, cross-validation and the service.
struct RunConfig {
   std::vector<int> degrees;
   double lambda = 1e-2;
   double delta = 1e-5;
   SolveMode mode = SolveMode::adaptive;
   int grid_points = 20;
   /// Lambda of the grid-mode row in comparisons; defaults to `lambda`.
   std::optional<double> grid_lambda;
   std::uint64_t seed = 0;
   double box_halfwidth = default_box_halfwidth;
   /// Input ranges in original units; observed data ranges when absent.
   std::optional<std::vector<InputRange>> input_ranges;
   int folds = 10;
   int jobs = 1;
};

json to_json(const ShapeConstraint& c);
ShapeConstraint constraint_from_json(const json& j);

std::string serialize_constraints(const std::vector<ShapeConstraint>& constraints);
/// Accepts the versioned document or a bare list of records.
std::vector<ShapeConstraint> parse_constraints(std::string_view text);

json to_json(const RunConfig& cfg);
/// Keys absent from `j` keep the values already in `base`.
RunConfig config_from_json(const json& j, RunConfig base = {});
RunConfig parse_config(std::string_view text);

json to_json(const LowerLevelResult& r);
LowerLevelResult lower_level_from_json(const json& j);

json to_json(const SolveReport& r);
SolveReport report_from_json(const json& j);

/// JSON has no infinity; +inf is written as null.
json number_or_null(double v);
double number_or_inf(const json& j);

/// Parses JSON, mapping syntax errors to parse_error with line information.
json parse_json(std::string_view text, std::string_view what);

} // namespace shapefit
