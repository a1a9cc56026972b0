#include "serialization.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace shapefit {

json number_or_null(double v)
{
   if (std::isfinite(v)) {
      return v;
   }
   return nullptr;
}

double number_or_inf(const json& j)
{
   return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json parse_json(std::string_view text, std::string_view what)
{
   try {
      return json::parse(text.begin(), text.end());
   } catch (const json::parse_error& e) {
      fail(ErrorCode::parse_error, std::string(what) + ": " + e.what());
   }
}

json to_json(const ShapeConstraint& c)
{
   json j;
   j["kind"] = std::string(to_string(c.kind));
   j["axis"] = c.axis ? json(*c.axis) : json(nullptr);
   j["level"] = c.level;
   j["rho"] = c.rebound_factor;
   j["cap"] = c.rebound_cap;
   j["relax"] = c.relax;
   return j;
}

ShapeConstraint constraint_from_json(const json& j)
{
   if (!j.is_object()) {
      fail(ErrorCode::parse_error, "constraint record must be an object");
   }
   try {
      ShapeConstraint c;
      const auto name = j.at("kind").get<std::string>();
      const auto kind = parse_constraint_kind(name);
      if (!kind) {
         fail(ErrorCode::parse_error, "unknown constraint kind '" + name + "'");
      }
      c.kind = *kind;
      if (j.contains("axis") && !j["axis"].is_null()) {
         c.axis = j["axis"].get<int>();
      }
      c.level = j.value("level", 0.0);
      c.rebound_factor = j.value("rho", 0.0);
      c.rebound_cap = j.value("cap", 0.0);
      c.relax = j.value("relax", 0.0);
      return c;
   } catch (const json::exception& e) {
      fail(ErrorCode::parse_error, std::string("malformed constraint record: ") + e.what());
   }
}

std::string serialize_constraints(const std::vector<ShapeConstraint>& constraints)
{
   json doc;
   doc["format"] = "shapefit-constraints";
   doc["version"] = constraint_file_version;
   doc["constraints"] = json::array();
   for (const auto& c : constraints) {
      doc["constraints"].push_back(to_json(c));
   }
   return doc.dump(2) + "\n";
}

std::vector<ShapeConstraint> parse_constraints(std::string_view text)
{
   const json doc = parse_json(text, "constraint file");
   const json* list = &doc;
   if (doc.is_object()) {
      if (doc.value("version", constraint_file_version) != constraint_file_version) {
         fail(ErrorCode::version_mismatch, "constraint file version " + doc["version"].dump() + " is not supported");
      }
      if (!doc.contains("constraints")) {
         fail(ErrorCode::parse_error, "constraint file: missing 'constraints' list");
      }
      list = &doc["constraints"];
   }
   if (!list->is_array()) {
      fail(ErrorCode::parse_error, "constraint file: 'constraints' must be a list");
   }
   std::vector<ShapeConstraint> out;
   for (std::size_t i = 0; i < list->size(); ++i) {
      try {
         out.push_back(constraint_from_json((*list)[i]));
      } catch (const Error& e) {
         fail(e.code(), "constraint file, record " + std::to_string(i) + ": " + e.what());
      }
   }
   return out;
}

json to_json(const RunConfig& cfg)
{
   json j;
   j["degrees"] = cfg.degrees;
   j["lambda"] = cfg.lambda;
   j["delta"] = cfg.delta;
   j["mode"] = std::string(to_string(cfg.mode));
   j["grid_points"] = cfg.grid_points;
   if (cfg.grid_lambda) {
      j["grid_lambda"] = *cfg.grid_lambda;
   }
   j["seed"] = cfg.seed;
   j["box_halfwidth"] = cfg.box_halfwidth;
   if (cfg.input_ranges) {
      json ranges = json::array();
      for (const auto& r : *cfg.input_ranges) {
         ranges.push_back({r.min, r.max});
      }
      j["input_ranges"] = ranges;
   }
   j["folds"] = cfg.folds;
   j["jobs"] = cfg.jobs;
   return j;
}

RunConfig config_from_json(const json& j, RunConfig cfg)
{
   if (!j.is_object()) {
      fail(ErrorCode::parse_error, "run config must be an object");
   }
   try {
      if (j.contains("degrees")) {
         cfg.degrees = j["degrees"].get<std::vector<int>>();
      }
      cfg.lambda = j.value("lambda", cfg.lambda);
      cfg.delta = j.value("delta", cfg.delta);
      if (j.contains("mode")) {
         const auto name = j["mode"].get<std::string>();
         const auto mode = parse_solve_mode(name);
         if (!mode) {
            fail(ErrorCode::parse_error, "unknown solver mode '" + name + "'");
         }
         cfg.mode = *mode;
      }
      cfg.grid_points = j.value("grid_points", cfg.grid_points);
      if (j.contains("grid_lambda") && !j["grid_lambda"].is_null()) {
         cfg.grid_lambda = j["grid_lambda"].get<double>();
      }
      if (j.contains("seeds")) {
         cfg.seed = j["seeds"].is_array() ? j["seeds"].at(0).get<std::uint64_t>() : j["seeds"].get<std::uint64_t>();
      }
      cfg.seed = j.value("seed", cfg.seed);
      cfg.box_halfwidth = j.value("box_halfwidth", cfg.box_halfwidth);
      if (j.contains("input_ranges") && !j["input_ranges"].is_null()) {
         std::vector<InputRange> ranges;
         for (const auto& r : j["input_ranges"]) {
            ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
         }
         cfg.input_ranges = ranges;
      }
      cfg.folds = j.value("folds", cfg.folds);
      cfg.jobs = j.value("jobs", cfg.jobs);
   } catch (const json::exception& e) {
      fail(ErrorCode::parse_error, std::string("malformed run config: ") + e.what());
   }
   return cfg;
}

RunConfig parse_config(std::string_view text)
{
   return config_from_json(parse_json(text, "run config"));
}

json to_json(const LowerLevelResult& r)
{
   return json{{"x_star", r.x_star}, {"value", r.value}, {"certified_gap", number_or_null(r.certified_gap)}};
}

LowerLevelResult lower_level_from_json(const json& j)
{
   LowerLevelResult r;
   r.x_star = j.at("x_star").get<std::vector<double>>();
   r.value = j.at("value").get<double>();
   r.certified_gap = number_or_inf(j.at("certified_gap"));
   return r;
}

json to_json(const SolveReport& r)
{
   json j;
   j["mode"] = std::string(to_string(r.mode));
   j["w"] = std::vector<double>(r.w.data(), r.w.data() + r.w.size());
   j["objective"] = r.objective;
   j["lower_bound"] = number_or_null(r.lower_bound);
   j["upper_bound"] = number_or_null(r.upper_bound);
   j["gap"] = number_or_null(r.gap);
   j["iterations"] = r.iterations;
   j["discretization_sizes"] = r.discretization_sizes;
   j["epsilon_final"] = r.epsilon_final;
   j["delta"] = r.delta;
   j["grid_points"] = r.grid_points;
   j["seconds"] = r.seconds;
   j["certificates"] = json::array();
   for (const auto& c : r.certificates) {
      j["certificates"].push_back(to_json(c));
   }
   j["history"] = json::array();
   for (const auto& h : r.history) {
      j["history"].push_back({{"iteration", h.iteration},
                              {"lower_bound", number_or_null(h.lower_bound)},
                              {"upper_bound", number_or_null(h.upper_bound)},
                              {"epsilon", h.epsilon},
                              {"rows", h.rows}});
   }
   return j;
}

SolveReport report_from_json(const json& j)
{
   try {
      SolveReport r;
      const auto mode = parse_solve_mode(j.at("mode").get<std::string>());
      if (!mode) {
         fail(ErrorCode::parse_error, "solve report has an unknown mode");
      }
      r.mode = *mode;
      const auto w = j.at("w").get<std::vector<double>>();
      r.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      r.objective = j.at("objective").get<double>();
      r.lower_bound = number_or_inf(j.at("lower_bound"));
      r.upper_bound = number_or_inf(j.at("upper_bound"));
      r.gap = number_or_inf(j.at("gap"));
      r.iterations = j.at("iterations").get<int>();
      r.discretization_sizes = j.at("discretization_sizes").get<std::vector<std::size_t>>();
      r.epsilon_final = j.at("epsilon_final").get<double>();
      r.delta = j.value("delta", 0.0);
      r.grid_points = j.value("grid_points", 0);
      r.seconds = j.value("seconds", 0.0);
      for (const auto& c : j.at("certificates")) {
         r.certificates.push_back(lower_level_from_json(c));
      }
      for (const auto& h : j.at("history")) {
         r.history.push_back({h.at("iteration").get<int>(), number_or_inf(h.at("lower_bound")),
                              number_or_inf(h.at("upper_bound")), h.at("epsilon").get<double>(),
                              h.at("rows").get<std::size_t>()});
      }
      return r;
   } catch (const json::exception& e) {
      fail(ErrorCode::parse_error, std::string("malformed solve report: ") + e.what());
   }
}

} // namespace shapefit
