#include <doctest.h>

#include <cmath>
#include <limits>

#include "error.hpp"
#include "serialization.hpp"

using namespace shapefit;

TEST_CASE("constraint files round trip")
{
   auto relaxed = ShapeConstraint::concave(0);
   relaxed.relax = 0.125;
   const std::vector<ShapeConstraint> cs = {ShapeConstraint::lower_bound(-1.5), ShapeConstraint::increasing(2),
                                            ShapeConstraint::rebound(1, 0.5, 3.0), relaxed};
   const auto text = serialize_constraints(cs);
   CHECK(parse_constraints(text) == cs);
   const auto doc = json::parse(text);
   CHECK(doc["format"] == "shapefit-constraints");
   CHECK(doc["version"] == 1);
}

TEST_CASE("constraint parsing accepts bare lists and rejects bad input")
{
   const auto cs = parse_constraints(R"([{"kind": "convex", "axis": 1}, {"kind": "upper_bound", "level": 2}])");
   REQUIRE(cs.size() == 2);
   CHECK(cs[0] == ShapeConstraint::convex(1));
   CHECK(cs[1] == ShapeConstraint::upper_bound(2.0));

   const auto code = [](std::string_view text) {
      try {
         parse_constraints(text);
      } catch (const Error& e) {
         return e.code();
      }
      return ErrorCode::conflict;
   };
   CHECK(code(R"({"format": "shapefit-constraints", "version": 2, "constraints": []})") ==
         ErrorCode::version_mismatch);
   CHECK(code(R"([{"kind": "wiggly"}])") == ErrorCode::parse_error);
   CHECK(code("[{") == ErrorCode::parse_error);
}

TEST_CASE("config keys override only what they name")
{
   RunConfig base;
   base.degrees = {2, 2};
   base.lambda = 0.5;
   const auto cfg = config_from_json(json{{"delta", 1e-3}, {"mode", "grid"}, {"seeds", {7, 8}}}, base);
   CHECK(cfg.degrees == std::vector<int>{2, 2});
   CHECK(cfg.lambda == 0.5);
   CHECK(cfg.delta == 1e-3);
   CHECK(cfg.mode == SolveMode::grid);
   CHECK(cfg.seed == 7);

   RunConfig full;
   full.degrees = {1, 5};
   full.grid_lambda = 0.05;
   full.input_ranges = std::vector<InputRange>{{0, 2}, {-1, 1}};
   full.folds = 4;
   const auto back = config_from_json(to_json(full));
   CHECK(back.degrees == full.degrees);
   CHECK(back.grid_lambda == full.grid_lambda);
   CHECK(back.input_ranges == full.input_ranges);
   CHECK(back.folds == 4);
   CHECK_THROWS_AS(config_from_json(json{{"mode", "magic"}}), Error);
}

TEST_CASE("solve reports round trip including infinite bounds")
{
   SolveReport r;
   r.mode = SolveMode::grid;
   r.w = Eigen::Vector3d(0.1, -2.0, 1.0 / 3.0);
   r.lower_bound = 1.25;
   r.upper_bound = std::numeric_limits<double>::infinity();
   r.gap = std::numeric_limits<double>::infinity();
   r.objective = 1.25;
   r.iterations = 4;
   r.discretization_sizes = {3, 5, 9};
   r.certificates.push_back({{0.5, 0.25}, -1e-3, 0.01, {}});
   const auto j = to_json(r);
   CHECK(j["upper_bound"].is_null());
   const auto back = report_from_json(json::parse(j.dump()));
   CHECK(back.mode == SolveMode::grid);
   CHECK(back.w == r.w);
   CHECK(std::isinf(back.upper_bound));
   CHECK(back.discretization_sizes == r.discretization_sizes);
   REQUIRE(back.certificates.size() == 1);
   CHECK(back.certificates[0].x_star == r.certificates[0].x_star);
}

TEST_CASE("json syntax errors carry a position")
{
   try {
      parse_json("{\n  \"a\": ,\n}", "config");
      FAIL("expected a parse error");
   } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse_error);
      CHECK(std::string(e.what()).find("config") != std::string::npos);
   }
}
