#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include <json.hpp>

#include <shapefit/shapefit.h>

using nlohmann::json;

namespace {

// Takes ownership of a library string.
std::string take(char* s)
{
   std::string out = s ? s : "";
   sf_string_free(s);
   return out;
}

const char* line_csv = "x,y\n0,0.1\n0.2,0.5\n0.4,0.3\n0.6,0.7\n0.8,0.6\n1,1.0\n";

} // namespace

TEST_CASE("version and status names")
{
   CHECK(std::strlen(sf_version()) > 0);
   CHECK(std::string(sf_status_name(SF_OK)) == "ok");
   CHECK(std::string(sf_status_name(SF_ERR_NOT_STRICTLY_FEASIBLE)) == "not_strictly_feasible");
}

TEST_CASE("dataset and constraint handles")
{
   sf_dataset* d = nullptr;
   REQUIRE(sf_dataset_parse_csv(line_csv, &d) == SF_OK);
   CHECK(sf_dataset_rows(d) == 6);
   CHECK(sf_dataset_input_dim(d) == 1);
   sf_dataset_free(d);

   sf_dataset* bad = nullptr;
   CHECK(sf_dataset_parse_csv("x,y\n1,zz\n", &bad) == SF_ERR_PARSE);
   CHECK(bad == nullptr);
   CHECK(std::string(sf_last_error()).find("line 2") != std::string::npos);
   CHECK(sf_dataset_load_csv("/nonexistent.csv", &bad) == SF_ERR_IO);
   CHECK(sf_dataset_parse_csv(nullptr, &bad) == SF_ERR_INVALID_ARGUMENT);

   sf_constraints* c = nullptr;
   REQUIRE(sf_constraints_parse(R"([{"kind": "increasing", "axis": 0}])", &c) == SF_OK);
   CHECK(sf_constraints_count(c) == 1);
   char* text = nullptr;
   REQUIRE(sf_constraints_to_json(c, &text) == SF_OK);
   CHECK(json::parse(take(text))["constraints"][0]["kind"] == "increasing");
   sf_constraints_free(c);
   CHECK(sf_constraints_parse(R"({"format": "shapefit-constraints", "version": 7, "constraints": []})", &c) ==
         SF_ERR_VERSION);
}

TEST_CASE("fit, predict, slice, save and audit through the C interface")
{
   sf_dataset* d = nullptr;
   sf_constraints* c = nullptr;
   REQUIRE(sf_dataset_parse_csv(line_csv, &d) == SF_OK);
   REQUIRE(sf_constraints_parse(R"([{"kind": "increasing", "axis": 0}])", &c) == SF_OK);
   sf_model* m = nullptr;
   char* report = nullptr;
   REQUIRE(sf_fit(d, c, R"({"degrees": [4], "lambda": 0.001, "delta": 1e-6})", &m, &report) == SF_OK);
   const auto r = json::parse(take(report));
   CHECK(r["gap"].get<double>() <= 1e-6);
   CHECK(sf_model_input_dim(m) == 1);

   double prev = -1e300;
   for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      double y = 0.0;
      int extrap = 1;
      REQUIRE(sf_model_predict(m, &x, 1, &y, &extrap) == SF_OK);
      CHECK(extrap == 0);
      CHECK(y >= prev - 1e-9);
      prev = y;
   }
   const double far = 2.0;
   double y = 0.0;
   int extrap = 0;
   REQUIRE(sf_model_predict(m, &far, 1, &y, &extrap) == SF_OK);
   CHECK(extrap == 1);
   CHECK(sf_model_predict(m, &far, 2, &y, nullptr) == SF_ERR_INVALID_ARGUMENT);

   const double anchor = 0.5;
   char* csv = nullptr;
   REQUIRE(sf_model_slice_csv(m, &anchor, 1, 0, 5, &csv) == SF_OK);
   const auto slice = take(csv);
   CHECK(slice.rfind("t,yhat\n", 0) == 0);
   CHECK(std::count(slice.begin(), slice.end(), '\n') == 6);

   char* audit = nullptr;
   REQUIRE(sf_audit(m, nullptr, R"({"anchors": 500})", "json", &audit) == SF_OK);
   CHECK(json::parse(take(audit))["total_violated"] == 0);
   REQUIRE(sf_audit(m, nullptr, nullptr, "csv", &audit) == SF_OK);
   CHECK(take(audit).rfind("constraint,", 0) == 0);
   CHECK(sf_audit(m, nullptr, nullptr, "xml", &audit) == SF_ERR_INVALID_ARGUMENT);

   char* model_json = nullptr;
   REQUIRE(sf_model_to_json(m, &model_json) == SF_OK);
   const auto text = take(model_json);
   sf_model* back = nullptr;
   REQUIRE(sf_model_parse(text.c_str(), &back) == SF_OK);
   char* again = nullptr;
   REQUIRE(sf_model_to_json(back, &again) == SF_OK);
   CHECK(take(again) == text);

   const std::string path = "/tmp/shapefit_capi_model.json";
   REQUIRE(sf_model_save(m, path.c_str()) == SF_OK);
   sf_model* loaded = nullptr;
   REQUIRE(sf_model_load(path.c_str(), &loaded) == SF_OK);
   double y1 = 0.0;
   double y2 = 0.0;
   REQUIRE(sf_model_predict(m, &anchor, 1, &y1, nullptr) == SF_OK);
   REQUIRE(sf_model_predict(loaded, &anchor, 1, &y2, nullptr) == SF_OK);
   CHECK(y1 == y2);
   std::remove(path.c_str());

   sf_model_free(loaded);
   sf_model_free(back);
   sf_model_free(m);
   sf_constraints_free(c);
   sf_dataset_free(d);
}

TEST_CASE("contradictory bounds report the conflicting constraints")
{
   sf_dataset* d = nullptr;
   sf_constraints* c = nullptr;
   REQUIRE(sf_dataset_parse_csv(line_csv, &d) == SF_OK);
   REQUIRE(sf_constraints_parse(R"([{"kind": "lower_bound", "level": 3}, {"kind": "increasing", "axis": 0},
                                    {"kind": "upper_bound", "level": 1}])",
                                &c) == SF_OK);
   sf_model* m = nullptr;
   char* report = nullptr;
   const auto st = sf_fit(d, c, R"({"degrees": [3]})", &m, &report);
   CHECK((st == SF_ERR_NOT_STRICTLY_FEASIBLE || st == SF_ERR_INFEASIBLE));
   CHECK(m == nullptr);
   const auto detail = json::parse(take(report));
   const auto conflicting = detail["conflicting"].get<std::vector<int>>();
   CHECK(std::find(conflicting.begin(), conflicting.end(), 0) != conflicting.end());
   CHECK(std::find(conflicting.begin(), conflicting.end(), 2) != conflicting.end());
   sf_constraints_free(c);
   sf_dataset_free(d);
}

TEST_CASE("bad configuration is rejected")
{
   sf_dataset* d = nullptr;
   REQUIRE(sf_dataset_parse_csv(line_csv, &d) == SF_OK);
   sf_model* m = nullptr;
   CHECK(sf_fit(d, nullptr, R"({"degrees": [2, 2]})", &m, nullptr) == SF_ERR_INVALID_ARGUMENT);
   CHECK(sf_fit(d, nullptr, R"({"degrees": [2], "lambda": -1})", &m, nullptr) == SF_ERR_INVALID_ARGUMENT);
   CHECK(sf_fit(d, nullptr, "{not json", &m, nullptr) == SF_ERR_PARSE);
   CHECK(sf_fit(nullptr, nullptr, nullptr, &m, nullptr) == SF_ERR_INVALID_ARGUMENT);
   sf_dataset_free(d);
}

TEST_CASE("toy generation and cross-validation")
{
   char* csv = nullptr;
   char* cons = nullptr;
   char* cfg = nullptr;
   REQUIRE(sf_toy_generate(R"({"n": 20, "seed": 3})", &csv, &cons, &cfg) == SF_OK);
   const auto data_text = take(csv);
   const auto cons_text = take(cons);
   const auto cfg_json = json::parse(take(cfg));
   CHECK(cfg_json["degrees"] == json::array({1, 5, 2, 2, 2}));

   sf_dataset* d = nullptr;
   sf_constraints* c = nullptr;
   REQUIRE(sf_dataset_parse_csv(data_text.c_str(), &d) == SF_OK);
   REQUIRE(sf_constraints_parse(cons_text.c_str(), &c) == SF_OK);
   CHECK(sf_dataset_rows(d) == 20);
   CHECK(sf_constraints_count(c) == 5);

   json run = cfg_json;
   run["mode"] = "ridge";
   run["folds"] = 4;
   char* report = nullptr;
   REQUIRE(sf_cross_validate(d, c, run.dump().c_str(), "json", &report) == SF_OK);
   const auto r = json::parse(take(report));
   CHECK(r["fold_rmses"].size() == 4);
   sf_constraints_free(c);
   sf_dataset_free(d);
}
