// Command-line front end; talks to the library only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shapefit/shapefit.h"

using json = nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_infeasible = 2;
constexpr int exit_convergence = 3;

struct CString {
   char* p = nullptr;
   ~CString() { sf_string_free(p); }
   std::string str() const { return p ? std::string(p) : std::string(); }
};

struct DatasetHandle {
   sf_dataset* p = nullptr;
   ~DatasetHandle() { sf_dataset_free(p); }
};

struct ConstraintsHandle {
   sf_constraints* p = nullptr;
   ~ConstraintsHandle() { sf_constraints_free(p); }
};

struct ModelHandle {
   sf_model* p = nullptr;
   ~ModelHandle() { sf_model_free(p); }
};

int exit_code(sf_status s)
{
   switch (s) {
   case SF_OK:
      return exit_ok;
   case SF_ERR_NOT_STRICTLY_FEASIBLE:
   case SF_ERR_INFEASIBLE:
      return exit_infeasible;
   case SF_ERR_CONVERGENCE:
      return exit_convergence;
   default:
      return exit_input;
   }
}

int report(sf_status s, const std::string& context)
{
   if (s != SF_OK) {
      std::cerr << "error (" << sf_status_name(s) << ") " << context << ": " << sf_last_error() << "\n";
   }
   return exit_code(s);
}

bool write_output(const std::string& path, const std::string& text)
{
   if (path.empty() || path == "-") {
      std::cout << text;
      return true;
   }
   std::ofstream out(path, std::ios::binary);
   out << text;
   if (!out) {
      std::cerr << "error: cannot write " << path << "\n";
      return false;
   }
   return true;
}

std::vector<double> parse_list(const std::string& text)
{
   std::vector<double> out;
   std::stringstream ss(text);
   std::string item;
   while (std::getline(ss, item, ',')) {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) {
         throw std::invalid_argument("not a number: " + item);
      }
   }
   return out;
}

// Run settings: the config file first, then any flags given explicitly.
struct ConfigFlags {
   std::string file;
   std::string degrees;
   std::optional<double> lambda;
   std::optional<double> delta;
   std::optional<std::string> mode;
   std::optional<int> grid;
   std::optional<double> grid_lambda;
   std::optional<unsigned long long> seed;
   std::optional<int> folds;
   std::optional<int> jobs;

   void add_to(CLI::App* app, bool cv_flags)
   {
      app->add_option("--config", file, "Run config JSON file");
      app->add_option("--degrees", degrees, "Per-input degrees, e.g. 1,5,2,2,2");
      app->add_option("--lambda", lambda, "Ridge regularization");
      app->add_option("--delta", delta, "Optimality precision of the adaptive solver");
      app->add_option("--mode", mode, "adaptive, grid or ridge")->check(CLI::IsMember({"adaptive", "grid", "ridge"}));
      app->add_option("--grid", grid, "Grid points per axis in grid mode");
      app->add_option("--grid-lambda", grid_lambda, "Regularization used by grid mode");
      app->add_option("--seed", seed, "Seed for folds, audits and samplers");
      if (cv_flags) {
         app->add_option("--folds", folds, "Number of cross-validation folds");
         app->add_option("--jobs", jobs, "Folds run concurrently (results do not depend on it)");
      }
   }

   json build() const
   {
      json cfg = json::object();
      if (!file.empty()) {
         std::ifstream in(file);
         if (!in) {
            throw std::runtime_error("cannot read config file " + file);
         }
         std::stringstream ss;
         ss << in.rdbuf();
         try {
            cfg = json::parse(ss.str());
         } catch (const json::parse_error& e) {
            throw std::runtime_error("config file " + file + ": " + e.what());
         }
      }
      if (!degrees.empty()) {
         std::vector<int> d;
         for (double v : parse_list(degrees)) {
            d.push_back(static_cast<int>(v));
         }
         cfg["degrees"] = d;
      }
      auto set = [&](const char* key, const auto& v) {
         if (v) {
            cfg[key] = *v;
         }
      };
      set("lambda", lambda);
      set("delta", delta);
      set("mode", mode);
      set("grid_points", grid);
      set("grid_lambda", grid_lambda);
      set("seed", seed);
      set("folds", folds);
      set("jobs", jobs);
      return cfg;
   }
};

int load_inputs(const std::string& data_path, const std::string& constraints_path, DatasetHandle& data,
                ConstraintsHandle& constraints)
{
   if (const int rc = report(sf_dataset_load_csv(data_path.c_str(), &data.p), "reading " + data_path)) {
      return rc;
   }
   if (!constraints_path.empty()) {
      return report(sf_constraints_load(constraints_path.c_str(), &constraints.p), "reading " + constraints_path);
   }
   return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
   CLI::App app{"Shape-constrained polynomial regression"};
   app.require_subcommand(1);
   int rc = exit_ok;

   // fit
   auto* fit = app.add_subcommand("fit", "Fit a model and write it with its solve report");
   std::string fit_data, fit_cons, fit_out = "model.json", fit_report;
   ConfigFlags fit_cfg;
   fit->add_option("--data", fit_data, "Dataset CSV")->required();
   fit->add_option("--constraints", fit_cons, "Constraint file");
   fit->add_option("--out", fit_out, "Model file to write");
   fit->add_option("--report", fit_report, "Solve report to write (stdout when '-')");
   fit_cfg.add_to(fit, false);
   fit->callback([&] {
      DatasetHandle data;
      ConstraintsHandle cons;
      if ((rc = load_inputs(fit_data, fit_cons, data, cons))) {
         return;
      }
      const std::string cfg = fit_cfg.build().dump();
      ModelHandle model;
      CString rep;
      const sf_status s = sf_fit(data.p, cons.p, cfg.c_str(), &model.p, &rep.p);
      rc = report(s, "fitting");
      if (s != SF_OK && !rep.str().empty()) {
         std::cerr << rep.str();
      }
      if (model.p) {
         if (const int save = report(sf_model_save(model.p, fit_out.c_str()), "writing " + fit_out)) {
            rc = save;
            return;
         }
         std::cerr << (s == SF_OK ? "model written to " : "certified incumbent written to ") << fit_out << "\n";
      }
      if (s == SF_OK && !fit_report.empty() && !write_output(fit_report, rep.str())) {
         rc = exit_input;
      }
   });

   // audit
   auto* audit = app.add_subcommand("audit", "Sample the model for shape-constraint violations");
   std::string audit_model, audit_cons, audit_format = "json", audit_out;
   std::size_t audit_anchors = 10000;
   int audit_line = 100;
   unsigned long long audit_seed = 0;
   double audit_tol = 1e-7;
   audit->add_option("--model", audit_model, "Model file")->required();
   audit->add_option("--constraints", audit_cons, "Constraint file (default: the model's own)");
   audit->add_option("--anchors", audit_anchors, "Random anchor points");
   audit->add_option("--line", audit_line, "Points per axis line through each anchor");
   audit->add_option("--seed", audit_seed, "Anchor seed");
   audit->add_option("--tol", audit_tol, "Violation tolerance");
   audit->add_option("--format", audit_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
   audit->add_option("--out", audit_out, "Output file (stdout by default)");
   audit->callback([&] {
      ModelHandle model;
      ConstraintsHandle cons;
      if ((rc = report(sf_model_load(audit_model.c_str(), &model.p), "reading " + audit_model))) {
         return;
      }
      if (!audit_cons.empty() &&
          (rc = report(sf_constraints_load(audit_cons.c_str(), &cons.p), "reading " + audit_cons))) {
         return;
      }
      const std::string opts =
         json{{"anchors", audit_anchors}, {"line", audit_line}, {"seed", audit_seed}, {"tol", audit_tol}}.dump();
      CString out;
      if ((rc = report(sf_audit(model.p, cons.p, opts.c_str(), audit_format.c_str(), &out.p), "auditing"))) {
         return;
      }
      rc = write_output(audit_out, out.str()) ? exit_ok : exit_input;
   });

   // cv
   auto* cv = app.add_subcommand("cv", "k-fold cross-validation in one solver mode");
   std::string cv_data, cv_cons, cv_format = "json", cv_out;
   ConfigFlags cv_cfg;
   cv->add_option("--data", cv_data, "Dataset CSV")->required();
   cv->add_option("--constraints", cv_cons, "Constraint file");
   cv->add_option("--format", cv_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
   cv->add_option("--out", cv_out, "Output file (stdout by default)");
   cv_cfg.add_to(cv, true);
   cv->callback([&] {
      DatasetHandle data;
      ConstraintsHandle cons;
      if ((rc = load_inputs(cv_data, cv_cons, data, cons))) {
         return;
      }
      const std::string cfg = cv_cfg.build().dump();
      CString out;
      if ((rc = report(sf_cross_validate(data.p, cons.p, cfg.c_str(), cv_format.c_str(), &out.p),
                       "cross-validating"))) {
         return;
      }
      rc = write_output(cv_out, out.str()) ? exit_ok : exit_input;
   });

   // slice
   auto* sl = app.add_subcommand("slice", "Model values along one axis through an anchor");
   std::string sl_model, sl_anchor, sl_out;
   int sl_axis = 0, sl_res = 101;
   sl->add_option("--model", sl_model, "Model file")->required();
   sl->add_option("--anchor", sl_anchor, "Anchor in original units, comma separated")->required();
   sl->add_option("--axis", sl_axis, "Axis to vary");
   sl->add_option("--resolution", sl_res, "Number of points");
   sl->add_option("--out", sl_out, "CSV output (stdout by default)");
   sl->callback([&] {
      ModelHandle model;
      if ((rc = report(sf_model_load(sl_model.c_str(), &model.p), "reading " + sl_model))) {
         return;
      }
      std::vector<double> anchor;
      try {
         anchor = parse_list(sl_anchor);
      } catch (const std::exception& e) {
         std::cerr << "error: --anchor: " << e.what() << "\n";
         rc = exit_input;
         return;
      }
      CString csv;
      if ((rc = report(sf_model_slice_csv(model.p, anchor.data(), anchor.size(), sl_axis, sl_res, &csv.p), "slicing"))) {
         return;
      }
      rc = write_output(sl_out, csv.str()) ? exit_ok : exit_input;
   });

   // toy-generate
   auto* toy = app.add_subcommand("toy-generate", "Write the toy dataset, its constraints and run config");
   double toy_sigma = 0.03408;
   int toy_n = 30;
   unsigned long long toy_seed = 0;
   std::string toy_data = "toy.csv", toy_cons = "toy.constraints.json", toy_cfg = "toy.config.json";
   toy->add_option("--sigma", toy_sigma, "Noise standard deviation");
   toy->add_option("--n", toy_n, "Number of samples");
   toy->add_option("--seed", toy_seed, "Sampling seed");
   toy->add_option("--out-data", toy_data, "Dataset CSV to write");
   toy->add_option("--out-constraints", toy_cons, "Constraint file to write");
   toy->add_option("--out-config", toy_cfg, "Run config to write");
   toy->callback([&] {
      const std::string opts = json{{"sigma", toy_sigma}, {"n", toy_n}, {"seed", toy_seed}}.dump();
      CString csv, cons, cfg;
      if ((rc = report(sf_toy_generate(opts.c_str(), &csv.p, &cons.p, &cfg.p), "generating toy data"))) {
         return;
      }
      const bool ok = write_output(toy_data, csv.str()) && write_output(toy_cons, cons.str()) &&
                      write_output(toy_cfg, cfg.str());
      rc = ok ? exit_ok : exit_input;
   });

   // compare
   auto* cmp = app.add_subcommand("compare", "Cross-validate adaptive, grid and ridge fits side by side");
   std::string cmp_data, cmp_cons, cmp_out, cmp_json;
   bool cmp_truth = false;
   ConfigFlags cmp_cfg;
   cmp->add_option("--data", cmp_data, "Dataset CSV")->required();
   cmp->add_option("--constraints", cmp_cons, "Constraint file");
   cmp->add_option("--out", cmp_out, "Table output (stdout by default)");
   cmp->add_option("--json", cmp_json, "Write the raw numbers as JSON");
   cmp->add_flag("--toy-truth", cmp_truth, "Also report generalization error against the toy function");
   cmp_cfg.add_to(cmp, true);
   cmp->callback([&] {
      DatasetHandle data;
      ConstraintsHandle cons;
      if ((rc = load_inputs(cmp_data, cmp_cons, data, cons))) {
         return;
      }
      json cfg = cmp_cfg.build();
      if (cmp_truth) {
         cfg["toy_truth"] = true;
      }
      CString table, raw;
      if ((rc = report(sf_compare(data.p, cons.p, cfg.dump().c_str(), &table.p, &raw.p), "comparing"))) {
         return;
      }
      bool ok = write_output(cmp_out, table.str());
      if (!cmp_json.empty()) {
         ok = write_output(cmp_json, raw.str()) && ok;
      }
      rc = ok ? exit_ok : exit_input;
   });

   // serve
   auto* srv = app.add_subcommand("serve", "Run the HTTP session service");
   std::string srv_host = "127.0.0.1", srv_storage;
   int srv_port = 8080;
   srv->add_option("--host", srv_host, "Address to bind");
   srv->add_option("--port", srv_port, "Port (0 picks a free one)");
   srv->add_option("--storage", srv_storage, "Session directory (in-memory when empty)");
   srv->callback([&] {
      rc = report(sf_serve(srv_host.c_str(), srv_port, srv_storage.empty() ? nullptr : srv_storage.c_str()), "serving");
   });

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? exit_ok : exit_input;
   } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return exit_input;
   }
   return rc;
}
