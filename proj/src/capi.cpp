#include "shapefit/shapefit.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "error.hpp"
#include "evaluation.hpp"
#include "http_api.hpp"
#include "model_store.hpp"
#include "serialization.hpp"
#include "toy_data.hpp"
#include "workflow.hpp"

struct sf_dataset {
   shapefit::Dataset data;
};

struct sf_constraints {
   std::vector<shapefit::ShapeConstraint> list;
};

struct sf_model {
   shapefit::TrainedModel model;
};

namespace {

using shapefit::ErrorCode;
using shapefit::json;

thread_local std::string last_error;

sf_status status_of(ErrorCode code)
{
   switch (code) {
   case ErrorCode::invalid_argument:
      return SF_ERR_INVALID_ARGUMENT;
   case ErrorCode::parse_error:
      return SF_ERR_PARSE;
   case ErrorCode::io_error:
      return SF_ERR_IO;
   case ErrorCode::version_mismatch:
      return SF_ERR_VERSION;
   case ErrorCode::infeasible:
      return SF_ERR_INFEASIBLE;
   case ErrorCode::not_strictly_feasible:
      return SF_ERR_NOT_STRICTLY_FEASIBLE;
   case ErrorCode::convergence_failure:
      return SF_ERR_CONVERGENCE;
   case ErrorCode::not_found:
      return SF_ERR_NOT_FOUND;
   case ErrorCode::conflict:
      return SF_ERR_CONFLICT;
   }
   return SF_ERR_INTERNAL;
}

// Runs `f`, translating exceptions into a status and the thread-local message.
template <class F>
sf_status guarded(F&& f)
{
   try {
      last_error.clear();
      f();
      return SF_OK;
   } catch (const shapefit::Error& e) {
      last_error = e.what();
      return status_of(e.code());
   } catch (const json::exception& e) {
      last_error = e.what();
      return SF_ERR_PARSE;
   } catch (const std::bad_alloc&) {
      last_error = "out of memory";
      return SF_ERR_INTERNAL;
   } catch (const std::exception& e) {
      last_error = e.what();
      return SF_ERR_INTERNAL;
   }
}

char* dup(const std::string& s)
{
   char* out = static_cast<char*>(std::malloc(s.size() + 1));
   if (!out) {
      throw std::bad_alloc();
   }
   std::memcpy(out, s.c_str(), s.size() + 1);
   return out;
}

void put(char** out, const std::string& s)
{
   if (out) {
      *out = dup(s);
   }
}

void need(const void* p, const char* what)
{
   if (!p) {
      shapefit::fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
   }
}

shapefit::RunConfig config_of(const char* config_json)
{
   if (!config_json || !*config_json) {
      return {};
   }
   return shapefit::parse_config(config_json);
}

json options_of(const char* options_json)
{
   if (!options_json || !*options_json) {
      return json::object();
   }
   json j = shapefit::parse_json(options_json, "options");
   if (!j.is_object()) {
      shapefit::fail(ErrorCode::parse_error, "options must be a JSON object");
   }
   return j;
}

const std::vector<shapefit::ShapeConstraint>& list_of(const sf_constraints* c)
{
   static const std::vector<shapefit::ShapeConstraint> none;
   return c ? c->list : none;
}

bool wants_csv(const char* format)
{
   if (!format || std::strcmp(format, "json") == 0) {
      return false;
   }
   if (std::strcmp(format, "csv") == 0) {
      return true;
   }
   shapefit::fail(ErrorCode::invalid_argument, std::string("unknown output format '") + format + "'");
}

} // namespace

extern "C" {

const char* sf_version(void)
{
   return "0.1.0";
}

const char* sf_last_error(void)
{
   return last_error.c_str();
}

const char* sf_status_name(sf_status status)
{
   switch (status) {
   case SF_OK:
      return "ok";
   case SF_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
   case SF_ERR_PARSE:
      return "parse_error";
   case SF_ERR_IO:
      return "io_error";
   case SF_ERR_VERSION:
      return "version_mismatch";
   case SF_ERR_INFEASIBLE:
      return "infeasible";
   case SF_ERR_NOT_STRICTLY_FEASIBLE:
      return "not_strictly_feasible";
   case SF_ERR_CONVERGENCE:
      return "convergence_failure";
   case SF_ERR_NOT_FOUND:
      return "not_found";
   case SF_ERR_CONFLICT:
      return "conflict";
   case SF_ERR_INTERNAL:
      return "internal";
   }
   return "unknown";
}

void sf_string_free(char* s)
{
   std::free(s);
}

sf_status sf_dataset_load_csv(const char* path, sf_dataset** out)
{
   return guarded([&] {
      need(path, "path");
      need(out, "out");
      *out = new sf_dataset{shapefit::load_csv(path)};
   });
}

sf_status sf_dataset_parse_csv(const char* text, sf_dataset** out)
{
   return guarded([&] {
      need(text, "text");
      need(out, "out");
      *out = new sf_dataset{shapefit::parse_csv(text)};
   });
}

size_t sf_dataset_rows(const sf_dataset* data)
{
   return data ? data->data.size() : 0;
}

size_t sf_dataset_input_dim(const sf_dataset* data)
{
   return data ? static_cast<size_t>(data->data.input_dim()) : 0;
}

void sf_dataset_free(sf_dataset* data)
{
   delete data;
}

sf_status sf_constraints_load(const char* path, sf_constraints** out)
{
   return guarded([&] {
      need(path, "path");
      need(out, "out");
      *out = new sf_constraints{shapefit::parse_constraints(shapefit::read_file(path))};
   });
}

sf_status sf_constraints_parse(const char* text, sf_constraints** out)
{
   return guarded([&] {
      need(text, "text");
      need(out, "out");
      *out = new sf_constraints{shapefit::parse_constraints(text)};
   });
}

size_t sf_constraints_count(const sf_constraints* c)
{
   return c ? c->list.size() : 0;
}

sf_status sf_constraints_to_json(const sf_constraints* c, char** out)
{
   return guarded([&] {
      need(c, "constraints");
      need(out, "out");
      *out = dup(shapefit::serialize_constraints(c->list));
   });
}

void sf_constraints_free(sf_constraints* c)
{
   delete c;
}

sf_status sf_fit(const sf_dataset* data, const sf_constraints* constraints, const char* config_json,
                 sf_model** model, char** report_json)
{
   if (model) {
      *model = nullptr;
   }
   if (report_json) {
      *report_json = nullptr;
   }
   return guarded([&] {
      need(data, "data");
      need(model, "model");
      const auto cfg = config_of(config_json);
      try {
         auto outcome = shapefit::fit_model(data->data, list_of(constraints), cfg);
         put(report_json, shapefit::to_json(outcome.report).dump(2) + "\n");
         *model = new sf_model{std::move(outcome.model)};
      } catch (const shapefit::SolveError& e) {
         json detail{{"code", std::string(shapefit::to_string(e.code()))},
                     {"message", e.what()},
                     {"conflicting", e.conflicting_constraints()}};
         if (e.incumbent()) {
            // Hand back the certified incumbent alongside the failure.
            const auto p = shapefit::build_problem(data->data, list_of(constraints), cfg);
            *model = new sf_model{shapefit::make_model(p, *e.incumbent(), shapefit::effective_ranges(data->data, cfg), cfg)};
            detail["incumbent"] = shapefit::to_json(*e.incumbent());
         }
         put(report_json, detail.dump(2) + "\n");
         throw;
      }
   });
}

sf_status sf_model_load(const char* path, sf_model** out)
{
   return guarded([&] {
      need(path, "path");
      need(out, "out");
      *out = new sf_model{shapefit::deserialize(shapefit::read_file(path))};
   });
}

sf_status sf_model_parse(const char* text, sf_model** out)
{
   return guarded([&] {
      need(text, "text");
      need(out, "out");
      *out = new sf_model{shapefit::deserialize(text)};
   });
}

sf_status sf_model_save(const sf_model* model, const char* path)
{
   return guarded([&] {
      need(model, "model");
      need(path, "path");
      shapefit::write_file(path, shapefit::serialize(model->model));
   });
}

sf_status sf_model_to_json(const sf_model* model, char** out)
{
   return guarded([&] {
      need(model, "model");
      need(out, "out");
      *out = dup(shapefit::serialize(model->model));
   });
}

size_t sf_model_input_dim(const sf_model* model)
{
   return model ? static_cast<size_t>(model->model.input_dim()) : 0;
}

sf_status sf_model_predict(const sf_model* model, const double* x, size_t dim, double* y, int* extrapolated)
{
   return guarded([&] {
      need(model, "model");
      need(x, "x");
      need(y, "y");
      const auto p = shapefit::predict(model->model, std::span<const double>(x, dim));
      *y = p.value;
      if (extrapolated) {
         *extrapolated = p.extrapolated ? 1 : 0;
      }
   });
}

sf_status sf_model_slice_csv(const sf_model* model, const double* anchor, size_t dim, int axis, int resolution,
                             char** csv)
{
   return guarded([&] {
      need(model, "model");
      need(anchor, "anchor");
      need(csv, "csv");
      const auto pts = shapefit::slice(model->model, std::span<const double>(anchor, dim), axis, resolution);
      *csv = dup(shapefit::slice_to_csv(pts));
   });
}

void sf_model_free(sf_model* model)
{
   delete model;
}

sf_status sf_audit(const sf_model* model, const sf_constraints* constraints, const char* options_json,
                   const char* format, char** report)
{
   return guarded([&] {
      need(model, "model");
      need(report, "report");
      const json o = options_of(options_json);
      shapefit::AuditOptions opts;
      opts.n_anchors = o.value("anchors", opts.n_anchors);
      opts.n_line = o.value("line", opts.n_line);
      opts.seed = o.value("seed", opts.seed);
      opts.tol = o.value("tol", opts.tol);
      const bool csv = wants_csv(format);
      const auto& list = constraints ? constraints->list : model->model.constraints();
      const auto r = shapefit::audit_violations(model->model, list, opts);
      *report = dup(csv ? shapefit::violation_csv(r) : shapefit::to_json(r).dump(2) + "\n");
   });
}

sf_status sf_cross_validate(const sf_dataset* data, const sf_constraints* constraints, const char* config_json,
                            const char* format, char** report)
{
   return guarded([&] {
      need(data, "data");
      need(report, "report");
      const bool csv = wants_csv(format);
      const auto cfg = config_of(config_json);
      const auto r = shapefit::run_cross_validation(data->data, list_of(constraints), cfg, cfg.mode);
      *report = dup(csv ? shapefit::cv_csv(r) : shapefit::to_json(r).dump(2) + "\n");
   });
}

sf_status sf_compare(const sf_dataset* data, const sf_constraints* constraints, const char* config_json, char** table,
                     char** report_json)
{
   return guarded([&] {
      need(data, "data");
      need(table, "table");
      const auto cfg = config_of(config_json);
      const bool toy_truth = config_json && *config_json && shapefit::parse_json(config_json, "run config").value("toy_truth", false);
      std::function<double(std::span<const double>)> truth;
      if (toy_truth) {
         truth = [](std::span<const double> x) { return shapefit::toy::eval(x); };
      }
      const auto rows = shapefit::run_comparison(data->data, list_of(constraints), cfg, truth);
      *table = dup(shapefit::render_table(rows));
      put(report_json, shapefit::to_json(rows).dump(2) + "\n");
   });
}

sf_status sf_toy_generate(const char* options_json, char** csv, char** constraints_json, char** config_json)
{
   return guarded([&] {
      const json o = options_of(options_json);
      shapefit::toy::ToySpec spec;
      spec.sigma = o.value("sigma", spec.sigma);
      spec.n_train = o.value("n", spec.n_train);
      spec.seed = o.value("seed", spec.seed);
      const auto data = shapefit::toy::sample(spec);
      put(csv, shapefit::to_csv(data));
      put(constraints_json, shapefit::serialize_constraints(shapefit::toy::constraints()));
      put(config_json, shapefit::to_json(shapefit::toy_config(spec.seed)).dump(2) + "\n");
   });
}

sf_status sf_serve(const char* host, int port, const char* storage_dir)
{
   return guarded([&] {
      const int rc = shapefit::serve(host ? host : "127.0.0.1", port, storage_dir ? storage_dir : "");
      if (rc != 0) {
         shapefit::fail(ErrorCode::io_error, "HTTP service could not start");
      }
   });
}

} // extern "C"
