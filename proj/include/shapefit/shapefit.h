#ifndef SHAPEFIT_SHAPEFIT_H
#define SHAPEFIT_SHAPEFIT_H

/*
 * Shape-constrained polynomial regression.
 *
 * All functions return an sf_status. On failure sf_last_error() describes the
 * problem (thread-local, valid until the next call on the same thread).
 * Strings returned through char** are owned by the caller and released with
 * sf_string_free(). Configuration and reports are JSON documents.
 */

#include <stddef.h>

#if defined(SHAPEFIT_BUILDING_LIBRARY)
#define SF_API __attribute__((visibility("default")))
#else
#define SF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
   SF_OK = 0,
   SF_ERR_INVALID_ARGUMENT = 1,
   SF_ERR_PARSE = 2,
   SF_ERR_IO = 3,
   SF_ERR_VERSION = 4,
   SF_ERR_INFEASIBLE = 5,
   /* The constraint set admits no strictly feasible model; see sf_last_error. */
   SF_ERR_NOT_STRICTLY_FEASIBLE = 6,
   /* Iteration budget exhausted; a certified incumbent may still be returned. */
   SF_ERR_CONVERGENCE = 7,
   SF_ERR_NOT_FOUND = 8,
   SF_ERR_CONFLICT = 9,
   SF_ERR_INTERNAL = 10
} sf_status;

typedef struct sf_dataset sf_dataset;
typedef struct sf_constraints sf_constraints;
typedef struct sf_model sf_model;

SF_API const char* sf_version(void);
SF_API const char* sf_last_error(void);
SF_API const char* sf_status_name(sf_status status);
SF_API void sf_string_free(char* s);

/* Datasets: header row, then d input columns and one output column. */
SF_API sf_status sf_dataset_load_csv(const char* path, sf_dataset** out);
SF_API sf_status sf_dataset_parse_csv(const char* text, sf_dataset** out);
SF_API size_t sf_dataset_rows(const sf_dataset* data);
SF_API size_t sf_dataset_input_dim(const sf_dataset* data);
SF_API void sf_dataset_free(sf_dataset* data);

/* Constraint files: {"format":"shapefit-constraints","version":1,"constraints":[...]} or a bare list. */
SF_API sf_status sf_constraints_load(const char* path, sf_constraints** out);
SF_API sf_status sf_constraints_parse(const char* text, sf_constraints** out);
SF_API size_t sf_constraints_count(const sf_constraints* c);
SF_API sf_status sf_constraints_to_json(const sf_constraints* c, char** out);
SF_API void sf_constraints_free(sf_constraints* c);

/*
 * Fits a model. config_json holds the run settings (degrees, lambda, delta,
 * mode, grid_points, seed, input_ranges, ...). constraints may be NULL.
 * report_json (optional) receives the solve report. On SF_ERR_CONVERGENCE the
 * best certified incumbent is returned in *model when one exists. On
 * SF_ERR_NOT_STRICTLY_FEASIBLE, report_json receives
 * {"code": ..., "conflicting": [indices]}.
 */
SF_API sf_status sf_fit(const sf_dataset* data, const sf_constraints* constraints, const char* config_json,
                        sf_model** model, char** report_json);

SF_API sf_status sf_model_load(const char* path, sf_model** out);
SF_API sf_status sf_model_parse(const char* text, sf_model** out);
SF_API sf_status sf_model_save(const sf_model* model, const char* path);
SF_API sf_status sf_model_to_json(const sf_model* model, char** out);
SF_API size_t sf_model_input_dim(const sf_model* model);
/* x in original input units; *extrapolated (optional) is set when x lies outside the training ranges. */
SF_API sf_status sf_model_predict(const sf_model* model, const double* x, size_t dim, double* y, int* extrapolated);
/* CSV "t,yhat" of `resolution` points along `axis` through `anchor`. */
SF_API sf_status sf_model_slice_csv(const sf_model* model, const double* anchor, size_t dim, int axis, int resolution,
                                    char** csv);
SF_API void sf_model_free(sf_model* model);

/*
 * Sampling audit of `model` against `constraints` (the model's own when NULL).
 * options_json (may be NULL): {"anchors": 10000, "line": 100, "seed": 0, "tol": 1e-7}.
 * format: "json" or "csv".
 */
SF_API sf_status sf_audit(const sf_model* model, const sf_constraints* constraints, const char* options_json,
                          const char* format, char** report);

/* k-fold cross-validation in the configured mode ("folds", "jobs", "seed" keys). */
SF_API sf_status sf_cross_validate(const sf_dataset* data, const sf_constraints* constraints,
                                   const char* config_json, const char* format, char** report);

/*
 * Cross-validates adaptive, grid and ridge fits and renders the comparison
 * table. With "toy_truth": true in the config, the generalization error against
 * the toy function is added. report_json (optional) receives the raw numbers.
 */
SF_API sf_status sf_compare(const sf_dataset* data, const sf_constraints* constraints, const char* config_json,
                            char** table, char** report_json);

/*
 * Toy experiment data. options_json (may be NULL): {"sigma": 0.03408, "n": 30, "seed": 0}.
 * Returns the dataset CSV, the constraint file and a matching run config.
 */
SF_API sf_status sf_toy_generate(const char* options_json, char** csv, char** constraints_json, char** config_json);

/* Blocks serving the HTTP session API. storage_dir may be NULL for in-memory sessions. Port 0 picks a free port. */
SF_API sf_status sf_serve(const char* host, int port, const char* storage_dir);

#ifdef __cplusplus
}
#endif

#endif
