/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface of libmaft. Structured values cross the boundary as JSON or
 * CSV text; networks and datasets are opaque handles.
 *
 * Every function returns a maft_status. On failure the message is available
 * from maft_last_error() on the same thread until the next call. Strings
 * returned through char** are owned by the caller and released with
 * maft_string_free().
 */
#ifndef MAFT_MAFT_H
#define MAFT_MAFT_H

#include <stddef.h>
#include <stdint.h>

#if defined(MAFT_BUILDING_LIBRARY)
#define MAFT_API __attribute__((visibility("default")))
#else
#define MAFT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum maft_status {
  MAFT_OK = 0,
  MAFT_INVALID_ARGUMENT = 1, /* malformed input, shape mismatch, null pointer */
  MAFT_VALIDATION = 2,       /* plan or physical constraint violated */
  MAFT_NUMERICAL = 3,        /* divergence, aliasing guard, non-convergence */
  MAFT_IO = 4,
  MAFT_INTERNAL = 5
} maft_status;

typedef struct maft_network maft_network;
typedef struct maft_dataset maft_dataset;

MAFT_API const char* maft_version(void);
MAFT_API const char* maft_last_error(void);
MAFT_API void maft_string_free(char* s);

/* ---- plans ------------------------------------------------------------- */

/* request: {"scheme": "reduction"|"expansion"|"custom", "n", "r",
 *           "dfx_hz", "n0", and for custom "dfy_hz", "r0"}.
 * Frequencies may be numbers or exact strings such as "1e6" or "1000/3". */
MAFT_API maft_status maft_plan_create(const char* request_json, char** plan_json);
/* Checks a plan against the collision constraints (Validation on failure). */
MAFT_API maft_status maft_plan_validate(const char* plan_json);
MAFT_API maft_status maft_plan_enumeration_csv(const char* plan_json, char** csv);
MAFT_API maft_status maft_plan_margins(const char* plan_json, char** text);
/* Input tones of x on the plan's grid; format "json" or "csv". */
MAFT_API maft_status maft_plan_encode(const char* plan_json, const double* x, size_t n, const char* format,
                                      char** out);

/* ---- networks ---------------------------------------------------------- */

MAFT_API maft_status maft_network_from_json(const char* spec_json, maft_network** out);
/* Bundled example. input_json receives the example's input vector as a JSON
 * array and may be NULL. */
MAFT_API maft_status maft_network_builtin(const char* name, uint64_t seed, maft_network** out, char** input_json);
MAFT_API maft_status maft_builtin_names(char** json);
MAFT_API void maft_network_free(maft_network* net);
MAFT_API maft_status maft_network_to_json(const maft_network* net, char** spec_json);
MAFT_API maft_status maft_network_input_size(const maft_network* net, size_t* n);
MAFT_API maft_status maft_network_output_size(const maft_network* net, size_t* r);
/* Readout values for x: signed when sign recovery is on, else magnitudes.
 * `values` must hold output_size entries; `argmax` may be NULL. */
MAFT_API maft_status maft_network_infer(const maft_network* net, const double* x, size_t n, double* values,
                                        int64_t* argmax);
/* Full forward pass. path: "auto", "tones" or "time". readout_json gets the
 * readout record, trace_csv (may be NULL) every intermediate spectrum. */
MAFT_API maft_status maft_network_simulate(const maft_network* net, const double* x, size_t n, const char* path,
                                           char** readout_json, char** trace_csv);

/* ---- datasets, inference, training ------------------------------------- */

MAFT_API maft_status maft_dataset_load(const char* path, maft_dataset** out);
MAFT_API maft_status maft_dataset_parse(const char* csv, maft_dataset** out);
MAFT_API void maft_dataset_free(maft_dataset* data);
MAFT_API maft_status maft_dataset_size(const maft_dataset* data, size_t* samples, size_t* features);

/* Accuracy, loss, confusion matrix and (optionally) per-sample readouts.
 * threads = 0 uses MAFT_THREADS or the hardware concurrency. */
MAFT_API maft_status maft_network_evaluate(const maft_network* net, const maft_dataset* data, int threads,
                                           int include_results, char** results_json);
/* config: {"learning_rate", "epochs", "batch_size", "seed", "loss":
 * "cross_entropy"|"mse", "gradient": "analytic"|"finite_difference",
 * "fd_step", "threads"}; omitted keys take defaults. The network's weights
 * are replaced by the trained ones (the last finite ones on divergence).
 * test may be NULL. */
MAFT_API maft_status maft_network_train(maft_network* net, const maft_dataset* train, const maft_dataset* test,
                                        const char* config_json, char** history_json);

/* ---- characterization fits --------------------------------------------- */

MAFT_API maft_status maft_fit_linear(const char* samples_json, char** result_json);
MAFT_API maft_status maft_fit_nonlinear(const char* problem_json, char** result_json);
/* request: {"drive": spectrum JSON, "truth": {"chi0","chi1","chi2","chi3"},
 *           "scales": [...], "probe_indices": [...], "noise_sigma", "seed"} */
MAFT_API maft_status maft_fit_synthesize(const char* request_json, char** problem_json);

/* ---- performance analysis ---------------------------------------------- */

/* request: any of {"plan": plan JSON object, "bandwidth_hz", "pd_bandwidth_hz",
 *                  "link": link budget, "latency": latency budget}.
 * The report has one section per supplied part. */
MAFT_API maft_status maft_analyze(const char* request_json, char** report_json);
/* p_ld_w,gain,gain_db rows over a logarithmic laser-power sweep. */
MAFT_API maft_status maft_gain_sweep_csv(const char* link_json, double p_ld_min, double p_ld_max, int points,
                                         char** csv);

#ifdef __cplusplus
}
#endif

#endif /* MAFT_MAFT_H */
