/* C API for the hdinfer shared library: simultaneous inference for
 * high-dimensional sparse regression (de-biased Lasso + multiplier
 * bootstrap). All functions return HDI_OK or an error code; the message for
 * the most recent failure on the calling thread is available through
 * hdi_last_error(). Handles are opaque and freed with the matching _free.
 */
#ifndef HDINFER_H
#define HDINFER_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hdi_status {
  HDI_OK = 0,
  HDI_ERR_NON_FINITE,
  HDI_ERR_CONSTANT_COLUMN,
  HDI_ERR_DIMENSION_MISMATCH,
  HDI_ERR_UNDERDETERMINED,
  HDI_ERR_DEGENERATE_VARIANCE,
  HDI_ERR_SATURATED_FIT,
  HDI_ERR_DEGENERATE_TAU,
  HDI_ERR_NO_FIXED_POINT,
  HDI_ERR_EMPTY_GROUP,
  HDI_ERR_GROUP_MISMATCH,
  HDI_ERR_GROUP_OUT_OF_RANGE,
  HDI_ERR_INVALID_ALPHA,
  HDI_ERR_DEGENERATE_SPLIT,
  HDI_ERR_EMPTY_TRUTH,
  HDI_ERR_NON_POSITIVE_WEIGHT,
  HDI_ERR_NOT_POSITIVE_DEFINITE,
  HDI_ERR_INVALID_SCENARIO,
  HDI_ERR_INPUT_NOT_FOUND,
  HDI_ERR_INVALID_ARGUMENT,
  HDI_ERR_IO,
  HDI_ERR_INTERNAL,
  HDI_ERR_UNKNOWN
} hdi_status;

const char* hdi_version(void);

/* Thread-local message describing the last failure on this thread. */
const char* hdi_last_error(void);

/* Caps worker parallelism; 0 restores the hardware default. */
void hdi_set_threads(int threads);

typedef struct hdi_dataset hdi_dataset;
typedef struct hdi_fit hdi_fit;
typedef struct hdi_table hdi_table;

/* ---- datasets ------------------------------------------------------- */

/* Headerless CSVs: X one row per observation, Y a single column. When
 * standardize is nonzero, columns of X are centered/scaled and Y centered. */
hdi_status hdi_dataset_from_csv(const char* x_path, const char* y_path, int standardize,
                                hdi_dataset** out);
hdi_status hdi_dataset_from_arrays(const double* x_row_major, int64_t n, int64_t p,
                                   const double* y, int standardize, hdi_dataset** out);
/* Binary dataset cache (written by hdi_dataset_save_cache). */
hdi_status hdi_dataset_from_cache(const char* path, hdi_dataset** out);
hdi_status hdi_dataset_save_cache(const hdi_dataset* d, const char* path);
hdi_status hdi_dataset_dims(const hdi_dataset* d, int64_t* n, int64_t* p);
void hdi_dataset_free(hdi_dataset* d);

/* ---- pipeline fit ---------------------------------------------------- */

typedef struct hdi_fit_options {
  double lambda0;         /* scaled-Lasso constant; 0 = universal rule */
  double nodewise_lambda; /* shared nodewise penalty; 0 = 10-fold CV */
  int cv_folds;
  uint64_t cv_seed;
  int use_modified_sigma; /* d.o.f.-corrected noise estimate (default on) */
  const char* cache_dir;  /* precision cache directory; NULL disables */
} hdi_fit_options;

void hdi_fit_options_init(hdi_fit_options* opts);

/* Scaled Lasso -> nodewise precision estimate -> de-biased estimator. */
hdi_status hdi_fit_run(const hdi_dataset* d, const hdi_fit_options* opts, hdi_fit** out);
hdi_status hdi_fit_dims(const hdi_fit* f, int64_t* n, int64_t* p);
hdi_status hdi_fit_beta_hat(const hdi_fit* f, double* buf, int64_t len);
hdi_status hdi_fit_beta_breve(const hdi_fit* f, double* buf, int64_t len);
hdi_status hdi_fit_omega_diag(const hdi_fit* f, double* buf, int64_t len);
hdi_status hdi_fit_sigma(const hdi_fit* f, double* sigma_hat, double* sigma_hat_modified);
hdi_status hdi_fit_to_json(const hdi_fit* f, char** out);
void hdi_fit_free(hdi_fit* f);

/* ---- tests ------------------------------------------------------------ */

typedef struct hdi_test_options {
  const char* method; /* "single" | "three-step" | "stepdown" | "recover" | "ex" */
  const char* group;  /* "all" | "complement:i,j,..." | "i,j,..." (1-based) */
  double alpha;
  const double* beta_null; /* length p, NULL = zeros */
  int bootstrap_draws;
  uint64_t seed;
  int studentized;
  const char* sided;  /* "one" | "two" (stepdown) */
  const char* screen; /* "marginal" | "iterative" (three-step) */
  double c0;          /* three-step split fraction */
  double tau;         /* recovery threshold */
} hdi_test_options;

void hdi_test_options_init(hdi_test_options* opts);

/* Runs the requested procedure and returns a JSON report. The fit must come
 * from the same dataset; the three-step method refits on subsamples and only
 * needs the dataset. */
hdi_status hdi_test_run(const hdi_dataset* d, const hdi_fit* f, const hdi_test_options* opts,
                        char** report_json);

/* ---- simulation harness ----------------------------------------------- */

/* scenario_text is the key = value scenario format; task is one of
 * ci_coverage | sparse_test | recovery | stepdown_fwer. */
hdi_status hdi_simulate_run(const char* scenario_text, const char* task, int reps,
                            int bootstrap_draws, uint64_t seed, hdi_table** out);
hdi_status hdi_table_csv(const hdi_table* t, char** out);
hdi_status hdi_table_json(const hdi_table* t, char** out);
void hdi_table_free(hdi_table* t);

/* Frees strings returned through char** out-parameters. */
void hdi_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* HDINFER_H */
