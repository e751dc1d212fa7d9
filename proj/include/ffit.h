/* C API for the ffit unbinned maximum-likelihood fitting engine.
 *
 * All functions return a status code (FFIT_OK on success); constructed
 * objects come back through out-parameters as opaque handles owned by the
 * caller and released with the matching *_free function. On failure the
 * out-parameters are untouched and ffit_last_error() returns a
 * description (thread-local, valid until the next failing call on the
 * same thread).
 */
#ifndef FFIT_H
#define FFIT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; nonzero values double as CLI exit codes. */
enum {
  FFIT_OK = 0,
  FFIT_ERR_USAGE = 1,   /* bad arguments, malformed model/expression */
  FFIT_ERR_DATA = 2,    /* missing files, bad CSV, unknown columns */
  FFIT_ERR_NUMERIC = 3, /* invalid parameters, degenerate PDFs, non-convergence */
};

typedef enum {
  FFIT_MODE_SCALAR = 0,
  FFIT_MODE_BATCH_PRECISE = 1,
  FFIT_MODE_BATCH_FAST = 2,
} ffit_mode;

typedef struct ffit_model ffit_model;
typedef struct ffit_dataset ffit_dataset;
typedef struct ffit_fit_result ffit_fit_result;

const char* ffit_last_error(void);

/* ---- models ---------------------------------------------------------- */

int ffit_model_load(const char* path, ffit_model** out);
int ffit_model_parse(const char* text, ffit_model** out);
void ffit_model_free(ffit_model* m);

const char* ffit_model_observable(const ffit_model* m);
int ffit_model_observable_range(const ffit_model* m, double* lo, double* hi);

int ffit_model_param_count(const ffit_model* m);
const char* ffit_model_param_name(const ffit_model* m, int i);
int ffit_model_param_is_constant(const ffit_model* m, const char* name, int* constant);
int ffit_model_get_param(const ffit_model* m, const char* name, double* value,
                         double* uncertainty);
int ffit_model_set_param(ffit_model* m, const char* name, double value);

/* ---- datasets -------------------------------------------------------- */

/* Reads a CSV against the model's observable schema; rows outside the
 * observable range are dropped and counted into *dropped (may be NULL). */
int ffit_dataset_read_csv(const ffit_model* m, const char* path, ffit_dataset** out,
                          long* dropped);
int ffit_dataset_write_csv(const ffit_dataset* ds, const char* path);
long ffit_dataset_rows(const ffit_dataset* ds);
void ffit_dataset_free(ffit_dataset* ds);

/* ---- sampling -------------------------------------------------------- */

/* Generates n events from the model PDF. *efficiency (may be NULL)
 * receives the accept/reject acceptance rate, or -1.0 when a direct
 * sampler ran. */
int ffit_sample(ffit_model* m, long n, unsigned long long seed, ffit_dataset** out,
                double* efficiency);

/* ---- evaluation ------------------------------------------------------ */

/* Negative log-likelihood of the dataset under the model in the given
 * mode. *n_evaluations (may be NULL) receives the call-accounting
 * counter: graph recomputations in scalar mode, kernel launches in batch
 * mode. */
int ffit_nll(ffit_model* m, const ffit_dataset* ds, ffit_mode mode, double* value,
             unsigned long long* n_evaluations);

/* Per-entry normalized probabilities; out must hold ffit_dataset_rows(ds)
 * doubles. */
int ffit_probabilities(ffit_model* m, const ffit_dataset* ds, ffit_mode mode,
                       double* out);

/* ---- fitting --------------------------------------------------------- */

/* Minimizes the NLL over the model's non-constant parameters. Pass
 * tolerance <= 0 or max_iterations <= 0 for the defaults (1e-8, 10000).
 * Fitted values and uncertainties are written back into the model. */
int ffit_fit(ffit_model* m, const ffit_dataset* ds, ffit_mode mode, double tolerance,
             long max_iterations, ffit_fit_result** out);

int ffit_result_converged(const ffit_fit_result* r);
double ffit_result_nll(const ffit_fit_result* r);
unsigned long long ffit_result_nll_calls(const ffit_fit_result* r);
double ffit_result_wall_seconds(const ffit_fit_result* r);
int ffit_result_uncertainties_valid(const ffit_fit_result* r);
int ffit_result_param_count(const ffit_fit_result* r);
const char* ffit_result_param_name(const ffit_fit_result* r, int i);
double ffit_result_param_value(const ffit_fit_result* r, int i);
double ffit_result_param_uncertainty(const ffit_fit_result* r, int i);
void ffit_result_free(ffit_fit_result* r);

#ifdef __cplusplus
}
#endif

#endif /* FFIT_H */
