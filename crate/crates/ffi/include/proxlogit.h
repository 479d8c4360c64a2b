#ifndef PROXLOGIT_H
#define PROXLOGIT_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

// Status codes returned by every fallible entry point.
typedef enum PlrStatus {
  PLR_STATUS_OK = 0,
  PLR_STATUS_NULL_POINTER = 1,
  PLR_STATUS_INVALID_ARGUMENT = 2,
  PLR_STATUS_IO = 3,
  PLR_STATUS_PARSE = 4,
  PLR_STATUS_DIMENSION_MISMATCH = 5,
  PLR_STATUS_INCOMPATIBLE = 6,
  PLR_STATUS_LINE_SEARCH_FAILED = 7,
  PLR_STATUS_DEGENERATE = 8,
  PLR_STATUS_PANIC = 9,
} PlrStatus;

// Values accepted in `PlrPenalty::kind`.
typedef enum PlrPenaltyKind {
  PLR_PENALTY_KIND_L1 = 0,
  PLR_PENALTY_KIND_SCAD = 1,
  PLR_PENALTY_KIND_MCP = 2,
  PLR_PENALTY_KIND_CAPPED_L1 = 3,
} PlrPenaltyKind;

// Values accepted in `PlrSolverOptions::variant`.
typedef enum PlrVariant {
  PLR_VARIANT_ISTA_BB = 0,
  PLR_VARIANT_ISTA_REVERSE = 1,
  PLR_VARIANT_FISTA_LIPSCHITZ = 2,
  PLR_VARIANT_ISTA_VANILLA = 3,
  PLR_VARIANT_FISTA_VANILLA = 4,
} PlrVariant;

// Opaque dataset handle.
typedef struct PlrDataset PlrDataset;

// Opaque fit result handle.
typedef struct PlrFitResult PlrFitResult;

// Penalty description. `theta` is read for SCAD and MCP, `epsilon` for
// capped-l1.
typedef struct PlrPenalty {
  // One of `PlrPenaltyKind`.
  uint32_t kind;
  double lambda;
  double theta;
  double epsilon;
} PlrPenalty;

typedef struct PlrSolverOptions {
  // One of `PlrVariant`.
  uint32_t variant;
  double eta;
  // Initial L; values <= 0 select the Lipschitz estimate.
  double l0;
  size_t max_iters;
  double tol;
  size_t max_backtracks;
  size_t max_expansions;
  uint64_t seed;
  // Start from a seeded random point instead of zero.
  bool random_start;
} PlrSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *plr_last_error_message(void);

// Builds a dataset from row-major samples: feature `j` of sample `i` is
// `x[i * n_features + j]`. Labels must be 0/1 or -1/+1.
//
// # Safety
// `x` must point to `n_samples * n_features` doubles, `y` to `n_samples`
// doubles, and `out` to writable storage for one pointer.
enum PlrStatus plr_dataset_from_dense(const double *x,
                                      const double *y,
                                      size_t n_samples,
                                      size_t n_features,
                                      struct PlrDataset **out);

// Loads a CSV file with one sample per row. `label_column` is a 0-based
// column index, or -1 for the last column.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum PlrStatus plr_dataset_load_csv(const char *path,
                                    int64_t label_column,
                                    bool has_header,
                                    struct PlrDataset **out);

// Loads a LIBSVM file. `n_features` is a minimum feature count; pass 0 to
// infer it from the largest index.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum PlrStatus plr_dataset_load_libsvm(const char *path,
                                       size_t n_features,
                                       struct PlrDataset **out);

// # Safety
// `data` must come from a `plr_dataset_*` constructor; outputs may be null.
enum PlrStatus plr_dataset_dims(const struct PlrDataset *data,
                                size_t *n_samples,
                                size_t *n_features);

// # Safety
// `data` must be null or come from a `plr_dataset_*` constructor, and must
// not be used afterwards.
void plr_dataset_free(struct PlrDataset *data);

// Smallest λ for which the zero vector is optimal under the l1 penalty.
//
// # Safety
// `data` must be a live dataset handle and `out` writable.
enum PlrStatus plr_lambda_max(const struct PlrDataset *data, double *out);

// Lipschitz constant of the loss gradient, estimated by power iteration.
//
// # Safety
// `data` must be a live dataset handle and `out` writable.
enum PlrStatus plr_lipschitz_constant(const struct PlrDataset *data, double *out);

// Penalty of the given kind with the library's default shape parameters.
//
// # Safety
// `out` must be writable.
enum PlrStatus plr_penalty_default(uint32_t kind, double lambda, struct PlrPenalty *out);

struct PlrSolverOptions plr_solver_options_default(void);

// Fits penalized logistic regression. Reaching `max_iters` is not an error;
// check `plr_fit_result_converged`.
//
// # Safety
// All pointers must be valid; `out` receives a handle to free with
// `plr_fit_result_free`.
enum PlrStatus plr_fit(const struct PlrDataset *data,
                       const struct PlrPenalty *penalty,
                       const struct PlrSolverOptions *options,
                       struct PlrFitResult **out);

// Scalar proximal map `argmin_w (L/2)(w - t)^2 + g(w)`.
//
// # Safety
// `penalty` must be valid and `out` writable.
enum PlrStatus plr_prox_scalar(double t, const struct PlrPenalty *penalty, double l, double *out);

// Number of coefficients, or 0 for a null handle.
//
// # Safety
// `result` must be null or a live fit result handle.
size_t plr_fit_result_dim(const struct PlrFitResult *result);

// Copies the coefficients into `out`, which must hold `len` doubles with
// `len` equal to `plr_fit_result_dim`.
//
// # Safety
// `result` must be live and `out` must point to `len` writable doubles.
enum PlrStatus plr_fit_result_coefficients(const struct PlrFitResult *result,
                                           double *out,
                                           size_t len);

// Final objective, or NaN for a null handle.
//
// # Safety
// `result` must be null or a live fit result handle.
double plr_fit_result_objective(const struct PlrFitResult *result);

// # Safety
// `result` must be null or a live fit result handle.
bool plr_fit_result_converged(const struct PlrFitResult *result);

// # Safety
// `result` must be null or a live fit result handle.
size_t plr_fit_result_iterations(const struct PlrFitResult *result);

// Coefficients with magnitude above 1e-10.
//
// # Safety
// `result` must be null or a live fit result handle.
size_t plr_fit_result_nnz(const struct PlrFitResult *result);

// Number of objective values in the trace (iterations + 1).
//
// # Safety
// `result` must be null or a live fit result handle.
size_t plr_fit_result_trace_len(const struct PlrFitResult *result);

// Copies the objective trace, starting with the value at the start point.
//
// # Safety
// `result` must be live and `out` must point to `len` writable doubles with
// `len` equal to `plr_fit_result_trace_len`.
enum PlrStatus plr_fit_result_trace_objectives(const struct PlrFitResult *result,
                                               double *out,
                                               size_t len);

// # Safety
// `result` must be null or a live fit result handle, and must not be used
// afterwards.
void plr_fit_result_free(struct PlrFitResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROXLOGIT_H */
