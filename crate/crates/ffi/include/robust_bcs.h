#ifndef ROBUST_BCS_H
#define ROBUST_BCS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of an FFI call.
typedef enum RbcsStatus {
  RBCS_STATUS_OK = 0,
  RBCS_STATUS_NULL_POINTER = 1,
  RBCS_STATUS_INVALID_ARGUMENT = 2,
  RBCS_STATUS_INVALID_INSTANCE = 3,
  RBCS_STATUS_SINGULAR_COVARIANCE = 4,
  RBCS_STATUS_NUMERICAL = 5,
  RBCS_STATUS_FORMAT = 6,
  RBCS_STATUS_IO = 7,
  RBCS_STATUS_PANIC = 8,
} RbcsStatus;

// Solver selection.
typedef enum RbcsMethod {
  // Beta-Bernoulli outlier indicators.
  RBCS_METHOD_BP_RBCS = 0,
  // SBL on the dictionary augmented with the identity.
  RBCS_METHOD_C_RBCS = 1,
  // SBL with the outlier rows removed; needs [`rbcs_problem_set_outliers`].
  RBCS_METHOD_IDEAL = 2,
  // Plain SBL.
  RBCS_METHOD_SBL = 3,
} RbcsMethod;

// Opaque problem handle.
typedef struct RbcsProblem RbcsProblem;

// Opaque result handle.
typedef struct RbcsResult RbcsResult;

// Solver options. Obtain defaults from [`rbcs_options_default`].
typedef struct RbcsOptions {
  size_t max_iters;
  double tol;
  // Freeze coefficients whose precision exceeds this value; `<= 0` disables.
  double prune_threshold;
  double a;
  double b;
  double c;
  double d;
  double e;
  double f;
} RbcsOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default options: 500 sweeps, tolerance `1e-8`, no pruning and the
// default hyperparameters.
struct RbcsOptions rbcs_options_default(void);

// Creates a real problem from a row-major `m×n` matrix and an `m`-vector.
//
// # Safety
// `a` must point to `m·n` doubles, `y` to `m` doubles and `out` to writable
// storage for one pointer.
enum RbcsStatus rbcs_problem_new_real(const double *a,
                                      const double *y,
                                      size_t m,
                                      size_t n,
                                      struct RbcsProblem **out);

// Creates a complex problem from interleaved `(re, im)` data: `a` holds
// `2·m·n` doubles row-major, `y` holds `2·m`.
//
// # Safety
// The pointers must reference the stated number of doubles and `out` must
// be writable.
enum RbcsStatus rbcs_problem_new_complex(const double *a,
                                         const double *y,
                                         size_t m,
                                         size_t n,
                                         struct RbcsProblem **out);

// Reads an instance fixture file. If the file carries ground truth, its
// outlier rows are attached for [`RbcsMethod::Ideal`].
//
// # Safety
// `path` must be a NUL-terminated string and `out` must be writable.
enum RbcsStatus rbcs_problem_load(const char *path, struct RbcsProblem **out);

// Releases a problem. Null is ignored.
//
// # Safety
// `problem` must come from one of the constructors and not be used again.
void rbcs_problem_free(struct RbcsProblem *problem);

// Writes the problem size and whether it is complex.
//
// # Safety
// `problem` must be a live handle; each output pointer may be null.
enum RbcsStatus rbcs_problem_dims(const struct RbcsProblem *problem,
                                  size_t *m,
                                  size_t *n,
                                  bool *is_complex);

// Declares which rows are corrupted, for [`RbcsMethod::Ideal`].
//
// # Safety
// `problem` must be a live handle and `rows` must point to `len` indices.
enum RbcsStatus rbcs_problem_set_outliers(struct RbcsProblem *problem,
                                          const size_t *rows,
                                          size_t len);

// Runs `method` on `problem`. A null `options` uses the defaults.
//
// # Safety
// `problem` must be a live handle, `options` null or valid, and `out`
// writable.
enum RbcsStatus rbcs_solve(const struct RbcsProblem *problem,
                           enum RbcsMethod method,
                           const struct RbcsOptions *options,
                           struct RbcsResult **out);

// Releases a result. Null is ignored.
//
// # Safety
// `result` must come from [`rbcs_solve`] and not be used again.
void rbcs_result_free(struct RbcsResult *result);

// Number of doubles in the signal estimate: `N` for real problems, `2·N`
// for complex ones. Returns 0 for a null handle.
//
// # Safety
// `result` must be null or a live handle.
size_t rbcs_result_x_len(const struct RbcsResult *result);

// Whether the signal estimate is complex.
//
// # Safety
// `result` must be null or a live handle.
bool rbcs_result_is_complex(const struct RbcsResult *result);

// Copies the signal estimate into `buf`, which must hold exactly
// [`rbcs_result_x_len`] doubles.
//
// # Safety
// `result` must be a live handle and `buf` must point to `len` doubles.
enum RbcsStatus rbcs_result_x(const struct RbcsResult *result, double *buf, size_t len);

// Number of indicator probabilities in the result.
//
// # Safety
// `result` must be null or a live handle.
size_t rbcs_result_z_len(const struct RbcsResult *result);

// Copies the final indicator probabilities `⟨z_m⟩` into `buf`. Methods
// other than BP-RBCS report all ones.
//
// # Safety
// `result` must be a live handle and `buf` must point to `len` doubles.
enum RbcsStatus rbcs_result_z(const struct RbcsResult *result, double *buf, size_t len);

// Number of sweeps performed. Returns 0 for a null handle.
//
// # Safety
// `result` must be null or a live handle.
size_t rbcs_result_iters(const struct RbcsResult *result);

// Whether the solver met its tolerance.
//
// # Safety
// `result` must be null or a live handle.
bool rbcs_result_converged(const struct RbcsResult *result);

// Message for the most recent failure on this thread, or an empty string.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *rbcs_last_error(void);

// Library version as a static NUL-terminated string.
const char *rbcs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUST_BCS_H */
