#ifndef SST_TOPK_H
#define SST_TOPK_H

/* Generated at build time. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Kind of instance held by a handle.
 */
typedef enum SstKind {
  SST_KIND_TOP_K = 0,
  SST_KIND_DOMINATION = 1,
} SstKind;

/*
 Exact quantities computed by [`sst_exact_oracle`].
 */
typedef enum SstOracle {
  SST_ORACLE_SUCCESS_COUNT = 0,
  SST_ORACLE_SUCCESS_MAX = 1,
  SST_ORACLE_SUCCESS_BAYES = 2,
  SST_ORACLE_MUTUAL_INFORMATION = 3,
} SstOracle;

/*
 Domination solvers reachable through [`sst_estimate_success`].
 */
typedef enum SstSolver {
  SST_SOLVER_COUNT = 0,
  SST_SOLVER_MAX = 1,
  SST_SOLVER_COMB = 2,
  SST_SOLVER_CUBE = 3,
  SST_SOLVER_COUP = 4,
  /*
   Counting restricted to the coordinates passed alongside.
   */
  SST_SOLVER_SUBSET = 5,
  /*
   Maximum a posteriori rule (needs the instance parameters).
   */
  SST_SOLVER_BAYES = 6,
} SstSolver;

/*
 Status returned by every fallible call. The numeric values of
 `Parameter`, `Resource` and `Invariant` match the command-line exit codes.
 */
typedef enum SstStatus {
  SST_STATUS_OK = 0,
  SST_STATUS_NULL_POINTER = 1,
  SST_STATUS_PARAMETER = 2,
  SST_STATUS_RESOURCE = 3,
  SST_STATUS_INVARIANT = 4,
  SST_STATUS_INVALID_UTF8 = 5,
  SST_STATUS_WRONG_KIND = 6,
  SST_STATUS_PANIC = 7,
} SstStatus;

/*
 Opaque instance handle.
 */
typedef struct SstInstance SstInstance;

/*
 Summary of an instance. Lower bounds that do not exist are reported as
 positive infinity (no information) or NaN (the Top-K embedding is not
 available for this domination instance).
 */
typedef struct SstInfo {
  size_t n;
  double total_bits;
  double l1_gap;
  double l2_gap_sq;
  double linf_gap;
  double lb_domination;
  double lb_topk;
} SstInfo;

/*
 Monte Carlo success estimate with its 95% Wilson interval.
 */
typedef struct SstEstimate {
  uint64_t trials;
  uint64_t successes;
  double p_hat;
  double wilson_low;
  double wilson_high;
} SstEstimate;

/*
 Empirical minimum sample count. When `reached` is 0 the target was not
 met below the cap and `r_hat` is 0.
 */
typedef struct SstRmin {
  uint8_t reached;
  size_t r_hat;
  size_t r_low;
} SstRmin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null if the last call
 succeeded. The pointer stays valid until the next call on the same thread.
 */
const char *sst_last_error_message(void);

/*
 Parses an instance from a NUL-terminated JSON document and stores a new
 handle in `*out`. Release it with [`sst_instance_free`].

 # Safety
 `json` must be a valid C string and `out` a valid pointer.
 */
enum SstStatus sst_instance_from_json(const char *json, struct SstInstance **out);

/*
 Serializes the instance to its canonical JSON form. The string in `*out`
 must be released with [`sst_string_free`].

 # Safety
 `instance` must come from [`sst_instance_from_json`]; `out` must be valid.
 */
enum SstStatus sst_instance_to_json(const struct SstInstance *instance, char **out);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must be null or a string produced by this library, freed only once.
 */
void sst_string_free(char *s);

/*
 Releases an instance handle. Null is ignored.

 # Safety
 `instance` must be null or a live handle, freed only once.
 */
void sst_instance_free(struct SstInstance *instance);

/*
 Writes the instance kind to `*out`.

 # Safety
 Both pointers must be valid.
 */
enum SstStatus sst_instance_kind(const struct SstInstance *instance, enum SstKind *out);

/*
 Fills `*out` with the information summary. Top-K instances are summarized
 through their reduced domination view.

 # Safety
 Both pointers must be valid.
 */
enum SstStatus sst_instance_info(const struct SstInstance *instance, struct SstInfo *out);

/*
 Copies the per-coordinate information into `buf`. Pass a null `buf` to
 learn the required length through `*len`; otherwise `*len` must hold the
 buffer capacity and receives the number of values written.

 # Safety
 `buf` must be null or point to `*len` writable doubles.
 */
enum SstStatus sst_instance_per_coordinate(const struct SstInstance *instance,
                                           double *buf,
                                           size_t *len);

/*
 Monte Carlo success probability at `r` columns over `trials` seeded
 trials. For Top-K instances `algo` is ignored and the Top-K solver runs
 with `alpha`. `subset` (0-based, `subset_len` entries) is read only for
 [`SstSolver::Subset`].

 # Safety
 `instance` and `out` must be valid; `subset` must point to `subset_len`
 values when the subset solver is chosen.
 */
enum SstStatus sst_estimate_success(const struct SstInstance *instance,
                                    enum SstSolver algo,
                                    double alpha,
                                    const size_t *subset,
                                    size_t subset_len,
                                    size_t r,
                                    size_t trials,
                                    uint64_t seed,
                                    struct SstEstimate *out);

/*
 Empirical smallest `r` whose 95% Wilson lower bound reaches `target_p`,
 searched up to `r_max`. Arguments otherwise follow
 [`sst_estimate_success`]; the Bayes rule is not searchable here.

 # Safety
 Same requirements as [`sst_estimate_success`].
 */
enum SstStatus sst_estimate_rmin(const struct SstInstance *instance,
                                 enum SstSolver algo,
                                 double alpha,
                                 const size_t *subset,
                                 size_t subset_len,
                                 double target_p,
                                 size_t trials,
                                 uint64_t seed,
                                 size_t r_max,
                                 struct SstRmin *out);

/*
 Exact success probability or mutual information at `r` columns on a
 domination instance.

 # Safety
 `instance` and `out` must be valid.
 */
enum SstStatus sst_exact_oracle(const struct SstInstance *instance,
                                enum SstOracle what,
                                size_t r,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SST_TOPK_H */
