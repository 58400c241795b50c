/* C interface for the smartfill scheduling library. */

#ifndef SMARTFILL_H
#define SMARTFILL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a C API call.
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  // A required pointer argument was null.
  SF_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  SF_STATUS_INVALID_UTF8 = 2,
  // A JSON document could not be parsed.
  SF_STATUS_PARSE_ERROR = 3,
  // Input was well-formed but semantically invalid.
  SF_STATUS_INVALID_INPUT = 4,
  // The solver or a numeric routine failed.
  SF_STATUS_SOLVE_FAILED = 5,
  // An index or buffer length did not match.
  SF_STATUS_OUT_OF_RANGE = 6,
  // The requested data is not carried by this schedule.
  SF_STATUS_UNAVAILABLE = 7,
  // A panic was caught at the boundary.
  SF_STATUS_INTERNAL = 8,
} SfStatus;

// Scheduling policy selector for [`sf_solve`].
typedef enum SfPolicy {
  SF_POLICY_SMARTFILL = 0,
  SF_POLICY_HESRPT = 1,
  SF_POLICY_EQUAL_SPLIT = 2,
} SfPolicy;

// Opaque problem instance handle.
typedef struct SfInstance SfInstance;

// Opaque solved schedule handle.
typedef struct SfSchedule SfSchedule;

// Opaque speedup function handle.
typedef struct SfSpeedup SfSpeedup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. Never null; empty
// before any failure.
const char *sf_last_error_message(void);

// Library version as a static string.
const char *sf_version(void);

// Builds a speedup function from its JSON description (for example
// `{"family":"log","a":1.0,"p":1.0}`) on the domain `[0, bandwidth]`.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
enum SfStatus sf_speedup_from_json(const char *json, double bandwidth, struct SfSpeedup **out);

// # Safety
// `handle` must come from `sf_speedup_from_json` and not be freed twice.
void sf_speedup_free(struct SfSpeedup *handle);

// Service rate `s(theta)`.
//
// # Safety
// `handle` and `out` must be valid pointers.
enum SfStatus sf_speedup_evaluate(const struct SfSpeedup *handle, double theta, double *out);

// Marginal rate `s'(theta)`; may be infinite at zero.
//
// # Safety
// `handle` and `out` must be valid pointers.
enum SfStatus sf_speedup_derivative(const struct SfSpeedup *handle, double theta, double *out);

// Inverse marginal rate: the `theta` with `s'(theta) = y`.
//
// # Safety
// `handle` and `out` must be valid pointers.
enum SfStatus sf_speedup_derivative_inverse(const struct SfSpeedup *handle, double y, double *out);

// Least-squares power fit `a·theta^p` of the function over its domain.
//
// # Safety
// All pointers must be valid.
enum SfStatus sf_fit_power(const struct SfSpeedup *handle, double *a, double *p);

// Parses a full instance document (bandwidth, jobs, speedup, optional
// label).
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
enum SfStatus sf_instance_from_json(const char *json, struct SfInstance **out);

// Builds an instance from parallel size and weight arrays plus a speedup
// description.
//
// # Safety
// `sizes` and `weights` must point to `count` readable doubles;
// `speedup_json` must be a valid NUL-terminated string; `out` must be valid.
enum SfStatus sf_instance_new(double bandwidth,
                              const double *sizes,
                              const double *weights,
                              uintptr_t count,
                              const char *speedup_json,
                              struct SfInstance **out);

// # Safety
// `handle` must come from an `sf_instance_*` constructor and not be freed
// twice.
void sf_instance_free(struct SfInstance *handle);

// Number of jobs in the instance; zero for a null handle.
//
// # Safety
// `handle` must be a valid instance handle or null.
uintptr_t sf_instance_job_count(const struct SfInstance *handle);

// Solves the instance under the selected policy.
//
// # Safety
// `instance` and `out` must be valid pointers.
enum SfStatus sf_solve(const struct SfInstance *instance,
                       enum SfPolicy policy,
                       struct SfSchedule **out);

// # Safety
// `handle` must come from `sf_solve` and not be freed twice.
void sf_schedule_free(struct SfSchedule *handle);

// Number of jobs covered by the schedule; zero for a null handle.
//
// # Safety
// `handle` must be a valid schedule handle or null.
uintptr_t sf_schedule_job_count(const struct SfSchedule *handle);

// Weighted sum of completion times.
//
// # Safety
// `handle` and `out` must be valid pointers.
enum SfStatus sf_schedule_objective(const struct SfSchedule *handle, double *out);

// Copies per-job completion times into `buffer` (length must equal the job
// count).
//
// # Safety
// `handle` must be valid; `buffer` must hold `len` writable doubles.
enum SfStatus sf_schedule_completion_times(const struct SfSchedule *handle,
                                           double *buffer,
                                           uintptr_t len);

// Copies per-interval durations into `buffer` (length must equal the job
// count).
//
// # Safety
// `handle` must be valid; `buffer` must hold `len` writable doubles.
enum SfStatus sf_schedule_durations(const struct SfSchedule *handle, double *buffer, uintptr_t len);

// Allocation rate of job `i` during interval `j` (zero-based).
//
// # Safety
// `handle` and `out` must be valid pointers.
enum SfStatus sf_schedule_allocation(const struct SfSchedule *handle,
                                     uintptr_t i,
                                     uintptr_t j,
                                     double *out);

// Copies the per-job objective coefficients; `SF_UNAVAILABLE` for schedules
// that do not carry them (benchmark policies).
//
// # Safety
// `handle` must be valid; `buffer` must hold `len` writable doubles.
enum SfStatus sf_schedule_coefficients(const struct SfSchedule *handle,
                                       double *buffer,
                                       uintptr_t len);

// Copies the per-job marginal-rate ratio constants; `SF_UNAVAILABLE` when
// absent.
//
// # Safety
// `handle` must be valid; `buffer` must hold `len` writable doubles.
enum SfStatus sf_schedule_cdr_constants(const struct SfSchedule *handle,
                                        double *buffer,
                                        uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMARTFILL_H */
