#ifndef QPROG_H
#define QPROG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Dimension of the two-qubit program register.
#define QPROG_PROGRAM_DIM 4

// Doubles in an interleaved program or Choi buffer.
#define QPROG_MATRIX_LEN ((2 * QPROG_PROGRAM_DIM) * QPROG_PROGRAM_DIM)

typedef enum QprogStatus {
  QPROG_STATUS_OK = 0,
  QPROG_STATUS_NULL_POINTER = 1,
  QPROG_STATUS_INVALID_UTF8 = 2,
  QPROG_STATUS_INVALID_ARGUMENT = 3,
  QPROG_STATUS_DIMENSION_MISMATCH = 4,
  QPROG_STATUS_OUT_OF_RANGE = 5,
  QPROG_STATUS_CONFIG = 6,
  QPROG_STATUS_IO = 7,
  QPROG_STATUS_PANIC = 8,
} QprogStatus;

typedef enum QprogLoss {
  // Half the trace norm of the Choi difference.
  QPROG_LOSS_TRACE = 0,
  // One minus the squared Choi fidelity.
  QPROG_LOSS_FIDELITY = 1,
} QprogLoss;

// Experiment settings, edited with `key = value` pairs.
typedef struct QprogConfig QprogConfig;

// Online learner driving the teleportation processor.
typedef struct QprogMegd QprogMegd;

// Finished experiment.
typedef struct QprogRun QprogRun;

// Scalar outcome of a run.
typedef struct QprogRunSummary {
  size_t horizon;
  double eta;
  double grad_bound;
  double max_grad_norm;
  double regret;
  double normalized_regret;
} QprogRunSummary;

// One row of a run's per-step table. `t` starts at 1.
typedef struct QprogStepRecord {
  size_t t;
  double p_t;
  double loss_online;
  double loss_reference;
  double cum_online;
  double cum_reference;
  double regret_to_t;
  double normalized_regret_to_t;
} QprogStepRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *qprog_version(void);

// Message for the most recent failure on this thread, or NULL if none.
//
// The pointer stays valid until the next failing call on the same thread.
const char *qprog_last_error_message(void);

// Forgets the stored error message for this thread.
void qprog_clear_error(void);

// Learning rate minimizing the regret bound.
//
// # Safety
// `out_eta` must point to a writable `double`.
enum QprogStatus qprog_theoretical_eta(size_t horizon,
                                       double grad_bound,
                                       size_t program_qubits,
                                       double *out_eta);

// Regret bound after `horizon` steps at the theoretical rate.
//
// # Safety
// `out_bound` must point to a writable `double`.
enum QprogStatus qprog_regret_bound(size_t horizon,
                                    double grad_bound,
                                    size_t program_qubits,
                                    double *out_bound);

// Choi matrix of the channel the processor implements with `program`.
//
// # Safety
// `program` must point to `QPROG_MATRIX_LEN` readable doubles and
// `out_choi` to as many writable doubles.
enum QprogStatus qprog_gtp_lambda(const double *program, double *out_choi);

// Loss of `program` against the dephasing channel with probability `p`,
// and optionally its subgradient.
//
// # Safety
// `program` must point to `QPROG_MATRIX_LEN` readable doubles and
// `out_value` to a writable `double`. `out_grad` is either NULL or points to
// `QPROG_MATRIX_LEN` writable doubles.
enum QprogStatus qprog_dephasing_loss(enum QprogLoss loss,
                                      double p,
                                      const double *program,
                                      double *out_value,
                                      double *out_grad);

// Creates a config holding the default settings.
//
// # Safety
// `out_config` must point to a writable handle slot.
enum QprogStatus qprog_config_new(struct QprogConfig **out_config);

// Applies one setting, using the keys of the config file format.
//
// # Safety
// `config` must be a live handle; `key` and `value` NUL-terminated strings.
enum QprogStatus qprog_config_set(struct QprogConfig *config, const char *key, const char *value);

// Applies every `key = value` line of `text`. Nothing changes on failure.
//
// # Safety
// `config` must be a live handle and `text` a NUL-terminated string.
enum QprogStatus qprog_config_parse(struct QprogConfig *config, const char *text);

// # Safety
// `config` must be NULL or a handle from [`qprog_config_new`] not yet freed.
void qprog_config_free(struct QprogConfig *config);

// Runs the online learner and the hindsight reference for `config`.
//
// # Safety
// `config` must be a live handle and `out_run` a writable handle slot.
enum QprogStatus qprog_run(const struct QprogConfig *config, struct QprogRun **out_run);

// # Safety
// `run` must be a live handle and `out_summary` writable.
enum QprogStatus qprog_run_summary(const struct QprogRun *run, struct QprogRunSummary *out_summary);

// Row `index` (zero based) of the per-step table.
//
// # Safety
// `run` must be a live handle and `out_record` writable.
enum QprogStatus qprog_run_record(const struct QprogRun *run,
                                  size_t index,
                                  struct QprogStepRecord *out_record);

// Hindsight reference program.
//
// # Safety
// `run` must be a live handle and `out_program` point to
// `QPROG_MATRIX_LEN` writable doubles.
enum QprogStatus qprog_run_reference(const struct QprogRun *run, double *out_program);

// Writes the per-step table as CSV.
//
// # Safety
// `run` must be a live handle and `path` a NUL-terminated string.
enum QprogStatus qprog_run_write_csv(const struct QprogRun *run, const char *path);

// # Safety
// `run` must be NULL or a handle from [`qprog_run`] not yet freed.
void qprog_run_free(struct QprogRun *run);

// Runs the self-checks for `config`. Zero sizes select the defaults.
//
// # Safety
// `config` must be a live handle; `out_passed` and `out_total` writable.
enum QprogStatus qprog_certify(const struct QprogConfig *config,
                               size_t instances,
                               size_t trials,
                               uint64_t seeds,
                               size_t *out_passed,
                               size_t *out_total);

// Starts a learner at the maximally mixed program.
//
// # Safety
// `out_megd` must point to a writable handle slot.
enum QprogStatus qprog_megd_new(double eta, double d_const, struct QprogMegd **out_megd);

// Current program.
//
// # Safety
// `megd` must be a live handle and `out_program` point to
// `QPROG_MATRIX_LEN` writable doubles.
enum QprogStatus qprog_megd_program(const struct QprogMegd *megd, double *out_program);

// Reveals the dephasing channel with probability `p`: scores the current
// program, then takes one step. `out_loss` may be NULL.
//
// # Safety
// `megd` must be a live handle; `out_loss` NULL or writable.
enum QprogStatus qprog_megd_observe_dephasing(struct QprogMegd *megd,
                                              enum QprogLoss loss,
                                              double p,
                                              double *out_loss);

// Number of steps taken so far.
//
// # Safety
// `megd` must be a live handle and `out_steps` writable.
enum QprogStatus qprog_megd_steps(const struct QprogMegd *megd, size_t *out_steps);

// # Safety
// `megd` must be NULL or a handle from [`qprog_megd_new`] not yet freed.
void qprog_megd_free(struct QprogMegd *megd);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPROG_H */
