#ifndef TYPLAB_H
#define TYPLAB_H

/* Generated with cbindgen:0.29.4 */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum TyplabStatus {
  TYPLAB_STATUS_OK = 0,
  /**
   * The sweep ran but some grid point accepted no trial.
   */
  TYPLAB_STATUS_FLAGGED = 1,
  TYPLAB_STATUS_NULL_POINTER = 2,
  TYPLAB_STATUS_INVALID_UTF8 = 3,
  TYPLAB_STATUS_INVALID_ARGUMENT = 4,
  TYPLAB_STATUS_INVALID_MODEL = 5,
  TYPLAB_STATUS_PARSE_ERROR = 6,
  TYPLAB_STATUS_IO_ERROR = 7,
  TYPLAB_STATUS_PANIC = 8,
} TyplabStatus;

/**
 * A validated Markov triple `p(x|y) p(yz)`.
 */
typedef struct TyplabModel TyplabModel;

/**
 * The joint type of three aligned sequences.
 */
typedef struct TyplabType TyplabType;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Owned by the
 * library; valid until the next `typlab_*` call on the same thread.
 */
const char *typlab_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *typlab_version(void);

/**
 * Parse a triple from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum TyplabStatus typlab_model_from_json(const char *json, struct TyplabModel **out);

/**
 * # Safety
 * `model` must come from [`typlab_model_from_json`] and not be freed twice.
 */
void typlab_model_free(struct TyplabModel *model);

/**
 * The certified bound `C` on the kernel's second log-moment, in bits^2.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum TyplabStatus typlab_model_log_moment_bound(const struct TyplabModel *model, double *out);

/**
 * Entropy of the model's marginal on `vars` (e.g. `"XZ"`), in bits.
 *
 * # Safety
 * `model` must be a live handle, `vars` NUL-terminated, `out` writable.
 */
enum TyplabStatus typlab_model_entropy(const struct TyplabModel *model,
                                       const char *vars,
                                       double *out);

/**
 * Joint type of three aligned sequences of length `n`.
 *
 * # Safety
 * `x`, `y`, `z` must each point to `n` readable values; `out` must be writable.
 */
enum TyplabStatus typlab_type_from_sequences(const uint64_t *x,
                                             const uint64_t *y,
                                             const uint64_t *z,
                                             size_t n,
                                             struct TyplabType **out);

/**
 * # Safety
 * `q` must come from [`typlab_type_from_sequences`] and not be freed twice.
 */
void typlab_type_free(struct TyplabType *q);

/**
 * Score of `q` against `model` under `variant` (`unified3`, `unified2`,
 * `unified1`, `two_term` or `weak`). May be `+inf`.
 *
 * # Safety
 * Handles must be live, `variant` NUL-terminated, `out` writable.
 */
enum TyplabStatus typlab_score(const struct TyplabType *q,
                               const struct TyplabModel *model,
                               const char *variant,
                               double *out);

/**
 * Membership of `q` in the typical set at `threshold`.
 *
 * # Safety
 * Handles must be live, `variant` NUL-terminated, `member` writable.
 */
enum TyplabStatus typlab_is_typical(const struct TyplabType *q,
                                    const struct TyplabModel *model,
                                    double threshold,
                                    const char *variant,
                                    bool *member);

/**
 * Full report as JSON; free the string with [`typlab_string_free`].
 *
 * # Safety
 * Handles must be live, `variant` NUL-terminated, `out` writable.
 */
enum TyplabStatus typlab_report_json(const struct TyplabType *q,
                                     const struct TyplabModel *model,
                                     double threshold,
                                     const char *variant,
                                     char **out);

/**
 * # Safety
 * `s` must be a string returned by this library, or null.
 */
void typlab_string_free(char *s);

/**
 * Entropy in bits of a probability vector.
 *
 * # Safety
 * `p` must point to `len` readable values; `out` must be writable.
 */
enum TyplabStatus typlab_entropy(const double *p, size_t len, double *out);

/**
 * `D(q || p)` in bits over aligned vectors; `+inf` off support.
 *
 * # Safety
 * `q` and `p` must point to `len` readable values; `out` must be writable.
 */
enum TyplabStatus typlab_kl_divergence(const double *q, const double *p, size_t len, double *out);

/**
 * `sum |q - p|` over aligned vectors.
 *
 * # Safety
 * `q` and `p` must point to `len` readable values; `out` must be writable.
 */
enum TyplabStatus typlab_variational_distance(const double *q,
                                              const double *p,
                                              size_t len,
                                              double *out);

/**
 * Run the experiment described by the JSON configuration file at `path`
 * and return its CSV. `workers == 0` means one worker; results do not
 * depend on it. Returns [`TyplabStatus::Flagged`] (with the CSV written)
 * when a grid point accepted no trial.
 *
 * # Safety
 * `path` must be NUL-terminated; `csv_out` must be writable.
 */
enum TyplabStatus typlab_run_sweep(const char *path, uint32_t workers, char **csv_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TYPLAB_H */
