#ifndef LEXCORPUS_H
#define LEXCORPUS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LcStatus {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_POINTER = 1,
  LC_STATUS_INVALID_UTF8 = 2,
  LC_STATUS_INVALID_ARGUMENT = 3,
  LC_STATUS_DATA_ERROR = 4,
  LC_STATUS_PANIC = 5,
} LcStatus;

typedef enum LcAveraging {
  LC_AVERAGING_MICRO = 0,
  LC_AVERAGING_MACRO = 1,
} LcAveraging;

/**
 * Language identifier handle.
 */
typedef struct LcIdentifier LcIdentifier;

/**
 * Tokenizer handle.
 */
typedef struct LcTokenizer LcTokenizer;

typedef struct LcCleanPolicy {
  bool collapse_spaces;
  bool collapse_newlines;
  bool strip_control;
  bool trim_ends;
} LcCleanPolicy;

typedef struct LcMaskingConfig {
  double mask_rate;
  double p_mask;
  double p_random;
  double p_keep;
  uint64_t seed;
} LcMaskingConfig;

typedef struct LcScheduleConfig {
  double lr_peak;
  double warmup_frac;
  uint64_t total_steps;
} LcScheduleConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a
 * successful call. Valid until the next call into the library on this thread.
 */
const char *lc_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void lc_string_free(char *s);

struct LcCleanPolicy lc_clean_policy_default(void);

/**
 * Cleans `text`. A NULL `policy` applies every rule.
 *
 * # Safety
 * `text` must be a NUL-terminated string, `policy` NULL or valid, `out`
 * a valid pointer.
 */
enum LcStatus lc_clean_text(const char *text, const struct LcCleanPolicy *policy, char **out);

/**
 * Splits `text` into sentences, returned as a JSON array of strings.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LcStatus lc_split_sentences(const char *text, char **out);

/**
 * Identifier over the bundled es, ca, gl, eu, pt, en and fr profiles.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LcStatus lc_identifier_bundled(struct LcIdentifier **out);

/**
 * Identifier over a line-delimited profile file written by `build-profiles`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LcStatus lc_identifier_from_profiles(const char *path, struct LcIdentifier **out);

/**
 * # Safety
 * `handle` must be NULL or a handle from this library, not yet freed.
 */
void lc_identifier_free(struct LcIdentifier *handle);

/**
 * Identifies the language of `text`. `language` receives a string to free
 * with [`lc_string_free`].
 *
 * # Safety
 * All pointers must be valid; `text` NUL-terminated.
 */
enum LcStatus lc_identify(const struct LcIdentifier *handle,
                          const char *text,
                          char **language,
                          double *confidence);

/**
 * Whether `text` passes the Spanish gate at `threshold`. Empty text fails.
 *
 * # Safety
 * All pointers must be valid; `text` NUL-terminated.
 */
enum LcStatus lc_passes_gate(const struct LcIdentifier *handle,
                             const char *text,
                             double threshold,
                             bool *keep);

/**
 * Tokenizer over the bundled vocabulary.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LcStatus lc_tokenizer_bundled(struct LcTokenizer **out);

/**
 * Tokenizer over a vocabulary file, one token per line.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LcStatus lc_tokenizer_from_file(const char *path, struct LcTokenizer **out);

/**
 * # Safety
 * `handle` must be NULL or a handle from this library, not yet freed.
 */
void lc_tokenizer_free(struct LcTokenizer *handle);

/**
 * Number of tokens in `text`.
 *
 * # Safety
 * All pointers must be valid; `text` NUL-terminated.
 */
enum LcStatus lc_token_count(const struct LcTokenizer *handle, const char *text, size_t *count);

/**
 * Splits `text` into sentences and packs them into chunks of at most
 * `max_tokens` tokens. `out` receives a JSON array of
 * `{doc_id, seq, text, token_count}` objects.
 *
 * # Safety
 * All pointers must be valid; strings NUL-terminated.
 */
enum LcStatus lc_chunk_text(const struct LcTokenizer *handle,
                            const char *doc_id,
                            const char *text,
                            size_t max_tokens,
                            char **out);

struct LcMaskingConfig lc_masking_config_default(void);

/**
 * Whole-word masking over a JSON array of chunk records (as produced by
 * [`lc_chunk_text`]). `out` receives a JSON array of
 * `{doc_id, seq, input_ids, labels}` objects. A NULL `config` uses the
 * defaults with seed 0.
 *
 * # Safety
 * All pointers except `config` must be valid; strings NUL-terminated.
 */
enum LcStatus lc_mask_chunks(const struct LcTokenizer *handle,
                             const char *chunks_json,
                             const struct LcMaskingConfig *config,
                             char **out);

struct LcScheduleConfig lc_schedule_config_default(uint64_t total_steps);

/**
 * Learning rate after `step` optimizer steps.
 *
 * # Safety
 * `config` and `lr` must be valid pointers.
 */
enum LcStatus lc_lr_at(uint64_t step, const struct LcScheduleConfig *config, double *lr);

uint64_t lc_effective_batch(uint64_t batch_size, uint64_t grad_accum);

/**
 * Trapezoidal area under `n` points `(epochs[i], f1[i])`.
 *
 * # Safety
 * `epochs` and `f1` must each point to `n` readable doubles; `auc` valid.
 */
enum LcStatus lc_curve_auc(const double *epochs, const double *f1, size_t n, double *auc);

/**
 * F1 over line-delimited `{example_id, gold, predicted}` records.
 *
 * # Safety
 * `predictions_jsonl` must be NUL-terminated and `f1` valid.
 */
enum LcStatus lc_f1_score(const char *predictions_jsonl, enum LcAveraging averaging, double *f1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXCORPUS_H */
