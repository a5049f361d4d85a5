#ifndef INPUTTOPIC_H
#define INPUTTOPIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum ItStatus {
  IT_STATUS_OK = 0,
  IT_STATUS_NULL_ARGUMENT = 1,
  IT_STATUS_INVALID_UTF8 = 2,
  IT_STATUS_IO = 3,
  IT_STATUS_PARSE = 4,
  IT_STATUS_INVALID_MODEL = 5,
  IT_STATUS_INVALID_ARGUMENT = 6,
  IT_STATUS_INFERENCE = 7,
  IT_STATUS_PANIC = 99,
} ItStatus;

/**
 * A trained model directory loaded into memory.
 */
typedef struct ItModel ItModel;

/**
 * A parsed rule file.
 */
typedef struct ItRules ItRules;

typedef struct ItTTest {
  double t_statistic;
  size_t degrees_of_freedom;
  /**
   * Two-sided.
   */
  double p_value;
  bool exact_separation;
} ItTTest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *it_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *it_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void it_string_free(char *s);

/**
 * Loads a model directory written by `inputtopic train`. Topics come from
 * `topics.json` in the directory unless `topics_path` is non-null.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum ItStatus it_model_load(const char *model_dir, const char *topics_path, struct ItModel **out);

/**
 * Number of labeled fields in the model's index.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t it_model_size(const struct ItModel *model);

/**
 * # Safety
 * `model` must be null or a handle from [`it_model_load`] not yet freed.
 */
void it_model_free(struct ItModel *model);

/**
 * Reads a rule file (a JSON array of `{feature_string, topic}` objects).
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum ItStatus it_rules_load(const char *path, struct ItRules **out);

/**
 * Parses rules from a JSON string in the rule file format.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum ItStatus it_rules_parse(const char *json, struct ItRules **out);

/**
 * # Safety
 * `rules` must be null or a handle from this library not yet freed.
 */
void it_rules_free(struct ItRules *rules);

/**
 * Extracts every input field of an HTML page with default settings. On
 * success `*out_json` holds an array of `{page_id, element_path, tokens}`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out_json` must be writable.
 */
enum ItStatus it_extract_html(const char *page_id, const char *html, char **out_json);

/**
 * Infers the topic of every input field on an HTML page. `method` is one
 * of `nl`, `rb`, `rb-nl-n`, `rb-nl-m`, `rb-nl-b`; `rules` may be null only
 * for `nl`. On success `*out_json` holds an array with one object per field
 * carrying `topic`, `method`, `neighbors` and the other inference details.
 *
 * # Safety
 * `model` must be a live handle, `rules` null or a live handle, strings
 * NUL-terminated and `out_json` writable.
 */
enum ItStatus it_infer_html(const struct ItModel *model,
                            const struct ItRules *rules,
                            const char *page_id,
                            const char *html,
                            const char *method,
                            double threshold,
                            uint64_t seed,
                            char **out_json);

/**
 * Paired two-sided t-test over `n` pairs.
 *
 * # Safety
 * `xs` and `ys` must point to `n` doubles each; `out` must be writable.
 */
enum ItStatus it_paired_t_test(const double *xs, const double *ys, size_t n, struct ItTTest *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INPUTTOPIC_H */
