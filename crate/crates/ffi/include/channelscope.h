/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef CHANNELSCOPE_H
#define CHANNELSCOPE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CsComparison {
  // Count partitions with a strictly greater statistic.
  CS_COMPARISON_GREATER = 0,
  // Count partitions with a greater or equal statistic.
  CS_COMPARISON_GREATER_OR_EQUAL = 1,
} CsComparison;

typedef enum CsOovPolicy {
  CS_OOV_POLICY_STRICT = 0,
  CS_OOV_POLICY_BALANCE = 1,
} CsOovPolicy;

// Result of every fallible call.
typedef enum CsStatus {
  CS_STATUS_OK = 0,
  // A required pointer argument was null.
  CS_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  CS_STATUS_INVALID_UTF8 = 2,
  // A file could not be read or written.
  CS_STATUS_IO = 3,
  // Input text or a model file was malformed.
  CS_STATUS_PARSE = 4,
  // A run configuration was rejected.
  CS_STATUS_CONFIG = 5,
  // The data could not be analysed (empty vocabulary, zero-sum profile, ...).
  CS_STATUS_DATA = 6,
  // A word is missing from the embedding vocabulary.
  CS_STATUS_OUT_OF_VOCABULARY = 7,
  // A numeric argument or buffer size was out of range.
  CS_STATUS_INVALID_ARGUMENT = 8,
  // An internal panic was caught.
  CS_STATUS_PANIC = 9,
} CsStatus;

// Embedding model handle.
typedef struct CsEmbedding CsEmbedding;

// Category lexicon handle.
typedef struct CsLexicon CsLexicon;

// WEAT specification handle.
typedef struct CsWeatSpec CsWeatSpec;

typedef struct CsWeatResult {
  double statistic;
  // Cohen's d; meaningful only when `has_effect_size` is true.
  double effect_size;
  bool has_effect_size;
  double p_value;
  uint64_t partitions;
  // Words removed by the balance policy.
  size_t dropped;
} CsWeatResult;

typedef struct CsBoxStats {
  size_t n;
  double min;
  double q1;
  double median;
  double q3;
  double max;
  double whisker_low;
  double whisker_high;
  // Number of points beyond the fences.
  size_t outliers;
} CsBoxStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *cs_last_error_message(void);

// Static name of a status code, e.g. `"out_of_vocabulary"`.
const char *cs_status_name(enum CsStatus status);

// Library version as a static string.
const char *cs_version(void);

// The bundled 20-category lexicon.
//
// # Safety
// `out` must be valid for one write.
enum CsStatus cs_lexicon_bundled(struct CsLexicon **out);

// Load a lexicon file (one category per line: name, polarity, words).
//
// # Safety
// `file` must be a NUL-terminated string; `out` must be valid for one write.
enum CsStatus cs_lexicon_load(const char *file, struct CsLexicon **out);

// Number of categories, or 0 for a null handle.
//
// # Safety
// `lexicon` must be null or a live handle.
size_t cs_lexicon_len(const struct CsLexicon *lexicon);

// Name of category `index`, or null when out of range. Owned by the handle.
//
// # Safety
// `lexicon` must be null or a live handle.
const char *cs_lexicon_category_name(const struct CsLexicon *lexicon, size_t index);

// Per-category counts of `n_tokens` lemmatized tokens. A token in several
// categories counts in each. `counts` must hold `cs_lexicon_len` values.
//
// # Safety
// `tokens` must point to `n_tokens` NUL-terminated strings and `counts` to
// `counts_len` writable values.
enum CsStatus cs_lexicon_count(const struct CsLexicon *lexicon,
                               const char *const *tokens,
                               size_t n_tokens,
                               uint64_t *counts,
                               size_t counts_len);

// Normalized category profile: counts divided by their sum. Fails with
// `Data` when no token falls in any category.
//
// # Safety
// As for [`cs_lexicon_count`], with `fractions` in place of `counts`.
enum CsStatus cs_lexicon_profile(const struct CsLexicon *lexicon,
                                 const char *const *tokens,
                                 size_t n_tokens,
                                 double *fractions,
                                 size_t fractions_len);

// # Safety
// `lexicon` must be null or a handle not yet freed.
void cs_lexicon_free(struct CsLexicon *lexicon);

// Load a binary or text embedding model.
//
// # Safety
// `file` must be a NUL-terminated string; `out` must be valid for one write.
enum CsStatus cs_embedding_load(const char *file, struct CsEmbedding **out);

// Train skip-gram vectors on a text file with one whitespace-tokenized
// sentence per line. Window 5, 5 negatives, learning rate 0.025,
// min count 2, single-threaded, so the result depends only on the inputs.
//
// # Safety
// `file` must be a NUL-terminated string; `out` must be valid for one write.
enum CsStatus cs_embedding_train_file(const char *file,
                                      size_t dim,
                                      size_t epochs,
                                      uint64_t seed,
                                      struct CsEmbedding **out);

// Write the model in the binary format.
//
// # Safety
// `model` must be a live handle and `file` a NUL-terminated string.
enum CsStatus cs_embedding_save(const struct CsEmbedding *model, const char *file);

// Vector dimension, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t cs_embedding_dim(const struct CsEmbedding *model);

// Vocabulary size, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t cs_embedding_len(const struct CsEmbedding *model);

// Cosine similarity of two words.
//
// # Safety
// `model` must be a live handle, the words NUL-terminated strings and `out`
// valid for one write.
enum CsStatus cs_embedding_cosine(const struct CsEmbedding *model,
                                  const char *word_a,
                                  const char *word_b,
                                  double *out);

// Copy a word's vector into `buf`, which must hold `cs_embedding_dim` values.
//
// # Safety
// `model` must be a live handle, `word` a NUL-terminated string and `buf`
// valid for `buf_len` writes.
enum CsStatus cs_embedding_vector(const struct CsEmbedding *model,
                                  const char *word,
                                  float *buf,
                                  size_t buf_len);

// # Safety
// `model` must be null or a handle not yet freed.
void cs_embedding_free(struct CsEmbedding *model);

// Number of built-in specifications (immigrants, muslims, lgbt).
size_t cs_weat_builtin_count(void);

// Built-in specification `index`.
//
// # Safety
// `out` must be valid for one write.
enum CsStatus cs_weat_spec_builtin(size_t index, struct CsWeatSpec **out);

// Parse one specification from a JSON object with `name`, `class1`,
// `class2`, `attrs1` and `attrs2`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid for one write.
enum CsStatus cs_weat_spec_parse(const char *json, struct CsWeatSpec **out);

// # Safety
// `spec` must be null or a handle not yet freed.
void cs_weat_spec_free(struct CsWeatSpec *spec);

// Run one WEAT with the exact permutation test.
//
// # Safety
// `model` and `spec` must be live handles and `out` valid for one write.
enum CsStatus cs_weat_run(const struct CsEmbedding *model,
                          const struct CsWeatSpec *spec,
                          enum CsOovPolicy policy,
                          enum CsComparison comparison,
                          struct CsWeatResult *out);

// Box-plot summary (interpolated quartiles, 1.5 IQR whiskers) of `n` values.
//
// # Safety
// `values` must point to `n` readable values and `out` be valid for one write.
enum CsStatus cs_summarize(const double *values, size_t n, struct CsBoxStats *out);

// Full analysis from a run configuration file, writing the report, CSV
// tables, models and manifest. `output_dir` may be null to use the
// configured directory; `seed` may be null to use the configured seed.
//
// # Safety
// `config` must be a NUL-terminated string; `output_dir` null or one;
// `seed` null or valid for one read.
enum CsStatus cs_run_all(const char *config, const char *output_dir, const uint64_t *seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHANNELSCOPE_H */
