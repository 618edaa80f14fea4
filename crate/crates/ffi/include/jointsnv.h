#ifndef JOINTSNV_H
#define JOINTSNV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JsnvStatus {
  JSNV_STATUS_OK = 0,
  JSNV_STATUS_NULL_POINTER = 1,
  JSNV_STATUS_INVALID_ARGUMENT = 2,
  JSNV_STATUS_IO = 3,
  JSNV_STATUS_PARSE = 4,
  JSNV_STATUS_DATA = 5,
  JSNV_STATUS_STATISTICS = 6,
  JSNV_STATUS_PANIC = 7,
} JsnvStatus;

typedef enum JsnvMethod {
  JSNV_METHOD_SBBT = 0,
  JSNV_METHOD_HOTELLING = 1,
  JSNV_METHOD_FISHER = 2,
  JSNV_METHOD_SKAT = 3,
  JSNV_METHOD_SKATO = 4,
  JSNV_METHOD_SUMSTAT = 5,
} JsnvMethod;

/**
 * Opaque dataset handle.
 */
typedef struct JsnvDataset JsnvDataset;

/**
 * Result of one test. `n_permutations` is 0 for analytic P-values.
 */
typedef struct JsnvTestResult {
  double statistic;
  double p_value;
  size_t n_variants;
  size_t n_permutations;
  bool clamped;
} JsnvTestResult;

/**
 * Simulation scenario: `n_pairs` causal variants, each with one marker in
 * LD `ld_r`.
 */
typedef struct JsnvScenario {
  double or_het;
  double or_hom;
  double maf;
  double ld_r;
  size_t n_pairs;
  size_t n_cases;
  size_t n_controls;
  uint64_t seed;
} JsnvScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *jsnv_last_error_message(void);

/**
 * Opens `<prefix>.bed/.bim/.fam`; dosages count each variant's minor allele.
 *
 * # Safety
 * `prefix` must be a nul-terminated string; `out` must be writable.
 */
enum JsnvStatus jsnv_dataset_open_bed(const char *prefix, struct JsnvDataset **out);

/**
 * Opens `<prefix>.ped/.map`.
 *
 * # Safety
 * As [`jsnv_dataset_open_bed`].
 */
enum JsnvStatus jsnv_dataset_open_ped(const char *prefix, struct JsnvDataset **out);

/**
 * Releases a dataset; null is ignored.
 *
 * # Safety
 * `dataset` must come from this library and not be used afterwards.
 */
void jsnv_dataset_free(struct JsnvDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
size_t jsnv_dataset_n_samples(const struct JsnvDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
size_t jsnv_dataset_n_variants(const struct JsnvDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle or null (returns 0).
 */
size_t jsnv_dataset_n_cases(const struct JsnvDataset *dataset);

/**
 * Minor-allele dosage of one sample at one variant; NaN when missing.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum JsnvStatus jsnv_dataset_dosage(const struct JsnvDataset *dataset,
                                    size_t sample,
                                    size_t variant,
                                    double *out);

/**
 * Tests the variants at `indices` with one method. Missing genotypes are
 * mean-imputed. `n_permutations` is ignored by analytic methods.
 *
 * # Safety
 * `dataset` must be a live handle, `indices` must point to `n_indices`
 * values and `out` must be writable.
 */
enum JsnvStatus jsnv_test_unit(const struct JsnvDataset *dataset,
                               const size_t *indices,
                               size_t n_indices,
                               enum JsnvMethod method,
                               uint64_t seed,
                               size_t n_permutations,
                               struct JsnvTestResult *out);

/**
 * Exact Hardy-Weinberg test P-value for the genotype counts.
 *
 * # Safety
 * `out_p` must be writable.
 */
enum JsnvStatus jsnv_hwe_exact(int64_t n_hom_minor,
                               int64_t n_het,
                               int64_t n_hom_major,
                               double *out_p);

/**
 * Fisher's combination of `k` P-values: statistic and chi-square P-value.
 *
 * # Safety
 * `p_values` must point to `k` values; the outputs must be writable.
 */
enum JsnvStatus jsnv_fisher_combine(const double *p_values,
                                    size_t k,
                                    double *out_statistic,
                                    double *out_p);

/**
 * Generates replicate `replicate` of `scenario` as a new dataset: cases
 * first, columns causal variants then markers.
 *
 * # Safety
 * `scenario` must be readable and `out` writable.
 */
enum JsnvStatus jsnv_simulate_replicate(const struct JsnvScenario *scenario,
                                        size_t replicate,
                                        struct JsnvDataset **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JOINTSNV_H */
