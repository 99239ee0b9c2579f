#ifndef FINECLUSTER_H
#define FINECLUSTER_H

/* C interface to the finecluster library.
 *
 * Conventions:
 *   - Every fallible call returns fc_status and, on failure, writes a
 *     truncated message into (err, err_len) when err_len > 0.
 *   - Output parameters are written only on FC_OK.
 *   - Objects returned through fc_*** out-pointers are released with the
 *     matching *_free call; freeing NULL is a no-op.
 *   - Strings returned through char** are heap-allocated; release them with
 *     fc_string_free.
 *   - Buffers passed as (ptr, len) are caller-owned; calls fail with
 *     FC_ERR_INVALID when len is too small.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fc_status {
  FC_OK = 0,
  FC_ERR_INVALID = 1,
  FC_ERR_IO = 2,
  FC_ERR_NUMERIC = 3,
  FC_ERR_NO_RESULT = 4
} fc_status;

typedef struct fc_dataset fc_dataset;
typedef struct fc_truth fc_truth;
typedef struct fc_mixspec fc_mixspec;
typedef struct fc_options fc_options;
typedef struct fc_result fc_result;
typedef struct fc_report fc_report;

const char* fc_version(void);
void fc_string_free(char* s);

/* ---- datasets (row-major n x d doubles; file format "FCDS") ---- */

fc_status fc_dataset_create(const double* data, int64_t n, int64_t d,
                            fc_dataset** out, char* err, size_t err_len);
fc_status fc_dataset_load(const char* path, fc_dataset** out, char* err,
                          size_t err_len);
fc_status fc_dataset_save(const fc_dataset* ds, const char* path, char* err,
                          size_t err_len);
int64_t fc_dataset_n(const fc_dataset* ds);
int64_t fc_dataset_dim(const fc_dataset* ds);
/* Copies all n*d values row-major into buf. */
fc_status fc_dataset_copy(const fc_dataset* ds, double* buf, size_t buf_len,
                          char* err, size_t err_len);
void fc_dataset_free(fc_dataset* ds);

/* ---- mixture specifications (JSON documents) ---- */

fc_status fc_mixspec_from_json(const char* json_text, fc_mixspec** out,
                               char* err, size_t err_len);
fc_status fc_mixspec_load(const char* path, fc_mixspec** out, char* err,
                          size_t err_len);
fc_status fc_mixspec_save(const fc_mixspec* spec, const char* path, char* err,
                          size_t err_len);
fc_status fc_mixspec_to_json(const fc_mixspec* spec, char** out, char* err,
                             size_t err_len);
/* Presets: "separated_gaussians", "scale_contrast". Zero-valued dim / alpha
 * / separation_factor take the preset defaults. */
fc_status fc_mixspec_preset(const char* name, int64_t dim, double alpha,
                            double separation_factor, fc_mixspec** out,
                            char* err, size_t err_len);
int64_t fc_mixspec_k(const fc_mixspec* spec);
int64_t fc_mixspec_dim(const fc_mixspec* spec);
double fc_mixspec_alpha(const fc_mixspec* spec);
void fc_mixspec_free(fc_mixspec* spec);

/* ---- ground truth (labels file "FCLB" + JSON metadata) ---- */

int64_t fc_truth_k(const fc_truth* t);
int64_t fc_truth_n(const fc_truth* t);
/* Labels are in [0,k), or -1 for adversarial replacements. */
fc_status fc_truth_labels(const fc_truth* t, int32_t* buf, size_t buf_len,
                          char* err, size_t err_len);
double fc_truth_sigma(const fc_truth* t, int64_t i);
fc_status fc_truth_mean(const fc_truth* t, int64_t i, double* buf,
                        size_t buf_len, char* err, size_t err_len);
fc_status fc_truth_save(const fc_truth* t, const char* labels_path,
                        const char* meta_json_path, char* err, size_t err_len);
fc_status fc_truth_load(const char* labels_path, const char* meta_json_path,
                        fc_truth** out, char* err, size_t err_len);
void fc_truth_free(fc_truth* t);

/* ---- generation and corruption ---- */

fc_status fc_generate(const fc_mixspec* spec, int64_t n, uint64_t seed,
                      fc_dataset** out_data, fc_truth** out_truth, char* err,
                      size_t err_len);

/* Deterministic special fixtures.
 *   "twin_pairs": four point masses in two close pairs; n divisible by 4;
 *     out_truth gets the first merged ground truth and out_truth_alt (when
 *     non-NULL) the second. alpha and grid_points are ignored.
 *   "axis_grid": hard grid construction; needs alpha in (0,1/2], c_sep > 0,
 *     grid_points >= 2; n is ignored (size is 2*d*grid_points).
 */
fc_status fc_generate_special(const char* name, int64_t n, double alpha,
                              double c_sep, int64_t grid_points,
                              fc_dataset** out_data, fc_truth** out_truth,
                              fc_truth** out_truth_alt, char* err,
                              size_t err_len);

/* Replaces floor(fraction*n) points in place; their labels become -1.
 * Strategies: "far_blob", "fake_cluster", "bridge", "replace_random". */
fc_status fc_corrupt(fc_dataset* ds, fc_truth* truth, double fraction,
                     const char* strategy, uint64_t seed,
                     int64_t* out_replaced, char* err, size_t err_len);

/* ---- clustering ---- */

fc_status fc_options_create(fc_options** out, char* err, size_t err_len);
fc_status fc_options_set_alpha(fc_options* o, double alpha, char* err,
                               size_t err_len);
fc_status fc_options_set_delta(fc_options* o, double delta, char* err,
                               size_t err_len);
fc_status fc_options_set_seed(fc_options* o, uint64_t seed, char* err,
                              size_t err_len);
/* "paper" or "practical". */
fc_status fc_options_set_profile(fc_options* o, const char* name, char* err,
                                 size_t err_len);
fc_status fc_options_override(fc_options* o, const char* key, double value,
                              char* err, size_t err_len);
void fc_options_free(fc_options* o);

/* Returns FC_ERR_NO_RESULT when every candidate center is rejected. */
fc_status fc_cluster(const fc_dataset* ds, const fc_options* opts,
                     fc_result** out, char* err, size_t err_len);

int64_t fc_result_m(const fc_result* r);
/* Per-point set ids in [0,m), -1 for unassigned; length = dataset n. */
fc_status fc_result_assignments(const fc_result* r, int32_t* buf,
                                size_t buf_len, char* err, size_t err_len);
int64_t fc_result_set_size(const fc_result* r, int64_t j);
fc_status fc_result_set_indices(const fc_result* r, int64_t j, int64_t* buf,
                                size_t buf_len, char* err, size_t err_len);
fc_status fc_result_center(const fc_result* r, int64_t j, double* buf,
                           size_t buf_len, char* err, size_t err_len);
double fc_result_scale(const fc_result* r, int64_t j);
fc_status fc_result_trace(const fc_result* r, char** out, char* err,
                          size_t err_len);
/* Assignments file, format "FCAS". */
fc_status fc_result_save(const fc_result* r, const char* path, char* err,
                         size_t err_len);
/* Rebuilds sets, centers, and scales from a stored assignment file. */
fc_status fc_result_load(const fc_dataset* ds, const char* path,
                         fc_result** out, char* err, size_t err_len);
void fc_result_free(fc_result* r);

/* Writes a raw assignment vector (format "FCAS") without a result object. */
fc_status fc_assignments_save(const int32_t* labels, int64_t n,
                              const char* path, char* err, size_t err_len);

/* ---- verification ---- */

fc_status fc_verify(const fc_result* r, const fc_truth* truth, double alpha,
                    double c_const, double pairwise_factor, fc_report** out,
                    char* err, size_t err_len);
int fc_report_pass(const fc_report* rep);
fc_status fc_report_text(const fc_report* rep, char** out, char* err,
                         size_t err_len);
fc_status fc_report_json(const fc_report* rep, char** out, char* err,
                         size_t err_len);
void fc_report_free(fc_report* rep);

/* Long-format metric rows as CSV (header metric,i,j,value). */
fc_status fc_metrics_csv(const fc_result* r, const fc_truth* truth, char** out,
                         char* err, size_t err_len);

/* No-large-sub-cluster spot check over the given point subset. mode 0 =
 * sampled (heuristic refutation), 1 = exhaustive (subset size <= 18). */
fc_status fc_nlsc_spotcheck(const fc_dataset* ds, const int64_t* subset,
                            size_t subset_len, double alpha, int64_t n_total,
                            int trials, uint64_t seed, int mode, int* out_pass,
                            double* out_worst_ratio, int* out_vacuous,
                            char* err, size_t err_len);

/* k-PCA + Lloyd comparator; writes one label in [0,k) per point. */
fc_status fc_kpca_baseline(const fc_dataset* ds, int k, int iters,
                           uint64_t seed, int32_t* out_labels, size_t out_len,
                           char* err, size_t err_len);

#ifdef __cplusplus
}
#endif

#endif /* FINECLUSTER_H */
