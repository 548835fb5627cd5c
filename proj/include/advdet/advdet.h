/* Copyright 2026 The advdet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to libadvdet.
 *
 * Every fallible call returns an advdet_status. On failure the message is
 * available from advdet_last_error() on the same thread until the next call.
 * Handles are opaque and owned by the caller, who releases them with the
 * matching *_free function (NULL is accepted). Strings and arrays returned
 * through a handle stay valid until that handle is freed. A detector handle
 * must not be used from two threads at once.
 */

#ifndef ADVDET_ADVDET_H_
#define ADVDET_ADVDET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ADVDET_API __declspec(dllexport)
#else
#define ADVDET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum advdet_status {
  ADVDET_OK = 0,
  ADVDET_ERR_INVALID_ARGUMENT = 1,
  ADVDET_ERR_SHAPE = 2,
  ADVDET_ERR_DEGENERATE_INPUT = 3,
  ADVDET_ERR_UNDEFINED_METRIC = 4,
  ADVDET_ERR_NOT_ATTACKABLE = 5,
  ADVDET_ERR_NUMERIC = 6,
  ADVDET_ERR_BACKEND = 7,
  ADVDET_ERR_CAPABILITY = 8,
  ADVDET_ERR_PRECONDITION = 9,
  ADVDET_ERR_CONFIGURATION = 10,
  ADVDET_ERR_IO = 11,
  ADVDET_ERR_PARSE = 12,
  ADVDET_ERR_INTERNAL = 13
} advdet_status;

typedef enum advdet_mask_mode { ADVDET_MASK_BINARY = 0, ADVDET_MASK_ADDITIVE = 1 } advdet_mask_mode;

typedef enum advdet_normalization {
  ADVDET_NORM_MAX_ABS = 0,
  ADVDET_NORM_SIGN = 1,
  ADVDET_NORM_RAW = 2
} advdet_normalization;

typedef enum advdet_stop_reason {
  ADVDET_STOP_NO_DETECTIONS = 0,
  ADVDET_STOP_DISTORTION_REACHED = 1,
  ADVDET_STOP_SUCCESS_RATE_REACHED = 2,
  ADVDET_STOP_MAX_ITERATIONS = 3
} advdet_stop_reason;

typedef struct advdet_detector advdet_detector;
typedef struct advdet_image advdet_image;
typedef struct advdet_result advdet_result;
typedef struct advdet_dataset advdet_dataset;
typedef struct advdet_manifest advdet_manifest;
typedef struct advdet_matrix advdet_matrix;

ADVDET_API const char* advdet_version(void);
ADVDET_API const char* advdet_last_error(void);
ADVDET_API const char* advdet_status_string(advdet_status status);
ADVDET_API const char* advdet_stop_reason_string(advdet_stop_reason reason);

/* --- detectors ---------------------------------------------------------- */

/* Registered names separated by single spaces. */
ADVDET_API const char* advdet_available_detectors(void);
/* model_dir may be NULL or empty for the default ($ADVDET_MODEL_DIR). */
ADVDET_API advdet_status advdet_detector_create(const char* name, uint64_t seed,
                                                const char* model_dir, advdet_detector** out);
ADVDET_API void advdet_detector_free(advdet_detector* detector);
ADVDET_API const char* advdet_detector_name(const advdet_detector* detector);

typedef struct advdet_detection {
  double x_min, y_min, x_max, y_max;
  int class_id;
  double confidence;
} advdet_detection;

/* Writes up to `capacity` detections and stores the total count. */
ADVDET_API advdet_status advdet_detect(advdet_detector* detector, const advdet_image* image,
                                       double threshold, advdet_detection* out, size_t capacity,
                                       size_t* count);

/* --- images ------------------------------------------------------------- */

/* `chw` holds 3 * height * width values in [0, 1], channel-major. */
ADVDET_API advdet_status advdet_image_create(int height, int width, const double* chw,
                                             advdet_image** out);
ADVDET_API advdet_status advdet_image_read(const char* path, advdet_image** out);
/* PNG only; lossy extensions are refused with ADVDET_ERR_INVALID_ARGUMENT. */
ADVDET_API advdet_status advdet_image_write(const advdet_image* image, const char* path);
ADVDET_API void advdet_image_free(advdet_image* image);
ADVDET_API int advdet_image_height(const advdet_image* image);
ADVDET_API int advdet_image_width(const advdet_image* image);
ADVDET_API const double* advdet_image_data(const advdet_image* image);

/* --- metrics ------------------------------------------------------------ */

ADVDET_API advdet_status advdet_ncc(const advdet_image* a, const advdet_image* b, double* out);
ADVDET_API advdet_status advdet_distortion(const advdet_image* a, const advdet_image* b,
                                           double* out);
/* Percent. */
ADVDET_API advdet_status advdet_success_rate_from_map(double baseline_map, double adversarial_map,
                                                      double* out);

/* --- attack ------------------------------------------------------------- */

typedef struct advdet_attack_config {
  double step_size;
  int max_iterations;
  int has_target_distortion;
  double target_distortion;
  int has_target_success_rate;
  double target_success_rate;
  double confidence_threshold;
  advdet_mask_mode mask_mode;
  advdet_normalization normalization;
  double iou_match;
} advdet_attack_config;

/* step 0.01, 500 iterations, no early-stop targets, threshold 0.50. */
ADVDET_API void advdet_attack_config_default(advdet_attack_config* config);

ADVDET_API advdet_status advdet_attack(advdet_detector* detector, const advdet_image* image,
                                       const advdet_attack_config* config, advdet_result** out);
ADVDET_API void advdet_result_free(advdet_result* result);
/* Borrowed; valid while the result lives. */
ADVDET_API const advdet_image* advdet_result_image(const advdet_result* result);
ADVDET_API int advdet_result_iterations(const advdet_result* result);
ADVDET_API advdet_stop_reason advdet_result_stop_reason(const advdet_result* result);
ADVDET_API double advdet_result_distortion(const advdet_result* result);
/* Fresh detection on the returned image against the clean detections; NaN
 * when the clean image had none. */
ADVDET_API double advdet_result_success(const advdet_result* result);
ADVDET_API size_t advdet_result_initial_detections(const advdet_result* result);
ADVDET_API size_t advdet_result_trace_length(const advdet_result* result);
ADVDET_API advdet_status advdet_result_trace_loss(const advdet_result* result, size_t index,
                                                  double* out);
ADVDET_API advdet_status advdet_result_write_trace(const advdet_result* result, const char* path);

typedef struct advdet_sweep_point {
  double target_distortion;
  int skipped;
  double achieved_distortion;
  double success;
  int iterations;
  advdet_stop_reason stop_reason;
} advdet_sweep_point;

/* `out` receives `count` points, one per ascending S. */
ADVDET_API advdet_status advdet_attack_sweep(advdet_detector* detector, const advdet_image* image,
                                             const advdet_attack_config* config,
                                             const double* distortions, size_t count,
                                             advdet_sweep_point* out);

typedef struct advdet_confidence_point {
  double threshold;
  double mean_distortion;
  int images;
} advdet_confidence_point;

ADVDET_API advdet_status advdet_confidence_sweep(advdet_detector* detector,
                                                 const advdet_image* const* images,
                                                 size_t image_count,
                                                 const advdet_attack_config* config,
                                                 const double* thresholds, size_t count,
                                                 advdet_confidence_point* out);

/* --- datasets ----------------------------------------------------------- */

ADVDET_API advdet_status advdet_dataset_load_coco(const char* annotation_file,
                                                  const char* image_root, advdet_dataset** out);
ADVDET_API advdet_status advdet_dataset_load_voc(const char* xml_dir, const char* image_root,
                                                 advdet_dataset** out);
/* Writes `count` generated scenes under `root` and loads them. */
ADVDET_API advdet_status advdet_dataset_synthetic(const char* root, uint64_t seed, int count,
                                                  advdet_dataset** out);
ADVDET_API void advdet_dataset_free(advdet_dataset* dataset);
ADVDET_API size_t advdet_dataset_size(const advdet_dataset* dataset);
ADVDET_API const char* advdet_dataset_image_path(const advdet_dataset* dataset, size_t index);
ADVDET_API size_t advdet_dataset_warning_count(const advdet_dataset* dataset);
ADVDET_API const char* advdet_dataset_warning(const advdet_dataset* dataset, size_t index);

/* --- batch attacks ------------------------------------------------------ */

typedef struct advdet_batch_options {
  const char* output_root;
  int workers;
  int resume;
  int write_traces;
  int annotation_targets;
} advdet_batch_options;

ADVDET_API void advdet_batch_options_default(advdet_batch_options* options);

ADVDET_API advdet_status advdet_run_batch(const advdet_detector* prototype,
                                          const advdet_dataset* dataset,
                                          const advdet_attack_config* config,
                                          const advdet_batch_options* options,
                                          advdet_manifest** out);
/* Accepts manifest.jsonl or the directory holding it. */
ADVDET_API advdet_status advdet_manifest_read(const char* path, advdet_manifest** out);
/* A manifest whose "adversarial" images are the dataset's clean images. */
ADVDET_API advdet_status advdet_manifest_identity(const advdet_dataset* dataset, const char* label,
                                                  advdet_manifest** out);
ADVDET_API void advdet_manifest_free(advdet_manifest* manifest);
ADVDET_API const char* advdet_manifest_detector(const advdet_manifest* manifest);
ADVDET_API size_t advdet_manifest_size(const advdet_manifest* manifest);

typedef struct advdet_manifest_row {
  const char* image_id;
  const char* adversarial_path;
  const char* status;
  const char* error;
  advdet_stop_reason stop_reason;
  int iterations;
  double distortion;
  int has_success;
  double success;
  int initial_detections;
  int final_detections;
} advdet_manifest_row;

ADVDET_API advdet_status advdet_manifest_row_at(const advdet_manifest* manifest, size_t index,
                                                advdet_manifest_row* out);
/* ADVDET_ERR_UNDEFINED_METRIC when no row has a defined success. */
ADVDET_API advdet_status advdet_manifest_mean_success(const advdet_manifest* manifest,
                                                      double* out);

/* --- cross-model evaluation --------------------------------------------- */

typedef struct advdet_eval_options {
  double threshold;
  /* NULL/0 picks VOC thresholds for VOC datasets and COCO otherwise. */
  const double* iou_thresholds;
  size_t iou_threshold_count;
  int include_difficult;
} advdet_eval_options;

ADVDET_API void advdet_eval_options_default(advdet_eval_options* options);

/* source_labels and target_labels may be NULL to use detector names. */
ADVDET_API advdet_status advdet_evaluate(const advdet_manifest* const* sources,
                                         const char* const* source_labels, size_t source_count,
                                         advdet_detector* const* targets,
                                         const char* const* target_labels, size_t target_count,
                                         const advdet_dataset* ground_truth,
                                         const advdet_eval_options* options, advdet_matrix** out);
ADVDET_API void advdet_matrix_free(advdet_matrix* matrix);
ADVDET_API advdet_status advdet_matrix_baseline(const advdet_matrix* matrix, size_t target,
                                                double* out);
ADVDET_API advdet_status advdet_matrix_cell(const advdet_matrix* matrix, size_t source,
                                            size_t target, double* out);
ADVDET_API advdet_status advdet_matrix_success_rate(const advdet_matrix* matrix, size_t source,
                                                    size_t target, double* out);
ADVDET_API advdet_status advdet_matrix_missing(const advdet_matrix* matrix, size_t source,
                                               size_t target, int* out);
ADVDET_API size_t advdet_matrix_warning_count(const advdet_matrix* matrix);
ADVDET_API const char* advdet_matrix_warning(const advdet_matrix* matrix, size_t index);
ADVDET_API advdet_status advdet_matrix_write(const advdet_matrix* matrix, const char* dir);

/* --- figure series ------------------------------------------------------ */

/* `image_ids` names each row of `points`, which holds image_count rows of
 * point_count entries. */
ADVDET_API advdet_status advdet_write_sweep_table(const char* path, const char* const* image_ids,
                                                  const advdet_sweep_point* points,
                                                  size_t image_count, size_t point_count);
ADVDET_API advdet_status advdet_write_confidence_table(const char* path,
                                                       const advdet_confidence_point* points,
                                                       size_t count);
/* figure: loss_convergence (one trace file), rate_vs_distortion (sweep
 * tables) or conf_vs_distortion (one confidence table). svg_path may be NULL.
 * Stores the number of series rows in `rows` when non-NULL. */
ADVDET_API advdet_status advdet_emit_series(const char* figure, const char* const* inputs,
                                            size_t input_count, const char* series_path,
                                            const char* svg_path, size_t* rows);

#ifdef __cplusplus
}
#endif

#endif  /* ADVDET_ADVDET_H_ */
