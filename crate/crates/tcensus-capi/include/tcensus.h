#ifndef TCENSUS_H
#define TCENSUS_H

/* Generated by cbindgen from the tcensus-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every API call.
 */
typedef enum {
  /**
   * Success.
   */
  TC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TC_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or inconsistent.
   */
  TC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A file or JSON document could not be parsed.
   */
  TC_STATUS_PARSE_ERROR = 3,
  /**
   * The operation itself failed; see `tc_last_error_message`.
   */
  TC_STATUS_RUNTIME_ERROR = 4,
  /**
   * A panic was caught at the boundary.
   */
  TC_STATUS_PANIC = 5,
} TcStatus;

/**
 * Opaque detection-list handle.
 */
typedef struct TcDetections TcDetections;

/**
 * Opaque trained-model handle.
 */
typedef struct TcModel TcModel;

/**
 * One detection record, in original-image pixels.
 */
typedef struct {
  uint32_t left;
  uint32_t top;
  uint32_t width;
  uint32_t height;
  double score;
  uint32_t level;
} TcDetection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent error on this thread. The pointer stays valid
 * until the next failing call on the same thread; never free it.
 */
const char *tc_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *tc_version(void);

/**
 * Parses a model from a JSON document.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
TcStatus tc_model_from_json(const char *json, TcModel **out);

/**
 * Loads a model from a JSON file on disk.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
TcStatus tc_model_load(const char *path, TcModel **out);

/**
 * Frees a model handle; a null pointer is a no-op.
 *
 * # Safety
 * `model` must have been returned by a `tc_model_*` constructor and not
 * freed before.
 */
void tc_model_free(TcModel *model);

/**
 * Detection-window width of the model's layout.
 *
 * # Safety
 * `model` must be a live handle.
 */
uint32_t tc_model_window_width(const TcModel *model);

/**
 * Detection-window height of the model's layout.
 *
 * # Safety
 * `model` must be a live handle.
 */
uint32_t tc_model_window_height(const TcModel *model);

/**
 * Runs multi-scale detection over a row-major 8-bit grayscale buffer.
 *
 * `scale_factor` <= 1 selects the default pyramid step; `stride` 0 selects
 * the default stride.
 *
 * # Safety
 * `pixels` must point to `width * height` readable bytes and `out` must be
 * a valid pointer.
 */
TcStatus tc_detect(const TcModel *model,
                   const uint8_t *pixels,
                   uint32_t width,
                   uint32_t height,
                   double scale_factor,
                   uint32_t stride,
                   double score_threshold,
                   double nms_iou,
                   TcDetections **out);

/**
 * Number of detections in the list.
 *
 * # Safety
 * `detections` must be a live handle.
 */
uintptr_t tc_detections_len(const TcDetections *detections);

/**
 * Copies detection `index` into `out`.
 *
 * # Safety
 * `detections` must be a live handle and `out` a valid pointer.
 */
TcStatus tc_detections_get(const TcDetections *detections, uintptr_t index, TcDetection *out);

/**
 * Frees a detection list; a null pointer is a no-op.
 *
 * # Safety
 * `detections` must have been returned by [`tc_detect`] and not freed before.
 */
void tc_detections_free(TcDetections *detections);

/**
 * Writes both ternary label planes of a grayscale buffer into caller
 * buffers of `width * height` bytes (labels 0-58, border pixels 0).
 *
 * # Safety
 * All buffers must cover `width * height` bytes.
 */
TcStatus tc_utct_transform(const uint8_t *pixels,
                           uint32_t width,
                           uint32_t height,
                           uint8_t *i1_out,
                           uint8_t *i2_out);

/**
 * Writes the binary census-code raster of a grayscale buffer into a caller
 * buffer of `width * height` bytes (border pixels 0).
 *
 * # Safety
 * Both buffers must cover `width * height` bytes.
 */
TcStatus tc_ct_transform(const uint8_t *pixels, uint32_t width, uint32_t height, uint8_t *ct_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TCENSUS_H */
