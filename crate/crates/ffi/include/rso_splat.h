#ifndef RSO_SPLAT_H
#define RSO_SPLAT_H

/* Generated by cbindgen from the rso-splat-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Which image metric [`rso_image_metric`] computes.
 */
typedef enum RsoMetric {
  RSO_METRIC_PSNR = 0,
  RSO_METRIC_SSIM = 1,
} RsoMetric;

typedef enum RsoStatus {
  RSO_STATUS_OK = 0,
  RSO_STATUS_NULL_POINTER = 1,
  RSO_STATUS_INVALID_ARGUMENT = 2,
  RSO_STATUS_INPUT_ERROR = 3,
  RSO_STATUS_RUNTIME_ERROR = 4,
  RSO_STATUS_PANIC = 5,
} RsoStatus;

/*
 Opaque Gaussian cloud.
 */
typedef struct RsoCloud RsoCloud;

/*
 Opaque rendered view (RGB plus alpha).
 */
typedef struct RsoImage RsoImage;

/*
 Pinhole camera: intrinsics in pixels, world-to-camera rotation as a
 scalar-first unit quaternion, and translation.
 */
typedef struct RsoCamera {
  uint32_t width;
  uint32_t height;
  double fx;
  double fy;
  double cx;
  double cy;
  double rotation[4];
  double translation[3];
} RsoCamera;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *rso_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *rso_version(void);

/*
 Loads a binary PLY. On success `*out` owns a new cloud.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RsoStatus rso_cloud_load_ply(const char *path, struct RsoCloud **out);

/*
 # Safety
 `cloud` must come from this library; `path` must be NUL-terminated.
 */
enum RsoStatus rso_cloud_save_ply(const struct RsoCloud *cloud, const char *path);

/*
 Number of Gaussians, or 0 for a null handle.

 # Safety
 `cloud` must be null or come from this library.
 */
size_t rso_cloud_len(const struct RsoCloud *cloud);

/*
 # Safety
 `cloud` must be null or come from this library, and is invalid after.
 */
void rso_cloud_free(struct RsoCloud *cloud);

/*
 Renders `cloud` from `camera` over an RGB `background`.

 # Safety
 Pointers must be valid; `background` points to 3 doubles.
 */
enum RsoStatus rso_render(const struct RsoCloud *cloud,
                          const struct RsoCamera *camera,
                          const double *background,
                          struct RsoImage **out);

/*
 # Safety
 `image` must be null or come from this library.
 */
uint32_t rso_image_width(const struct RsoImage *image);

/*
 # Safety
 `image` must be null or come from this library.
 */
uint32_t rso_image_height(const struct RsoImage *image);

/*
 Copies interleaved RGB (`len == width * height * 3`) or, when `alpha`
 is nonzero, the alpha plane (`len == width * height`) into `dst`.

 # Safety
 `dst` must hold `len` floats.
 */
enum RsoStatus rso_image_copy(const struct RsoImage *image, int32_t alpha, float *dst, size_t len);

/*
 # Safety
 `image` must be null or come from this library, and is invalid after.
 */
void rso_image_free(struct RsoImage *image);

/*
 Compares two interleaved RGB buffers of `width * height * 3` floats in
 `[0, 1]`.

 # Safety
 `a` and `b` must hold `width * height * 3` floats; `out` must be valid.
 */
enum RsoStatus rso_image_metric(enum RsoMetric metric,
                                const float *a,
                                const float *b,
                                uint32_t width,
                                uint32_t height,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RSO_SPLAT_H */
