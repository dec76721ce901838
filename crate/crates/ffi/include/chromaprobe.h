#ifndef CHROMAPROBE_H
#define CHROMAPROBE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call. The non-zero classes match the CLI
 * exit codes.
 */
typedef enum CpStatus {
  CP_STATUS_OK = 0,
  /**
   * Null pointer, bad length, or a string that is not UTF-8.
   */
  CP_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Unknown space, bad bin count, invalid configuration.
   */
  CP_STATUS_CONFIG = 2,
  /**
   * Unreadable or inconsistent input data.
   */
  CP_STATUS_INPUT = 3,
  /**
   * Empty template, mismatched spaces, too few pixels to cluster.
   */
  CP_STATUS_RUNTIME = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  CP_STATUS_PANIC = 5,
} CpStatus;

/**
 * Template histogram in one space at one bin count.
 */
typedef struct CpHistogram CpHistogram;

/**
 * Per-pixel class labels; 255 is background.
 */
typedef struct CpLabels CpLabels;

/**
 * An image converted into one color space.
 */
typedef struct CpPlane CpPlane;

/**
 * 8-bit RGB image.
 */
typedef struct CpRaster CpRaster;

/**
 * A color space configuration: index into the 21-space catalog (RGB is 0)
 * and whether pixel-wise normalization runs first.
 */
typedef struct CpSpace {
  uint32_t index;
  bool primed;
} CpSpace;

typedef struct CpScore {
  double recall;
  double precision;
  double fmeasure;
  uint64_t true_pos;
  uint64_t false_pos;
  uint64_t false_neg;
} CpScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next `cp_*` call on the same thread.
 */
const char *cp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cp_version(void);

/**
 * Number of entries in the space catalog.
 */
uint32_t cp_space_count(void);

/**
 * Parses a space name such as `"HSV"` or `"C1C2C3'"` (trailing quote means
 * normalized).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum CpStatus cp_space_from_name(const char *name, struct CpSpace *out);

/**
 * Writes the NUL-terminated name of `space` into `buf` (at most `len` bytes).
 *
 * # Safety
 * `buf` must be writable for `len` bytes.
 */
enum CpStatus cp_space_name(struct CpSpace space, char *buf, size_t len);

/**
 * Creates an image from `width * height` interleaved RGB triples.
 *
 * # Safety
 * `rgb` must point to `3 * width * height` readable bytes; `out` must be writable.
 */
enum CpStatus cp_raster_new(size_t width, size_t height, const uint8_t *rgb, struct CpRaster **out);

/**
 * Loads an 8-bit RGB PNG.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CpStatus cp_raster_load_png(const char *path, struct CpRaster **out);

/**
 * # Safety
 * `raster` must be NULL or a handle from this library not yet freed.
 */
void cp_raster_free(struct CpRaster *raster);

/**
 * Creates a label map from `width * height` class bytes.
 *
 * # Safety
 * `labels` must point to `width * height` readable bytes; `out` must be writable.
 */
enum CpStatus cp_labels_new(size_t width,
                            size_t height,
                            const uint8_t *labels,
                            struct CpLabels **out);

/**
 * # Safety
 * `labels` must be NULL or a handle from this library not yet freed.
 */
void cp_labels_free(struct CpLabels *labels);

/**
 * Converts `raster` into `space`.
 *
 * # Safety
 * `raster` must be a live handle; `out` must be writable.
 */
enum CpStatus cp_convert(const struct CpRaster *raster, struct CpSpace space, struct CpPlane **out);

/**
 * Converts one 8-bit RGB pixel into `space`, writing three channels.
 *
 * # Safety
 * `rgb` must point to 3 readable bytes and `out` to 3 writable doubles.
 */
enum CpStatus cp_convert_pixel(struct CpSpace space, const uint8_t *rgb, double *out);

/**
 * Pixel count of a converted image.
 *
 * # Safety
 * `plane` must be NULL or a live handle.
 */
size_t cp_plane_len(const struct CpPlane *plane);

/**
 * Copies channel `channel` (0..3) into `dst`, which holds `len` doubles.
 *
 * # Safety
 * `plane` must be a live handle and `dst` writable for `len` doubles.
 */
enum CpStatus cp_plane_copy_channel(const struct CpPlane *plane,
                                    uint32_t channel,
                                    double *dst,
                                    size_t len);

/**
 * # Safety
 * `plane` must be NULL or a handle from this library not yet freed.
 */
void cp_plane_free(struct CpPlane *plane);

/**
 * Builds the ratio histogram of a template image in `space` with `bins`
 * bins per channel (16, 32, 64 or 128).
 *
 * # Safety
 * `template` must be a live handle; `out` must be writable.
 */
enum CpStatus cp_histogram_build(const struct CpRaster *template_,
                                 uint8_t class_,
                                 struct CpSpace space,
                                 uint32_t bins,
                                 struct CpHistogram **out);

/**
 * # Safety
 * `hist` must be NULL or a handle from this library not yet freed.
 */
void cp_histogram_free(struct CpHistogram *hist);

/**
 * Backprojects `hist` onto `plane`, writing one likelihood in `[0, 1]` per
 * pixel into `dst`.
 *
 * # Safety
 * Handles must be live; `dst` must be writable for `len` doubles.
 */
enum CpStatus cp_backproject(const struct CpPlane *plane,
                             const struct CpHistogram *hist,
                             double *dst,
                             size_t len);

/**
 * Thresholds the backprojection at `tau` and scores it against the pixels
 * labeled with the histogram's class.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum CpStatus cp_detect_score(const struct CpPlane *plane,
                              const struct CpHistogram *hist,
                              const struct CpLabels *labels,
                              uint8_t class_,
                              double tau,
                              struct CpScore *out);

/**
 * Clusters the labeled pixels of `plane` with k = number of classes and
 * writes the mean silhouette.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum CpStatus cp_discriminability(const struct CpPlane *plane,
                                  const struct CpLabels *labels,
                                  uint64_t seed,
                                  double *out);

/**
 * Mean silhouette of `n` 3-D points (`points` holds `3 * n` doubles) under
 * the given cluster assignments in `0..k`.
 *
 * # Safety
 * `points` must hold `3 * n` doubles, `assignments` `n` values; `out` must be writable.
 */
enum CpStatus cp_silhouette(const double *points,
                            const uint32_t *assignments,
                            size_t n,
                            uint32_t k,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHROMAPROBE_H */
