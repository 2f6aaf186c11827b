#ifndef FFTSVD_H
#define FFTSVD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum FftsvdStatus {
  FFTSVD_STATUS_OK = 0,
  FFTSVD_STATUS_NULL_POINTER = 1,
  FFTSVD_STATUS_INVALID_ARGUMENT = 2,
  FFTSVD_STATUS_DIMENSION = 3,
  // Fixed-point saturation was requested to be an error.
  FFTSVD_STATUS_OVERFLOW = 4,
  // The SVD stopped at its sweep limit; partial factors are still returned.
  FFTSVD_STATUS_NO_CONVERGENCE = 5,
  FFTSVD_STATUS_CAPACITY = 6,
  FFTSVD_STATUS_INTERNAL = 7,
} FftsvdStatus;

// Streaming FFT cascade.
typedef struct FftsvdPipeline FftsvdPipeline;

// SVD result.
typedef struct FftsvdSvd FftsvdSvd;

// Q-format descriptor; `int_bits` includes the sign bit.
typedef struct FftsvdQFormat {
  uint32_t int_bits;
  uint32_t frac_bits;
} FftsvdQFormat;

// Watermark key. Start from [`fftsvd_watermark_key_default`].
typedef struct FftsvdWatermarkKey {
  uint64_t seed;
  size_t block_row;
  size_t block_col;
  size_t block_size;
  double alpha;
} FftsvdWatermarkKey;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message, NUL-terminated and
// truncated to `cap` bytes, and returns the full message length (0 if the
// last call succeeded). Pass a null `buf` to query the length.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t fftsvd_last_error(char *buf, size_t cap);

// Batch FFT of `n` samples in natural order. With a non-null `fmt` the
// fixed-point datapath is used and `*out_scale` receives the factor by which
// the output is scaled (1 in float mode). With `strict`, saturation returns
// [`FftsvdStatus::Overflow`]; the output is written either way.
//
// # Safety
// Arrays must hold `n` elements; `out_scale` and `out_overflow` may be null.
enum FftsvdStatus fftsvd_fft(const double *re,
                             const double *im,
                             size_t n,
                             const struct FftsvdQFormat *fmt,
                             bool strict,
                             double *out_re,
                             double *out_im,
                             double *out_scale,
                             bool *out_overflow);

// Direct `O(n²)` DFT, any `n ≥ 1`.
//
// # Safety
// Arrays must hold `n` elements.
enum FftsvdStatus fftsvd_dft_naive(const double *re,
                                   const double *im,
                                   size_t n,
                                   double *out_re,
                                   double *out_im);

// Creates an `n`-point streaming cascade with one pipeline register per
// stage. A null `fmt` selects double precision.
//
// # Safety
// `out` must be a valid pointer; the handle is released with
// [`fftsvd_pipeline_free`].
enum FftsvdStatus fftsvd_pipeline_new(size_t n,
                                      const struct FftsvdQFormat *fmt,
                                      bool natural_order,
                                      struct FftsvdPipeline **out);

// # Safety
// `p` must be null or a handle from [`fftsvd_pipeline_new`] not yet freed.
void fftsvd_pipeline_free(struct FftsvdPipeline *p);

// Streams `len` samples (a whole number of frames) through the cascade and
// flushes it, writing `len` output samples and, if `out_cycles` is non-null,
// the cycle at which each appeared.
//
// # Safety
// `p` must be a live handle; arrays must hold `len` elements.
enum FftsvdStatus fftsvd_pipeline_run(struct FftsvdPipeline *p,
                                      const double *re,
                                      const double *im,
                                      size_t len,
                                      double *out_re,
                                      double *out_im,
                                      uint64_t *out_cycles,
                                      bool *out_overflow);

// Cycles from the first input sample to the first output sample.
//
// # Safety
// `p` must be a live handle.
enum FftsvdStatus fftsvd_pipeline_latency(const struct FftsvdPipeline *p, uint64_t *out);

// Clears buffers, the cycle counter and the overflow flag.
//
// # Safety
// `p` must be a live handle.
enum FftsvdStatus fftsvd_pipeline_reset(struct FftsvdPipeline *p);

// Factors the row-major `rows x cols` matrix `a`. `tol <= 0` and
// `max_sweeps == 0` select the defaults; a null `fmt` selects double
// precision. On [`FftsvdStatus::NoConvergence`] `*out` still receives the
// partial factors.
//
// # Safety
// `a` must hold `rows·cols` elements; `out` must be valid. Release the handle
// with [`fftsvd_svd_free`].
enum FftsvdStatus fftsvd_svd(const double *a,
                             size_t rows,
                             size_t cols,
                             double tol,
                             size_t max_sweeps,
                             const struct FftsvdQFormat *fmt,
                             struct FftsvdSvd **out);

// # Safety
// `s` must be null or a handle from [`fftsvd_svd`] not yet freed.
void fftsvd_svd_free(struct FftsvdSvd *s);

// Shape of the factorization: `U` is `m x m`, `V` is `n x n` and there are
// `min(m, n)` singular values.
//
// # Safety
// `s` must be a live handle; outputs may be null.
enum FftsvdStatus fftsvd_svd_shape(const struct FftsvdSvd *s,
                                   size_t *m,
                                   size_t *n,
                                   size_t *sweeps,
                                   double *residual);

// Copies the singular values, descending; `len` must be `min(m, n)`.
//
// # Safety
// `s` must be a live handle and `out` must hold `len` elements.
enum FftsvdStatus fftsvd_svd_sigma(const struct FftsvdSvd *s, double *out, size_t len);

// Copies `U` row-major; `len` must be `m·m`.
//
// # Safety
// `s` must be a live handle and `out` must hold `len` elements.
enum FftsvdStatus fftsvd_svd_u(const struct FftsvdSvd *s, double *out, size_t len);

// Copies `V` row-major; `len` must be `n·n`.
//
// # Safety
// `s` must be a live handle and `out` must hold `len` elements.
enum FftsvdStatus fftsvd_svd_v(const struct FftsvdSvd *s, double *out, size_t len);

// Gain-compensated CORDIC rotation of `(x, y)` by `angle` radians.
//
// # Safety
// Output pointers must be valid.
enum FftsvdStatus fftsvd_cordic_rotate(double x,
                                       double y,
                                       double angle,
                                       size_t iters,
                                       double *out_x,
                                       double *out_y);

// CORDIC vectoring: magnitude and angle of `(x, y)`.
//
// # Safety
// Output pointers must be valid.
enum FftsvdStatus fftsvd_cordic_vector(double x,
                                       double y,
                                       size_t iters,
                                       double *out_magnitude,
                                       double *out_angle);

// Fills `key` with the default key for `seed`.
//
// # Safety
// `key` must be valid.
enum FftsvdStatus fftsvd_watermark_key_default(uint64_t seed, struct FftsvdWatermarkKey *key);

// Embeds `nbits` bits (each byte 0 or 1) into a row-major grayscale image
// with pixels in `[0, 1]`, writing `width·height` pixels to `out`.
//
// # Safety
// Buffers must hold the stated number of elements.
enum FftsvdStatus fftsvd_watermark_embed(const double *host,
                                         size_t width,
                                         size_t height,
                                         const uint8_t *bits,
                                         size_t nbits,
                                         const struct FftsvdWatermarkKey *key,
                                         double *out);

// Like `fftsvd_watermark_embed`, but every output pixel is a multiple of
// 1/255 chosen so the payload survives storage as 8-bit grey levels.
//
// # Safety
// Buffers must hold the stated number of elements.
enum FftsvdStatus fftsvd_watermark_embed_8bit(const double *host,
                                              size_t width,
                                              size_t height,
                                              const uint8_t *bits,
                                              size_t nbits,
                                              const struct FftsvdWatermarkKey *key,
                                              double *out);

// Recovers `nbits` bits from `marked` given the unmarked `original`. Each
// output byte is 0, 1, or 2 for an undecidable bit.
//
// # Safety
// Images must hold `width·height` pixels and `out_bits` `nbits` bytes.
enum FftsvdStatus fftsvd_watermark_extract(const double *marked,
                                           const double *original,
                                           size_t width,
                                           size_t height,
                                           const struct FftsvdWatermarkKey *key,
                                           size_t nbits,
                                           uint8_t *out_bits);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FFTSVD_H */
