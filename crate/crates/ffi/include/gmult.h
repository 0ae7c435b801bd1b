#ifndef GMULT_H
#define GMULT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum GmStatus {
  GM_STATUS_OK = 0,
  GM_STATUS_NULL_POINTER = 1,
  GM_STATUS_INVALID_INPUT = 2,
  GM_STATUS_SHAPE_MISMATCH = 3,
  GM_STATUS_BUFFER_TOO_SMALL = 4,
  GM_STATUS_NOT_FRAME = 5,
  GM_STATUS_NOT_SEMI_NORMALIZED = 6,
  GM_STATUS_SINGULAR = 7,
  GM_STATUS_NOT_G_RIESZ = 8,
  GM_STATUS_NOT_DUAL = 9,
  GM_STATUS_PERTURBATION_TOO_LARGE = 10,
  GM_STATUS_CONDITION_NOT_MET = 11,
  GM_STATUS_NUMERICAL = 12,
  GM_STATUS_PANIC = 13,
} GmStatus;

// Opaque g-frame handle.
typedef struct GmFrame GmFrame;

// Opaque block-diagonal symbol handle.
typedef struct GmSymbol GmSymbol;

typedef struct GmComplex {
  double re;
  double im;
} GmComplex;

// Static description of a status code.
const char *gm_status_string(enum GmStatus status);

// Copies the calling thread's last error message, NUL-terminated and truncated
// to `len` bytes, into `buf`. Returns the full length including the NUL, or 0
// when the last call succeeded.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t gm_last_error_message(char *buf, size_t len);

// Builds a g-frame on `C^ambient_dim` from `block_count` blocks of sizes
// `block_sizes[i] x ambient_dim`, stored row-major one after another in `data`.
//
// # Safety
// `block_sizes` must hold `block_count` entries, `data` must hold
// `sum(block_sizes) * ambient_dim` entries and `out` must be writable.
enum GmStatus gm_frame_new(size_t ambient_dim,
                           size_t block_count,
                           const size_t *block_sizes,
                           const struct GmComplex *data,
                           struct GmFrame **out);

// Seeded random g-frame whose frame operator has condition number at most `cond_cap`.
//
// # Safety
// `block_sizes` must hold `block_count` entries and `out` must be writable.
enum GmStatus gm_frame_random(size_t ambient_dim,
                              size_t block_count,
                              const size_t *block_sizes,
                              double cond_cap,
                              uint64_t seed,
                              struct GmFrame **out);

// # Safety
// `frame` must be null or a handle not yet freed.
void gm_frame_free(struct GmFrame *frame);

// Ambient dimension `n`, or 0 for a null handle.
//
// # Safety
// `frame` must be null or a live handle.
size_t gm_frame_ambient_dim(const struct GmFrame *frame);

// Total stacked dimension `K = sum(block_sizes)`, or 0 for a null handle.
//
// # Safety
// `frame` must be null or a live handle.
size_t gm_frame_stacked_dim(const struct GmFrame *frame);

// Optimal frame bounds. Fails with `NotFrame` when the lower bound vanishes.
//
// # Safety
// `frame` must be a live handle; `lower` and `upper` must be null or writable.
enum GmStatus gm_frame_bounds(const struct GmFrame *frame, double *lower, double *upper);

// `dim ker(T_Λ)`, the number of stacked coordinates beyond a basis.
//
// # Safety
// `frame` must be a live handle; `excess` must be null or writable.
enum GmStatus gm_frame_excess(const struct GmFrame *frame, size_t *excess);

// Canonical dual `{Λᵢ S⁻¹}` as a new handle.
//
// # Safety
// `frame` must be a live handle and `out` writable.
enum GmStatus gm_frame_canonical_dual(const struct GmFrame *frame, struct GmFrame **out);

// Copies the `K x n` analysis matrix, row-major, into `out`.
//
// # Safety
// `frame` must be a live handle and `out` valid for `out_len` entries.
enum GmStatus gm_frame_analysis(const struct GmFrame *frame, struct GmComplex *out, size_t out_len);

// Scalar symbol `uᵢ = weights[i]·Id`.
//
// # Safety
// `block_sizes` and `weights` must hold `block_count` entries and `out` must be writable.
enum GmStatus gm_symbol_from_weights(size_t block_count,
                                     const size_t *block_sizes,
                                     const struct GmComplex *weights,
                                     struct GmSymbol **out);

// Block symbol from square blocks of sizes `block_sizes[i]`, stored row-major
// one after another in `data`.
//
// # Safety
// `block_sizes` must hold `block_count` entries, `data` must hold
// `sum(block_sizes[i]^2)` entries and `out` must be writable.
enum GmStatus gm_symbol_from_blocks(size_t block_count,
                                    const size_t *block_sizes,
                                    const struct GmComplex *data,
                                    struct GmSymbol **out);

// # Safety
// `symbol` must be null or a handle not yet freed.
void gm_symbol_free(struct GmSymbol *symbol);

// Assembles `M = Σ Λᵢ* uᵢ Γᵢ` into the `n x n` row-major buffer `out` and
// reports its extreme singular values.
//
// # Safety
// Handles must be live, `out` valid for `out_len` entries, and the scalar
// outputs null or writable.
enum GmStatus gm_multiplier(const struct GmFrame *lambda,
                            const struct GmSymbol *symbol,
                            const struct GmFrame *gamma,
                            struct GmComplex *out,
                            size_t out_len,
                            double *sigma_min,
                            double *sigma_max);

// The dual `Γ†` representing `M⁻¹` through `U⁻¹`, with the norm of its
// deviation from the canonical dual and the canonical flag.
//
// # Safety
// Handles must be live, `out` writable, scalar outputs null or writable.
enum GmStatus gm_gamma_dagger(const struct GmFrame *lambda,
                              const struct GmSymbol *symbol,
                              const struct GmFrame *gamma,
                              struct GmFrame **out,
                              double *psi_norm,
                              bool *canonical);

// `Γ′` with `M_{U,Λ′,Γ′} = M_{U,Λ,Γ}` for a perturbation `Λ′` of `Λ`, plus the
// perturbation distance `mu` and the distance constant `lambda_const`.
//
// # Safety
// Handles must be live, `out` writable, scalar outputs null or writable.
enum GmStatus gm_transfer_gamma(const struct GmFrame *lambda,
                                const struct GmSymbol *symbol,
                                const struct GmFrame *gamma,
                                const struct GmFrame *lambda_prime,
                                struct GmFrame **out,
                                double *mu,
                                double *lambda_const);

#endif  /* GMULT_H */
