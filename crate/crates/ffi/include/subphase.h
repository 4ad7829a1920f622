#ifndef SUBPHASE_H
#define SUBPHASE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_POINTER = 1,
  SP_STATUS_INVALID_ARGUMENT = 2,
  SP_STATUS_PARSE = 3,
  SP_STATUS_INCONSISTENT = 4,
  SP_STATUS_AMBIGUOUS = 5,
  SP_STATUS_UNSUPPORTED = 6,
  SP_STATUS_INTERNAL = 7,
} SpStatus;

typedef enum SpCertificate {
  SP_CERTIFICATE_STRUCTURED = 0,
  SP_CERTIFICATE_HYPERPLANE = 1,
  SP_CERTIFICATE_LIFT_INJECTIVE = 2,
  SP_CERTIFICATE_REFUTED = 3,
  SP_CERTIFICATE_UNCERTIFIED = 4,
} SpCertificate;

/**
 * A real subspace family, with its construction data when known.
 */
typedef struct SpFamily SpFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sp_last_error_message(void);

/**
 * Builds `2M - 1` subspaces of `R^M` with dimensions `dims[0..len]`.
 *
 * # Safety
 * `dims` must point to `len` readable values and `out` must be writable.
 */
enum SpStatus sp_build_real_family(uintptr_t ambient,
                                   const uintptr_t *dims,
                                   uintptr_t len,
                                   uint64_t seed,
                                   struct SpFamily **out);

/**
 * Builds `count` hyperplanes of `R^M` from a random Parseval frame.
 *
 * # Safety
 * `out` must be writable.
 */
enum SpStatus sp_build_hyperplane_family(uintptr_t ambient,
                                         uintptr_t count,
                                         uint64_t seed,
                                         struct SpFamily **out);

/**
 * Parses a real family file, with an optional recipe file (may be NULL).
 *
 * # Safety
 * `family_text` and, when non-NULL, `recipe_text` must be NUL-terminated.
 */
enum SpStatus sp_family_from_string(const char *family_text,
                                    const char *recipe_text,
                                    struct SpFamily **out);

/**
 * # Safety
 * `family` must come from this library and not be used afterwards.
 */
void sp_family_free(struct SpFamily *family);

/**
 * # Safety
 * `family` must be a live handle or NULL (returns 0).
 */
uintptr_t sp_family_ambient(const struct SpFamily *family);

/**
 * # Safety
 * `family` must be a live handle or NULL (returns 0).
 */
uintptr_t sp_family_count(const struct SpFamily *family);

/**
 * Family file text; free with `sp_string_free`. NULL on failure.
 *
 * # Safety
 * `family` must be a live handle.
 */
char *sp_family_to_string(const struct SpFamily *family);

/**
 * Recipe file text, or NULL when the family has no recipe.
 *
 * # Safety
 * `family` must be a live handle.
 */
char *sp_recipe_to_string(const struct SpFamily *family);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sp_string_free(char *s);

/**
 * Writes the `count` squared projection norms of `x` into `out`.
 *
 * # Safety
 * `x` must hold `x_len` values and `out` room for `out_len`.
 */
enum SpStatus sp_measure(const struct SpFamily *family,
                         const double *x,
                         uintptr_t x_len,
                         double *out,
                         uintptr_t out_len);

/**
 * Recovers the signal (first nonzero coordinate nonnegative) into `out`;
 * `residual` (may be NULL) receives the relative measurement mismatch.
 * Requires a family with a recipe.
 *
 * # Safety
 * `meas` must hold `meas_len` values, `out` room for `out_len`.
 */
enum SpStatus sp_reconstruct(const struct SpFamily *family,
                             const double *meas,
                             uintptr_t meas_len,
                             double *out,
                             uintptr_t out_len,
                             double *residual);

/**
 * Certifies injectivity from the recipe, else from the lifted operator;
 * reports `REFUTED` when a rank ≤ 2 null element is found.
 *
 * # Safety
 * `family` must be a live handle and `out` writable.
 */
enum SpStatus sp_certify(const struct SpFamily *family, enum SpCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBPHASE_H */
