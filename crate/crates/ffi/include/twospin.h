#ifndef TWOSPIN_H
#define TWOSPIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TwospinStatus {
  TWOSPIN_STATUS_OK = 0,
  TWOSPIN_STATUS_NULL_POINTER = 1,
  TWOSPIN_STATUS_INVALID_UTF8 = 2,
  TWOSPIN_STATUS_PARSE = 3,
  TWOSPIN_STATUS_CONSTRAINT = 4,
  TWOSPIN_STATUS_CAPACITY = 5,
  TWOSPIN_STATUS_BUFFER_TOO_SMALL = 6,
  TWOSPIN_STATUS_NUMERICAL = 7,
  TWOSPIN_STATUS_PANIC = 8,
} TwospinStatus;

// Opaque model handle.
typedef struct TwospinModel TwospinModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next library call on the same thread.
const char *twospin_last_error(void);

// Parses a TOML run configuration. The integrability constraints are not
// enforced here; functions that need them report `Constraint`.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum TwospinStatus twospin_model_from_toml(const char *toml, struct TwospinModel **out);

// # Safety
// `model` must come from `twospin_model_from_toml` and not be used afterwards.
void twospin_model_free(struct TwospinModel *model);

// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum TwospinStatus twospin_model_dim(const struct TwospinModel *model, size_t *out);

// Writes the Hamiltonian row-major as interleaved `(re, im)` pairs.
// `len` counts doubles and must be at least `2 dim^2`.
//
// # Safety
// `buf` must hold `len` doubles.
enum TwospinStatus twospin_model_hamiltonian(const struct TwospinModel *model,
                                             double *buf,
                                             size_t len);

// Exact spectrum grouped by sector (descending `S^z`), ascending inside each.
// `twice_sz` may be null; otherwise it receives `2 S^z` per eigenvalue.
//
// # Safety
// `energies` and a non-null `twice_sz` must hold `len >= dim` entries.
enum TwospinStatus twospin_model_spectrum(const struct TwospinModel *model,
                                          double *energies,
                                          int64_t *twice_sz,
                                          size_t len);

// Runs the certification checks; `passed` receives the overall verdict and
// `report` a JSON document (free with `twospin_string_free`).
//
// # Safety
// Pointers must be valid; `report` may be null.
enum TwospinStatus twospin_model_verify(const struct TwospinModel *model,
                                        bool *passed,
                                        char **report);

// Solves the Bethe equations and matches against the exact spectrum.
// A negative `nmax` uses the configured range.
//
// # Safety
// `report` must be a valid pointer.
enum TwospinStatus twospin_model_bethe(const struct TwospinModel *model,
                                       int64_t nmax,
                                       char **report);

// Interaction graph in DOT format.
//
// # Safety
// `dot` must be a valid pointer.
enum TwospinStatus twospin_model_graph_dot(const struct TwospinModel *model, char **dot);

// # Safety
// `s` must come from this library, or be null.
void twospin_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOSPIN_H */
