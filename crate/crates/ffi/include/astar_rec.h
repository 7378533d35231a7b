#ifndef ASTAR_REC_H
#define ASTAR_REC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
enum AstarRecStatus
#ifdef __cplusplus
  : uint32_t
#endif // __cplusplus
 {
  ASTAR_REC_STATUS_OK = 0,
  ASTAR_REC_STATUS_NULL_POINTER = 1,
  ASTAR_REC_STATUS_INVALID_ARGUMENT = 2,
  ASTAR_REC_STATUS_INVALID_PARAMETERS = 3,
  ASTAR_REC_STATUS_ABSOLUTE_CONTINUITY = 4,
  ASTAR_REC_STATUS_UNBOUNDED_RATIO = 5,
  ASTAR_REC_STATUS_DEGENERATE_TARGET = 6,
  ASTAR_REC_STATUS_BUDGET_EXHAUSTED = 7,
  ASTAR_REC_STATUS_INVALID_CODE = 8,
  ASTAR_REC_STATUS_MALFORMED_MESSAGE = 9,
  ASTAR_REC_STATUS_BUFFER_TOO_SMALL = 10,
  ASTAR_REC_STATUS_INFEASIBLE = 11,
  ASTAR_REC_STATUS_INTERNAL = 12,
  ASTAR_REC_STATUS_PANIC = 13,
};
#ifndef __cplusplus
typedef uint32_t AstarRecStatus;
#endif // __cplusplus

// Coder family. Passed across the ABI as `uint32_t` so that out-of-range
// values from C are rejected instead of being undefined behaviour.
enum AstarRecVariant
#ifdef __cplusplus
  : uint32_t
#endif // __cplusplus
 {
  ASTAR_REC_VARIANT_AS_STAR = 0,
  ASTAR_REC_VARIANT_AD_STAR = 1,
  ASTAR_REC_VARIANT_PFR = 2,
  ASTAR_REC_VARIANT_DAD = 3,
  ASTAR_REC_VARIANT_MRC = 4,
};
#ifndef __cplusplus
typedef uint32_t AstarRecVariant;
#endif // __cplusplus

// Opaque target/proposal pair.
typedef struct AstarRecPair AstarRecPair;

// One encoded sample.
typedef struct AstarRecCode {
  // An [`AstarRecVariant`] value.
  uint32_t variant;
  // Tree depth (AS*, AD*), bit length of the index (PFR) or bit budget (DAD*, MRC).
  uint32_t depth_or_budget;
  uint64_t payload;
} AstarRecCode;

// Per-encode measurements.
typedef struct AstarRecStats {
  uint64_t steps;
  uint32_t returned_depth;
  uint32_t payload_bits;
} AstarRecStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length excluding the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t astar_rec_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *astar_rec_version(void);

// Gaussian target `N(target_mean, target_variance)` against a Gaussian proposal.
//
// # Safety
// `out_pair` must be a valid pointer; the handle written there must be released
// with [`astar_rec_pair_free`].
AstarRecStatus astar_rec_pair_gaussian(double target_mean,
                                       double target_variance,
                                       double proposal_mean,
                                       double proposal_variance,
                                       struct AstarRecPair **out_pair);

// Uniform target of the given centre and width inside a uniform proposal.
//
// # Safety
// As for [`astar_rec_pair_gaussian`].
AstarRecStatus astar_rec_pair_uniform(double target_center,
                                      double target_width,
                                      double proposal_center,
                                      double proposal_width,
                                      struct AstarRecPair **out_pair);

// Any pair, from the JSON form `{"target": {...}, "proposal": {...}}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out_pair` as for
// [`astar_rec_pair_gaussian`].
AstarRecStatus astar_rec_pair_from_json(const char *json, struct AstarRecPair **out_pair);

// Releases a pair handle. Null is ignored.
//
// # Safety
// `pair` must come from an `astar_rec_pair_*` constructor and not be used again.
void astar_rec_pair_free(struct AstarRecPair *pair);

// `KL(Q || P)` in nats.
//
// # Safety
// `pair` must be a live handle and `out_kl` a valid pointer.
AstarRecStatus astar_rec_pair_kl(const struct AstarRecPair *pair, double *out_kl);

// `D_inf(Q || P)` in nats (may be infinite).
//
// # Safety
// `pair` must be a live handle and `out_dinf` a valid pointer.
AstarRecStatus astar_rec_pair_dinf(const struct AstarRecPair *pair, double *out_dinf);

// Encodes one target sample.
//
// `variant` is an [`AstarRecVariant`]. `param` is the bit budget for DAD* and MRC, the step limit for PFR (0 for the
// default) and ignored for AS* and AD*. `out_stats` may be null.
//
// # Safety
// `pair` must be a live handle; `out_code` and `out_sample` valid pointers.
AstarRecStatus astar_rec_encode(const struct AstarRecPair *pair,
                                uint32_t variant,
                                uint64_t param,
                                uint64_t seed,
                                struct AstarRecCode *out_code,
                                double *out_sample,
                                struct AstarRecStats *out_stats);

// Recovers the sample of `code` using the pair's proposal and the shared seed.
//
// # Safety
// `pair` must be a live handle; `code` and `out_sample` valid pointers.
AstarRecStatus astar_rec_decode(const struct AstarRecPair *pair,
                                const struct AstarRecCode *code,
                                uint64_t seed,
                                double *out_sample);

// Serializes `n` codes of one variant into a message.
//
// DAD* and MRC codes must share a budget and are written as one block; the
// other variants use per-symbol framing. `out_len` receives the required size
// even when `cap` is too small (then `ASTAR_REC_STATUS_BUFFER_TOO_SMALL`).
//
// # Safety
// `codes` must point to `n` codes; `buf` to `cap` writable bytes (or be null
// when `cap` is 0); `out_len` valid.
AstarRecStatus astar_rec_message_pack(const struct AstarRecCode *codes,
                                      size_t n,
                                      uint8_t *buf,
                                      size_t cap,
                                      size_t *out_len);

// Parses a message into codes. `out_n` receives the number of codes even
// when `cap` is too small.
//
// # Safety
// `bytes` must point to `len` readable bytes; `out_codes` to `cap` writable
// codes (or be null when `cap` is 0); `out_n` valid.
AstarRecStatus astar_rec_message_unpack(const uint8_t *bytes,
                                        size_t len,
                                        struct AstarRecCode *out_codes,
                                        size_t cap,
                                        size_t *out_n);

// Principal branch of the Lambert W function, for `x >= -1/e`.
//
// # Safety
// `out_w` must be a valid pointer.
AstarRecStatus astar_rec_lambert_w0(double x, double *out_w);

// Target variance with the given mean and KL `kappa` (nats) against `N(nu, rho^2)`.
//
// # Safety
// `out_variance` must be a valid pointer.
AstarRecStatus astar_rec_gaussian_from_mean_kl(double nu,
                                               double rho,
                                               double mu,
                                               double kappa,
                                               double *out_variance);

// Gaussian target against `N(0, 1)` with KL `k` and `D_inf` `r` (nats).
// Writes the absolute mean and the variance.
//
// # Safety
// `out_mean` and `out_variance` must be valid pointers.
AstarRecStatus astar_rec_gaussian_from_kl_dinf(double k,
                                               double r,
                                               double *out_mean,
                                               double *out_variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASTAR_REC_H */
