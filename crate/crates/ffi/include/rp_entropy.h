#ifndef RP_ENTROPY_H
#define RP_ENTROPY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum RpStatus {
  RP_STATUS_OK = 0,
  RP_STATUS_NULL_POINTER = 1,
  // Bad shape, index, domain or state.
  RP_STATUS_INVALID_ARGUMENT = 2,
  // Malformed or inconsistent configuration.
  RP_STATUS_CONFIG = 3,
  // The numerics broke down.
  RP_STATUS_NUMERICS = 4,
  // A Rust panic was caught at the boundary.
  RP_STATUS_PANIC = 5,
} RpStatus;

// Result of a harness run.
typedef struct RpReport RpReport;

// A full-rank state on `H₁`, its canonical purification and a list of
// subsystem splits.
typedef struct RpState RpState;

// Summary of a positive-semidefiniteness check.
typedef struct RpPsd {
  bool passed;
  double min_eigenvalue;
  double spectral_norm;
  // `min_eigenvalue / spectral_norm`.
  double relative_slack;
} RpPsd;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rp_version(void);

// Copies the last error message of this thread into `buf` (truncated,
// always NUL-terminated when `len > 0`). Returns the buffer size needed for
// the whole message including the NUL, or 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t rp_last_error(char *buf, size_t len);

// Builds a state from a `dim x dim` density matrix given as row-major real
// and imaginary parts. `im` may be null for a real matrix.
//
// # Safety
// `re` (and `im` when non-null) must hold `dim * dim` doubles; `out` must be
// writable.
enum RpStatus rp_state_from_density(size_t dim,
                                    const double *re,
                                    const double *im,
                                    struct RpState **out);

// Random full-rank state: flat-Dirichlet spectrum with eigenvalues at least
// `spectrum_floor`, Haar eigenvectors. The same seed gives the same state.
//
// # Safety
// `out` must be writable.
enum RpStatus rp_state_random(size_t dim,
                              uint64_t seed,
                              double spectrum_floor,
                              struct RpState **out);

// # Safety
// `state` must be null or a handle from this library not yet freed.
void rp_state_free(struct RpState *state);

// Dimension of `H₁`, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
size_t rp_state_dim(const struct RpState *state);

// # Safety
// `state` must be null or a live handle.
size_t rp_state_split_count(const struct RpState *state);

// Appends the computational-basis split `H₁ = H_A ⊗ H_B`.
//
// # Safety
// `state` must be a live handle.
enum RpStatus rp_state_add_axis_split(struct RpState *state, size_t dim_a, size_t dim_b);

// Appends a split with a Haar-random frame, seeded by `seed` and the split
// position.
//
// # Safety
// `state` must be a live handle.
enum RpStatus rp_state_add_random_split(struct RpState *state,
                                        size_t dim_a,
                                        size_t dim_b,
                                        uint64_t seed);

// Renyi entropy `S_n(A_i)` of split `split`; `n = 1` is von Neumann.
//
// # Safety
// `state` must be a live handle and `out` writable.
enum RpStatus rp_state_entropy(const struct RpState *state, size_t split, uint32_t n, double *out);

// Renyi entropy of the reflected density `ρ_{A_i Ā_j}`; `n = 1` is von
// Neumann.
//
// # Safety
// `state` must be a live handle and `out` writable.
enum RpStatus rp_reflected_entropy(const struct RpState *state,
                                   size_t i,
                                   size_t j,
                                   uint32_t n,
                                   double *out);

// Gram matrix `e^{−λ S_n(A_i Ā_j)}` over all splits of `state`, written
// row-major to `entries` (`out_len` must be at least `count²`). A NaN
// `lambda` selects `λ = n − 1`. `verdict` may be null.
//
// # Safety
// `state` must be a live handle, `entries` must hold `out_len` doubles and
// `verdict` must be null or writable.
enum RpStatus rp_gram(const struct RpState *state,
                      uint32_t n,
                      double lambda,
                      double tolerance,
                      double *entries,
                      size_t out_len,
                      struct RpPsd *verdict);

// PSD check of a symmetric `size x size` matrix: passes when the smallest
// eigenvalue is at least `−tolerance·‖M‖₂` and so are the leading minors
// at their scale.
//
// # Safety
// `entries` must hold `size * size` doubles and `out` must be writable.
enum RpStatus rp_check_psd(const double *entries, size_t size, double tolerance, struct RpPsd *out);

// Renyi entropy of `p` free-fermion intervals given as `2p` increasing
// endpoints `a_1, b_1, …`. `n = 1` is the entanglement entropy and
// `n = INFINITY` is allowed.
//
// # Safety
// `endpoints` must hold `2 * p` doubles and `out` must be writable.
enum RpStatus rp_fermion_renyi(const double *endpoints,
                               size_t p,
                               double cutoff,
                               double n,
                               double *out);

// Cross ratio of intervals `(a1, b1)` and `(a2, b2)`.
//
// # Safety
// `out` must be writable.
enum RpStatus rp_cft_cross_ratio(double a1, double b1, double a2, double b2, double *out);

// The point `z(x, y)` of the midpoint inequality.
//
// # Safety
// `out` must be writable.
enum RpStatus rp_cft_z_point(double x, double y, double *out);

// Runs a harness command (`gram-sweep`, `search`, `fermion`, `kl` or
// `cft`) with a JSON config (null for defaults) on `jobs` threads (0 for
// all cores). A completed run returns `RP_STATUS_OK` even if its checks
// fail; see [`rp_report_exit_code`]. Nothing is written to disk.
//
// # Safety
// `command` must be a NUL-terminated string, `config_json` null or one,
// and `out` writable.
enum RpStatus rp_run(const char *command,
                     const char *config_json,
                     size_t jobs,
                     struct RpReport **out);

// The JSON report; valid until the handle is freed. Null for a null handle.
//
// # Safety
// `report` must be null or a live handle.
const char *rp_report_json(const struct RpReport *report);

// Process exit code the command-line tool would return (0 pass, 2 failed
// check, 3 control counterexample); -1 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
int32_t rp_report_exit_code(const struct RpReport *report);

// # Safety
// `report` must be null or a live handle.
bool rp_report_passed(const struct RpReport *report);

// # Safety
// `report` must be null or a live handle.
size_t rp_report_table_count(const struct RpReport *report);

// Name of table `index`, or null when out of range.
//
// # Safety
// `report` must be null or a live handle.
const char *rp_report_table_name(const struct RpReport *report, size_t index);

// CSV text of table `index`, or null when out of range.
//
// # Safety
// `report` must be null or a live handle.
const char *rp_report_table_csv(const struct RpReport *report, size_t index);

// # Safety
// `report` must be null or a handle from [`rp_run`] not yet freed.
void rp_report_free(struct RpReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RP_ENTROPY_H */
