#ifndef KPPSPREAD_H
#define KPPSPREAD_H

/*
 * C API for computing spreading speeds of one-dimensional heterogeneous
 * KPP reaction-diffusion fronts, two independent ways: a generalized
 * principal-eigenvalue (Hamiltonian) formula and direct long-time
 * simulation of the initial-value problem.
 *
 * Conventions:
 *  - All functions returning kpp_status set a per-thread error message
 *    readable via kpp_last_error() on failure.
 *  - Pointers passed as outputs must be non-null unless documented.
 *  - Strings returned through char** are heap-allocated; release them
 *    with kpp_string_free().
 */

#include <stdint.h>

#if defined(_WIN32)
#define KPP_API __declspec(dllexport)
#else
#define KPP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kpp_status {
  KPP_OK = 0,
  KPP_ERR_INVALID_ARGUMENT = 1,
  KPP_ERR_CONFIG = 2,
  KPP_ERR_NUMERICAL = 3,
  KPP_ERR_HYPOTHESIS = 4,
  KPP_ERR_IO = 5,
  KPP_ERR_INTERNAL = 6
} kpp_status;

/* Library version string, e.g. "0.1.0". Static storage; do not free. */
KPP_API const char* kpp_version(void);

/* Message for the most recent failure on the calling thread ("" when none).
 * The pointer stays valid until the next API call on the same thread. */
KPP_API const char* kpp_last_error(void);

/* Opaque handle to a medium: diffusion a(x), drift q(x) and a monostable
 * reaction f(x, u) with linearization c(x). */
typedef struct kpp_medium kpp_medium;

/* Create a medium from a shipped preset name (see kpp_list_presets). */
KPP_API kpp_status kpp_medium_create_preset(const char* preset, kpp_medium** out);

/* Create a medium from a JSON description, e.g.
 *   {"type":"homogeneous","a0":1.0,"q0":0.0,"c0":1.0}
 *   {"type":"periodic","period":1.0,"c_modes":[[0.5,1,0.0]]}
 * Unknown keys and malformed values are config errors. */
KPP_API kpp_status kpp_medium_create_json(const char* medium_json, kpp_medium** out);

KPP_API void kpp_medium_free(kpp_medium* m);

/* Evaluate the coefficients at x. Output pointers may individually be null. */
KPP_API kpp_status kpp_medium_eval(const kpp_medium* m, double x, double* a, double* q,
                                   double* c);

/* Evaluate the reaction f(x, u). */
KPP_API kpp_status kpp_medium_reaction(const kpp_medium* m, double x, double u, double* f);

/* Sample the standing hypotheses (monostability, linear bound f <= c u,
 * uniform ellipticity, positive monostability margin) on [x_lo, x_hi] at
 * `samples` points. *pass is set to 1 when every check holds, else 0. */
KPP_API kpp_status kpp_medium_validate(const kpp_medium* m, double x_lo, double x_hi,
                                       int samples, int* pass);

/* Lower/upper Hamiltonian values H(p) for the medium at one momentum,
 * computed by the engine appropriate to the medium class. */
KPP_API kpp_status kpp_hamiltonian(const kpp_medium* m, double p, double* H_under,
                                   double* H_over);

/* Spreading-speed bracket from the eigenvalue formula
 * w = min_{p > 0} H(-p) / p, with the bracket coming from lower/upper
 * Hamiltonians. Also reports the minimizing momenta (may be null). */
KPP_API kpp_status kpp_theoretical_speeds(const kpp_medium* m, double* w_under,
                                          double* w_over, double* p_star_under,
                                          double* p_star_over);

/* Direct-simulation bracket: integrates the PDE from an indicator datum to
 * t_final and measures the largest w with sup_{[0,wT]} |u-1| <= delta and the
 * smallest w with sup_{[wT,inf)} u <= delta. A bound that is not attained is
 * reported as NaN. */
KPP_API kpp_status kpp_empirical_speeds(const kpp_medium* m, double t_final, double dx,
                                        double dt, double delta, double* w_star,
                                        double* w_upper);

/* Run the full pipeline (validate -> eigen -> pde -> speed) from a JSON
 * config document; writes manifest.json, speeds.json, hamiltonian.csv,
 * fronts.csv and eigen.csv under the configured output directory.
 * *exit_code receives the process-style verdict: 0 pass, 1 verdict failure,
 * 2 config error, 3 numerical failure. The call itself returns KPP_OK
 * whenever the pipeline ran far enough to produce that verdict. */
KPP_API kpp_status kpp_run_config(const char* config_json, int quiet, int* exit_code);

/* Parameter sweep: one pipeline run per entry of the JSON array
 * `values_json` (each value substituted for `param`), across `workers`
 * threads, plus an aggregate sweep.csv. *exit_code is the worst per-item
 * exit code. */
KPP_API kpp_status kpp_sweep_config(const char* config_json, const char* param,
                                    const char* values_json, int workers, int quiet,
                                    int* exit_code);

/* Newly allocated JSON array of {"name", "description"} preset records. */
KPP_API kpp_status kpp_list_presets(char** out_json);

KPP_API void kpp_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* KPPSPREAD_H */
