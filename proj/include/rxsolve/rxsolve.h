/* C interface of the rxsolve shared library.
 *
 * Conventions:
 *   - Every fallible function returns an rx_status; RX_OK (0) means success.
 *   - On failure a thread-local message is available via rx_last_error().
 *   - Output handles/strings are owned by the caller: handles are released
 *     with their *_free function, strings with rx_string_free.
 *   - All arrays are plain double buffers sized by the associated dim/count.
 */
#ifndef RXSOLVE_H
#define RXSOLVE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rx_status {
  RX_OK = 0,
  RX_ERR_INVALID = 1,     /* invalid argument or configuration */
  RX_ERR_UNSUPPORTED = 2, /* requested operation outside supported scope */
  RX_ERR_NUMERIC = 3,     /* numerical failure (non-finite state, failed self-check) */
  RX_ERR_PARSE = 4,       /* malformed JSON input */
  RX_ERR_INTERNAL = 5     /* invariant violation inside the library */
} rx_status;

/* Library version string (static storage; do not free). */
const char* rx_version(void);

/* Message describing the most recent failure on this thread ("" if none). */
const char* rx_last_error(void);

/* Releases strings returned through char** out-parameters. */
void rx_string_free(char* s);

/* --- time grids ---------------------------------------------------------- */

typedef struct rx_grid rx_grid;

rx_status rx_grid_uniform(double T, int N, rx_grid** out);
rx_status rx_grid_power(double T, double t_min, int N, double rho, rx_grid** out);
rx_status rx_grid_staggered(double T, int N, double ratio, rx_grid** out);
/* {"times": [...descending...], "variable_kind": "physical_t"|"ddim_gamma"} */
rx_status rx_grid_from_json(const char* json_text, rx_grid** out);
rx_status rx_grid_to_json(const rx_grid* grid, char** out);
/* Number of grid points (= steps + 1); negative on null handle. */
int rx_grid_points(const rx_grid* grid);
/* Copies the descending grid points into out (capacity >= rx_grid_points). */
rx_status rx_grid_times(const rx_grid* grid, double* out, int capacity);
void rx_grid_free(rx_grid* grid);

/* --- vector fields -------------------------------------------------------- */

typedef struct rx_field rx_field;

rx_status rx_field_gaussian_flow(int dim, rx_field** out);
/* means: row-major [n_components x dim]; weights: length n_components
 * (NULL = equal weights). */
rx_status rx_field_gaussian_mixture(int dim, const double* means, int n_components,
                                    const double* weights, rx_field** out);
rx_status rx_field_ddim_gamma(int dim, rx_field** out);
rx_status rx_field_constant(int dim, const double* value, rx_field** out);
/* Field dimension; negative on null handle. */
int rx_field_dim(const rx_field* field);
rx_status rx_field_eval(const rx_field* field, const double* x, double t, double* out);
/* Reference endpoint (closed form when available, self-checked fine RK4
 * otherwise). finest_hint scales the internal RK4 resolution; pass the largest
 * step count you will compare against, or 0 for the default. */
rx_status rx_reference_endpoint(const rx_field* field, const double* x, double t_start,
                                double t_end, int finest_hint, double* out);
void rx_field_free(rx_field* field);

/* --- sampling -------------------------------------------------------------- */

/* Runs one trajectory from x_init (length = field dim) across the grid.
 *
 *   solver_json     {"type":"euler"|"heun"|"rk2"|"ab", ...params}
 *   rx_json         {"k":2,"mode":"rx_grid_aware"|"naive_richardson"|
 *                    "baseline_only","p":0,"tail_policy":"skip"|"adjust",
 *                    "mask":"all"|"none"|"last:m"|"middle:m"|[bools]}
 *                    (NULL = defaults)
 *   stochastic_json {"eta":0.5,"seed":7} or NULL for deterministic sampling
 *   endpoint_out    buffer of length field dim
 *   nfe_out         total field evaluations (may be NULL)
 *   report_json_out per-block diagnostics {nfe, endpoint, per_block:[...]}
 *                    (may be NULL when not wanted)
 */
rx_status rx_sample(const rx_field* field, const rx_grid* grid, const char* solver_json,
                    const char* rx_json, const char* stochastic_json, const double* x_init,
                    double* endpoint_out, uint64_t* nfe_out, char** report_json_out);

/* --- experiment harness ----------------------------------------------------- */

/* Config-driven experiments: command is "solve", "order", "compare" or
 * "hybrid"; config_json the experiment description; format "json" or "csv".
 * When has_seed_override is nonzero, seed_override replaces the config seed.
 * On success *report_out receives the rendered report. */
rx_status rx_run_command(const char* command, const char* config_json, const char* format,
                         uint64_t seed_override, int has_seed_override, char** report_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* RXSOLVE_H */
