#include "rxsolve/rxsolve.h"

#include <cstring>
#include <string>
#include <vector>

#include "rxsolve/errors.hpp"
#include "rxsolve/harness.hpp"
#include "rxsolve/rx_sampler.hpp"
#include "rxsolve/sde_bridge.hpp"
#include "rxsolve/time_grid.hpp"
#include "rxsolve/vector_field.hpp"

#ifndef RXSOLVE_VERSION_STRING
#define RXSOLVE_VERSION_STRING "0.0.0"
#endif

struct rx_grid {
  rx::TimeGrid grid;
};

struct rx_field {
  rx::VectorField field;
};

namespace {

thread_local std::string g_last_error;

rx_status status_from_code(rx::ErrorCode code) {
  switch (code) {
    case rx::ErrorCode::invalid_argument:
      return RX_ERR_INVALID;
    case rx::ErrorCode::unsupported:
      return RX_ERR_UNSUPPORTED;
    case rx::ErrorCode::numerical_failure:
      return RX_ERR_NUMERIC;
    case rx::ErrorCode::parse_error:
      return RX_ERR_PARSE;
    case rx::ErrorCode::internal:
      return RX_ERR_INTERNAL;
  }
  return RX_ERR_INTERNAL;
}

// Runs the body, translating exceptions into status codes + thread-local
// message. Success clears the message.
template <typename Fn>
rx_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return RX_OK;
  } catch (const rx::Error& e) {
    g_last_error = e.what();
    return status_from_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RX_ERR_INTERNAL;
  }
}

rx_status fail_invalid(const char* message) {
  g_last_error = message;
  return RX_ERR_INVALID;
}

char* copy_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* rx_version(void) { return RXSOLVE_VERSION_STRING; }

const char* rx_last_error(void) { return g_last_error.c_str(); }

void rx_string_free(char* s) { delete[] s; }

/* --- grids ----------------------------------------------------------------- */

rx_status rx_grid_uniform(double T, int N, rx_grid** out) {
  if (!out) return fail_invalid("rx_grid_uniform: out must not be null");
  return guarded([&] { *out = new rx_grid{rx::build_uniform_grid(T, N)}; });
}

rx_status rx_grid_power(double T, double t_min, int N, double rho, rx_grid** out) {
  if (!out) return fail_invalid("rx_grid_power: out must not be null");
  return guarded([&] { *out = new rx_grid{rx::build_power_grid(T, t_min, N, rho)}; });
}

rx_status rx_grid_staggered(double T, int N, double ratio, rx_grid** out) {
  if (!out) return fail_invalid("rx_grid_staggered: out must not be null");
  return guarded([&] { *out = new rx_grid{rx::build_staggered_grid(T, N, ratio)}; });
}

rx_status rx_grid_from_json(const char* json_text, rx_grid** out) {
  if (!out || !json_text) return fail_invalid("rx_grid_from_json: null argument");
  return guarded([&] { *out = new rx_grid{rx::grid_from_json(json_text)}; });
}

rx_status rx_grid_to_json(const rx_grid* grid, char** out) {
  if (!grid || !out) return fail_invalid("rx_grid_to_json: null argument");
  return guarded([&] { *out = copy_string(rx::grid_to_json(grid->grid)); });
}

int rx_grid_points(const rx_grid* grid) {
  if (!grid) return -1;
  return static_cast<int>(grid->grid.times.size());
}

rx_status rx_grid_times(const rx_grid* grid, double* out, int capacity) {
  if (!grid || !out) return fail_invalid("rx_grid_times: null argument");
  if (capacity < static_cast<int>(grid->grid.times.size()))
    return fail_invalid("rx_grid_times: capacity smaller than point count");
  return guarded([&] {
    std::memcpy(out, grid->grid.times.data(), grid->grid.times.size() * sizeof(double));
  });
}

void rx_grid_free(rx_grid* grid) { delete grid; }

/* --- fields ---------------------------------------------------------------- */

rx_status rx_field_gaussian_flow(int dim, rx_field** out) {
  if (!out) return fail_invalid("rx_field_gaussian_flow: out must not be null");
  return guarded([&] { *out = new rx_field{rx::gaussian_flow_field(dim)}; });
}

rx_status rx_field_gaussian_mixture(int dim, const double* means, int n_components,
                                    const double* weights, rx_field** out) {
  if (!out || !means) return fail_invalid("rx_field_gaussian_mixture: null argument");
  if (dim < 1 || n_components < 1)
    return fail_invalid("rx_field_gaussian_mixture: dim and n_components must be >= 1");
  return guarded([&] {
    std::vector<std::vector<double>> mean_vecs(static_cast<std::size_t>(n_components));
    for (int m = 0; m < n_components; ++m) {
      mean_vecs[static_cast<std::size_t>(m)].assign(means + static_cast<std::size_t>(m) * dim,
                                                    means + static_cast<std::size_t>(m + 1) * dim);
    }
    std::vector<double> weight_vec;
    if (weights) {
      weight_vec.assign(weights, weights + n_components);
    } else {
      weight_vec.assign(static_cast<std::size_t>(n_components),
                        1.0 / static_cast<double>(n_components));
    }
    *out = new rx_field{rx::gaussian_mixture_field(dim, mean_vecs, weight_vec)};
  });
}

rx_status rx_field_ddim_gamma(int dim, rx_field** out) {
  if (!out) return fail_invalid("rx_field_ddim_gamma: out must not be null");
  return guarded([&] { *out = new rx_field{rx::ddim_gamma_field(dim)}; });
}

rx_status rx_field_constant(int dim, const double* value, rx_field** out) {
  if (!out || !value) return fail_invalid("rx_field_constant: null argument");
  if (dim < 1) return fail_invalid("rx_field_constant: dim must be >= 1");
  return guarded([&] {
    *out = new rx_field{rx::constant_field(dim, std::vector<double>(value, value + dim))};
  });
}

int rx_field_dim(const rx_field* field) {
  if (!field) return -1;
  return field->field.dim;
}

rx_status rx_field_eval(const rx_field* field, const double* x, double t, double* out) {
  if (!field || !x || !out) return fail_invalid("rx_field_eval: null argument");
  return guarded([&] {
    std::span<const double> xin(x, static_cast<std::size_t>(field->field.dim));
    std::span<double> xout(out, static_cast<std::size_t>(field->field.dim));
    field->field.eval(xin, t, xout);
  });
}

rx_status rx_reference_endpoint(const rx_field* field, const double* x, double t_start,
                                double t_end, int finest_hint, double* out) {
  if (!field || !x || !out) return fail_invalid("rx_reference_endpoint: null argument");
  return guarded([&] {
    std::span<const double> xin(x, static_cast<std::size_t>(field->field.dim));
    std::vector<double> result =
        rx::reference_endpoint(field->field, xin, t_start, t_end, finest_hint > 0 ? finest_hint : 1);
    std::memcpy(out, result.data(), result.size() * sizeof(double));
  });
}

void rx_field_free(rx_field* field) { delete field; }

/* --- sampling -------------------------------------------------------------- */

rx_status rx_sample(const rx_field* field, const rx_grid* grid, const char* solver_json,
                    const char* rx_json, const char* stochastic_json, const double* x_init,
                    double* endpoint_out, uint64_t* nfe_out, char** report_json_out) {
  if (!field || !grid || !solver_json || !x_init || !endpoint_out)
    return fail_invalid("rx_sample: null argument");
  return guarded([&] {
    const rx::StepperSpec stepper = rx::solver_from_json(solver_json);
    const rx::RxConfig config =
        rx::rx_config_from_json(rx_json ? rx_json : "{}", grid->grid);
    std::span<const double> x0(x_init, static_cast<std::size_t>(field->field.dim));

    rx::StochasticSampleResult result;
    if (stochastic_json) {
      const rx::StochasticConfig stoch = rx::stochastic_from_json(stochastic_json);
      result = rx::sample_stochastic(field->field, grid->grid, stepper, config, stoch, x0);
    } else {
      rx::SampleResult det = rx::sample(field->field, grid->grid, stepper, config, x0);
      result.endpoint = std::move(det.endpoint);
      result.nfe = det.nfe;
      result.blocks = std::move(det.blocks);
      result.bootstrap_steps = det.bootstrap_steps;
    }

    std::memcpy(endpoint_out, result.endpoint.data(), result.endpoint.size() * sizeof(double));
    if (nfe_out) *nfe_out = result.nfe;
    if (report_json_out) *report_json_out = copy_string(rx::trajectory_report_json(result));
  });
}

/* --- harness ---------------------------------------------------------------- */

rx_status rx_run_command(const char* command, const char* config_json, const char* format,
                         uint64_t seed_override, int has_seed_override, char** report_out) {
  if (!command || !config_json || !report_out)
    return fail_invalid("rx_run_command: null argument");
  return guarded([&] {
    const std::uint64_t seed = seed_override;
    std::string report =
        rx::run_command(command, config_json, format ? format : "json",
                        has_seed_override ? &seed : nullptr);
    *report_out = copy_string(report);
  });
}

} /* extern "C" */
