#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rxsolve/rx_sampler.hpp"
#include "rxsolve/sde_bridge.hpp"

namespace rx {

// A reproducible batch of trajectories: seeded initial states drawn from the
// noise-end marginal N(0, (1 + T^2) I) plus their per-trajectory reference
// endpoints. Built once and shared across every method/N of an experiment so
// comparisons always see the same inputs (and expensive oracles are computed
// once).
struct TrajectorySet {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<std::vector<double>> x_init;
  std::vector<std::vector<double>> oracle;
};

TrajectorySet make_trajectory_set(const VectorField& field, double t_start, double t_end,
                                  int batch, std::uint64_t seed, int oracle_hint);

// Per-trajectory substream seed and the initial draw it produces (exposed for
// reproducibility tests).
std::vector<double> draw_initial_state(int dim, double t_start, std::uint64_t trajectory_seed);

struct BatchOutcome {
  double mean_error = 0.0;  // mean over the batch of ||endpoint - oracle||_2
  std::uint64_t nfe = 0;    // per-trajectory evaluation count (identical across the batch)
  StochasticSampleResult trajectory0;  // full diagnostics of the first trajectory
};

BatchOutcome run_batch(const VectorField& field, const TimeGrid& grid,
                       const StepperSpec& stepper, const RxConfig& config,
                       const std::optional<StochasticConfig>& stochastic,
                       const TrajectorySet& set);

// Ordinary least squares on log(error) vs log(N). order = -slope. When every
// error sits at (or below) floating-point noise the fit is meaningless and
// below_floor is set instead.
struct OrderFit {
  bool below_floor = false;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  double order() const { return -slope; }
};

OrderFit fit_order(const std::vector<int>& ladder, const std::vector<double>& errors);

// Config-driven entry point behind the CLI. command is one of
// solve | order | compare | hybrid; config_json the experiment description;
// format "json" or "csv". seed_override, when non-null, replaces the config's
// master seed. Returns the rendered report; failures throw rx::Error.
std::string run_command(const std::string& command, const std::string& config_json,
                        const std::string& format = "json",
                        const std::uint64_t* seed_override = nullptr);

// JSON-snippet parsers shared with the C surface (throw rx::Error on bad
// input). rx_config_from_json resolves the mask spec against the grid's
// block count, so the returned config is ready to run.
StepperSpec solver_from_json(const std::string& json_text);
RxConfig rx_config_from_json(const std::string& json_text, const TimeGrid& grid);
StochasticConfig stochastic_from_json(const std::string& json_text);

// {nfe, endpoint, per_block: [...], noise?: [...]} for one trajectory.
std::string trajectory_report_json(const StochasticSampleResult& trajectory);

}  // namespace rx
