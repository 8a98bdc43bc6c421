#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace rx {

// Which variable the grid (and therefore every step-size ratio) lives in.
// physical_t: the sampler steps in model time t.
// ddim_gamma: the sampler steps in the reparameterized noise level
//             gamma = sqrt((1 - alpha^2) / alpha^2) of a variance-preserving
//             schedule; see to_gamma_grid.
enum class VariableKind { physical_t, ddim_gamma };

// Strictly decreasing discretization t_N > t_{N-1} > ... > t_0 >= 0 stored
// noise-end first: times[0] is the start of sampling, times.back() the end.
struct TimeGrid {
  std::vector<double> times;
  VariableKind kind = VariableKind::physical_t;

  std::size_t n_steps() const { return times.empty() ? 0 : times.size() - 1; }
  double start() const { return times.front(); }
  double end() const { return times.back(); }

  // Throws ErrorCode::invalid_argument unless strictly decreasing, finite,
  // length >= 2, and nonnegative.
  void validate() const;
};

// One extrapolation block: `k` consecutive fine steps starting at step index
// `start_step` (so it covers times[start_step] ... times[start_step + k]).
// h is the block width and lambdas the normalized step fractions
// lambda_j = (times[start_step + j] - times[start_step + j + 1]) / h,
// which sum to 1 and drive the grid-aware extrapolation coefficients.
struct Block {
  std::size_t start_step = 0;
  int k = 0;
  double h = 0.0;
  std::vector<double> lambdas;
  bool extrapolate = false;  // structural eligibility combined with the mask
};

enum class TailPolicy { skip_extrapolation, adjust_k };

struct BlockSchedule {
  std::vector<Block> blocks;
  TailPolicy tail_policy = TailPolicy::skip_extrapolation;
};

// --- builders -------------------------------------------------------------

// times[i] = T * (N - i) / N  (descending from T to 0).
TimeGrid build_uniform_grid(double T, int N);

// times follow the rho-warped ramp
//   (t_min^(1/rho) + (i/N) * (T^(1/rho) - t_min^(1/rho)))^rho
// descending from T to t_min; t_min = 0 is pinned exactly at the end.
// rho = 1 reduces to the uniform grid; larger rho concentrates points at the
// low-noise end.
TimeGrid build_power_grid(double T, double t_min, int N, double rho);

// Pairs of steps with a fixed intra-pair length ratio `ratio : 1`, the pairs
// tiling [0, T] uniformly. N must be even. The ratio of adjacent step sizes
// stays fixed as N grows, unlike any smooth schedule whose steps become
// locally uniform; this makes the grid a robust probe of step-ratio-aware
// algorithms (no accidental error cancellation from local uniformity).
TimeGrid build_staggered_grid(double T, int N, double ratio);

// Map a variance-preserving alpha-schedule (alphas strictly increasing
// toward the data end, all in (0, 1]) to the gamma variable
// gamma = sqrt((1 - alpha^2) / alpha^2). Result is a strictly decreasing
// gamma grid with kind = ddim_gamma.
TimeGrid to_gamma_grid(const std::vector<double>& alphas);

// Inverse of the gamma map for round trips: alpha = 1 / sqrt(1 + gamma^2).
std::vector<double> alphas_from_gamma_grid(const TimeGrid& gamma_grid);

// --- block structure --------------------------------------------------------

// Weights for the block of `k` steps starting at step index `start_step`.
// Throws invalid_argument when the block would run off the grid.
Block compute_lambdas(const TimeGrid& grid, std::size_t start_step, int k);

// Partition all N steps into consecutive blocks of k (k >= 2). A remainder of
// r = N mod k steps forms a final short block: under skip_extrapolation it is
// never extrapolated; under adjust_k it is extrapolated when r >= 2.
// method_mask, when present, must have one entry per block and is ANDed with
// the structural eligibility (true = extrapolate this block).
BlockSchedule partition_blocks(const TimeGrid& grid, int k,
                               TailPolicy tail_policy,
                               const std::optional<std::vector<bool>>& method_mask = std::nullopt);

// --- serialization ----------------------------------------------------------

// JSON object {"times": [descending reals], "variable_kind": "physical_t" |
// "ddim_gamma"}. Parsing validates the grid.
std::string grid_to_json(const TimeGrid& grid);
TimeGrid grid_from_json(const std::string& json_text);

const char* variable_kind_name(VariableKind kind);

}  // namespace rx
