#include "rxsolve/time_grid.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "rxsolve/errors.hpp"

namespace rx {

void TimeGrid::validate() const {
  if (times.size() < 2) throw_invalid("time grid needs at least 2 points");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) throw_invalid("time grid contains a non-finite value");
    if (i + 1 < times.size() && !(times[i] > times[i + 1]))
      throw_invalid("time grid must be strictly decreasing");
  }
  if (times.back() < 0.0) throw_invalid("time grid must stay nonnegative");
}

TimeGrid build_uniform_grid(double T, int N) {
  if (!(T > 0.0)) throw_invalid("uniform grid: T must be positive");
  if (N < 1) throw_invalid("uniform grid: N must be >= 1");
  TimeGrid grid;
  grid.times.resize(static_cast<std::size_t>(N) + 1);
  for (int i = 0; i <= N; ++i)
    grid.times[static_cast<std::size_t>(i)] = T * static_cast<double>(N - i) / N;
  grid.validate();
  return grid;
}

TimeGrid build_power_grid(double T, double t_min, int N, double rho) {
  if (!(T > t_min) || t_min < 0.0) throw_invalid("power grid: need T > t_min >= 0");
  if (N < 1) throw_invalid("power grid: N must be >= 1");
  if (rho < 1.0) throw_invalid("power grid: rho must be >= 1");
  const double a = std::pow(t_min, 1.0 / rho);
  const double b = std::pow(T, 1.0 / rho);
  TimeGrid grid;
  grid.times.resize(static_cast<std::size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) {
    const double u = static_cast<double>(N - i) / N;
    grid.times[static_cast<std::size_t>(i)] = std::pow(a + u * (b - a), rho);
  }
  grid.times.front() = T;
  grid.times.back() = t_min;  // pin endpoints exactly (pow round-trip drift)
  grid.validate();
  return grid;
}

TimeGrid build_staggered_grid(double T, int N, double ratio) {
  if (!(T > 0.0)) throw_invalid("staggered grid: T must be positive");
  if (N < 2 || N % 2 != 0) throw_invalid("staggered grid: N must be even and >= 2");
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw_invalid("staggered grid: ratio must be positive and finite");
  TimeGrid grid;
  grid.times.reserve(static_cast<std::size_t>(N) + 1);
  const double span = 2.0 * T / N;           // width of one pair of steps
  const double first = ratio / (ratio + 1.0);  // fraction taken by the pair's first step
  for (int m = 0; m < N / 2; ++m) {
    const double top = T - m * span;
    grid.times.push_back(top);
    grid.times.push_back(top - span * first);
  }
  grid.times.push_back(0.0);
  grid.validate();
  return grid;
}

TimeGrid to_gamma_grid(const std::vector<double>& alphas) {
  if (alphas.size() < 2) throw_invalid("gamma grid: need at least 2 alpha values");
  TimeGrid grid;
  grid.kind = VariableKind::ddim_gamma;
  grid.times.reserve(alphas.size());
  double prev = -1.0;
  for (double alpha : alphas) {
    if (!(alpha > 0.0) || alpha > 1.0) throw_invalid("gamma grid: alphas must lie in (0, 1]");
    if (!(alpha > prev)) throw_invalid("gamma grid: alphas must be strictly increasing");
    prev = alpha;
    grid.times.push_back(std::sqrt((1.0 - alpha * alpha) / (alpha * alpha)));
  }
  if (alphas.back() == 1.0) grid.times.back() = 0.0;  // exact data endpoint
  grid.validate();
  return grid;
}

std::vector<double> alphas_from_gamma_grid(const TimeGrid& gamma_grid) {
  std::vector<double> alphas;
  alphas.reserve(gamma_grid.times.size());
  for (double g : gamma_grid.times) alphas.push_back(1.0 / std::sqrt(1.0 + g * g));
  return alphas;
}

Block compute_lambdas(const TimeGrid& grid, std::size_t start_step, int k) {
  if (k < 1) throw_invalid("compute_lambdas: k must be >= 1");
  if (start_step + static_cast<std::size_t>(k) >= grid.times.size())
    throw_invalid("compute_lambdas: block runs off the end of the grid");
  Block block;
  block.start_step = start_step;
  block.k = k;
  block.h = grid.times[start_step] - grid.times[start_step + static_cast<std::size_t>(k)];
  block.lambdas.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const std::size_t s = start_step + static_cast<std::size_t>(j);
    block.lambdas[static_cast<std::size_t>(j)] = (grid.times[s] - grid.times[s + 1]) / block.h;
  }
  return block;
}

BlockSchedule partition_blocks(const TimeGrid& grid, int k, TailPolicy tail_policy,
                               const std::optional<std::vector<bool>>& method_mask) {
  grid.validate();
  if (k < 2) throw_invalid("partition_blocks: k must be >= 2 (a 1-step block has nothing to extrapolate against)");
  const std::size_t N = grid.n_steps();
  BlockSchedule schedule;
  schedule.tail_policy = tail_policy;

  std::size_t step = 0;
  while (step < N) {
    const std::size_t remaining = N - step;
    const int block_k = remaining >= static_cast<std::size_t>(k)
                            ? k
                            : static_cast<int>(remaining);
    Block block = compute_lambdas(grid, step, block_k);
    if (block_k == k) {
      block.extrapolate = true;
    } else {
      block.extrapolate =
          tail_policy == TailPolicy::adjust_k && block_k >= 2;
    }
    schedule.blocks.push_back(std::move(block));
    step += static_cast<std::size_t>(block_k);
  }

  if (method_mask) {
    if (method_mask->size() != schedule.blocks.size())
      throw_invalid("method mask length must equal the number of blocks (" +
                    std::to_string(schedule.blocks.size()) + ")");
    for (std::size_t b = 0; b < schedule.blocks.size(); ++b)
      schedule.blocks[b].extrapolate = schedule.blocks[b].extrapolate && (*method_mask)[b];
  }
  return schedule;
}

const char* variable_kind_name(VariableKind kind) {
  return kind == VariableKind::physical_t ? "physical_t" : "ddim_gamma";
}

std::string grid_to_json(const TimeGrid& grid) {
  nlohmann::ordered_json doc;
  doc["times"] = grid.times;
  doc["variable_kind"] = variable_kind_name(grid.kind);
  return doc.dump();
}

TimeGrid grid_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw_parse(std::string("grid JSON: ") + e.what());
  }
  TimeGrid grid;
  try {
    doc.at("times").get_to(grid.times);
    const std::string kind = doc.value("variable_kind", "physical_t");
    if (kind == "physical_t")
      grid.kind = VariableKind::physical_t;
    else if (kind == "ddim_gamma")
      grid.kind = VariableKind::ddim_gamma;
    else
      throw_invalid("grid JSON: unknown variable_kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw_parse(std::string("grid JSON: ") + e.what());
  }
  grid.validate();
  return grid;
}

}  // namespace rx
