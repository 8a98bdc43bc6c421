#include "rxsolve/rx_sampler.hpp"

#include <cmath>
#include <cstdlib>

namespace rx {

namespace {

double int_pow(double base, int exponent) {
  double acc = 1.0;
  for (int i = 0; i < exponent; ++i) acc *= base;
  return acc;
}

// w such that the combination is fine + w * (fine - coarse); the affine
// coefficients (1 + w, -w) always sum to 1, so equal inputs pass through
// bit-identically.
double grid_aware_weight(std::span<const double> lambdas, int p) {
  if (lambdas.empty()) throw_invalid("extrapolate: lambdas must be nonempty");
  if (p < 1) throw_invalid("extrapolate: exponent p must be >= 1");
  double S = 0.0;
  for (double lam : lambdas) S += int_pow(lam, p);
  const double denom = 1.0 - S;
  if (std::abs(denom) <= 1e-9) {
    throw DegenerateExtrapolation(
        "extrapolation denominator 1 - sum(lambda^p) = " + std::to_string(denom) +
        " is within 1e-9 of zero");
  }
  return S / denom;
}

std::vector<double> affine_combine(std::span<const double> fine, std::span<const double> coarse,
                                   double w) {
  if (fine.size() != coarse.size())
    throw_invalid("extrapolation inputs must have equal dimension");
  std::vector<double> out(fine.size());
  for (std::size_t i = 0; i < fine.size(); ++i) out[i] = fine[i] + w * (fine[i] - coarse[i]);
  return out;
}

}  // namespace

const char* rx_mode_name(RxMode mode) {
  switch (mode) {
    case RxMode::baseline_only:
      return "baseline_only";
    case RxMode::rx_grid_aware:
      return "rx_grid_aware";
    case RxMode::naive_richardson:
      return "naive_richardson";
  }
  return "unknown";
}

RxMode rx_mode_from_name(const std::string& name) {
  if (name == "baseline_only" || name == "baseline") return RxMode::baseline_only;
  if (name == "rx_grid_aware" || name == "rx") return RxMode::rx_grid_aware;
  if (name == "naive_richardson" || name == "naive") return RxMode::naive_richardson;
  throw_invalid("unknown extrapolation mode '" + name +
                "' (expected baseline_only, rx_grid_aware or naive_richardson)");
}

std::vector<double> extrapolate(std::span<const double> fine, std::span<const double> coarse,
                                std::span<const double> lambdas, int p) {
  return affine_combine(fine, coarse, grid_aware_weight(lambdas, p));
}

std::vector<double> classical_richardson(std::span<const double> fine,
                                         std::span<const double> coarse, int k, int q) {
  if (k < 2) throw_invalid("classical_richardson: k must be >= 2");
  if (q < 1) throw_invalid("classical_richardson: global order q must be >= 1");
  const double denom = int_pow(static_cast<double>(k), q) - 1.0;
  return affine_combine(fine, coarse, 1.0 / denom);
}

std::vector<double> coarse_step_euler(std::span<const double> x_entry, double t_entry,
                                      double t_exit, std::span<const double> z_entry) {
  const double h = t_exit - t_entry;
  std::vector<double> out(x_entry.size());
  for (std::size_t i = 0; i < x_entry.size(); ++i) out[i] = x_entry[i] + h * z_entry[i];
  return out;
}

std::vector<double> coarse_step_rk2(std::span<const double> x_entry, double t_entry,
                                    double t_exit, const StepperSpec& spec,
                                    std::span<const double> z_entry,
                                    std::span<const double> z_reused) {
  const double h = t_exit - t_entry;
  std::vector<double> out(x_entry.size());
  for (std::size_t i = 0; i < x_entry.size(); ++i) {
    out[i] = x_entry[i] + h * (spec.a1 * z_entry[i] + spec.a2 * z_reused[i]);
  }
  return out;
}

std::size_t select_rk2_reuse(std::span<const EvalRecord> candidates, double target_time) {
  if (candidates.empty()) throw_invalid("select_rk2_reuse: no candidate records");
  std::size_t best = 0;
  double best_dist = std::abs(candidates[0].time - target_time);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double dist = std::abs(candidates[i].time - target_time);
    if (dist < best_dist ||
        (dist == best_dist && candidates[i].time > candidates[best].time)) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

std::vector<double> coarse_step_ab(std::span<const double> x_entry, double t_entry,
                                   double t_exit, const StepperSpec& spec,
                                   std::span<const double> z_entry,
                                   const std::deque<HistoryEntry>& stride_history) {
  if (spec.kind != StepperKind::adams_bashforth)
    throw_invalid("coarse_step_ab requires an adams_bashforth spec");
  if (!ab_history_usable(stride_history, spec.s, t_entry, t_exit))
    throw_invalid("coarse_step_ab: stride history missing or mismatched");
  const double h = t_exit - t_entry;
  std::vector<double> combo(x_entry.size());
  for (std::size_t i = 0; i < x_entry.size(); ++i) combo[i] = spec.b[0] * z_entry[i];
  for (int j = 1; j <= spec.s; ++j) {
    const auto& past = stride_history[static_cast<std::size_t>(j - 1)].value;
    if (past.size() != x_entry.size())
      throw_invalid("coarse_step_ab: stride history dimension mismatch");
    for (std::size_t i = 0; i < x_entry.size(); ++i)
      combo[i] += spec.b[static_cast<std::size_t>(j)] * past[i];
  }
  std::vector<double> out(x_entry.size());
  for (std::size_t i = 0; i < x_entry.size(); ++i) out[i] = x_entry[i] + h * combo[i];
  return out;
}

std::vector<bool> mask_all(std::size_t n_blocks, bool value) {
  return std::vector<bool>(n_blocks, value);
}

std::vector<bool> mask_last(std::size_t n_blocks, std::size_t m) {
  if (m > n_blocks) throw_invalid("mask_last: selects more blocks than exist");
  std::vector<bool> mask(n_blocks, false);
  for (std::size_t i = n_blocks - m; i < n_blocks; ++i) mask[i] = true;
  return mask;
}

std::vector<bool> mask_middle(std::size_t n_blocks, std::size_t m) {
  if (m > n_blocks) throw_invalid("mask_middle: selects more blocks than exist");
  std::vector<bool> mask(n_blocks, false);
  const std::size_t start = (n_blocks - m) / 2;
  for (std::size_t i = start; i < start + m; ++i) mask[i] = true;
  return mask;
}

BlockSampler::BlockSampler(const VectorField& field, const TimeGrid& grid,
                           const StepperSpec& stepper, const RxConfig& config,
                           std::span<const double> x_init)
    : field_(&field), grid_(&grid), stepper_(stepper), config_(config) {
  grid.validate();
  if (static_cast<int>(x_init.size()) != field.dim)
    throw_invalid("sampler: initial state size does not match field dim");
  if (config.p != 0 && config.p < 2)
    throw_invalid("sampler: extrapolation exponent p must be >= 2");
  p_ = config.p != 0 ? config.p : stepper.local_order_p;
  schedule_ = partition_blocks(grid, config.k, config.tail_policy, config.method_mask);
  x_.assign(x_init.begin(), x_init.end());
}

void BlockSampler::set_state(std::span<const double> x) {
  if (x.size() != x_.size()) throw_invalid("set_state: dimension mismatch");
  x_.assign(x.begin(), x.end());
}

BlockDiag BlockSampler::advance() {
  if (done()) throw_invalid("advance: all blocks already consumed");
  const Block& blk = schedule_.blocks[next_block_];
  const auto& times = grid_->times;

  BlockDiag diag;
  diag.index = next_block_;
  diag.t_entry = times[blk.start_step];
  diag.t_exit = times[blk.start_step + static_cast<std::size_t>(blk.k)];
  diag.k = blk.k;

  const std::vector<double> x_entry = x_;
  std::vector<EvalRecord> records;
  records.reserve(static_cast<std::size_t>(blk.k * stepper_.evals_per_step));

  // Fine track: k steps of the baseline method.
  for (int j = 0; j < blk.k; ++j) {
    const std::size_t i = blk.start_step + static_cast<std::size_t>(j);
    const double t_from = times[i];
    const double t_to = times[i + 1];
    switch (stepper_.kind) {
      case StepperKind::euler:
        x_ = euler_step(*field_, x_, t_from, t_to, ledger_, records);
        break;
      case StepperKind::heun:
      case StepperKind::rk2:
        x_ = rk2_step(*field_, x_, t_from, t_to, stepper_, ledger_, records);
        break;
      case StepperKind::adams_bashforth: {
        if (ab_history_usable(fine_history_, stepper_.s, t_from, t_to)) {
          x_ = adams_bashforth_step(*field_, x_, fine_history_, t_from, t_to, stepper_,
                                    ledger_, records);
        } else {
          x_ = euler_step(*field_, x_, t_from, t_to, ledger_, records);
          diag.bootstrap_steps += 1;
          bootstrap_steps_ += 1;
        }
        fine_history_.push_front({t_from, records.back().value});
        while (static_cast<int>(fine_history_.size()) > stepper_.s) fine_history_.pop_back();
        break;
      }
    }
  }
  diag.fine_endpoint = x_;

  // The block-entry evaluation f(x_entry, t_entry) is the first record of the
  // fine track regardless of method (bootstrap included).
  const std::vector<double>& z_entry = records.front().value;

  if (config_.mode != RxMode::baseline_only && blk.extrapolate) {
    std::vector<double> coarse;
    switch (stepper_.kind) {
      case StepperKind::euler:
        coarse = coarse_step_euler(x_entry, diag.t_entry, diag.t_exit, z_entry);
        break;
      case StepperKind::heun:
      case StepperKind::rk2: {
        if (blk.k != 2) {
          diag.fallback_reason = "coarse reuse unsupported for k != 2";
          break;
        }
        // Candidates for the delta-point value: the two evaluations recorded
        // by the second fine step.
        std::span<const EvalRecord> candidates(records.data() + 2, 2);
        const double target = diag.t_entry + stepper_.delta * (diag.t_exit - diag.t_entry);
        const std::size_t pick = select_rk2_reuse(candidates, target);
        coarse = coarse_step_rk2(x_entry, diag.t_entry, diag.t_exit, stepper_, z_entry,
                                 candidates[pick].value);
        break;
      }
      case StepperKind::adams_bashforth: {
        if (static_cast<int>(stride_history_.size()) < stepper_.s) {
          diag.fallback_reason = "insufficient stride history";
        } else if (!ab_history_usable(stride_history_, stepper_.s, diag.t_entry,
                                      diag.t_exit)) {
          diag.fallback_reason = "stride spacing mismatch";
        } else {
          coarse = coarse_step_ab(x_entry, diag.t_entry, diag.t_exit, stepper_, z_entry,
                                  stride_history_);
        }
        break;
      }
    }

    if (!coarse.empty()) {
      diag.coarse_endpoint = coarse;
      try {
        if (config_.mode == RxMode::rx_grid_aware) {
          x_ = extrapolate(diag.fine_endpoint, coarse, blk.lambdas, p_);
        } else {
          x_ = classical_richardson(diag.fine_endpoint, coarse, blk.k, p_ - 1);
        }
        diag.extrapolated = true;
      } catch (const DegenerateExtrapolation&) {
        diag.fallback_reason = "degenerate extrapolation denominator";
        x_ = diag.fine_endpoint;
      }
    }
  }

  // Stride history is maintained unconditionally so enabling or disabling
  // extrapolation never changes what later blocks can reuse.
  stride_history_.push_front({diag.t_entry, z_entry});
  while (stride_history_.size() > 3) stride_history_.pop_back();

  for (double v : x_) {
    if (!std::isfinite(v))
      throw_numerical("non-finite state after block " + std::to_string(next_block_));
  }

  diag.endpoint = x_;
  ++next_block_;
  return diag;
}

SampleResult sample(const VectorField& field, const TimeGrid& grid,
                    const StepperSpec& stepper, const RxConfig& config,
                    std::span<const double> x_init) {
  BlockSampler sampler(field, grid, stepper, config, x_init);
  SampleResult result;
  result.blocks.reserve(sampler.schedule().blocks.size());
  while (!sampler.done()) result.blocks.push_back(sampler.advance());
  result.endpoint.assign(sampler.state().begin(), sampler.state().end());
  result.nfe = sampler.nfe();
  result.bootstrap_steps = sampler.bootstrap_steps();
  return result;
}

}  // namespace rx
