#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rxsolve/errors.hpp"
#include "rxsolve/steppers.hpp"
#include "rxsolve/time_grid.hpp"
#include "rxsolve/vector_field.hpp"

namespace rx {

// How the per-block second track is combined with the fine track.
//   baseline_only:    plain stepper trajectory, no extrapolation arithmetic.
//   rx_grid_aware:    x_tilde = (fine - S * coarse) / (1 - S), S = sum lambda_j^p,
//                     with the block's actual step fractions lambda_j.
//   naive_richardson: fixed uniform-grid coefficients, ignoring the lambdas.
enum class RxMode { baseline_only, rx_grid_aware, naive_richardson };

struct RxConfig {
  int k = 2;                 // fine steps per block, >= 2
  int p = 0;                 // extrapolation exponent; 0 = stepper's local_order_p
  RxMode mode = RxMode::rx_grid_aware;
  TailPolicy tail_policy = TailPolicy::skip_extrapolation;
  // Per-block enable switch (hybrid schedules). Must have one entry per block
  // when present; ANDed with structural eligibility.
  std::optional<std::vector<bool>> method_mask;
};

const char* rx_mode_name(RxMode mode);
RxMode rx_mode_from_name(const std::string& name);

// Thrown when |1 - sum(lambda^p)| <= 1e-9 and the affine combination would
// blow up. The sampling engine catches it and falls back to the fine
// estimate; direct callers see the exception.
class DegenerateExtrapolation : public Error {
 public:
  explicit DegenerateExtrapolation(const std::string& what)
      : Error(ErrorCode::numerical_failure, what) {}
};

// Grid-aware combination of the k-step fine estimate and the one-step coarse
// estimate: computed in difference form fine + w * (fine - coarse) with
// w = S / (1 - S), so fine == coarse returns fine bit-identically.
std::vector<double> extrapolate(std::span<const double> fine, std::span<const double> coarse,
                                std::span<const double> lambdas, int p);

// Textbook fixed-coefficient rule (k^q * fine - coarse) / (k^q - 1) for a
// method of global order q, also in difference form. On a uniform grid it
// coincides with extrapolate(lambda = 1/k, p = q + 1).
std::vector<double> classical_richardson(std::span<const double> fine,
                                         std::span<const double> coarse, int k, int q);

// --- zero-cost coarse constructors -------------------------------------------
// Pure arithmetic over evaluations already recorded by the fine track; none
// of these touch the field or the ledger.

// One Euler step across the whole block reusing the stored block-entry value
// z_entry = f(x_entry, t_entry). Bit-identical to a fresh Euler step.
std::vector<double> coarse_step_euler(std::span<const double> x_entry, double t_entry,
                                      double t_exit, std::span<const double> z_entry);

// Two-evaluation RK step across the block where the delta-point value is not
// recomputed but substituted by a stored record (z_reused) chosen near the
// target time t_entry + delta * (t_exit - t_entry).
std::vector<double> coarse_step_rk2(std::span<const double> x_entry, double t_entry,
                                    double t_exit, const StepperSpec& spec,
                                    std::span<const double> z_entry,
                                    std::span<const double> z_reused);

// Selection rule for z_reused: the candidate whose time is nearest to
// target_time; an exact tie picks the record earlier in the trajectory
// (larger time, since sampling descends). Returns an index into candidates.
std::size_t select_rk2_reuse(std::span<const EvalRecord> candidates, double target_time);

// Adams-Bashforth step across the block width using the stride-k history of
// previous block-entry evaluations (most recent first, spaced one block width
// apart) plus the current block-entry value.
std::vector<double> coarse_step_ab(std::span<const double> x_entry, double t_entry,
                                   double t_exit, const StepperSpec& spec,
                                   std::span<const double> z_entry,
                                   const std::deque<HistoryEntry>& stride_history);

// Hybrid-schedule mask helpers (one entry per block).
std::vector<bool> mask_all(std::size_t n_blocks, bool value);
std::vector<bool> mask_last(std::size_t n_blocks, std::size_t m);
std::vector<bool> mask_middle(std::size_t n_blocks, std::size_t m);

// --- per-block outcome --------------------------------------------------------

struct BlockDiag {
  std::size_t index = 0;
  double t_entry = 0.0;
  double t_exit = 0.0;
  int k = 0;                    // fine steps actually taken in this block
  bool extrapolated = false;
  // Set only when an enabled extrapolation could not be performed:
  // "coarse reuse unsupported for k != 2", "insufficient stride history",
  // "stride spacing mismatch", "degenerate extrapolation denominator".
  std::string fallback_reason;
  int bootstrap_steps = 0;      // fine multistep steps that fell back to Euler
  std::vector<double> fine_endpoint;
  std::vector<double> coarse_endpoint;  // empty when no coarse track was formed
  std::vector<double> endpoint;         // the block's output state
};

struct SampleResult {
  std::vector<double> endpoint;
  std::uint64_t nfe = 0;
  std::vector<BlockDiag> blocks;
  std::uint64_t bootstrap_steps = 0;
};

// --- sampling engine ----------------------------------------------------------

// Runs one trajectory block by block. Exposed (rather than only a one-shot
// function) so noise can be injected between blocks by the stochastic
// wrapper without perturbing anything inside a block.
class BlockSampler {
 public:
  BlockSampler(const VectorField& field, const TimeGrid& grid, const StepperSpec& stepper,
               const RxConfig& config, std::span<const double> x_init);

  const BlockSchedule& schedule() const { return schedule_; }
  bool done() const { return next_block_ >= schedule_.blocks.size(); }

  // Runs the next block: k fine steps, the zero-cost coarse track, and the
  // configured combination; advances the internal state to the block output.
  BlockDiag advance();

  std::span<const double> state() const { return x_; }
  // Replaces the current state (stochastic increments between blocks).
  void set_state(std::span<const double> x);
  std::uint64_t nfe() const { return ledger_.count; }
  std::uint64_t bootstrap_steps() const { return bootstrap_steps_; }

 private:
  const VectorField* field_;
  const TimeGrid* grid_;
  StepperSpec stepper_;
  RxConfig config_;
  BlockSchedule schedule_;
  int p_ = 2;  // effective extrapolation exponent
  std::size_t next_block_ = 0;
  std::vector<double> x_;
  NfeLedger ledger_;
  std::uint64_t bootstrap_steps_ = 0;
  std::deque<HistoryEntry> fine_history_;    // multistep fine-track history
  std::deque<HistoryEntry> stride_history_;  // block-entry evals, newest first
};

// One deterministic trajectory from times.front() to times.back().
SampleResult sample(const VectorField& field, const TimeGrid& grid,
                    const StepperSpec& stepper, const RxConfig& config,
                    std::span<const double> x_init);

}  // namespace rx
