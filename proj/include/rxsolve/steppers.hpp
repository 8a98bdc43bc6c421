#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "rxsolve/vector_field.hpp"

namespace rx {

// Exact count of vector-field evaluations: the cost currency every
// comparison in this library is normalized by. Incremented only inside the
// stepper operations.
struct NfeLedger {
  std::uint64_t count = 0;
};

enum class StepperKind { euler, heun, rk2, adams_bashforth };

enum class EvalTag { step_start, intermediate, history };

// One stored field evaluation: value == field.eval(state, time) at record
// time, bit-identically (fields are pure). The coarse track consumes these
// instead of spending new evaluations.
struct EvalRecord {
  double time = 0.0;
  std::vector<double> state;
  std::vector<double> value;
  EvalTag tag = EvalTag::step_start;
  double delta = 0.0;  // for intermediate records: the delta the step used
};

// A baseline method plus the metadata the extrapolation engine needs: its
// local order p (exponent of the leading one-step truncation error) and its
// per-step evaluation cost.
struct StepperSpec {
  StepperKind kind = StepperKind::euler;
  int local_order_p = 2;
  int evals_per_step = 1;

  // rk2 family: x_next = x + (t_to - t_from) * (a1 * z_start + a2 * z_delta)
  // with z_delta evaluated at an Euler-predicted state a fraction delta into
  // the step. Requires a1 + a2 = 1 (consistency) and 0 < delta <= 1.
  double a1 = 0.5, a2 = 0.5, delta = 1.0;

  // Adams-Bashforth with s history values: coefficients b[0..s] weight the
  // new evaluation (b[0]) and the j-th most recent history value (b[j]).
  // Restricted to uniform spacing; callers fall back to Euler elsewhere.
  int s = 1;
  std::vector<double> b;

  std::string label() const;

  static StepperSpec euler();
  static StepperSpec heun();
  static StepperSpec rk2(double a1, double a2, double delta);
  // s = 1, 2, 3 gives the 2-, 3-, 4-value Adams-Bashforth methods. The local
  // order is s + 2 (one above the method's global order), which is the
  // default extrapolation exponent.
  static StepperSpec adams_bashforth(int s);
};

// --- single-step operations -------------------------------------------------
// Every stepper appends the evaluations it performs to `records` and
// increments the ledger once per field call. All steps accept general signed
// intervals; sampling runs use t_from > t_to (noise toward data).

// x_next = x + (t_to - t_from) * f(x, t_from). 1 evaluation.
std::vector<double> euler_step(const VectorField& field, std::span<const double> x,
                               double t_from, double t_to, NfeLedger& ledger,
                               std::vector<EvalRecord>& records);

// Euler predictor to t_to, then trapezoidal corrector. 2 evaluations.
std::vector<double> heun_step(const VectorField& field, std::span<const double> x,
                              double t_from, double t_to, NfeLedger& ledger,
                              std::vector<EvalRecord>& records);

// Generic two-evaluation Runge-Kutta step per StepperSpec (a1, a2, delta);
// the delta-point state comes from an Euler predictor. 2 evaluations.
std::vector<double> rk2_step(const VectorField& field, std::span<const double> x,
                             double t_from, double t_to, const StepperSpec& spec,
                             NfeLedger& ledger, std::vector<EvalRecord>& records);

// History entry for multistep methods: a past field value and its time.
struct HistoryEntry {
  double time = 0.0;
  std::vector<double> value;
};

// One Adams-Bashforth step: evaluates f at (x, t_from) (1 evaluation, also
// appended to records) and combines it with the s most recent history values,
// which the caller guarantees to be uniformly spaced at |t_from - t_to|.
// history.front() is the most recent past evaluation. Throws
// ErrorCode::invalid_argument when the history is too short or non-uniform
// (callers bootstrap with Euler instead).
std::vector<double> adams_bashforth_step(const VectorField& field, std::span<const double> x,
                                         const std::deque<HistoryEntry>& history,
                                         double t_from, double t_to, const StepperSpec& spec,
                                         NfeLedger& ledger, std::vector<EvalRecord>& records);

// Whether history times + the current step form the uniform spacing the
// Adams-Bashforth coefficients assume (relative tolerance 1e-9).
bool ab_history_usable(const std::deque<HistoryEntry>& history, int s, double t_from,
                       double t_to);

// Warm-up for multistep methods: advance with first-order Euler steps over the
// leading `n_steps` intervals of a descending `times` prefix while collecting
// the evaluations as reusable history (most recent first). Each bootstrap step
// costs exactly one evaluation, preserving 1-eval/step parity with the
// multistep method it seeds.
struct BootstrapRun {
  std::vector<double> state;
  std::deque<HistoryEntry> history;
};
BootstrapRun bootstrap_history(const VectorField& field, std::span<const double> x,
                               std::span<const double> times, int n_steps,
                               NfeLedger& ledger, std::vector<EvalRecord>& records);

}  // namespace rx
