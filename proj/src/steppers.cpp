#include "rxsolve/steppers.hpp"

#include <cmath>
#include <cstdlib>

#include "rxsolve/errors.hpp"

namespace rx {

namespace {

// Evaluate the field, log the evaluation and charge the ledger. Returns the
// field value; the identical vector is stored in the appended record.
std::vector<double> charged_eval(const VectorField& field, std::span<const double> x,
                                 double t, EvalTag tag, double delta, NfeLedger& ledger,
                                 std::vector<EvalRecord>& records) {
  std::vector<double> value(field.dim);
  field.eval(x, t, value);
  ledger.count += 1;
  EvalRecord rec;
  rec.time = t;
  rec.state.assign(x.begin(), x.end());
  rec.value = value;
  rec.tag = tag;
  rec.delta = delta;
  records.push_back(std::move(rec));
  return value;
}

}  // namespace

std::string StepperSpec::label() const {
  switch (kind) {
    case StepperKind::euler:
      return "euler";
    case StepperKind::heun:
      return "heun";
    case StepperKind::rk2:
      return "rk2";
    case StepperKind::adams_bashforth:
      return "ab" + std::to_string(s + 1);
  }
  return "unknown";
}

StepperSpec StepperSpec::euler() {
  StepperSpec spec;
  spec.kind = StepperKind::euler;
  spec.local_order_p = 2;
  spec.evals_per_step = 1;
  return spec;
}

StepperSpec StepperSpec::heun() {
  StepperSpec spec;
  spec.kind = StepperKind::heun;
  spec.local_order_p = 3;
  spec.evals_per_step = 2;
  spec.a1 = 0.5;
  spec.a2 = 0.5;
  spec.delta = 1.0;
  return spec;
}

StepperSpec StepperSpec::rk2(double a1, double a2, double delta) {
  if (std::abs(a1 + a2 - 1.0) > 1e-12) {
    throw_invalid("rk2 weights must satisfy a1 + a2 = 1 (got a1 + a2 = " +
                  std::to_string(a1 + a2) + ")");
  }
  if (!(delta > 0.0) || delta > 1.0) {
    throw_invalid("rk2 delta must lie in (0, 1]");
  }
  StepperSpec spec;
  spec.kind = StepperKind::rk2;
  spec.local_order_p = 3;
  spec.evals_per_step = 2;
  spec.a1 = a1;
  spec.a2 = a2;
  spec.delta = delta;
  return spec;
}

StepperSpec StepperSpec::adams_bashforth(int s) {
  if (s < 1 || s > 3) {
    throw_invalid("adams_bashforth history count s must be 1, 2 or 3");
  }
  StepperSpec spec;
  spec.kind = StepperKind::adams_bashforth;
  spec.s = s;
  spec.local_order_p = s + 2;
  spec.evals_per_step = 1;
  switch (s) {
    case 1:
      spec.b = {3.0 / 2.0, -1.0 / 2.0};
      break;
    case 2:
      spec.b = {23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0};
      break;
    case 3:
      spec.b = {55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0};
      break;
  }
  double sum = 0.0;
  for (double c : spec.b) sum += c;
  if (std::abs(sum - 1.0) > 1e-12) {
    throw_internal("adams_bashforth coefficients must sum to 1");
  }
  return spec;
}

std::vector<double> euler_step(const VectorField& field, std::span<const double> x,
                               double t_from, double t_to, NfeLedger& ledger,
                               std::vector<EvalRecord>& records) {
  const double h = t_to - t_from;
  std::vector<double> z = charged_eval(field, x, t_from, EvalTag::step_start, 0.0, ledger, records);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + h * z[i];
  return out;
}

std::vector<double> heun_step(const VectorField& field, std::span<const double> x,
                              double t_from, double t_to, NfeLedger& ledger,
                              std::vector<EvalRecord>& records) {
  return rk2_step(field, x, t_from, t_to, StepperSpec::heun(), ledger, records);
}

std::vector<double> rk2_step(const VectorField& field, std::span<const double> x,
                             double t_from, double t_to, const StepperSpec& spec,
                             NfeLedger& ledger, std::vector<EvalRecord>& records) {
  const double h = t_to - t_from;
  std::vector<double> z0 =
      charged_eval(field, x, t_from, EvalTag::step_start, 0.0, ledger, records);
  const double t_mid = t_from + spec.delta * h;
  std::vector<double> x_mid(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x_mid[i] = x[i] + spec.delta * h * z0[i];
  std::vector<double> z1 =
      charged_eval(field, x_mid, t_mid, EvalTag::intermediate, spec.delta, ledger, records);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] + h * (spec.a1 * z0[i] + spec.a2 * z1[i]);
  }
  return out;
}

bool ab_history_usable(const std::deque<HistoryEntry>& history, int s, double t_from,
                       double t_to) {
  if (static_cast<int>(history.size()) < s) return false;
  const double h = t_to - t_from;
  if (h == 0.0) return false;
  const double tol = 1e-9 * std::abs(h);
  double expect = t_from;
  for (int j = 0; j < s; ++j) {
    expect -= h;  // history entries walk backward one step at a time
    if (std::abs(history[static_cast<std::size_t>(j)].time - expect) > tol) return false;
  }
  return true;
}

std::vector<double> adams_bashforth_step(const VectorField& field, std::span<const double> x,
                                         const std::deque<HistoryEntry>& history,
                                         double t_from, double t_to, const StepperSpec& spec,
                                         NfeLedger& ledger, std::vector<EvalRecord>& records) {
  if (spec.kind != StepperKind::adams_bashforth) {
    throw_invalid("adams_bashforth_step requires an adams_bashforth spec");
  }
  if (!ab_history_usable(history, spec.s, t_from, t_to)) {
    throw_invalid("adams_bashforth_step: history missing or not uniformly spaced");
  }
  const double h = t_to - t_from;
  std::vector<double> z0 =
      charged_eval(field, x, t_from, EvalTag::history, 0.0, ledger, records);
  std::vector<double> combo(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) combo[i] = spec.b[0] * z0[i];
  for (int j = 1; j <= spec.s; ++j) {
    const auto& past = history[static_cast<std::size_t>(j - 1)].value;
    if (past.size() != x.size()) {
      throw_invalid("adams_bashforth_step: history dimension mismatch");
    }
    for (std::size_t i = 0; i < x.size(); ++i) combo[i] += spec.b[static_cast<std::size_t>(j)] * past[i];
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + h * combo[i];
  return out;
}

BootstrapRun bootstrap_history(const VectorField& field, std::span<const double> x,
                               std::span<const double> times, int n_steps,
                               NfeLedger& ledger, std::vector<EvalRecord>& records) {
  if (n_steps < 0 || static_cast<std::size_t>(n_steps) + 1 > times.size()) {
    throw_invalid("bootstrap_history: grid prefix shorter than requested steps");
  }
  BootstrapRun run;
  run.state.assign(x.begin(), x.end());
  for (int i = 0; i < n_steps; ++i) {
    const double t_from = times[static_cast<std::size_t>(i)];
    const double t_to = times[static_cast<std::size_t>(i) + 1];
    run.state = euler_step(field, run.state, t_from, t_to, ledger, records);
    run.history.push_front({t_from, records.back().value});
  }
  return run;
}

}  // namespace rx
