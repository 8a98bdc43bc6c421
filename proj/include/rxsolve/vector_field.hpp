#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rx {

// Pure right-hand side f(x, t) of the sampling ODE dx/dt = f(x, t) together
// with its reference oracle. eval must be deterministic and side-effect free:
// the same (x, t) always yields bit-identical output, so evaluation counting
// never changes results.
struct VectorField {
  enum class OracleKind { none, closed_form, fine_rk4 };

  int dim = 1;
  std::function<void(std::span<const double> x, double t, std::span<double> out)> eval;

  OracleKind oracle = OracleKind::none;
  // Exact endpoint map x(t_end) given x(t_start); set when oracle == closed_form.
  std::function<void(std::span<const double> x_start, double t_start, double t_end,
                     std::span<double> out)>
      exact_flow;

  std::string note;  // human-readable description, including smoothness remarks
};

// f(x, t) = t * x / (1 + t^2): the probability-flow field of data distributed
// N(0, I) blurred to N(0, (1 + t^2) I). Linear in x with the closed-form flow
//   x(t_b) = x(t_a) * sqrt((1 + t_b^2) / (1 + t_a^2)).
VectorField gaussian_flow_field(int dim);

// Probability-flow field of a Gaussian mixture with unit-variance components:
// p(x; t) = sum_m w_m N(x; mu_m, (1 + t^2) I) and f = t * (x - mu_bar(x, t))
// / (1 + t^2) where mu_bar is the responsibility-weighted component mean
// (computed with log-sum-exp stabilization). Genuinely nonlinear for >= 2
// distinct components; reference comes from the fine_rk4 oracle.
VectorField gaussian_mixture_field(int dim, const std::vector<std::vector<double>>& means,
                                   const std::vector<double>& weights);

// log p(x; t) of the mixture above (exposed for finite-difference score checks).
double gaussian_mixture_log_density(const std::vector<std::vector<double>>& means,
                                    const std::vector<double>& weights,
                                    std::span<const double> x, double t);

// Noise-prediction model in the (y, gamma) coordinates of a variance-
// preserving schedule, y = x * sqrt(1 + gamma^2): a denoising update
//   x_next = alpha_next * (y + (gamma_next - gamma) * eps(y, gamma))
// is exactly one Euler step of dy/dgamma = eps. For data distributed N(0, I)
// the optimal noise prediction is analytic, eps(y, gamma) = gamma * y /
// (1 + gamma^2), giving the same closed-form flow as gaussian_flow_field with
// t replaced by gamma. Use with ddim_gamma grids.
VectorField ddim_gamma_field(int dim);

// y <-> x transforms for the variance-preserving reparameterization.
double y_from_x(double x, double gamma);
double x_from_y(double y, double gamma);

// f(x, t) = c, independent of x and t, with the exact flow
// x(t_end) = x(t_start) + c * (t_end - t_start). Every consistent method
// integrates this exactly (up to rounding), which makes it the degenerate
// probe for extrapolation no-ops and for pure-noise stochastic runs (c = 0).
VectorField constant_field(int dim, const std::vector<double>& value);

// Reference endpoint for error measurement. closed_form fields return the
// exact value. fine_rk4 fields run classical 4th-order Runge-Kutta on a
// uniform internal grid with max(10000, 100 * finest_N_hint) steps, repeat at
// double resolution, require the two to agree within 1e-10 (relative), and
// return the finer result. Throws ErrorCode::unsupported when the field has
// no oracle and ErrorCode::numerical_failure when the self-check fails.
std::vector<double> reference_endpoint(const VectorField& field,
                                       std::span<const double> x_start, double t_start,
                                       double t_end, int finest_N_hint = 1);

}  // namespace rx
