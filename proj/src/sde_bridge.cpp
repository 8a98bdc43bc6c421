#include "rxsolve/sde_bridge.hpp"

#include <cmath>

#include "rxsolve/errors.hpp"
#include "rxsolve/rng.hpp"

namespace rx {

StochasticSampleResult sample_stochastic(const VectorField& field, const TimeGrid& grid,
                                         const StepperSpec& stepper, const RxConfig& config,
                                         const StochasticConfig& stochastic,
                                         std::span<const double> x_init) {
  if (!(stochastic.eta >= 0.0))
    throw_invalid("stochastic sampling: eta must be >= 0");

  BlockSampler sampler(field, grid, stepper, config, x_init);
  StochasticSampleResult result;
  result.blocks.reserve(sampler.schedule().blocks.size());

  if (stochastic.eta == 0.0) {
    // Deterministic limit: identical code path to sample(), no stream built.
    while (!sampler.done()) result.blocks.push_back(sampler.advance());
  } else {
    GaussianStream stream(stochastic.seed);
    std::vector<double> x(x_init.size());
    while (!sampler.done()) {
      BlockDiag diag = sampler.advance();
      // Accumulated diffusion variance of sigma(t) = t over [t_exit, t_entry].
      const double var = diag.t_entry * diag.t_entry - diag.t_exit * diag.t_exit;
      const double sigma = std::sqrt(var);
      NoiseEvent event;
      event.block_index = diag.index;
      event.sigma = sigma;
      double norm2 = 0.0;
      auto state = sampler.state();
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double incr = stochastic.eta * sigma * stream.next();
        x[j] = state[j] + incr;
        norm2 += incr * incr;
      }
      event.norm = std::sqrt(norm2);
      sampler.set_state(x);
      diag.endpoint = x;
      result.noise.push_back(event);
      result.blocks.push_back(std::move(diag));
    }
  }

  result.endpoint.assign(sampler.state().begin(), sampler.state().end());
  result.nfe = sampler.nfe();
  result.bootstrap_steps = sampler.bootstrap_steps();
  return result;
}

}  // namespace rx
