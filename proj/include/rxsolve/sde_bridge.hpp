#pragma once

#include <cstdint>
#include <vector>

#include "rxsolve/rx_sampler.hpp"

namespace rx {

// Stochastic sampling = deterministic extrapolated block + one post-block
// noise increment. The per-block variance matches the accumulated variance a
// sigma(t) = t diffusion injects over the block's interval:
//   sigma_block^2 = t_entry^2 - t_exit^2,
// scaled by eta^2 (eta = 0 disables injection entirely).
struct StochasticConfig {
  double eta = 0.0;
  std::uint64_t seed = 0;
};

struct NoiseEvent {
  std::size_t block_index = 0;
  double sigma = 0.0;  // standard deviation of the injected increment
  double norm = 0.0;   // Euclidean norm of the injected increment
};

struct StochasticSampleResult {
  std::vector<double> endpoint;
  std::uint64_t nfe = 0;
  std::vector<BlockDiag> blocks;
  std::uint64_t bootstrap_steps = 0;
  std::vector<NoiseEvent> noise;  // one event per block when eta > 0, else empty
};

// Runs the deterministic block engine and, when eta > 0, adds
// eta * sigma_block * xi (xi ~ N(0, I) from the seeded stream) after each
// block. With eta = 0 no stream is ever constructed and the trajectory is
// bit-identical to the deterministic sample().
StochasticSampleResult sample_stochastic(const VectorField& field, const TimeGrid& grid,
                                         const StepperSpec& stepper, const RxConfig& config,
                                         const StochasticConfig& stochastic,
                                         std::span<const double> x_init);

}  // namespace rx
