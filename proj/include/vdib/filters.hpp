#pragma once

#include <vector>

#include "vdib/mathcore.hpp"

namespace vdib {

// Time constants (in timesteps) of the spike response and feedback filters,
// the truncation window tau_e, and the number of readout kernels K_a.
struct FilterParams {
  double tau_mem = 20.0;
  double tau_syn = 5.0;
  double tau_ref = 10.0;
  int tau_e = 5;
  int num_kernels = 1;

  void validate() const;
};

// Alpha-function spike response, taps[d] = exp(-d/tau_mem) - exp(-d/tau_syn)
// for d = 1..tau_e. taps[0] = 0: a spike influences potentials from the next
// step onward. Degenerate tau_mem == tau_syn is rejected.
CausalFilter build_alpha_kernel(const FilterParams& params);

// K_a copies of the alpha kernel, kernel k delayed by k timesteps and
// truncated at tau_e, so the readout synapses see different delays.
std::vector<CausalFilter> build_readout_kernels(const FilterParams& params);

// Impulse response of the second-order AR trace recursion
//   p_t = exp(-1/tau_mem) p_{t-1} + q_{t-1},
//   q_t = exp(-1/tau_syn) q_{t-1} + s_{t-1}:
// taps[d] = (exp(-(d-1)/tau_mem) - exp(-(d-1)/tau_syn)) /
//           (exp(-1/tau_mem) - exp(-1/tau_syn))  for d >= 1,
// i.e. the alpha kernel delayed one step and rescaled. Used as the direct-
// convolution reference when checking the recursion.
CausalFilter trace_alpha_kernel(const FilterParams& params, int memory);

// Impulse response of r_t = exp(-1/tau_ref) r_{t-1} + s_{t-1}:
// taps[d] = exp(-(d-1)/tau_ref) for d >= 1.
CausalFilter trace_feedback_kernel(const FilterParams& params, int memory);

}  // namespace vdib
