#include "vdib/filters.hpp"

#include <cmath>

namespace vdib {

void FilterParams::validate() const {
  if (tau_mem <= 0.0 || tau_syn <= 0.0 || tau_ref <= 0.0) {
    throw ConfigError("filter time constants must be positive");
  }
  if (tau_mem == tau_syn) {
    throw ConfigError("tau_mem == tau_syn makes the alpha function degenerate");
  }
  if (tau_e < 1) throw ConfigError("tau_e must be >= 1");
  if (num_kernels < 1) throw ConfigError("num_kernels must be >= 1");
  if (num_kernels > tau_e) {
    throw ConfigError("num_kernels may not exceed tau_e");
  }
}

CausalFilter build_alpha_kernel(const FilterParams& params) {
  params.validate();
  CausalFilter f;
  f.taps.assign(params.tau_e + 1, 0.0);
  for (int d = 1; d <= params.tau_e; ++d) {
    f.taps[d] = std::exp(-d / params.tau_mem) - std::exp(-d / params.tau_syn);
  }
  return f;
}

std::vector<CausalFilter> build_readout_kernels(const FilterParams& params) {
  params.validate();
  const CausalFilter base = build_alpha_kernel(params);
  std::vector<CausalFilter> kernels(params.num_kernels);
  for (int k = 0; k < params.num_kernels; ++k) {
    kernels[k].taps.assign(params.tau_e + 1, 0.0);
    for (int d = k; d <= params.tau_e; ++d) {
      kernels[k].taps[d] = base.taps[d - k];
    }
  }
  return kernels;
}

CausalFilter trace_alpha_kernel(const FilterParams& params, int memory) {
  params.validate();
  VDIB_CHECK(memory >= 0);
  const double lm = std::exp(-1.0 / params.tau_mem);
  const double ls = std::exp(-1.0 / params.tau_syn);
  CausalFilter f;
  f.taps.assign(memory + 1, 0.0);
  for (int d = 1; d <= memory; ++d) {
    f.taps[d] = (std::exp(-(d - 1) / params.tau_mem) -
                 std::exp(-(d - 1) / params.tau_syn)) /
                (lm - ls);
  }
  return f;
}

CausalFilter trace_feedback_kernel(const FilterParams& params, int memory) {
  params.validate();
  VDIB_CHECK(memory >= 0);
  CausalFilter f;
  f.taps.assign(memory + 1, 0.0);
  for (int d = 1; d <= memory; ++d) {
    f.taps[d] = std::exp(-(d - 1) / params.tau_ref);
  }
  return f;
}

}  // namespace vdib
