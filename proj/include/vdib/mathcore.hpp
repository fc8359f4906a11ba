#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vdib/check.hpp"

namespace vdib {

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log,
// so log-ratios stay finite even when sigmoid saturates.
inline constexpr double kProbClamp = 1e-7;

inline double clamp_prob(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

// Numerically stable logistic function; saturates to 0/1 in floating point
// for large |x| instead of overflowing.
double sigmoid(double x);

enum class SurrogateKind { sigmoid_prime };

SurrogateKind surrogate_from_string(const std::string& name);

// Surrogate derivative of the step activation. sigmoid_prime: σ'(x).
double surrogate_derivative(double x, SurrogateKind kind);

// Finite causal filter: taps[delta] multiplies the signal delta steps back.
// Taps beyond memory() are identically zero.
struct CausalFilter {
  std::vector<double> taps;

  int memory() const { return static_cast<int>(taps.size()) - 1; }
};

// Direct evaluation of (f * g)_t = sum_{delta>=0} f_delta g_{t-delta} for a
// signal g_1..g_T (passed 0-based: signal[i] = g_{i+1}). Indices before the
// start of the sequence are zero: the network starts at rest.
double causal_convolve(const CausalFilter& filter,
                       std::span<const double> signal, int t);
double causal_convolve(const CausalFilter& filter,
                       std::span<const uint8_t> signal, int t);

// Shift-invariant softmax (max subtraction), components sum to 1.
std::vector<double> softmax(std::span<const double> v);

// log Bern(y | prob) with the probability clamped away from {0, 1}.
double log_bernoulli(int y, double prob);

}  // namespace vdib
