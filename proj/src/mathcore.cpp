#include "vdib/mathcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vdib {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

SurrogateKind surrogate_from_string(const std::string& name) {
  if (name == "sigmoid_prime") return SurrogateKind::sigmoid_prime;
  throw ConfigError("unknown surrogate kind: " + name);
}

double surrogate_derivative(double x, SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::sigmoid_prime: {
      double s = sigmoid(x);
      return s * (1.0 - s);
    }
  }
  throw ConfigError("unknown surrogate kind");
}

namespace {

template <typename T>
double convolve_impl(const CausalFilter& filter, std::span<const T> signal,
                     int t) {
  const int steps = static_cast<int>(signal.size());
  VDIB_CHECK(t >= 1 && t <= steps, "convolution timestep out of range");
  const int max_delta = std::min(filter.memory(), t - 1);
  double acc = 0.0;
  for (int delta = 0; delta <= max_delta; ++delta) {
    acc += filter.taps[delta] * static_cast<double>(signal[t - 1 - delta]);
  }
  return acc;
}

}  // namespace

double causal_convolve(const CausalFilter& filter,
                       std::span<const double> signal, int t) {
  return convolve_impl(filter, signal, t);
}

double causal_convolve(const CausalFilter& filter,
                       std::span<const uint8_t> signal, int t) {
  return convolve_impl(filter, signal, t);
}

std::vector<double> softmax(std::span<const double> v) {
  VDIB_CHECK(!v.empty(), "softmax of empty vector");
  double vmax = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - vmax);
    sum += out[i];
  }
  for (double& o : out) o /= sum;
  return out;
}

double log_bernoulli(int y, double prob) {
  double p = clamp_prob(prob);
  return y ? std::log(p) : std::log1p(-p);
}

}  // namespace vdib
