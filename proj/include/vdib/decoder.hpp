#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vdib/matrix.hpp"
#include "vdib/rng.hpp"

namespace vdib {

// Sliding window of the last tau_d readout spike vectors, zero-padded before
// the start of the sequence. Flattened feature order is
// (oldest..newest) x unit index, fixed.
struct WindowBuffer {
  int n_units = 0;
  int capacity = 0;
  std::vector<uint8_t> window;  // [capacity x n_units], row 0 = oldest

  WindowBuffer() = default;
  WindowBuffer(int units, int tau_d)
      : n_units(units),
        capacity(tau_d),
        window(static_cast<size_t>(units) * tau_d, 0) {
    VDIB_CHECK(units > 0 && tau_d >= 1);
  }

  void reset() { std::fill(window.begin(), window.end(), 0); }

  std::vector<double> features() const {
    return std::vector<double>(window.begin(), window.end());
  }
};

// Appends y_t, evicting the oldest entry when full.
void window_push(WindowBuffer& buf, std::span<const uint8_t> y_t);

// Per-unit spike counts over the window (the rate-decoding features).
std::vector<double> rate_pool(const WindowBuffer& buf);

enum class DecoderKind { linear, mlp };
enum class Likelihood { categorical, bernoulli_pixel, gaussian_unit };

DecoderKind decoder_kind_from_string(const std::string& name);
Likelihood likelihood_from_string(const std::string& name);
std::string to_string(DecoderKind kind);
std::string to_string(Likelihood likelihood);

// Windowed feed-forward decoder: either a plain affine map or an MLP with a
// single ReLU hidden layer. Outputs are interpreted per likelihood
// (class logits / pixel logits / Gaussian means).
struct DecoderModel {
  DecoderKind kind = DecoderKind::linear;
  Likelihood likelihood = Likelihood::categorical;
  int n_in = 0;
  int n_out = 0;
  int n_hidden = 0;  // 0 for linear

  Matrix w1;               // linear: [n_out x n_in]; mlp: [n_hidden x n_in]
  std::vector<double> b1;
  Matrix w2;               // mlp only: [n_out x n_hidden]
  std::vector<double> b2;
};

struct DecoderGradients {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

// n_hidden < 0 selects the default hidden width n_in / 2.
DecoderModel build_decoder(DecoderKind kind, Likelihood likelihood, int n_in,
                           int n_out, Rng& rng, int n_hidden = -1);

std::vector<double> decoder_forward(const DecoderModel& model,
                                    std::span<const double> features);

// Per-step negative log-likelihood of r_t under the declared output model:
// categorical -> cross-entropy with softmax(outputs) (r_t one-hot);
// bernoulli_pixel -> summed binary cross-entropy on sigmoid(outputs)
// (r_t in [0,1]); gaussian_unit -> 0.5 ||r - outputs||^2, the additive
// 0.5 log(2 pi) constant per dimension dropped (gradients unaffected).
double decoder_logloss(std::span<const double> outputs,
                       std::span<const double> r_t, Likelihood likelihood);

struct BackpropResult {
  DecoderGradients grads;
  double loss = 0.0;
  std::vector<double> outputs;
};

// Exact gradients of decoder_logloss w.r.t. every parameter, plus the loss
// value and the forward outputs.
BackpropResult decoder_backprop(const DecoderModel& model,
                                std::span<const double> features,
                                std::span<const double> r_t);

void apply_decoder_update(DecoderModel& model, const DecoderGradients& grads,
                          double eta);

DecoderGradients zero_gradients(const DecoderModel& model);
void add_gradients(DecoderGradients& acc, const DecoderGradients& g);

// The mean of the output distribution: softmax probabilities (categorical),
// sigmoid(outputs) (bernoulli_pixel), or the outputs themselves (gaussian).
std::vector<double> predicted_mean(std::span<const double> outputs,
                                   Likelihood likelihood);

}  // namespace vdib
