#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vdib/filters.hpp"
#include "vdib/matrix.hpp"
#include "vdib/rng.hpp"
#include "vdib/spike_train.hpp"

namespace vdib {

enum class LayerKind { hidden_deterministic, readout_stochastic };

// Per-layer autoregressive trace state (Eqs. are the standard second-order
// synaptic filter plus a first-order refractory filter):
//   p_{j,t} = exp(-1/tau_mem) p_{j,t-1} + q_{j,t-1}
//   q_{j,t} = exp(-1/tau_syn) q_{j,t-1} + s_{j,t-1}   (s = pre spikes)
//   r_{i,t} = exp(-1/tau_ref) r_{i,t-1} + s_{i,t-1}   (s = own spikes)
// Readout layers additionally keep a ring buffer of the last tau_e
// pre-synaptic spike vectors and per-kernel traces pk computed from the
// truncated delayed alpha kernels (the K_a delayed kernels do not factor
// into a small AR state).
struct TraceState {
  std::vector<double> p;
  std::vector<double> q;
  std::vector<double> r;
  std::vector<uint8_t> last_spikes;  // own output at t-1

  // Ring of pre-synaptic history, newest slot = spikes at t-1.
  std::vector<uint8_t> ring;  // [tau_e x n_pre]
  int ring_head = 0;
  std::vector<double> pk;  // [n_pre x K], synapse-major

  TraceState() = default;
  TraceState(int n_pre, int n_post, int tau_e, int num_kernels, LayerKind kind);

  void reset();

  // Pre-synaptic spikes from `delay` steps before the current traces
  // (delay = 1 is the newest ring entry).
  std::span<const uint8_t> ring_entry(int delay, int n_pre) const;
};

struct NeuronLayer {
  LayerKind kind = LayerKind::hidden_deterministic;
  int n_pre = 0;
  int n_post = 0;
  FilterParams filter;

  // hidden: [n_post x n_pre]. readout: [n_post x n_pre*K], synapse-major,
  // column j*K + k holding w_{ij,k}.
  Matrix weights;
  std::vector<double> feedback_weights;  // w_i
  std::vector<double> biases;            // w-bar_i
  std::vector<CausalFilter> kernels;     // readout only

  int weight_cols() const {
    return kind == LayerKind::readout_stochastic
               ? n_pre * filter.num_kernels
               : n_pre;
  }
};

// Per-layer eligibility traces: the exact score-function gradient factors
// for readout layers, the surrogate-derivative factors for hidden layers.
struct EligibilitySet {
  Matrix synaptic;               // shape of NeuronLayer::weights
  std::vector<double> feedback;  // per post unit
  std::vector<double> bias;      // per post unit
};

// Advances the AR traces by one step using the spike vectors from the
// previous timestep. Readout ring/pk maintenance is separate (see
// readout_ring_step).
void trace_step(TraceState& state, std::span<const uint8_t> spikes_pre,
                std::span<const uint8_t> spikes_post,
                const FilterParams& params);

// Pushes the previous-step pre-synaptic spikes into the readout ring and
// recomputes the per-kernel traces pk.
void readout_ring_step(TraceState& state, std::span<const uint8_t> spikes_pre,
                       const NeuronLayer& layer);

// u_i = sum_j w_ij p_j + w_i r_i + wbar_i (hidden);
// u_i = sum_j sum_k w_ij,k pk_jk + w_i r_i + wbar_i (readout).
std::vector<double> membrane_potential(const NeuronLayer& layer,
                                       const TraceState& state);

// Deterministic threshold: spike iff u > 0 (strictly).
std::vector<uint8_t> hidden_step(std::span<const double> u);

// Stochastic threshold: y_i ~ Bern(sigma(u_i)); logprob_i uses clamped
// probabilities so it stays finite for saturated potentials.
struct ReadoutSample {
  std::vector<uint8_t> y;
  std::vector<double> logprob;
};
ReadoutSample readout_step(std::span<const double> u, Rng& rng);

// e_ij,k = pk_jk (y_i - sigma(u_i)); e_i = r_i (y_i - sigma(u_i));
// ebar_i = y_i - sigma(u_i).
EligibilitySet readout_eligibility(const NeuronLayer& layer,
                                   const TraceState& state,
                                   std::span<const double> u,
                                   std::span<const uint8_t> y);

// e_ij = theta'(u_i - threshold) p_j; e_i = theta'(...) r_i;
// ebar_i = theta'(...).
EligibilitySet hidden_eligibility(const NeuronLayer& layer,
                                  const TraceState& state,
                                  std::span<const double> u,
                                  SurrogateKind surrogate, double threshold);

// L_i = sum_k B_ik (y_k - sigma(u_k)).
std::vector<double> learning_signal(const Matrix& feedback,
                                    std::span<const uint8_t> y,
                                    std::span<const double> sigma_u);

struct LayerStepResult {
  std::vector<double> u;
  std::vector<uint8_t> spikes;
  // hidden: theta'(u_i - threshold); readout: y_i - sigma(u_i).
  std::vector<double> post_factor;
};

struct StepResult {
  std::vector<uint8_t> y;
  std::vector<double> logprobs;  // per readout unit
  std::vector<double> sigma_u;   // readout sigma(u)
  std::vector<LayerStepResult> layers;
  std::vector<std::vector<double>> learning_signals;  // per hidden layer
};

// Layered feed-forward SRM network with one stochastic readout layer on top
// of zero or more deterministic hidden layers. Single-owner mutable state
// during a pass.
struct EncoderNetwork {
  int n_in = 0;
  std::vector<NeuronLayer> layers;
  std::vector<Matrix> feedback_matrices;  // per hidden layer, frozen
  std::vector<TraceState> state;
  std::vector<uint8_t> last_input;
  SurrogateKind surrogate = SurrogateKind::sigmoid_prime;
  double surrogate_threshold = 0.0;

  int n_readout() const { return layers.back().n_post; }
  const NeuronLayer& readout_layer() const { return layers.back(); }
  void reset();
};

// Builds and initializes the network: synaptic weights ~ U(-c, c) with
// c = sqrt(1/fan_in); biases -1; hidden feedback weights -1 (refractory at
// init), readout feedback weights 0; B entries ~ U(-1, 1)/sqrt(N_Y).
EncoderNetwork build_encoder(int n_in, const std::vector<int>& hidden_sizes,
                             int n_readout, const FilterParams& hidden_filter,
                             const FilterParams& readout_filter, Rng& rng);

// One full network step on input x_t: advances all traces from the t-1
// spikes, computes potentials, emits hidden spikes, samples the readout.
StepResult forward_step(EncoderNetwork& net, std::span<const uint8_t> x_t,
                        Rng& rng);

// Same dynamics with the readout spikes clamped to y_t instead of sampled.
StepResult teacher_forced_step(EncoderNetwork& net,
                               std::span<const uint8_t> x_t,
                               std::span<const uint8_t> y_t);

// Teacher-forced log-likelihood sum_{i,t} log p(y_{i,t} | u_{i,t}) of a
// readout spike train y under input x. Resets the network first.
double sequence_log_prob(EncoderNetwork& net, const SpikeTrain& x,
                         const SpikeTrain& y);

}  // namespace vdib
