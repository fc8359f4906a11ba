#include "vdib/encoder.hpp"

#include <cmath>

namespace vdib {

TraceState::TraceState(int n_pre, int n_post, int tau_e, int num_kernels,
                       LayerKind kind)
    : p(n_pre, 0.0),
      q(n_pre, 0.0),
      r(n_post, 0.0),
      last_spikes(n_post, 0) {
  if (kind == LayerKind::readout_stochastic) {
    ring.assign(static_cast<size_t>(tau_e) * n_pre, 0);
    pk.assign(static_cast<size_t>(n_pre) * num_kernels, 0.0);
  }
}

void TraceState::reset() {
  std::fill(p.begin(), p.end(), 0.0);
  std::fill(q.begin(), q.end(), 0.0);
  std::fill(r.begin(), r.end(), 0.0);
  std::fill(last_spikes.begin(), last_spikes.end(), 0);
  std::fill(ring.begin(), ring.end(), 0);
  ring_head = 0;
  std::fill(pk.begin(), pk.end(), 0.0);
}

std::span<const uint8_t> TraceState::ring_entry(int delay, int n_pre) const {
  const int slots = static_cast<int>(ring.size()) / n_pre;
  const int slot = (ring_head + delay - 1) % slots;
  return {ring.data() + static_cast<size_t>(slot) * n_pre,
          static_cast<size_t>(n_pre)};
}

void trace_step(TraceState& state, std::span<const uint8_t> spikes_pre,
                std::span<const uint8_t> spikes_post,
                const FilterParams& params) {
  VDIB_CHECK(spikes_pre.size() == state.p.size() &&
             spikes_post.size() == state.r.size(),
             "trace_step dimension mismatch");
  const double lam_mem = std::exp(-1.0 / params.tau_mem);
  const double lam_syn = std::exp(-1.0 / params.tau_syn);
  const double lam_ref = std::exp(-1.0 / params.tau_ref);
  for (size_t j = 0; j < state.p.size(); ++j) {
    state.p[j] = lam_mem * state.p[j] + state.q[j];
    state.q[j] = lam_syn * state.q[j] + spikes_pre[j];
  }
  for (size_t i = 0; i < state.r.size(); ++i) {
    state.r[i] = lam_ref * state.r[i] + spikes_post[i];
  }
}

void readout_ring_step(TraceState& state, std::span<const uint8_t> spikes_pre,
                       const NeuronLayer& layer) {
  const int n_pre = layer.n_pre;
  const int tau_e = layer.filter.tau_e;
  const int num_kernels = layer.filter.num_kernels;
  VDIB_CHECK(static_cast<int>(spikes_pre.size()) == n_pre);

  // New entry becomes delay 1; the oldest (delay tau_e) is overwritten.
  state.ring_head = (state.ring_head + tau_e - 1) % tau_e;
  uint8_t* slot = state.ring.data() + static_cast<size_t>(state.ring_head) * n_pre;
  std::copy(spikes_pre.begin(), spikes_pre.end(), slot);

  std::fill(state.pk.begin(), state.pk.end(), 0.0);
  for (int d = 1; d <= tau_e; ++d) {
    std::span<const uint8_t> spikes = state.ring_entry(d, n_pre);
    for (int k = 0; k < num_kernels; ++k) {
      const double tap = layer.kernels[k].taps[d];
      if (tap == 0.0) continue;
      for (int j = 0; j < n_pre; ++j) {
        if (spikes[j]) state.pk[static_cast<size_t>(j) * num_kernels + k] += tap;
      }
    }
  }
}

std::vector<double> membrane_potential(const NeuronLayer& layer,
                                       const TraceState& state) {
  std::vector<double> u(layer.n_post);
  if (layer.kind == LayerKind::readout_stochastic) {
    matvec(layer.weights, state.pk, u);
  } else {
    matvec(layer.weights, state.p, u);
  }
  for (int i = 0; i < layer.n_post; ++i) {
    u[i] += layer.feedback_weights[i] * state.r[i] + layer.biases[i];
  }
  return u;
}

std::vector<uint8_t> hidden_step(std::span<const double> u) {
  std::vector<uint8_t> z(u.size());
  for (size_t i = 0; i < u.size(); ++i) z[i] = u[i] > 0.0 ? 1 : 0;
  return z;
}

ReadoutSample readout_step(std::span<const double> u, Rng& rng) {
  ReadoutSample out;
  out.y.resize(u.size());
  out.logprob.resize(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    const double prob = sigmoid(u[i]);
    out.y[i] = static_cast<uint8_t>(rng.bernoulli(prob));
    out.logprob[i] = log_bernoulli(out.y[i], prob);
  }
  return out;
}

EligibilitySet readout_eligibility(const NeuronLayer& layer,
                                   const TraceState& state,
                                   std::span<const double> u,
                                   std::span<const uint8_t> y) {
  const int num_kernels = layer.filter.num_kernels;
  EligibilitySet e;
  e.synaptic = Matrix(layer.n_post, layer.weight_cols());
  e.feedback.resize(layer.n_post);
  e.bias.resize(layer.n_post);
  for (int i = 0; i < layer.n_post; ++i) {
    const double err = static_cast<double>(y[i]) - sigmoid(u[i]);
    for (int j = 0; j < layer.n_pre; ++j) {
      for (int k = 0; k < num_kernels; ++k) {
        e.synaptic(i, j * num_kernels + k) =
            state.pk[static_cast<size_t>(j) * num_kernels + k] * err;
      }
    }
    e.feedback[i] = state.r[i] * err;
    e.bias[i] = err;
  }
  return e;
}

EligibilitySet hidden_eligibility(const NeuronLayer& layer,
                                  const TraceState& state,
                                  std::span<const double> u,
                                  SurrogateKind surrogate, double threshold) {
  EligibilitySet e;
  e.synaptic = Matrix(layer.n_post, layer.n_pre);
  e.feedback.resize(layer.n_post);
  e.bias.resize(layer.n_post);
  for (int i = 0; i < layer.n_post; ++i) {
    const double g = surrogate_derivative(u[i] - threshold, surrogate);
    for (int j = 0; j < layer.n_pre; ++j) {
      e.synaptic(i, j) = g * state.p[j];
    }
    e.feedback[i] = g * state.r[i];
    e.bias[i] = g;
  }
  return e;
}

std::vector<double> learning_signal(const Matrix& feedback,
                                    std::span<const uint8_t> y,
                                    std::span<const double> sigma_u) {
  VDIB_CHECK(static_cast<int>(y.size()) == feedback.cols &&
             y.size() == sigma_u.size(),
             "learning_signal dimension mismatch");
  std::vector<double> err(y.size());
  for (size_t k = 0; k < y.size(); ++k) {
    err[k] = static_cast<double>(y[k]) - sigma_u[k];
  }
  std::vector<double> L(feedback.rows);
  matvec(feedback, err, L);
  return L;
}

void EncoderNetwork::reset() {
  for (auto& s : state) s.reset();
  std::fill(last_input.begin(), last_input.end(), 0);
}

EncoderNetwork build_encoder(int n_in, const std::vector<int>& hidden_sizes,
                             int n_readout, const FilterParams& hidden_filter,
                             const FilterParams& readout_filter, Rng& rng) {
  VDIB_CHECK(n_in > 0 && n_readout > 0);
  hidden_filter.validate();
  readout_filter.validate();

  EncoderNetwork net;
  net.n_in = n_in;
  net.last_input.assign(n_in, 0);

  int pre = n_in;
  for (int size : hidden_sizes) {
    VDIB_CHECK(size > 0);
    NeuronLayer layer;
    layer.kind = LayerKind::hidden_deterministic;
    layer.n_pre = pre;
    layer.n_post = size;
    layer.filter = hidden_filter;
    layer.weights = Matrix(size, pre);
    const double c = std::sqrt(1.0 / pre);
    for (double& w : layer.weights.data) w = rng.uniform(-c, c);
    layer.feedback_weights.assign(size, -1.0);
    layer.biases.assign(size, -1.0);
    net.layers.push_back(std::move(layer));
    pre = size;
  }

  NeuronLayer readout;
  readout.kind = LayerKind::readout_stochastic;
  readout.n_pre = pre;
  readout.n_post = n_readout;
  readout.filter = readout_filter;
  readout.kernels = build_readout_kernels(readout_filter);
  readout.weights = Matrix(n_readout, pre * readout_filter.num_kernels);
  const double c = std::sqrt(1.0 / (pre * readout_filter.num_kernels));
  for (double& w : readout.weights.data) w = rng.uniform(-c, c);
  readout.feedback_weights.assign(n_readout, 0.0);
  readout.biases.assign(n_readout, -1.0);
  net.layers.push_back(std::move(readout));

  for (const auto& layer : net.layers) {
    net.state.emplace_back(layer.n_pre, layer.n_post, layer.filter.tau_e,
                           layer.filter.num_kernels, layer.kind);
  }

  // Fixed random feedback matrices, one per hidden layer; never trained.
  const double b_scale = 1.0 / std::sqrt(static_cast<double>(n_readout));
  for (size_t l = 0; l + 1 < net.layers.size(); ++l) {
    Matrix b(net.layers[l].n_post, n_readout);
    for (double& v : b.data) v = rng.uniform(-1.0, 1.0) * b_scale;
    net.feedback_matrices.push_back(std::move(b));
  }
  return net;
}

namespace {

StepResult step_impl(EncoderNetwork& net, std::span<const uint8_t> x_t,
                     Rng* rng, std::span<const uint8_t> forced_y) {
  VDIB_CHECK(static_cast<int>(x_t.size()) == net.n_in,
             "input dimension mismatch");
  const size_t n_layers = net.layers.size();

  // Phase A: advance every layer's traces using the t-1 spike vectors.
  // last_spikes still hold the t-1 outputs while this loop runs.
  for (size_t l = 0; l < n_layers; ++l) {
    std::span<const uint8_t> pre_prev =
        l == 0 ? std::span<const uint8_t>(net.last_input)
               : std::span<const uint8_t>(net.state[l - 1].last_spikes);
    trace_step(net.state[l], pre_prev, net.state[l].last_spikes,
               net.layers[l].filter);
    if (net.layers[l].kind == LayerKind::readout_stochastic) {
      readout_ring_step(net.state[l], pre_prev, net.layers[l]);
    }
  }
  std::copy(x_t.begin(), x_t.end(), net.last_input.begin());

  // Phase B: potentials and spikes, front to back.
  StepResult result;
  result.layers.resize(n_layers);
  for (size_t l = 0; l < n_layers; ++l) {
    const NeuronLayer& layer = net.layers[l];
    LayerStepResult& lr = result.layers[l];
    lr.u = membrane_potential(layer, net.state[l]);
    if (layer.kind == LayerKind::hidden_deterministic) {
      lr.spikes = hidden_step(lr.u);
      lr.post_factor.resize(layer.n_post);
      for (int i = 0; i < layer.n_post; ++i) {
        lr.post_factor[i] = surrogate_derivative(
            lr.u[i] - net.surrogate_threshold, net.surrogate);
      }
    } else {
      result.sigma_u.resize(layer.n_post);
      for (int i = 0; i < layer.n_post; ++i) {
        result.sigma_u[i] = sigmoid(lr.u[i]);
      }
      result.logprobs.resize(layer.n_post);
      lr.spikes.resize(layer.n_post);
      if (!forced_y.empty()) {
        VDIB_CHECK(static_cast<int>(forced_y.size()) == layer.n_post,
                   "clamped readout dimension mismatch");
        for (int i = 0; i < layer.n_post; ++i) {
          lr.spikes[i] = forced_y[i];
          result.logprobs[i] = log_bernoulli(forced_y[i], result.sigma_u[i]);
        }
      } else {
        for (int i = 0; i < layer.n_post; ++i) {
          lr.spikes[i] = static_cast<uint8_t>(rng->bernoulli(result.sigma_u[i]));
          result.logprobs[i] = log_bernoulli(lr.spikes[i], result.sigma_u[i]);
        }
      }
      result.y = lr.spikes;
      lr.post_factor.resize(layer.n_post);
      for (int i = 0; i < layer.n_post; ++i) {
        lr.post_factor[i] =
            static_cast<double>(lr.spikes[i]) - result.sigma_u[i];
      }
    }
    net.state[l].last_spikes = lr.spikes;
  }

  for (size_t l = 0; l + 1 < n_layers; ++l) {
    result.learning_signals.push_back(
        learning_signal(net.feedback_matrices[l], result.y, result.sigma_u));
  }
  return result;
}

}  // namespace

StepResult forward_step(EncoderNetwork& net, std::span<const uint8_t> x_t,
                        Rng& rng) {
  return step_impl(net, x_t, &rng, {});
}

StepResult teacher_forced_step(EncoderNetwork& net,
                               std::span<const uint8_t> x_t,
                               std::span<const uint8_t> y_t) {
  return step_impl(net, x_t, nullptr, y_t);
}

double sequence_log_prob(EncoderNetwork& net, const SpikeTrain& x,
                         const SpikeTrain& y) {
  VDIB_CHECK(x.units == net.n_in && y.units == net.n_readout() &&
             x.steps == y.steps,
             "sequence_log_prob shape mismatch");
  net.reset();
  double total = 0.0;
  std::vector<uint8_t> x_t(x.units), y_t(y.units);
  for (int t = 0; t < x.steps; ++t) {
    for (int u = 0; u < x.units; ++u) x_t[u] = x.at(u, t);
    for (int u = 0; u < y.units; ++u) y_t[u] = y.at(u, t);
    StepResult step = teacher_forced_step(net, x_t, y_t);
    for (double lp : step.logprobs) total += lp;
  }
  return total;
}

}  // namespace vdib
