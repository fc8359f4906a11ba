#include "vdib/trainer.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace vdib {

UpdateMode update_mode_from_string(const std::string& name) {
  if (name == "online") return UpdateMode::online;
  if (name == "episodic") return UpdateMode::episodic;
  throw ConfigError("unknown update mode: " + name);
}

std::string to_string(UpdateMode mode) {
  return mode == UpdateMode::online ? "online" : "episodic";
}

DecodeFeatures decode_features_from_string(const std::string& name) {
  if (name == "windowed") return DecodeFeatures::windowed;
  if (name == "rate") return DecodeFeatures::rate;
  throw ConfigError("unknown decode features: " + name);
}

std::string to_string(DecodeFeatures features) {
  return features == DecodeFeatures::windowed ? "windowed" : "rate";
}

std::vector<double> decode_features_of(const WindowBuffer& window,
                                       DecodeFeatures mode) {
  return mode == DecodeFeatures::rate ? rate_pool(window) : window.features();
}

void VdibConfig::validate() const {
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (eta < 0.0) throw ConfigError("eta must be >= 0");
  if (kappa < 0.0 || kappa >= 1.0) throw ConfigError("kappa must be in [0,1)");
  if (prior_p <= 0.0 || prior_p >= 1.0) {
    throw ConfigError("prior_p must be in (0,1)");
  }
  if (tau_e < 1 || tau_d < 1) throw ConfigError("tau_e, tau_d must be >= 1");
  if (T < 1) throw ConfigError("T must be >= 1");
  if (signal_clip <= 0.0) throw ConfigError("signal_clip must be > 0");
}

const char* MetricLog::csv_header() {
  return "iter,ell_dec,ell_enc,spike_rate_readout,spike_rate_hidden,"
         "task_metric";
}

void MetricLog::write_csv(std::ostream& os) const {
  os << csv_header() << "\n";
  os.precision(12);
  for (const MetricRow& r : rows) {
    os << r.iter << ',' << r.ell_dec << ',' << r.ell_enc << ','
       << r.spike_rate_readout << ',' << r.spike_rate_hidden << ','
       << r.task_metric << "\n";
  }
}

void MetricLog::write_csv_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open metrics file for writing: " + path);
  write_csv(os);
  if (!os) throw IoError("failed writing metrics file: " + path);
}

double encoder_loss_step(std::span<const double> readout_logprobs,
                         std::span<const uint8_t> y_t, double prior_p) {
  VDIB_CHECK(readout_logprobs.size() == y_t.size());
  double loss = 0.0;
  for (size_t i = 0; i < y_t.size(); ++i) {
    loss += readout_logprobs[i] - log_bernoulli(y_t[i], prior_p);
  }
  return loss;
}

double global_learning_signal(const StepLosses& losses, double beta,
                              double kappa, SignalBaseline& ema_state) {
  const double raw = losses.ell_dec + beta * losses.ell_enc;
  if (kappa == 0.0) return raw;
  const double signal = raw - ema_state.baseline;
  ema_state.baseline = kappa * ema_state.baseline + (1.0 - kappa) * raw;
  return signal;
}

void EncoderGradAccum::init_like(const EncoderNetwork& net) {
  synaptic.clear();
  feedback.clear();
  bias.clear();
  for (const NeuronLayer& layer : net.layers) {
    synaptic.emplace_back(layer.n_post, layer.weight_cols());
    feedback.emplace_back(layer.n_post, 0.0);
    bias.emplace_back(layer.n_post, 0.0);
  }
}

void EncoderGradAccum::clear() {
  for (Matrix& m : synaptic) m.fill(0.0);
  for (auto& v : feedback) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : bias) std::fill(v.begin(), v.end(), 0.0);
}

namespace {

// Per-post-unit update factor a_i so that Delta(i, j) = a_i * trace_j:
// readout a_i = y_i - sigma(u_i); hidden a_i = L_i * theta'(u_i - threshold).
double post_scale(const EncoderNetwork& net, const StepResult& step, size_t l,
                  int i) {
  const bool is_readout = l + 1 == net.layers.size();
  if (is_readout) return step.layers[l].post_factor[i];
  return step.learning_signals[l][i] * step.layers[l].post_factor[i];
}

const std::vector<double>& layer_pre_trace(const EncoderNetwork& net,
                                           size_t l) {
  return net.layers[l].kind == LayerKind::readout_stochastic ? net.state[l].pk
                                                             : net.state[l].p;
}

}  // namespace

void accumulate_step_direction(EncoderGradAccum& accum,
                               const EncoderNetwork& net,
                               const StepResult& step, double scale) {
  for (size_t l = 0; l < net.layers.size(); ++l) {
    const NeuronLayer& layer = net.layers[l];
    const TraceState& st = net.state[l];
    const std::vector<double>& trace = layer_pre_trace(net, l);
    Matrix& acc = accum.synaptic[l];
    for (int i = 0; i < layer.n_post; ++i) {
      const double a = scale * post_scale(net, step, l, i);
      if (a == 0.0) continue;
      double* row = acc.data.data() + static_cast<size_t>(i) * acc.cols;
      for (int c = 0; c < acc.cols; ++c) row[c] += a * trace[c];
      accum.feedback[l][i] += a * st.r[i];
      accum.bias[l][i] += a;
    }
  }
}

void apply_encoder_update(EncoderNetwork& net, const EncoderGradAccum& accum,
                          double signal, double eta) {
  const double scale = -eta * signal;
  if (scale == 0.0) return;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    NeuronLayer& layer = net.layers[l];
    for (size_t i = 0; i < layer.weights.data.size(); ++i) {
      layer.weights.data[i] += scale * accum.synaptic[l].data[i];
    }
    for (int i = 0; i < layer.n_post; ++i) {
      layer.feedback_weights[i] += scale * accum.feedback[l][i];
      layer.biases[i] += scale * accum.bias[l][i];
    }
  }
}

void apply_encoder_update(
    EncoderNetwork& net, const std::vector<EligibilitySet>& eligibilities,
    const std::vector<std::vector<double>>& learning_signals, double signal,
    double eta) {
  VDIB_CHECK(eligibilities.size() == net.layers.size());
  const double scale = -eta * signal;
  if (scale == 0.0) return;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    NeuronLayer& layer = net.layers[l];
    const EligibilitySet& e = eligibilities[l];
    const bool is_readout = l + 1 == net.layers.size();
    for (int i = 0; i < layer.n_post; ++i) {
      const double li = is_readout ? 1.0 : learning_signals[l][i];
      double* wrow =
          layer.weights.data.data() + static_cast<size_t>(i) * layer.weights.cols;
      const double* erow =
          e.synaptic.data.data() + static_cast<size_t>(i) * e.synaptic.cols;
      for (int c = 0; c < layer.weights.cols; ++c) {
        wrow[c] += scale * li * erow[c];
      }
      layer.feedback_weights[i] += scale * li * e.feedback[i];
      layer.biases[i] += scale * li * e.bias[i];
    }
  }
}

namespace {

// Direct rank-1 form of the online update: w -= eta*signal*Delta_t, reading
// the step-t traces still present in net.state.
void apply_step_update(EncoderNetwork& net, const StepResult& step,
                       double signal, double eta) {
  const double base = -eta * signal;
  if (base == 0.0) return;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    NeuronLayer& layer = net.layers[l];
    const TraceState& st = net.state[l];
    const std::vector<double>& trace = layer_pre_trace(net, l);
    for (int i = 0; i < layer.n_post; ++i) {
      const double a = base * post_scale(net, step, l, i);
      if (a == 0.0) continue;
      double* row =
          layer.weights.data.data() + static_cast<size_t>(i) * layer.weights.cols;
      for (int c = 0; c < layer.weights.cols; ++c) row[c] += a * trace[c];
      layer.feedback_weights[i] += a * st.r[i];
      layer.biases[i] += a;
    }
  }
}

double clip_signal(double signal, double limit, int& events) {
  if (signal > limit) {
    ++events;
    return limit;
  }
  if (signal < -limit) {
    ++events;
    return -limit;
  }
  return signal;
}

double mean_squared_error(std::span<const double> a,
                          std::span<const double> b) {
  VDIB_CHECK(a.size() == b.size() && !a.empty());
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

}  // namespace

TrainStepStats train_step(EncoderNetwork& net, DecoderModel& decoder,
                          const LabeledSequence& sample,
                          const VdibConfig& config, Rng& rng,
                          SignalBaseline& baseline) {
  config.validate();
  const int T = sample.x.steps;
  VDIB_CHECK(sample.x.units == net.n_in, "sample/encoder width mismatch");
  VDIB_CHECK(sample.r.rows == decoder.n_out, "sample/decoder width mismatch");
  VDIB_CHECK(static_cast<int>(sample.r_defined.size()) == T &&
             sample.r.cols == T,
             "reference length mismatch");

  net.reset();
  WindowBuffer window(net.n_readout(), config.tau_d);

  const bool episodic = config.update_mode == UpdateMode::episodic;
  EncoderGradAccum accum;
  DecoderGradients dec_accum;
  if (episodic) {
    accum.init_like(net);
    dec_accum = zero_gradients(decoder);
  }

  TrainStepStats stats;
  double ell_dec_total = 0.0;
  double ell_enc_total = 0.0;
  long readout_spikes = 0;
  long hidden_spikes = 0;
  long hidden_units = 0;
  double metric_total = 0.0;

  std::vector<uint8_t> x_t(sample.x.units);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < sample.x.units; ++u) x_t[u] = sample.x.at(u, t);
    StepResult step = forward_step(net, x_t, rng);
    window_push(window, step.y);

    const double ell_enc_t =
        encoder_loss_step(step.logprobs, step.y, config.prior_p);
    ell_enc_total += ell_enc_t;

    double ell_dec_t = 0.0;
    BackpropResult bp;
    const bool defined = sample.r_defined[t] != 0;
    if (defined) {
      const std::vector<double> r_t = sample.reference_at(t);
      bp = decoder_backprop(
          decoder, decode_features_of(window, config.decode_features), r_t);
      ell_dec_t = bp.loss;
      ell_dec_total += ell_dec_t;
      ++stats.defined_steps;
      metric_total += mean_squared_error(
          predicted_mean(bp.outputs, decoder.likelihood), r_t);
    }

    if (episodic) {
      accumulate_step_direction(accum, net, step, 1.0);
      if (defined) add_gradients(dec_accum, bp.grads);
    } else {
      StepLosses losses{ell_dec_t, ell_enc_t, 0.0};
      double signal =
          global_learning_signal(losses, config.beta, config.kappa, baseline);
      signal = clip_signal(signal, config.signal_clip, stats.clip_events);
      apply_step_update(net, step, signal, config.eta);
      if (defined) {
        apply_decoder_update(decoder, bp.grads, config.decoder_eta());
      }
    }

    for (uint8_t s : step.y) readout_spikes += s;
    for (size_t l = 0; l + 1 < net.layers.size(); ++l) {
      for (uint8_t s : step.layers[l].spikes) hidden_spikes += s;
      hidden_units += net.layers[l].n_post;
    }
  }

  if (episodic) {
    StepLosses totals{ell_dec_total, ell_enc_total, 0.0};
    double signal =
        global_learning_signal(totals, config.beta, config.kappa, baseline);
    signal = clip_signal(signal, config.signal_clip, stats.clip_events);
    apply_encoder_update(net, accum, signal, config.eta);
    apply_decoder_update(decoder, dec_accum, config.decoder_eta());
  }

  stats.mean_ell_dec =
      stats.defined_steps ? ell_dec_total / stats.defined_steps : 0.0;
  stats.mean_ell_enc = T > 0 ? ell_enc_total / T : 0.0;
  stats.spike_rate_readout =
      T > 0 ? static_cast<double>(readout_spikes) / (net.n_readout() * T) : 0.0;
  stats.spike_rate_hidden =
      hidden_units > 0 ? static_cast<double>(hidden_spikes) / hidden_units : 0.0;
  stats.task_metric =
      stats.defined_steps ? metric_total / stats.defined_steps : 0.0;
  return stats;
}

MetricLog train(EncoderNetwork& net, DecoderModel& decoder,
                const SampleSource& source, const VdibConfig& config,
                long n_iterations, long log_interval, Rng& rng,
                long checkpoint_interval,
                const CheckpointHook& checkpoint_hook) {
  VDIB_CHECK(n_iterations >= 0 && log_interval >= 1);
  MetricLog log;
  SignalBaseline baseline;
  MetricRow acc;
  long in_interval = 0;

  for (long iter = 1; iter <= n_iterations; ++iter) {
    const LabeledSequence sample = source(iter, rng);
    const TrainStepStats stats =
        train_step(net, decoder, sample, config, rng, baseline);
    acc.ell_dec += stats.mean_ell_dec;
    acc.ell_enc += stats.mean_ell_enc;
    acc.spike_rate_readout += stats.spike_rate_readout;
    acc.spike_rate_hidden += stats.spike_rate_hidden;
    acc.task_metric += stats.task_metric;
    ++in_interval;

    if (in_interval == log_interval || iter == n_iterations) {
      MetricRow row;
      row.iter = iter;
      row.ell_dec = acc.ell_dec / in_interval;
      row.ell_enc = acc.ell_enc / in_interval;
      row.spike_rate_readout = acc.spike_rate_readout / in_interval;
      row.spike_rate_hidden = acc.spike_rate_hidden / in_interval;
      row.task_metric = acc.task_metric / in_interval;
      log.rows.push_back(row);
      acc = MetricRow{};
      in_interval = 0;
    }
    if (checkpoint_hook && checkpoint_interval > 0 &&
        (iter % checkpoint_interval == 0 || iter == n_iterations)) {
      checkpoint_hook(iter);
    }
  }
  if (checkpoint_hook && checkpoint_interval == 0 && n_iterations >= 0) {
    checkpoint_hook(n_iterations);
  }
  return log;
}

// ----- Enumeration oracles -----

namespace {

std::vector<double> window_features_of(const SpikeTrain& y, int t, int tau_d,
                                       DecodeFeatures mode) {
  // t is 1-based; features are (oldest..newest) x unit.
  std::vector<double> f(static_cast<size_t>(tau_d) * y.units, 0.0);
  for (int s = 0; s < tau_d; ++s) {
    const int src_t = t - tau_d + 1 + s;  // 1-based
    if (src_t < 1) continue;
    for (int i = 0; i < y.units; ++i) {
      f[static_cast<size_t>(s) * y.units + i] = y.at(i, src_t - 1);
    }
  }
  if (mode == DecodeFeatures::rate) {
    std::vector<double> sums(y.units, 0.0);
    for (int s = 0; s < tau_d; ++s) {
      for (int i = 0; i < y.units; ++i) {
        sums[i] += f[static_cast<size_t>(s) * y.units + i];
      }
    }
    return sums;
  }
  return f;
}

}  // namespace

EnumerationResult enumerate_expected_loss(const EncoderNetwork& net,
                                          const DecoderModel& decoder,
                                          const LabeledSequence& sample,
                                          const VdibConfig& config) {
  VDIB_CHECK(net.layers.size() == 1,
             "enumeration oracle requires a pure readout network");
  const NeuronLayer& layer = net.layers.back();
  const SpikeTrain& x = sample.x;
  const int n_y = layer.n_post;
  const int T = x.steps;
  const int n_pre = layer.n_pre;
  const int K = layer.filter.num_kernels;
  VDIB_CHECK(x.units == n_pre);
  VDIB_CHECK(n_y * T >= 1 && n_y * T <= 12, "instance too large to enumerate");

  // Input-driven per-kernel traces by direct truncated convolution.
  Matrix pk_t(T, n_pre * K);
  for (int t = 1; t <= T; ++t) {
    for (int j = 0; j < n_pre; ++j) {
      for (int k = 0; k < K; ++k) {
        pk_t(t - 1, j * K + k) =
            causal_convolve(layer.kernels[k], x.unit_row(j), t);
      }
    }
  }
  // Feedback trace kernel of the first-order AR recursion, untruncated
  // within the sequence, so it matches the recursive path exactly.
  const CausalFilter fb = trace_feedback_kernel(layer.filter, T);

  EnumerationResult result;
  result.d_weights = Matrix(layer.n_post, layer.weight_cols());
  result.d_feedback.assign(n_y, 0.0);
  result.d_bias.assign(n_y, 0.0);

  Matrix g_w(layer.n_post, layer.weight_cols());
  std::vector<double> g_fb(n_y), g_b(n_y);

  const uint64_t n_seq = uint64_t{1} << (n_y * T);
  SpikeTrain y(n_y, T);
  for (uint64_t mask = 0; mask < n_seq; ++mask) {
    for (int i = 0; i < n_y; ++i) {
      for (int t = 0; t < T; ++t) {
        y.set(i, t, (mask >> (i * T + t)) & 1u);
      }
    }

    g_w.fill(0.0);
    std::fill(g_fb.begin(), g_fb.end(), 0.0);
    std::fill(g_b.begin(), g_b.end(), 0.0);

    double log_p = 0.0;
    double log_q = 0.0;
    for (int t = 1; t <= T; ++t) {
      for (int i = 0; i < n_y; ++i) {
        const double r_trace = causal_convolve(fb, y.unit_row(i), t);
        double u = layer.biases[i] + layer.feedback_weights[i] * r_trace;
        const double* wrow = layer.weights.data.data() +
                             static_cast<size_t>(i) * layer.weights.cols;
        const double* pkrow =
            pk_t.data.data() + static_cast<size_t>(t - 1) * pk_t.cols;
        for (int c = 0; c < layer.weights.cols; ++c) u += wrow[c] * pkrow[c];

        const int y_it = y.at(i, t - 1);
        const double sig = sigmoid(u);
        log_p += log_bernoulli(y_it, sig);
        log_q += log_bernoulli(y_it, config.prior_p);

        const double err = static_cast<double>(y_it) - sig;
        double* grow =
            g_w.data.data() + static_cast<size_t>(i) * g_w.cols;
        for (int c = 0; c < g_w.cols; ++c) grow[c] += err * pkrow[c];
        g_fb[i] += err * r_trace;
        g_b[i] += err;
      }
    }

    double ell_dec = 0.0;
    for (int t = 1; t <= T; ++t) {
      if (!sample.r_defined[t - 1]) continue;
      const std::vector<double> feats =
          window_features_of(y, t, config.tau_d, config.decode_features);
      const std::vector<double> out = decoder_forward(decoder, feats);
      ell_dec += decoder_logloss(out, sample.reference_at(t - 1),
                                 decoder.likelihood);
    }

    const double p = std::exp(log_p);
    const double ell_enc = log_p - log_q;
    const double loss = ell_dec + config.beta * ell_enc;

    result.prob_total += p;
    result.expected_loss += p * loss;
    result.exact_kl += p * (log_p - log_q);

    // d/dw E[loss] = E[(loss) * dlogp/dw] + beta * E[dlogp/dw]; the second
    // term has zero mean analytically and is kept for exactness.
    const double wgt = p * (loss + config.beta);
    for (size_t c = 0; c < g_w.data.size(); ++c) {
      result.d_weights.data[c] += wgt * g_w.data[c];
    }
    for (int i = 0; i < n_y; ++i) {
      result.d_feedback[i] += wgt * g_fb[i];
      result.d_bias[i] += wgt * g_b[i];
    }
  }
  return result;
}

EpisodicEstimate episodic_estimate(EncoderNetwork& net,
                                   const DecoderModel& decoder,
                                   const LabeledSequence& sample,
                                   const SpikeTrain& y,
                                   const VdibConfig& config) {
  const int T = sample.x.steps;
  VDIB_CHECK(y.units == net.n_readout() && y.steps == T);

  net.reset();
  WindowBuffer window(net.n_readout(), config.tau_d);
  EpisodicEstimate est;
  est.direction.init_like(net);

  std::vector<uint8_t> x_t(sample.x.units), y_t(y.units);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < sample.x.units; ++u) x_t[u] = sample.x.at(u, t);
    for (int u = 0; u < y.units; ++u) y_t[u] = y.at(u, t);
    const StepResult step = teacher_forced_step(net, x_t, y_t);
    window_push(window, y_t);

    est.ell_enc_total +=
        encoder_loss_step(step.logprobs, y_t, config.prior_p);
    for (double lp : step.logprobs) est.log_prob += lp;

    if (sample.r_defined[t]) {
      const std::vector<double> out = decoder_forward(
          decoder, decode_features_of(window, config.decode_features));
      est.ell_dec_total += decoder_logloss(out, sample.reference_at(t),
                                           decoder.likelihood);
    }
    accumulate_step_direction(est.direction, net, step, 1.0);
  }
  est.total_signal = est.ell_dec_total + config.beta * est.ell_enc_total;
  return est;
}

}  // namespace vdib
