#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vdib/decoder.hpp"
#include "vdib/encoder.hpp"
#include "vdib/sequence.hpp"

namespace vdib {

enum class UpdateMode { online, episodic };

// What the decoder sees: the full spatiotemporal window, or the per-unit
// spike counts over that window (the rate-decoding benchmark).
enum class DecodeFeatures { windowed, rate };

UpdateMode update_mode_from_string(const std::string& name);
std::string to_string(UpdateMode mode);
DecodeFeatures decode_features_from_string(const std::string& name);
std::string to_string(DecodeFeatures features);

// Objective and optimization hyperparameters.
struct VdibConfig {
  double beta = 1.0;        // IB trade-off
  double eta = 1e-2;        // learning rate
  double eta_decoder = -1;  // < 0: use eta for the decoder too
  double kappa = 0.0;       // EMA baseline; 0 = no baseline
  double prior_p = 0.2;     // sparse Bernoulli reference distribution
  int tau_e = 5;
  int tau_d = 5;
  int T = 100;
  UpdateMode update_mode = UpdateMode::online;
  DecodeFeatures decode_features = DecodeFeatures::windowed;
  double signal_clip = 100.0;

  double decoder_eta() const { return eta_decoder < 0 ? eta : eta_decoder; }
  void validate() const;
};

// Decoder input for the current window under either feature mode.
std::vector<double> decode_features_of(const WindowBuffer& window,
                                       DecodeFeatures mode);

struct StepLosses {
  double ell_dec = 0.0;
  double ell_enc = 0.0;
  double global_signal = 0.0;
};

struct MetricRow {
  long iter = 0;
  double ell_dec = 0.0;
  double ell_enc = 0.0;
  double spike_rate_readout = 0.0;
  double spike_rate_hidden = 0.0;
  double task_metric = 0.0;
};

// Append-only per-interval training records; CSV schema is fixed:
// iter,ell_dec,ell_enc,spike_rate_readout,spike_rate_hidden,task_metric
struct MetricLog {
  std::vector<MetricRow> rows;

  static const char* csv_header();
  void write_csv(std::ostream& os) const;
  void write_csv_file(const std::string& path) const;
};

// Per-step encoder loss sum_i [ log p(y_i|u_i) - log Bern(y_i | prior_p) ].
double encoder_loss_step(std::span<const double> readout_logprobs,
                         std::span<const uint8_t> y_t, double prior_p);

// Exponential-moving-average baseline for the global learning signal.
// kappa = 0 reproduces the raw signal exactly (no baseline state is kept).
struct SignalBaseline {
  double baseline = 0.0;
};

double global_learning_signal(const StepLosses& losses, double beta,
                              double kappa, SignalBaseline& ema_state);

// Encoder parameter update direction, one entry per layer, mirroring the
// layer's parameter shapes. Used to accumulate sum_t Delta_t in episodic mode.
struct EncoderGradAccum {
  std::vector<Matrix> synaptic;
  std::vector<std::vector<double>> feedback;
  std::vector<std::vector<double>> bias;

  void init_like(const EncoderNetwork& net);
  void clear();
};

// Adds the step's update direction (readout: e_t; hidden: L_t * e_t) scaled
// by `scale` into the accumulator. Reads the traces from net.state, which
// must still hold the step-t values.
void accumulate_step_direction(EncoderGradAccum& accum,
                               const EncoderNetwork& net,
                               const StepResult& step, double scale);

// w <- w - eta * signal * accum  (signature used by the episodic path and by
// the materialized-eligibility form below).
void apply_encoder_update(EncoderNetwork& net, const EncoderGradAccum& accum,
                          double signal, double eta);

// Spec-shaped form: applies -eta * signal * Delta with Delta built from
// materialized eligibility sets and per-hidden-layer learning signals.
void apply_encoder_update(
    EncoderNetwork& net, const std::vector<EligibilitySet>& eligibilities,
    const std::vector<std::vector<double>>& learning_signals, double signal,
    double eta);

struct TrainStepStats {
  long iter = 0;
  double mean_ell_dec = 0.0;   // over defined reference steps
  double mean_ell_enc = 0.0;   // per timestep
  double spike_rate_readout = 0.0;
  double spike_rate_hidden = 0.0;
  double task_metric = 0.0;    // MSE between predicted mean and reference
  int defined_steps = 0;
  int clip_events = 0;
};

// One full episode of Algorithm-style training on (x, r): per-timestep
// encoder sampling, windowed decoding, losses, and updates to both networks
// (every step in online mode, once per episode in episodic mode).
TrainStepStats train_step(EncoderNetwork& net, DecoderModel& decoder,
                          const LabeledSequence& sample,
                          const VdibConfig& config, Rng& rng,
                          SignalBaseline& baseline);

using SampleSource = std::function<LabeledSequence(long iter, Rng& rng)>;
using CheckpointHook = std::function<void(long iter)>;

// Iterates train_step over n_iterations samples; appends one MetricRow per
// log_interval iterations (interval means). checkpoint_hook, when set, fires
// every checkpoint_interval iterations and once at the end.
MetricLog train(EncoderNetwork& net, DecoderModel& decoder,
                const SampleSource& source, const VdibConfig& config,
                long n_iterations, long log_interval, Rng& rng,
                long checkpoint_interval = 0,
                const CheckpointHook& checkpoint_hook = nullptr);

// ----- Brute-force enumeration oracles (tiny instances) -----

// Gradient of the enumerated expected VDIB loss w.r.t. the readout
// parameters, plus the exact KL(p(y||x) || q(y)). Requires a pure readout
// network (no hidden layers) and N_Y * T <= 12. All traces are evaluated by
// direct truncated convolution, independently of the AR / ring-buffer path.
struct EnumerationResult {
  double expected_loss = 0.0;
  Matrix d_weights;
  std::vector<double> d_feedback;
  std::vector<double> d_bias;
  double exact_kl = 0.0;
  double prob_total = 0.0;  // sum_y p(y || x); 1 up to float error
};

EnumerationResult enumerate_expected_loss(const EncoderNetwork& net,
                                          const DecoderModel& decoder,
                                          const LabeledSequence& sample,
                                          const VdibConfig& config);

// Production-path episodic quantities for one clamped readout sequence:
// total signal, accumulated update direction, and the sequence log-prob.
// This is the estimator whose enumerated expectation criterion 4 compares
// against the oracle above.
struct EpisodicEstimate {
  double total_signal = 0.0;   // sum_t (ell_dec_t + beta * ell_enc_t)
  double ell_enc_total = 0.0;
  double ell_dec_total = 0.0;
  double log_prob = 0.0;
  EncoderGradAccum direction;  // sum_t Delta_t
};

EpisodicEstimate episodic_estimate(EncoderNetwork& net,
                                   const DecoderModel& decoder,
                                   const LabeledSequence& sample,
                                   const SpikeTrain& y,
                                   const VdibConfig& config);

}  // namespace vdib
