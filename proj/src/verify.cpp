#include "vdib/verify.hpp"

#include <cmath>

#include "vdib/trainer.hpp"

namespace vdib {

namespace {

double mixed_error(double got, double want) {
  return std::abs(got - want) /
         std::max({1.0, std::abs(got), std::abs(want)});
}

SpikeTrain random_train(int units, int steps, double p, Rng& rng) {
  SpikeTrain train(units, steps);
  for (auto& v : train.data) v = static_cast<uint8_t>(rng.bernoulli(p));
  return train;
}

// Small pure-readout network with randomized filter setup and weights.
EncoderNetwork random_readout_net(int n_pre, int n_y, int tau_e, int kernels,
                                  Rng& rng) {
  FilterParams f;
  f.tau_mem = rng.uniform(5.0, 20.0);
  f.tau_syn = rng.uniform(1.0, 4.0);
  f.tau_ref = rng.uniform(3.0, 12.0);
  f.tau_e = tau_e;
  f.num_kernels = kernels;
  EncoderNetwork net = build_encoder(n_pre, {}, n_y, f, f, rng);
  NeuronLayer& layer = net.layers.back();
  for (double& w : layer.weights.data) w = rng.uniform(-1.0, 1.0);
  for (double& w : layer.feedback_weights) w = rng.uniform(-1.0, 1.0);
  for (double& b : layer.biases) b = rng.uniform(-1.0, 1.0);
  return net;
}

// Summed readout log-likelihood of y_t at the final step of a teacher-forced
// run; the finite-difference target for the eligibility check.
double final_step_loglik(EncoderNetwork& net, const SpikeTrain& x,
                         const SpikeTrain& y) {
  net.reset();
  std::vector<uint8_t> x_t(x.units), y_t(y.units);
  double last = 0.0;
  for (int t = 0; t < x.steps; ++t) {
    for (int u = 0; u < x.units; ++u) x_t[u] = x.at(u, t);
    for (int u = 0; u < y.units; ++u) y_t[u] = y.at(u, t);
    const StepResult step = teacher_forced_step(net, x_t, y_t);
    last = 0.0;
    for (double lp : step.logprobs) last += lp;
  }
  return last;
}

LabeledSequence tiny_instance(Rng& rng, int n_pre, int n_y, int T, int n_r,
                              bool sparse_reference) {
  LabeledSequence sample;
  sample.x = random_train(n_pre, T, 0.5, rng);
  sample.r = Matrix(n_r, T);
  sample.r_defined.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    if (sparse_reference && t + 1 < T) continue;
    sample.r(static_cast<int>(rng.uniform_below(n_r)), t) = 1.0;
    sample.r_defined[t] = 1;
  }
  return sample;
}

}  // namespace

CheckResult check_readout_gradients(int n_instances, double tolerance,
                                    double inject_error) {
  CheckResult result{"readout-gradients", false, 0.0, tolerance, ""};
  Rng rng(20240901, 1);
  const double h = 1e-5;
  int checked = 0;

  for (int inst = 0; inst < n_instances; ++inst) {
    const int n_pre = 2 + static_cast<int>(rng.uniform_below(3));
    const int n_y = 1 + static_cast<int>(rng.uniform_below(3));
    const int tau_e = 2 + static_cast<int>(rng.uniform_below(3));
    const int kernels = 1 + static_cast<int>(rng.uniform_below(
                                std::min(tau_e, 2)));
    const int T = 3 + static_cast<int>(rng.uniform_below(4));

    EncoderNetwork net = random_readout_net(n_pre, n_y, tau_e, kernels, rng);
    const SpikeTrain x = random_train(n_pre, T, 0.5, rng);
    const SpikeTrain y = random_train(n_y, T, 0.5, rng);

    // Eligibility at the final step, from the production path.
    net.reset();
    std::vector<uint8_t> x_t(n_pre), y_t(n_y);
    StepResult step;
    for (int t = 0; t < T; ++t) {
      for (int u = 0; u < n_pre; ++u) x_t[u] = x.at(u, t);
      for (int u = 0; u < n_y; ++u) y_t[u] = y.at(u, t);
      step = teacher_forced_step(net, x_t, y_t);
    }
    NeuronLayer& layer = net.layers.back();
    EligibilitySet elig = readout_eligibility(
        layer, net.state.back(), step.layers.back().u, step.y);

    auto fd_of = [&](double* param) {
      const double saved = *param;
      *param = saved + h;
      const double hi = final_step_loglik(net, x, y);
      *param = saved - h;
      const double lo = final_step_loglik(net, x, y);
      *param = saved;
      return (hi - lo) / (2.0 * h);
    };

    for (int i = 0; i < layer.n_post; ++i) {
      for (int c = 0; c < layer.weight_cols(); ++c) {
        const double fd = fd_of(&layer.weights(i, c));
        result.max_err = std::max(
            result.max_err, mixed_error(elig.synaptic(i, c) + inject_error, fd));
        ++checked;
      }
      const double fd_fb = fd_of(&layer.feedback_weights[i]);
      result.max_err = std::max(
          result.max_err, mixed_error(elig.feedback[i] + inject_error, fd_fb));
      const double fd_b = fd_of(&layer.biases[i]);
      result.max_err = std::max(
          result.max_err, mixed_error(elig.bias[i] + inject_error, fd_b));
      checked += 2;
    }
  }

  result.pass = result.max_err <= tolerance;
  result.detail = std::to_string(checked) + " parameter entries over " +
                  std::to_string(n_instances) + " instances";
  return result;
}

CheckResult check_decoder_gradients(int instances_per_combo, double tolerance) {
  CheckResult result{"decoder-gradients", false, 0.0, tolerance, ""};
  Rng rng(20240902, 2);
  const double h = 1e-5;
  const DecoderKind kinds[] = {DecoderKind::linear, DecoderKind::mlp};
  const Likelihood likelihoods[] = {Likelihood::categorical,
                                    Likelihood::bernoulli_pixel,
                                    Likelihood::gaussian_unit};
  int checked = 0;

  for (DecoderKind kind : kinds) {
    for (Likelihood likelihood : likelihoods) {
      for (int inst = 0; inst < instances_per_combo; ++inst) {
        const int n_in = 4 + static_cast<int>(rng.uniform_below(6));
        const int n_out = 2 + static_cast<int>(rng.uniform_below(4));
        DecoderModel model =
            build_decoder(kind, likelihood, n_in, n_out, rng);

        std::vector<double> features(n_in);
        for (double& f : features) f = rng.uniform(-1.0, 1.0);
        // Keep hidden pre-activations away from the ReLU kink so the
        // centered difference is valid.
        if (kind == DecoderKind::mlp) {
          bool near_kink = true;
          while (near_kink) {
            near_kink = false;
            std::vector<double> pre(model.n_hidden);
            matvec(model.w1, features, pre);
            for (int i = 0; i < model.n_hidden; ++i) {
              if (std::abs(pre[i] + model.b1[i]) < 1e-3) near_kink = true;
            }
            if (near_kink) {
              for (double& f : features) f = rng.uniform(-1.0, 1.0);
            }
          }
        }

        std::vector<double> r(n_out, 0.0);
        if (likelihood == Likelihood::categorical) {
          r[rng.uniform_below(n_out)] = 1.0;
        } else if (likelihood == Likelihood::bernoulli_pixel) {
          for (double& v : r) v = rng.uniform01();
        } else {
          for (double& v : r) v = rng.uniform(-2.0, 2.0);
        }

        const BackpropResult bp = decoder_backprop(model, features, r);

        auto fd_of = [&](double* param) {
          const double saved = *param;
          *param = saved + h;
          const double hi = decoder_logloss(decoder_forward(model, features),
                                            r, likelihood);
          *param = saved - h;
          const double lo = decoder_logloss(decoder_forward(model, features),
                                            r, likelihood);
          *param = saved;
          return (hi - lo) / (2.0 * h);
        };

        for (size_t i = 0; i < model.w1.data.size(); ++i) {
          result.max_err = std::max(
              result.max_err,
              mixed_error(bp.grads.w1.data[i], fd_of(&model.w1.data[i])));
        }
        for (size_t i = 0; i < model.b1.size(); ++i) {
          result.max_err = std::max(
              result.max_err, mixed_error(bp.grads.b1[i], fd_of(&model.b1[i])));
        }
        if (kind == DecoderKind::mlp) {
          for (size_t i = 0; i < model.w2.data.size(); ++i) {
            result.max_err = std::max(
                result.max_err,
                mixed_error(bp.grads.w2.data[i], fd_of(&model.w2.data[i])));
          }
          for (size_t i = 0; i < model.b2.size(); ++i) {
            result.max_err = std::max(
                result.max_err,
                mixed_error(bp.grads.b2[i], fd_of(&model.b2[i])));
          }
        }
        ++checked;
      }
    }
  }

  result.pass = result.max_err <= tolerance;
  result.detail = std::to_string(checked) + " instances across 6 combinations";
  return result;
}

CheckResult check_normalization(double tolerance) {
  CheckResult result{"normalization", false, 0.0, tolerance, ""};
  Rng rng(20240903, 3);
  const int shapes[][2] = {{1, 4}, {2, 3}, {3, 2}, {2, 5}, {1, 8}};

  for (const auto& shape : shapes) {
    const int n_y = shape[0];
    const int T = shape[1];
    EncoderNetwork net = random_readout_net(3, n_y, 3, 1, rng);
    const SpikeTrain x = random_train(3, T, 0.5, rng);

    double total = 0.0;
    SpikeTrain y(n_y, T);
    const uint64_t n_seq = uint64_t{1} << (n_y * T);
    for (uint64_t mask = 0; mask < n_seq; ++mask) {
      for (int i = 0; i < n_y; ++i) {
        for (int t = 0; t < T; ++t) y.set(i, t, (mask >> (i * T + t)) & 1u);
      }
      total += std::exp(sequence_log_prob(net, x, y));
    }
    result.max_err = std::max(result.max_err, std::abs(total - 1.0));
  }

  result.pass = result.max_err <= tolerance;
  result.detail = "5 enumerable instances";
  return result;
}

namespace {

struct TinyProblem {
  EncoderNetwork net;
  DecoderModel decoder;
  LabeledSequence sample;
  VdibConfig config;
};

TinyProblem make_tiny_problem(Rng& rng, int index) {
  const int n_pre = 2 + static_cast<int>(rng.uniform_below(2));
  const int n_y = 1 + static_cast<int>(rng.uniform_below(2));
  const int T = n_y == 1 ? 3 + static_cast<int>(rng.uniform_below(2)) : 3;
  const int n_r = 3;

  TinyProblem p;
  p.net = random_readout_net(n_pre, n_y, 3, 1, rng);
  p.config.beta = (index % 3 == 0) ? 0.5 : (index % 3 == 1 ? 1.0 : 2.0);
  p.config.prior_p = 0.2 + 0.1 * (index % 3);
  p.config.tau_d = 2;
  p.config.T = T;
  p.config.update_mode = UpdateMode::episodic;
  p.decoder = build_decoder(DecoderKind::linear, Likelihood::categorical,
                            n_y * p.config.tau_d, n_r, rng);
  p.sample = tiny_instance(rng, n_pre, n_y, T, n_r, index % 2 == 0);
  return p;
}

}  // namespace

CheckResult check_reinforce_unbiasedness(int n_instances, double tolerance) {
  CheckResult result{"reinforce-unbiasedness", false, 0.0, tolerance, ""};
  Rng rng(20240904, 4);

  for (int inst = 0; inst < n_instances; ++inst) {
    TinyProblem p = make_tiny_problem(rng, inst);
    const NeuronLayer& layer = p.net.layers.back();
    const int n_y = layer.n_post;
    const int T = p.sample.x.steps;

    const EnumerationResult oracle =
        enumerate_expected_loss(p.net, p.decoder, p.sample, p.config);

    // Expectation of the production-path episodic estimate over all y.
    Matrix est_w(layer.n_post, layer.weight_cols());
    std::vector<double> est_fb(n_y, 0.0), est_b(n_y, 0.0);
    SpikeTrain y(n_y, T);
    const uint64_t n_seq = uint64_t{1} << (n_y * T);
    for (uint64_t mask = 0; mask < n_seq; ++mask) {
      for (int i = 0; i < n_y; ++i) {
        for (int t = 0; t < T; ++t) y.set(i, t, (mask >> (i * T + t)) & 1u);
      }
      const EpisodicEstimate est =
          episodic_estimate(p.net, p.decoder, p.sample, y, p.config);
      const double w = std::exp(est.log_prob) * est.total_signal;
      for (size_t c = 0; c < est_w.data.size(); ++c) {
        est_w.data[c] += w * est.direction.synaptic[0].data[c];
      }
      for (int i = 0; i < n_y; ++i) {
        est_fb[i] += w * est.direction.feedback[0][i];
        est_b[i] += w * est.direction.bias[0][i];
      }
    }

    for (size_t c = 0; c < est_w.data.size(); ++c) {
      result.max_err = std::max(
          result.max_err, std::abs(est_w.data[c] - oracle.d_weights.data[c]));
    }
    for (int i = 0; i < n_y; ++i) {
      result.max_err =
          std::max(result.max_err, std::abs(est_fb[i] - oracle.d_feedback[i]));
      result.max_err =
          std::max(result.max_err, std::abs(est_b[i] - oracle.d_bias[i]));
    }
  }

  result.pass = result.max_err <= tolerance;
  result.detail = std::to_string(n_instances) + " enumerated instances";
  return result;
}

CheckResult check_kl_consistency(double tolerance) {
  CheckResult result{"kl-consistency", false, 0.0, tolerance, ""};
  Rng rng(20240905, 5);

  for (int inst = 0; inst < 8; ++inst) {
    TinyProblem p = make_tiny_problem(rng, inst);
    const int n_y = p.net.n_readout();
    const int T = p.sample.x.steps;

    const EnumerationResult oracle =
        enumerate_expected_loss(p.net, p.decoder, p.sample, p.config);

    double expected_enc_loss = 0.0;
    double prob_total = 0.0;
    SpikeTrain y(n_y, T);
    const uint64_t n_seq = uint64_t{1} << (n_y * T);
    for (uint64_t mask = 0; mask < n_seq; ++mask) {
      for (int i = 0; i < n_y; ++i) {
        for (int t = 0; t < T; ++t) y.set(i, t, (mask >> (i * T + t)) & 1u);
      }
      const EpisodicEstimate est =
          episodic_estimate(p.net, p.decoder, p.sample, y, p.config);
      const double prob = std::exp(est.log_prob);
      expected_enc_loss += prob * est.ell_enc_total;
      prob_total += prob;
    }

    if (oracle.exact_kl < -1e-12) {
      result.max_err = std::max(result.max_err, -oracle.exact_kl);
    }
    result.max_err = std::max(result.max_err,
                              std::abs(expected_enc_loss - oracle.exact_kl));
    result.max_err = std::max(result.max_err, std::abs(prob_total - 1.0));
  }

  result.pass = result.max_err <= tolerance;
  result.detail = "8 enumerated instances, Gibbs nonnegativity included";
  return result;
}

CheckResult check_ar_convolution_equivalence(double tolerance) {
  CheckResult result{"ar-convolution-equivalence", false, 0.0, tolerance, ""};
  Rng rng(20240906, 6);
  const int T = 100;

  for (int inst = 0; inst < 6; ++inst) {
    FilterParams f;
    f.tau_mem = rng.uniform(3.0, 25.0);
    f.tau_syn = rng.uniform(0.5, 2.9);
    f.tau_ref = rng.uniform(2.0, 15.0);
    f.tau_e = 5;

    const SpikeTrain s = random_train(1, T, 0.4, rng);
    const CausalFilter alpha = trace_alpha_kernel(f, T);
    const CausalFilter fb = trace_feedback_kernel(f, T);

    TraceState state(1, 1, f.tau_e, 1, LayerKind::hidden_deterministic);
    std::vector<uint8_t> spikes(1);
    for (int t = 1; t <= T; ++t) {
      spikes[0] = s.at(0, t - 1);
      // trace_step consumes the t-1 spikes; feed the previous step's value.
      std::vector<uint8_t> prev(1, t >= 2 ? s.at(0, t - 2) : 0);
      trace_step(state, prev, prev, f);
      const double direct_p = causal_convolve(alpha, s.unit_row(0), t);
      const double direct_r = causal_convolve(fb, s.unit_row(0), t);
      result.max_err = std::max(result.max_err, std::abs(state.p[0] - direct_p));
      result.max_err = std::max(result.max_err, std::abs(state.r[0] - direct_r));
    }
  }

  result.pass = result.max_err <= tolerance;
  result.detail = "6 random filters, T=100, synaptic and refractory traces";
  return result;
}

std::vector<CheckResult> run_verification(const std::string& scope) {
  std::vector<CheckResult> results;
  const bool all = scope == "all";
  if (all || scope == "readout") {
    results.push_back(check_readout_gradients());
  }
  if (all || scope == "decoder") {
    results.push_back(check_decoder_gradients());
  }
  if (all || scope == "oracle") {
    results.push_back(check_normalization());
    results.push_back(check_reinforce_unbiasedness());
    results.push_back(check_kl_consistency());
    results.push_back(check_ar_convolution_equivalence());
  }
  if (results.empty()) throw ConfigError("unknown gradcheck scope: " + scope);
  return results;
}

}  // namespace vdib
