#include "vdib/decoder.hpp"

#include <cmath>
#include <cstring>

#include "vdib/mathcore.hpp"

namespace vdib {

void window_push(WindowBuffer& buf, std::span<const uint8_t> y_t) {
  VDIB_CHECK(static_cast<int>(y_t.size()) == buf.n_units,
             "window_push dimension mismatch");
  if (buf.capacity > 1) {
    std::memmove(buf.window.data(), buf.window.data() + buf.n_units,
                 static_cast<size_t>(buf.capacity - 1) * buf.n_units);
  }
  std::copy(y_t.begin(), y_t.end(),
            buf.window.end() - static_cast<ptrdiff_t>(buf.n_units));
}

std::vector<double> rate_pool(const WindowBuffer& buf) {
  std::vector<double> sums(buf.n_units, 0.0);
  for (int s = 0; s < buf.capacity; ++s) {
    const uint8_t* row = buf.window.data() + static_cast<size_t>(s) * buf.n_units;
    for (int i = 0; i < buf.n_units; ++i) sums[i] += row[i];
  }
  return sums;
}

DecoderKind decoder_kind_from_string(const std::string& name) {
  if (name == "linear" || name == "linear_softmax") return DecoderKind::linear;
  if (name == "mlp") return DecoderKind::mlp;
  throw ConfigError("unknown decoder kind: " + name);
}

Likelihood likelihood_from_string(const std::string& name) {
  if (name == "categorical") return Likelihood::categorical;
  if (name == "bernoulli_pixel") return Likelihood::bernoulli_pixel;
  if (name == "gaussian_unit") return Likelihood::gaussian_unit;
  throw ConfigError("unknown likelihood: " + name);
}

std::string to_string(DecoderKind kind) {
  return kind == DecoderKind::linear ? "linear" : "mlp";
}

std::string to_string(Likelihood likelihood) {
  switch (likelihood) {
    case Likelihood::categorical: return "categorical";
    case Likelihood::bernoulli_pixel: return "bernoulli_pixel";
    case Likelihood::gaussian_unit: return "gaussian_unit";
  }
  return "?";
}

DecoderModel build_decoder(DecoderKind kind, Likelihood likelihood, int n_in,
                           int n_out, Rng& rng, int n_hidden) {
  VDIB_CHECK(n_in > 0 && n_out > 0);
  DecoderModel m;
  m.kind = kind;
  m.likelihood = likelihood;
  m.n_in = n_in;
  m.n_out = n_out;
  if (kind == DecoderKind::linear) {
    m.n_hidden = 0;
    m.w1 = Matrix(n_out, n_in);
    m.b1.assign(n_out, 0.0);
    const double c = std::sqrt(1.0 / n_in);
    for (double& w : m.w1.data) w = rng.uniform(-c, c);
  } else {
    m.n_hidden = n_hidden < 0 ? std::max(1, n_in / 2) : n_hidden;
    VDIB_CHECK(m.n_hidden > 0);
    m.w1 = Matrix(m.n_hidden, n_in);
    m.b1.assign(m.n_hidden, 0.0);
    m.w2 = Matrix(n_out, m.n_hidden);
    m.b2.assign(n_out, 0.0);
    const double c1 = std::sqrt(1.0 / n_in);
    for (double& w : m.w1.data) w = rng.uniform(-c1, c1);
    const double c2 = std::sqrt(1.0 / m.n_hidden);
    for (double& w : m.w2.data) w = rng.uniform(-c2, c2);
  }
  return m;
}

std::vector<double> decoder_forward(const DecoderModel& model,
                                    std::span<const double> features) {
  VDIB_CHECK(static_cast<int>(features.size()) == model.n_in,
             "decoder feature size mismatch");
  if (model.kind == DecoderKind::linear) {
    std::vector<double> out(model.n_out);
    matvec(model.w1, features, out);
    for (int i = 0; i < model.n_out; ++i) out[i] += model.b1[i];
    return out;
  }
  std::vector<double> h(model.n_hidden);
  matvec(model.w1, features, h);
  for (int i = 0; i < model.n_hidden; ++i) {
    h[i] = std::max(0.0, h[i] + model.b1[i]);
  }
  std::vector<double> out(model.n_out);
  matvec(model.w2, h, out);
  for (int i = 0; i < model.n_out; ++i) out[i] += model.b2[i];
  return out;
}

namespace {

void validate_reference(std::span<const double> r_t, int n_out,
                        Likelihood likelihood) {
  VDIB_CHECK(static_cast<int>(r_t.size()) == n_out,
             "reference dimension mismatch");
  if (likelihood == Likelihood::categorical) {
    int ones = 0;
    for (double v : r_t) {
      VDIB_CHECK(v == 0.0 || v == 1.0, "categorical reference must be one-hot");
      ones += v == 1.0;
    }
    VDIB_CHECK(ones == 1, "categorical reference must be one-hot");
  } else if (likelihood == Likelihood::bernoulli_pixel) {
    for (double v : r_t) {
      VDIB_CHECK(v >= 0.0 && v <= 1.0, "pixel reference outside [0,1]");
    }
  }
}

}  // namespace

double decoder_logloss(std::span<const double> outputs,
                       std::span<const double> r_t, Likelihood likelihood) {
  validate_reference(r_t, static_cast<int>(outputs.size()), likelihood);
  switch (likelihood) {
    case Likelihood::categorical: {
      std::vector<double> probs = softmax(outputs);
      double loss = 0.0;
      for (size_t i = 0; i < probs.size(); ++i) {
        // Only a lower clamp: a perfectly predicted class yields loss 0.
        if (r_t[i] == 1.0) loss -= std::log(std::max(probs[i], kProbClamp));
      }
      return loss;
    }
    case Likelihood::bernoulli_pixel: {
      double loss = 0.0;
      for (size_t i = 0; i < outputs.size(); ++i) {
        const double s = clamp_prob(sigmoid(outputs[i]));
        loss -= r_t[i] * std::log(s) + (1.0 - r_t[i]) * std::log1p(-s);
      }
      return loss;
    }
    case Likelihood::gaussian_unit: {
      double loss = 0.0;
      for (size_t i = 0; i < outputs.size(); ++i) {
        const double d = outputs[i] - r_t[i];
        loss += 0.5 * d * d;
      }
      return loss;
    }
  }
  throw ConfigError("unknown likelihood");
}

BackpropResult decoder_backprop(const DecoderModel& model,
                                std::span<const double> features,
                                std::span<const double> r_t) {
  VDIB_CHECK(static_cast<int>(features.size()) == model.n_in,
             "decoder feature size mismatch");

  // Forward, keeping the hidden activations for the backward pass.
  std::vector<double> h_pre, h;
  std::vector<double> outputs;
  if (model.kind == DecoderKind::linear) {
    outputs.resize(model.n_out);
    matvec(model.w1, features, outputs);
    for (int i = 0; i < model.n_out; ++i) outputs[i] += model.b1[i];
  } else {
    h_pre.resize(model.n_hidden);
    matvec(model.w1, features, h_pre);
    for (int i = 0; i < model.n_hidden; ++i) h_pre[i] += model.b1[i];
    h.resize(model.n_hidden);
    for (int i = 0; i < model.n_hidden; ++i) h[i] = std::max(0.0, h_pre[i]);
    outputs.resize(model.n_out);
    matvec(model.w2, h, outputs);
    for (int i = 0; i < model.n_out; ++i) outputs[i] += model.b2[i];
  }

  const double loss = decoder_logloss(outputs, r_t, model.likelihood);

  // d loss / d outputs is (prediction - target) for all three likelihoods.
  std::vector<double> delta(model.n_out);
  switch (model.likelihood) {
    case Likelihood::categorical: {
      std::vector<double> probs = softmax(outputs);
      for (int i = 0; i < model.n_out; ++i) delta[i] = probs[i] - r_t[i];
      break;
    }
    case Likelihood::bernoulli_pixel:
      for (int i = 0; i < model.n_out; ++i) {
        delta[i] = sigmoid(outputs[i]) - r_t[i];
      }
      break;
    case Likelihood::gaussian_unit:
      for (int i = 0; i < model.n_out; ++i) delta[i] = outputs[i] - r_t[i];
      break;
  }

  DecoderGradients g;
  if (model.kind == DecoderKind::linear) {
    g.w1 = Matrix(model.n_out, model.n_in);
    add_outer(g.w1, 1.0, delta, features);
    g.b1 = delta;
  } else {
    g.w2 = Matrix(model.n_out, model.n_hidden);
    add_outer(g.w2, 1.0, delta, h);
    g.b2 = delta;
    std::vector<double> dh(model.n_hidden);
    matvec_transposed(model.w2, delta, dh);
    for (int i = 0; i < model.n_hidden; ++i) {
      if (h_pre[i] <= 0.0) dh[i] = 0.0;
    }
    g.w1 = Matrix(model.n_hidden, model.n_in);
    add_outer(g.w1, 1.0, dh, features);
    g.b1 = dh;
  }
  return {std::move(g), loss, std::move(outputs)};
}

DecoderGradients zero_gradients(const DecoderModel& model) {
  DecoderGradients g;
  g.w1 = Matrix(model.w1.rows, model.w1.cols);
  g.b1.assign(model.b1.size(), 0.0);
  if (model.kind == DecoderKind::mlp) {
    g.w2 = Matrix(model.w2.rows, model.w2.cols);
    g.b2.assign(model.b2.size(), 0.0);
  }
  return g;
}

void add_gradients(DecoderGradients& acc, const DecoderGradients& g) {
  for (size_t i = 0; i < acc.w1.data.size(); ++i) acc.w1.data[i] += g.w1.data[i];
  for (size_t i = 0; i < acc.b1.size(); ++i) acc.b1[i] += g.b1[i];
  for (size_t i = 0; i < acc.w2.data.size(); ++i) acc.w2.data[i] += g.w2.data[i];
  for (size_t i = 0; i < acc.b2.size(); ++i) acc.b2[i] += g.b2[i];
}

std::vector<double> predicted_mean(std::span<const double> outputs,
                                   Likelihood likelihood) {
  switch (likelihood) {
    case Likelihood::categorical:
      return softmax(outputs);
    case Likelihood::bernoulli_pixel: {
      std::vector<double> mean(outputs.size());
      for (size_t i = 0; i < outputs.size(); ++i) mean[i] = sigmoid(outputs[i]);
      return mean;
    }
    case Likelihood::gaussian_unit:
      return std::vector<double>(outputs.begin(), outputs.end());
  }
  throw ConfigError("unknown likelihood");
}

void apply_decoder_update(DecoderModel& model, const DecoderGradients& grads,
                          double eta) {
  for (size_t i = 0; i < model.w1.data.size(); ++i) {
    model.w1.data[i] -= eta * grads.w1.data[i];
  }
  for (size_t i = 0; i < model.b1.size(); ++i) {
    model.b1[i] -= eta * grads.b1[i];
  }
  if (model.kind == DecoderKind::mlp) {
    for (size_t i = 0; i < model.w2.data.size(); ++i) {
      model.w2.data[i] -= eta * grads.w2.data[i];
    }
    for (size_t i = 0; i < model.b2.size(); ++i) {
      model.b2[i] -= eta * grads.b2[i];
    }
  }
}

}  // namespace vdib
