#include "vdib/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace vdib {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json filter_to_json(const FilterParams& f) {
  return json{{"tau_mem", f.tau_mem},
              {"tau_syn", f.tau_syn},
              {"tau_ref", f.tau_ref},
              {"tau_e", f.tau_e},
              {"num_kernels", f.num_kernels}};
}

FilterParams filter_from_json(const json& j) {
  FilterParams f;
  f.tau_mem = j.at("tau_mem").get<double>();
  f.tau_syn = j.at("tau_syn").get<double>();
  f.tau_ref = j.at("tau_ref").get<double>();
  f.tau_e = j.at("tau_e").get<int>();
  f.num_kernels = j.at("num_kernels").get<int>();
  return f;
}

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  m.data = j.at("data").get<std::vector<double>>();
  VDIB_CHECK(m.data.size() == static_cast<size_t>(m.rows) * m.cols,
             "matrix payload size mismatch");
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderNetwork& encoder,
                     const DecoderModel& decoder,
                     const std::string& config_hash) {
  json j;
  j["format"] = "vdib-checkpoint";
  j["version"] = kFormatVersion;
  j["config_hash"] = config_hash;

  json enc;
  enc["n_in"] = encoder.n_in;
  enc["surrogate_threshold"] = encoder.surrogate_threshold;
  enc["layers"] = json::array();
  for (const NeuronLayer& layer : encoder.layers) {
    json lj;
    lj["kind"] = layer.kind == LayerKind::readout_stochastic
                     ? "readout_stochastic"
                     : "hidden_deterministic";
    lj["n_pre"] = layer.n_pre;
    lj["n_post"] = layer.n_post;
    lj["filter"] = filter_to_json(layer.filter);
    lj["weights"] = matrix_to_json(layer.weights);
    lj["feedback_weights"] = layer.feedback_weights;
    lj["biases"] = layer.biases;
    enc["layers"].push_back(std::move(lj));
  }
  enc["feedback_matrices"] = json::array();
  for (const Matrix& b : encoder.feedback_matrices) {
    enc["feedback_matrices"].push_back(matrix_to_json(b));
  }
  j["encoder"] = std::move(enc);

  json dec;
  dec["kind"] = to_string(decoder.kind);
  dec["likelihood"] = to_string(decoder.likelihood);
  dec["n_in"] = decoder.n_in;
  dec["n_out"] = decoder.n_out;
  dec["n_hidden"] = decoder.n_hidden;
  dec["w1"] = matrix_to_json(decoder.w1);
  dec["b1"] = decoder.b1;
  if (decoder.kind == DecoderKind::mlp) {
    dec["w2"] = matrix_to_json(decoder.w2);
    dec["b2"] = decoder.b2;
  }
  j["decoder"] = std::move(dec);

  std::ofstream os(path);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os << j.dump(1, '\t') << "\n";
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw IoError("invalid checkpoint JSON in " + path + ": " + e.what());
  }
  if (j.value("format", "") != "vdib-checkpoint" ||
      j.value("version", 0) != kFormatVersion) {
    throw IoError("unsupported checkpoint format in: " + path);
  }

  Checkpoint cp;
  cp.config_hash = j.value("config_hash", "");

  const json& enc = j.at("encoder");
  cp.encoder.n_in = enc.at("n_in").get<int>();
  cp.encoder.surrogate_threshold = enc.at("surrogate_threshold").get<double>();
  cp.encoder.last_input.assign(cp.encoder.n_in, 0);
  for (const json& lj : enc.at("layers")) {
    NeuronLayer layer;
    layer.kind = lj.at("kind").get<std::string>() == "readout_stochastic"
                     ? LayerKind::readout_stochastic
                     : LayerKind::hidden_deterministic;
    layer.n_pre = lj.at("n_pre").get<int>();
    layer.n_post = lj.at("n_post").get<int>();
    layer.filter = filter_from_json(lj.at("filter"));
    layer.weights = matrix_from_json(lj.at("weights"));
    layer.feedback_weights =
        lj.at("feedback_weights").get<std::vector<double>>();
    layer.biases = lj.at("biases").get<std::vector<double>>();
    if (layer.kind == LayerKind::readout_stochastic) {
      layer.kernels = build_readout_kernels(layer.filter);
    }
    cp.encoder.state.emplace_back(layer.n_pre, layer.n_post,
                                  layer.filter.tau_e,
                                  layer.filter.num_kernels, layer.kind);
    cp.encoder.layers.push_back(std::move(layer));
  }
  for (const json& bj : enc.at("feedback_matrices")) {
    cp.encoder.feedback_matrices.push_back(matrix_from_json(bj));
  }

  const json& dec = j.at("decoder");
  cp.decoder.kind = decoder_kind_from_string(dec.at("kind").get<std::string>());
  cp.decoder.likelihood =
      likelihood_from_string(dec.at("likelihood").get<std::string>());
  cp.decoder.n_in = dec.at("n_in").get<int>();
  cp.decoder.n_out = dec.at("n_out").get<int>();
  cp.decoder.n_hidden = dec.at("n_hidden").get<int>();
  cp.decoder.w1 = matrix_from_json(dec.at("w1"));
  cp.decoder.b1 = dec.at("b1").get<std::vector<double>>();
  if (cp.decoder.kind == DecoderKind::mlp) {
    cp.decoder.w2 = matrix_from_json(dec.at("w2"));
    cp.decoder.b2 = dec.at("b2").get<std::vector<double>>();
  }
  return cp;
}

std::string fnv1a_hex(const std::string& text) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace vdib
