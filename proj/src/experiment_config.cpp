#include <cstdlib>

#include <json.hpp>

#include "vdib/experiment.hpp"

namespace vdib {

namespace {

using nlohmann::json;

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["task"] = c.task;
  j["beta"] = c.vdib.beta;
  j["eta"] = c.vdib.eta;
  j["eta_decoder"] = c.vdib.eta_decoder;
  j["kappa"] = c.vdib.kappa;
  j["prior_p"] = c.vdib.prior_p;
  j["tau_e"] = c.vdib.tau_e;
  j["tau_d"] = c.vdib.tau_d;
  j["T"] = c.vdib.T;
  j["update_mode"] = to_string(c.vdib.update_mode);
  j["decode_features"] = to_string(c.vdib.decode_features);
  j["signal_clip"] = c.vdib.signal_clip;
  j["surrogate"] = c.surrogate;
  j["n_x"] = c.n_x;
  j["n_hidden"] = c.n_hidden;
  j["n_y"] = c.n_y;
  j["n_r"] = c.n_r;
  j["tau_mem"] = c.tau_mem;
  j["tau_syn"] = c.tau_syn;
  j["tau_ref"] = c.tau_ref;
  j["num_kernels"] = c.num_kernels;
  j["decoder"] = c.decoder;
  j["likelihood"] = c.likelihood;
  j["n_train"] = c.n_train;
  j["log_interval"] = c.log_interval;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["seeds"] = c.seeds;
  j["out_dir"] = c.out_dir;
  j["delta"] = c.blob.delta;
  j["n_positions"] = c.blob.n_positions;
  j["n_blobs"] = c.blob.n_blobs;
  j["blob_sigma"] = c.blob.sigma;
  j["ar_a"] = c.blob.ar_a;
  j["ar_b"] = c.blob.ar_b;
  j["eval_T"] = c.eval_T;
  j["data_root"] = c.data_root;
  j["train_images"] = c.train_images;
  j["train_labels"] = c.train_labels;
  j["test_images"] = c.test_images;
  j["test_labels"] = c.test_labels;
  j["encoding"] = c.encoding;
  j["poisson_gain"] = c.poisson_gain;
  j["reference_mode"] = c.reference_mode;
  j["n_eval"] = c.n_eval;
  j["synthetic_fallback"] = c.synthetic_fallback;
  j["synthetic_train_count"] = c.synthetic_train_count;
  j["synthetic_test_count"] = c.synthetic_test_count;
  j["classifier_train_n"] = c.classifier_train_n;
  j["classifier_epochs"] = c.classifier_epochs;
  j["aedat_dir"] = c.aedat_dir;
  j["bin_ms"] = c.bin_ms;
  j["duration_ms"] = c.duration_ms;
  j["crop"] = {c.crop.x0, c.crop.y0, c.crop.width, c.crop.height};
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  json base = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!base.contains(key)) throw ConfigError("unknown config key: " + key);
    base[key] = value;
  }

  try {
    c.task = base.at("task").get<std::string>();
    c.vdib.beta = base.at("beta").get<double>();
    c.vdib.eta = base.at("eta").get<double>();
    c.vdib.eta_decoder = base.at("eta_decoder").get<double>();
    c.vdib.kappa = base.at("kappa").get<double>();
    c.vdib.prior_p = base.at("prior_p").get<double>();
    c.vdib.tau_e = base.at("tau_e").get<int>();
    c.vdib.tau_d = base.at("tau_d").get<int>();
    c.vdib.T = base.at("T").get<int>();
    c.vdib.update_mode =
        update_mode_from_string(base.at("update_mode").get<std::string>());
    c.vdib.decode_features = decode_features_from_string(
        base.at("decode_features").get<std::string>());
    c.vdib.signal_clip = base.at("signal_clip").get<double>();
    c.surrogate = base.at("surrogate").get<std::string>();
    c.n_x = base.at("n_x").get<int>();
    c.n_hidden = base.at("n_hidden").get<std::vector<int>>();
    c.n_y = base.at("n_y").get<int>();
    c.n_r = base.at("n_r").get<int>();
    c.tau_mem = base.at("tau_mem").get<double>();
    c.tau_syn = base.at("tau_syn").get<double>();
    c.tau_ref = base.at("tau_ref").get<double>();
    c.num_kernels = base.at("num_kernels").get<int>();
    c.decoder = base.at("decoder").get<std::string>();
    c.likelihood = base.at("likelihood").get<std::string>();
    c.n_train = base.at("n_train").get<long>();
    c.log_interval = base.at("log_interval").get<long>();
    c.checkpoint_interval = base.at("checkpoint_interval").get<long>();
    c.seeds = base.at("seeds").get<std::vector<uint64_t>>();
    c.out_dir = base.at("out_dir").get<std::string>();
    c.blob.delta = base.at("delta").get<int>();
    c.blob.n_positions = base.at("n_positions").get<int>();
    c.blob.n_blobs = base.at("n_blobs").get<int>();
    c.blob.sigma = base.at("blob_sigma").get<double>();
    c.blob.ar_a = base.at("ar_a").get<double>();
    c.blob.ar_b = base.at("ar_b").get<double>();
    c.eval_T = base.at("eval_T").get<int>();
    c.data_root = base.at("data_root").get<std::string>();
    c.train_images = base.at("train_images").get<std::string>();
    c.train_labels = base.at("train_labels").get<std::string>();
    c.test_images = base.at("test_images").get<std::string>();
    c.test_labels = base.at("test_labels").get<std::string>();
    c.encoding = base.at("encoding").get<std::string>();
    c.poisson_gain = base.at("poisson_gain").get<double>();
    c.reference_mode = base.at("reference_mode").get<std::string>();
    c.n_eval = base.at("n_eval").get<int>();
    c.synthetic_fallback = base.at("synthetic_fallback").get<bool>();
    c.synthetic_train_count = base.at("synthetic_train_count").get<long>();
    c.synthetic_test_count = base.at("synthetic_test_count").get<long>();
    c.classifier_train_n = base.at("classifier_train_n").get<long>();
    c.classifier_epochs = base.at("classifier_epochs").get<int>();
    c.aedat_dir = base.at("aedat_dir").get<std::string>();
    c.bin_ms = base.at("bin_ms").get<double>();
    c.duration_ms = base.at("duration_ms").get<double>();
    const auto crop = base.at("crop").get<std::vector<int>>();
    if (crop.size() != 4) throw ConfigError("crop must be [x0,y0,w,h]");
    c.crop = CropRegion{crop[0], crop[1], crop[2], crop[3]};
  } catch (const json::exception& e) {
    throw ConfigError(std::string{"invalid config value: "} + e.what());
  }

  // Dataset-driven tasks fall back to the environment for their root.
  if (c.task != "predictive_coding" && c.data_root.empty()) {
    if (const char* env = std::getenv("VDIB_DATA_ROOT")) c.data_root = env;
  }
  c.validate();
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) {
    j[key] = value;  // plain string
  } else {
    j[key] = parsed;
  }
}

}  // namespace

FilterParams ExperimentConfig::hidden_filter() const {
  FilterParams f;
  f.tau_mem = tau_mem;
  f.tau_syn = tau_syn;
  f.tau_ref = tau_ref;
  f.tau_e = vdib.tau_e;
  f.num_kernels = 1;
  return f;
}

FilterParams ExperimentConfig::readout_filter() const {
  FilterParams f = hidden_filter();
  f.num_kernels = num_kernels;
  return f;
}

void ExperimentConfig::validate() const {
  vdib.validate();
  hidden_filter().validate();
  readout_filter().validate();
  surrogate_from_string(surrogate);
  decoder_kind_from_string(decoder);
  likelihood_from_string(likelihood);

  if (n_x < 1 || n_y < 1 || n_r < 1) {
    throw ConfigError("n_x, n_y, n_r must be positive");
  }
  if (seeds.empty()) throw ConfigError("seed set must not be empty");
  if (n_train < 0) throw ConfigError("n_train must be >= 0");
  if (log_interval < 1) throw ConfigError("log_interval must be >= 1");
  if (n_eval < 1) throw ConfigError("n_eval must be >= 1");

  if (task == "predictive_coding") {
    if (!data_root.empty() || !aedat_dir.empty()) {
      throw ConfigError(
          "predictive_coding generates its data; dataset paths are not "
          "allowed (data_root/aedat_dir must be empty)");
    }
    blob.validate();
    if (n_x != blob.n_positions) {
      throw ConfigError("predictive_coding requires n_x == n_positions");
    }
    const int expect_r = blob.n_positions * (blob.n_positions + 1) / 2;
    if (n_r != expect_r) {
      throw ConfigError("predictive_coding requires n_r == n(n+1)/2 = " +
                        std::to_string(expect_r));
    }
    if (eval_T < 1) throw ConfigError("eval_T must be >= 1");
  } else if (task == "mnist_naturalize") {
    if (encoding != "poisson" && encoding != "ttfs") {
      throw ConfigError("encoding must be poisson or ttfs");
    }
    if (poisson_gain <= 0.0 || poisson_gain > 1.0) {
      throw ConfigError("poisson_gain must be in (0,1]");
    }
    if (reference_mode != "final_step" && reference_mode != "every_step") {
      throw ConfigError("reference_mode must be final_step or every_step");
    }
  } else if (task == "mnistdvs_naturalize") {
    if (bin_ms <= 0 || duration_ms <= 0) {
      throw ConfigError("bin_ms and duration_ms must be positive");
    }
    if (n_x != crop.width * crop.height) {
      throw ConfigError("mnistdvs requires n_x == crop width*height");
    }
  } else {
    throw ConfigError("unknown task: " + task);
  }
}

ExperimentConfig config_from_json_text(
    const std::string& text, const std::vector<std::string>& overrides) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError("configuration is not a JSON object");
  }
  for (const std::string& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

ExperimentConfig load_experiment_config(
    const std::string& path, const std::vector<std::string>& overrides) {
  const std::vector<uint8_t> bytes = read_file_maybe_gzip(path);
  return config_from_json_text(std::string(bytes.begin(), bytes.end()),
                               overrides);
}

std::string resolved_config_text(const ExperimentConfig& config) {
  return config_to_json(config).dump(1, '\t') + "\n";
}

}  // namespace vdib
