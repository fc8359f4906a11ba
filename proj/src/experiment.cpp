#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "vdib/checkpoint.hpp"
#include "vdib/experiment.hpp"

namespace vdib {

namespace fs = std::filesystem;

namespace {

// RNG stream ids: one purpose per stream so seeds stay comparable across
// configurations.
enum StreamId : uint64_t {
  kStreamInit = 1,
  kStreamTrainData = 2,
  kStreamTrainSample = 3,
  kStreamEvalData = 4,
  kStreamEvalSample = 5,
  kStreamClassifier = 6,
};

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << text;
  if (!os) throw IoError("failed writing: " + path);
}

// Independent jobs over a small worker pool; each job owns its full state.
void run_parallel(int n_jobs, const std::function<void(int)>& fn) {
  const int workers = std::max(
      1, std::min<int>(static_cast<int>(std::thread::hardware_concurrency()),
                       n_jobs));
  if (workers <= 1) {
    for (int i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::mutex err_mutex;
  std::exception_ptr first_error;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n_jobs) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

EncoderNetwork build_encoder_from(const ExperimentConfig& config, Rng& rng) {
  EncoderNetwork net =
      build_encoder(config.n_x, config.n_hidden, config.n_y,
                    config.hidden_filter(), config.readout_filter(), rng);
  net.surrogate = surrogate_from_string(config.surrogate);
  return net;
}

DecoderModel build_decoder_from(const ExperimentConfig& config,
                                DecodeFeatures features, Rng& rng) {
  const int n_in = features == DecodeFeatures::rate
                       ? config.n_y
                       : config.n_y * config.vdib.tau_d;
  // Rate baseline keeps the windowed decoder's hidden width so the
  // comparison varies only in what the decoder sees.
  const int n_hidden =
      decoder_kind_from_string(config.decoder) == DecoderKind::mlp
          ? std::max(1, config.n_y * config.vdib.tau_d / 2)
          : -1;
  return build_decoder(decoder_kind_from_string(config.decoder),
                       likelihood_from_string(config.likelihood), n_in,
                       config.n_r, rng, n_hidden);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// ----- Predictive coding -----

std::vector<std::pair<int, int>> pair_table(int n) {
  std::vector<std::pair<int, int>> table(n * (n + 1) / 2);
  for (int p1 = 1; p1 <= n; ++p1) {
    for (int p2 = p1; p2 <= n; ++p2) {
      table[pair_index(p1, p2, n)] = {p1, p2};
    }
  }
  return table;
}

double ring_distance(int a, int b, int n) {
  const int d = std::abs(a - b) % n;
  return std::min(d, n - d);
}

struct PcEvalStats {
  double mse = 0.0;
  double accuracy = 0.0;
  double position_error = 0.0;
  double spike_rate_readout = 0.0;
  double spike_rate_hidden = 0.0;
};

PcEvalStats evaluate_predictive(EncoderNetwork& net, DecoderModel& decoder,
                                const VdibConfig& vcfg,
                                const LabeledSequence& seq,
                                const BlobProcessParams& blob, Rng& rng) {
  const auto table = pair_table(blob.n_positions);
  net.reset();
  WindowBuffer window(net.n_readout(), vcfg.tau_d);

  PcEvalStats stats;
  long readout_spikes = 0, hidden_spikes = 0, hidden_units = 0;
  int defined = 0;
  const int T = seq.x.steps;
  std::vector<uint8_t> x_t(seq.x.units);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u < seq.x.units; ++u) x_t[u] = seq.x.at(u, t);
    const StepResult step = forward_step(net, x_t, rng);
    window_push(window, step.y);
    for (uint8_t s : step.y) readout_spikes += s;
    for (size_t l = 0; l + 1 < net.layers.size(); ++l) {
      for (uint8_t s : step.layers[l].spikes) hidden_spikes += s;
      hidden_units += net.layers[l].n_post;
    }
    if (!seq.r_defined[t]) continue;
    ++defined;
    const std::vector<double> out = decoder_forward(
        decoder, decode_features_of(window, vcfg.decode_features));
    const std::vector<double> probs = predicted_mean(out, decoder.likelihood);
    const std::vector<double> r_t = seq.reference_at(t);
    double se = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      se += (probs[i] - r_t[i]) * (probs[i] - r_t[i]);
    }
    stats.mse += se / static_cast<double>(probs.size());

    const int pred_class = argmax(probs);
    const int true_class = argmax(r_t);
    stats.accuracy += pred_class == true_class;
    const auto [a1, a2] = table[pred_class];
    const auto [b1, b2] = table[true_class];
    const double match1 = 0.5 * (ring_distance(a1, b1, blob.n_positions) +
                                 ring_distance(a2, b2, blob.n_positions));
    const double match2 = 0.5 * (ring_distance(a1, b2, blob.n_positions) +
                                 ring_distance(a2, b1, blob.n_positions));
    stats.position_error += std::min(match1, match2);
  }
  if (defined > 0) {
    stats.mse /= defined;
    stats.accuracy /= defined;
    stats.position_error /= defined;
  }
  stats.spike_rate_readout =
      static_cast<double>(readout_spikes) / (net.n_readout() * T);
  stats.spike_rate_hidden =
      hidden_units > 0 ? static_cast<double>(hidden_spikes) / hidden_units : 0.0;
  return stats;
}

}  // namespace

PredictiveCodingResult run_predictive_coding(const ExperimentConfig& config,
                                             bool write_artifacts) {
  config.validate();
  if (config.task != "predictive_coding") {
    throw ConfigError("run_predictive_coding requires task=predictive_coding");
  }
  if (write_artifacts && config.out_dir.empty()) {
    throw ConfigError("out_dir required when writing artifacts");
  }

  // The held-out test sequence is shared across seeds.
  const uint64_t eval_data_seed = 977;
  PredictiveCodingResult result;
  result.per_seed.resize(config.seeds.size());

  run_parallel(static_cast<int>(config.seeds.size()), [&](int idx) {
    const uint64_t seed = config.seeds[idx];
    Rng init_rng(seed, kStreamInit);
    Rng data_rng(seed, kStreamTrainData);
    Rng sample_rng(seed, kStreamTrainSample);

    EncoderNetwork net = build_encoder_from(config, init_rng);
    DecoderModel decoder =
        build_decoder_from(config, config.vdib.decode_features, init_rng);
    const EncoderNetwork untrained_net = net;
    const DecoderModel untrained_decoder = decoder;

    const SampleSource source = [&](long, Rng&) {
      return gen_blob_sequence(data_rng, config.blob, config.vdib.T);
    };
    const MetricLog log =
        train(net, decoder, source, config.vdib, config.n_train,
              config.log_interval, sample_rng);

    Rng eval_data_rng(eval_data_seed, kStreamEvalData);
    const LabeledSequence eval_seq =
        gen_blob_sequence(eval_data_rng, config.blob, config.eval_T);

    Rng eval_rng(seed, kStreamEvalSample);
    const PcEvalStats trained = evaluate_predictive(
        net, decoder, config.vdib, eval_seq, config.blob, eval_rng);
    EncoderNetwork untr_net = untrained_net;
    DecoderModel untr_dec = untrained_decoder;
    Rng eval_rng2(seed, kStreamEvalSample);
    const PcEvalStats untrained = evaluate_predictive(
        untr_net, untr_dec, config.vdib, eval_seq, config.blob, eval_rng2);

    PredictiveSeedResult& sr = result.per_seed[idx];
    sr.seed = seed;
    sr.mse = trained.mse;
    sr.mse_untrained = untrained.mse;
    sr.accuracy = trained.accuracy;
    sr.position_error = trained.position_error;
    sr.spike_rate_readout = trained.spike_rate_readout;
    sr.spike_rate_hidden = trained.spike_rate_hidden;

    if (write_artifacts) {
      const std::string dir =
          config.out_dir + "/seed_" + std::to_string(seed);
      ensure_dir(dir);
      log.write_csv_file(dir + "/metrics.csv");
      const std::string resolved = resolved_config_text(config);
      write_text_file(dir + "/config.json", resolved);
      save_checkpoint(dir + "/checkpoint.json", net, decoder,
                      fnv1a_hex(resolved));
    }
  });

  std::vector<double> mses, rates, accs, untrained;
  for (const auto& sr : result.per_seed) {
    mses.push_back(sr.mse);
    rates.push_back(sr.spike_rate_readout);
    accs.push_back(sr.accuracy);
    untrained.push_back(sr.mse_untrained);
  }
  result.mean_mse = mean_of(mses);
  result.std_mse = std_of(mses);
  result.mean_spike_rate = mean_of(rates);
  result.mean_accuracy = mean_of(accs);
  result.mean_mse_untrained = mean_of(untrained);

  if (write_artifacts) {
    ensure_dir(config.out_dir);
    std::ofstream os(config.out_dir + "/summary.csv");
    os << "seed,mse,mse_untrained,accuracy,position_error,spike_rate_readout,"
          "spike_rate_hidden\n";
    os.precision(10);
    for (const auto& sr : result.per_seed) {
      os << sr.seed << ',' << sr.mse << ',' << sr.mse_untrained << ','
         << sr.accuracy << ',' << sr.position_error << ','
         << sr.spike_rate_readout << ',' << sr.spike_rate_hidden << "\n";
    }
  }
  return result;
}

// ----- Surrogate classifier -----

void SurrogateClassifier::train(const IdxImages& images,
                                const std::vector<int>& labels, long n_train,
                                int epochs, uint64_t seed) {
  VDIB_CHECK(images.count == static_cast<int>(labels.size()));
  VDIB_CHECK(images.count > 0 && n_train > 0 && epochs > 0);
  const int n_features = images.rows * images.cols;
  const long n = std::min<long>(n_train, images.count);

  w_ = Matrix(10, n_features);
  b_.assign(10, 0.0);
  Rng rng(seed, kStreamClassifier);

  std::vector<int> order(n);
  for (long i = 0; i < n; ++i) order[i] = static_cast<int>(i);

  std::vector<double> logits(10);
  const double lr0 = 0.05;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // Fisher-Yates reshuffle per epoch.
    for (long i = n - 1; i > 0; --i) {
      const long j = rng.uniform_below(static_cast<uint32_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    const double lr = lr0 / (1.0 + epoch);
    for (long s = 0; s < n; ++s) {
      const std::span<const double> img = images.image(order[s]);
      matvec(w_, img, logits);
      for (int k = 0; k < 10; ++k) logits[k] += b_[k];
      std::vector<double> probs = softmax(logits);
      probs[labels[order[s]]] -= 1.0;
      for (int k = 0; k < 10; ++k) {
        if (probs[k] == 0.0) continue;
        double* row = w_.data.data() + static_cast<size_t>(k) * n_features;
        const double g = lr * probs[k];
        for (int f = 0; f < n_features; ++f) row[f] -= g * img[f];
        b_[k] -= g;
      }
    }
  }
  trained_ = true;
}

int SurrogateClassifier::predict(std::span<const double> image) const {
  if (!trained_) {
    throw std::logic_error("surrogate classifier used before training");
  }
  VDIB_CHECK(static_cast<int>(image.size()) == w_.cols);
  std::vector<double> logits(10);
  matvec(w_, image, logits);
  for (int k = 0; k < 10; ++k) logits[k] += b_[k];
  return argmax(logits);
}

double SurrogateClassifier::accuracy(
    const std::vector<std::vector<double>>& images,
    const std::vector<int>& labels) const {
  VDIB_CHECK(images.size() == labels.size() && !images.empty());
  long correct = 0;
  for (size_t i = 0; i < images.size(); ++i) {
    correct += predict(images[i]) == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

// ----- MNIST naturalization -----

namespace {

struct MnistData {
  IdxImages train_images;
  std::vector<int> train_labels;
  IdxImages test_images;
  std::vector<int> test_labels;
  std::string kind;
};

bool all_exist(const std::vector<std::string>& paths) {
  for (const auto& p : paths) {
    if (!fs::exists(p)) return false;
  }
  return true;
}

std::string join(const std::string& root, const std::string& name) {
  return root.empty() ? name : root + "/" + name;
}

MnistData resolve_mnist_data(const ExperimentConfig& config) {
  const std::string root = config.data_root.empty() ? "data" : config.data_root;
  MnistData data;

  const std::vector<std::string> real = {
      join(root, config.train_images), join(root, config.train_labels),
      join(root, config.test_images), join(root, config.test_labels)};
  std::vector<std::string> use = real;
  if (all_exist(real)) {
    data.kind = "idx-files";
  } else if (config.synthetic_fallback) {
    // Deterministic stand-in corpus, written and re-read as IDX files so the
    // whole ingestion path is exercised.
    const std::string sdir = join(root, "synthetic");
    use = {join(sdir, "train-images-idx3-ubyte"),
           join(sdir, "train-labels-idx1-ubyte"),
           join(sdir, "t10k-images-idx3-ubyte"),
           join(sdir, "t10k-labels-idx1-ubyte")};
    if (!all_exist(use)) {
      ensure_dir(sdir);
      const DigitCorpus train = render_digit_corpus(
          static_cast<int>(config.synthetic_train_count), 1001);
      const DigitCorpus test = render_digit_corpus(
          static_cast<int>(config.synthetic_test_count), 2002);
      write_file(use[0],
                 idx_image_bytes(train.count(), 28, 28, train.pixels));
      write_file(use[1], idx_label_bytes(train.labels));
      write_file(use[2], idx_image_bytes(test.count(), 28, 28, test.pixels));
      write_file(use[3], idx_label_bytes(test.labels));
    }
    data.kind = "synthetic";
  } else {
    throw IoError("MNIST IDX files not found under " + root +
                  " and synthetic_fallback is disabled");
  }

  data.train_images = parse_idx_images(read_file_maybe_gzip(use[0]));
  data.train_labels = parse_idx_labels(read_file_maybe_gzip(use[1]));
  data.test_images = parse_idx_images(read_file_maybe_gzip(use[2]));
  data.test_labels = parse_idx_labels(read_file_maybe_gzip(use[3]));
  if (data.train_images.count !=
          static_cast<int>(data.train_labels.size()) ||
      data.test_images.count != static_cast<int>(data.test_labels.size())) {
    throw IoError("image/label counts disagree under " + root);
  }
  return data;
}

SpikeTrain encode_image(const ExperimentConfig& config,
                        std::span<const double> image, Rng& rng) {
  if (config.encoding == "ttfs") return ttfs_encode(image, config.vdib.T);
  return poisson_encode(image, config.vdib.T, config.poisson_gain, rng);
}

LabeledSequence image_sequence(const ExperimentConfig& config,
                               std::span<const double> image, int label,
                               Rng& rng) {
  LabeledSequence seq;
  seq.x = encode_image(config, image, rng);
  const ReferenceSignal ref = build_reference(
      image, config.vdib.T,
      config.reference_mode == "every_step" ? ReferenceMode::every_step
                                            : ReferenceMode::final_step);
  seq.r = ref.r;
  seq.r_defined = ref.defined;
  seq.label = label;
  return seq;
}

struct MnistEval {
  MnistVariantResult stats;
  std::vector<std::vector<double>> reconstructions;
};

MnistEval evaluate_mnist(const ExperimentConfig& config,
                         const VdibConfig& vcfg, EncoderNetwork& net,
                         DecoderModel& decoder, const IdxImages& images,
                         const std::vector<int>& labels,
                         const SurrogateClassifier& classifier, int n_eval,
                         uint64_t seed) {
  Rng rng(seed, kStreamEvalSample);
  MnistEval eval;
  const int n = std::min(n_eval, images.count);
  eval.reconstructions.reserve(n);

  long readout_spikes = 0, hidden_spikes = 0;
  long readout_units = 0, hidden_units = 0;
  double mse = 0.0;
  long correct = 0;
  std::vector<uint8_t> x_t(config.n_x);
  for (int s = 0; s < n; ++s) {
    const std::span<const double> image = images.image(s);
    const SpikeTrain x = encode_image(config, image, rng);
    net.reset();
    WindowBuffer window(net.n_readout(), vcfg.tau_d);
    for (int t = 0; t < x.steps; ++t) {
      for (int u = 0; u < x.units; ++u) x_t[u] = x.at(u, t);
      const StepResult step = forward_step(net, x_t, rng);
      window_push(window, step.y);
      for (uint8_t v : step.y) readout_spikes += v;
      readout_units += net.n_readout();
      for (size_t l = 0; l + 1 < net.layers.size(); ++l) {
        for (uint8_t v : step.layers[l].spikes) hidden_spikes += v;
        hidden_units += net.layers[l].n_post;
      }
    }
    const std::vector<double> out = decoder_forward(
        decoder, decode_features_of(window, vcfg.decode_features));
    std::vector<double> recon = predicted_mean(out, decoder.likelihood);
    double se = 0.0;
    for (size_t i = 0; i < recon.size(); ++i) {
      se += (recon[i] - image[i]) * (recon[i] - image[i]);
    }
    mse += se / static_cast<double>(recon.size());
    correct += classifier.predict(recon) == labels[s];
    eval.reconstructions.push_back(std::move(recon));
  }

  eval.stats.recon_mse = mse / n;
  eval.stats.accuracy = static_cast<double>(correct) / n;
  eval.stats.spike_rate_readout =
      static_cast<double>(readout_spikes) / readout_units;
  eval.stats.spike_rate_hidden =
      hidden_units > 0 ? static_cast<double>(hidden_spikes) / hidden_units
                       : 0.0;
  return eval;
}

}  // namespace

MnistResult run_mnist_naturalization(const ExperimentConfig& config,
                                     bool write_artifacts) {
  config.validate();
  if (config.task != "mnist_naturalize") {
    throw ConfigError("run_mnist_naturalization requires task=mnist_naturalize");
  }
  if (write_artifacts && config.out_dir.empty()) {
    throw ConfigError("out_dir required when writing artifacts");
  }

  const MnistData data = resolve_mnist_data(config);
  const int n_pixels = data.train_images.rows * data.train_images.cols;
  if (config.n_x != n_pixels || config.n_r != n_pixels) {
    throw ConfigError("mnist_naturalize requires n_x == n_r == image pixels");
  }

  MnistResult result;
  result.dataset_kind = data.kind;

  SurrogateClassifier classifier;
  classifier.train(data.train_images, data.train_labels,
                   config.classifier_train_n, config.classifier_epochs,
                   /*seed=*/4242);
  {
    std::vector<std::vector<double>> raw;
    std::vector<int> labels;
    const int n = std::min(config.n_eval, data.test_images.count);
    for (int i = 0; i < n; ++i) {
      const auto img = data.test_images.image(i);
      raw.emplace_back(img.begin(), img.end());
      labels.push_back(data.test_labels[i]);
    }
    result.classifier_test_accuracy = classifier.accuracy(raw, labels);
  }

  result.per_seed.resize(config.seeds.size());
  struct Job {
    int seed_idx;
    DecodeFeatures features;
  };
  std::vector<Job> jobs;
  for (size_t i = 0; i < config.seeds.size(); ++i) {
    jobs.push_back({static_cast<int>(i), DecodeFeatures::windowed});
    jobs.push_back({static_cast<int>(i), DecodeFeatures::rate});
  }

  run_parallel(static_cast<int>(jobs.size()), [&](int job_idx) {
    const Job job = jobs[job_idx];
    const uint64_t seed = config.seeds[job.seed_idx];
    VdibConfig vcfg = config.vdib;
    vcfg.decode_features = job.features;

    Rng init_rng(seed, kStreamInit);
    Rng data_rng(seed, kStreamTrainData);
    Rng sample_rng(seed, kStreamTrainSample);
    EncoderNetwork net = build_encoder_from(config, init_rng);
    DecoderModel decoder = build_decoder_from(config, job.features, init_rng);

    const SampleSource source = [&](long, Rng&) {
      const int idx = static_cast<int>(
          data_rng.uniform_below(static_cast<uint32_t>(data.train_images.count)));
      return image_sequence(config, data.train_images.image(idx),
                            data.train_labels[idx], data_rng);
    };
    const MetricLog log = train(net, decoder, source, vcfg, config.n_train,
                                config.log_interval, sample_rng);

    const MnistEval eval = evaluate_mnist(
        config, vcfg, net, decoder, data.test_images, data.test_labels,
        classifier, config.n_eval, seed);

    MnistSeedResult& sr = result.per_seed[job.seed_idx];
    sr.seed = seed;
    (job.features == DecodeFeatures::windowed ? sr.vdib : sr.rate) = eval.stats;

    if (write_artifacts) {
      const std::string dir = config.out_dir + "/seed_" +
                              std::to_string(seed) + "_" +
                              to_string(job.features);
      ensure_dir(dir);
      log.write_csv_file(dir + "/metrics.csv");
      const std::string resolved = resolved_config_text(config);
      write_text_file(dir + "/config.json", resolved);
      save_checkpoint(dir + "/checkpoint.json", net, decoder,
                      fnv1a_hex(resolved));
      const int n_pgm =
          std::min<int>(8, static_cast<int>(eval.reconstructions.size()));
      for (int i = 0; i < n_pgm; ++i) {
        write_pgm(dir + "/recon_" + std::to_string(i) + ".pgm",
                  eval.reconstructions[i], data.test_images.cols,
                  data.test_images.rows);
      }
    }
  });

  std::vector<double> vm, rm, va, ra;
  for (const auto& sr : result.per_seed) {
    vm.push_back(sr.vdib.recon_mse);
    rm.push_back(sr.rate.recon_mse);
    va.push_back(sr.vdib.accuracy);
    ra.push_back(sr.rate.accuracy);
  }
  result.mean_vdib_mse = mean_of(vm);
  result.mean_rate_mse = mean_of(rm);
  result.mean_vdib_accuracy = mean_of(va);
  result.mean_rate_accuracy = mean_of(ra);

  if (write_artifacts) {
    ensure_dir(config.out_dir);
    std::ofstream os(config.out_dir + "/summary.csv");
    os << "seed,decoding,recon_mse,accuracy,spike_rate_readout,"
          "spike_rate_hidden\n";
    os.precision(10);
    for (const auto& sr : result.per_seed) {
      os << sr.seed << ",vdib," << sr.vdib.recon_mse << ',' << sr.vdib.accuracy
         << ',' << sr.vdib.spike_rate_readout << ','
         << sr.vdib.spike_rate_hidden << "\n";
      os << sr.seed << ",rate," << sr.rate.recon_mse << ',' << sr.rate.accuracy
         << ',' << sr.rate.spike_rate_readout << ','
         << sr.rate.spike_rate_hidden << "\n";
    }
  }
  return result;
}

// ----- Sweeps -----

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "beta") return SweepAxis::beta;
  if (name == "delta") return SweepAxis::delta;
  if (name == "tau_e") return SweepAxis::tau_e;
  if (name == "tau_d") return SweepAxis::tau_d;
  throw ConfigError("unknown sweep axis: " + name);
}

namespace {

const char* axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::beta: return "beta";
    case SweepAxis::delta: return "delta";
    case SweepAxis::tau_e: return "tau_e";
    case SweepAxis::tau_d: return "tau_d";
  }
  return "?";
}

ExperimentConfig with_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                 double value) {
  ExperimentConfig c = base;
  switch (axis) {
    case SweepAxis::beta:
      c.vdib.beta = value;
      break;
    case SweepAxis::delta:
      c.blob.delta = static_cast<int>(std::llround(value));
      break;
    case SweepAxis::tau_e:
      c.vdib.tau_e = static_cast<int>(std::llround(value));
      break;
    case SweepAxis::tau_d:
      c.vdib.tau_d = static_cast<int>(std::llround(value));
      break;
  }
  c.validate();
  return c;
}

}  // namespace

std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepAxis axis,
                              const std::vector<double>& values) {
  VDIB_CHECK(!values.empty(), "sweep needs at least one value");
  std::vector<SweepPoint> points(values.size() * config.seeds.size());

  std::vector<std::pair<double, uint64_t>> jobs;
  for (double v : values) {
    for (uint64_t s : config.seeds) jobs.push_back({v, s});
  }
  run_parallel(static_cast<int>(jobs.size()), [&](int idx) {
    const auto [value, seed] = jobs[idx];
    ExperimentConfig c = with_axis_value(config, axis, value);
    c.seeds = {seed};
    if (c.task == "predictive_coding") {
      const PredictiveCodingResult r =
          run_predictive_coding(c, /*write_artifacts=*/false);
      points[idx] = {value, seed, r.per_seed[0].mse,
                     r.per_seed[0].spike_rate_readout,
                     r.per_seed[0].accuracy};
    } else if (c.task == "mnist_naturalize") {
      const MnistResult r = run_mnist_naturalization(c, false);
      points[idx] = {value, seed, r.per_seed[0].vdib.recon_mse,
                     r.per_seed[0].vdib.spike_rate_readout,
                     r.per_seed[0].vdib.accuracy};
    } else {
      throw ConfigError("sweep supports predictive_coding and "
                        "mnist_naturalize tasks");
    }
  });
  return points;
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepPoint>& points, SweepAxis axis) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open sweep CSV for writing: " + path);
  os << "axis,value,seed,mse,spike_rate,accuracy\n";
  os.precision(10);
  for (const SweepPoint& p : points) {
    os << axis_name(axis) << ',' << p.value << ',' << p.seed << ',' << p.mse
       << ',' << p.spike_rate << ',' << p.accuracy << "\n";
  }
  if (!os) throw IoError("failed writing sweep CSV: " + path);
}

// ----- Representation export -----

void export_representations(const std::string& checkpoint_path,
                            const ExperimentConfig& config,
                            const std::string& out_csv, bool full_train) {
  Checkpoint cp = load_checkpoint(checkpoint_path);
  EncoderNetwork& net = cp.encoder;

  std::ofstream os(out_csv);
  if (!os) throw IoError("cannot open export CSV for writing: " + out_csv);
  os << "label";
  if (full_train) {
    for (int i = 0; i < net.n_readout(); ++i) {
      for (int t = 0; t < config.vdib.T; ++t) os << ",y" << i << "_t" << t;
    }
  } else {
    for (int i = 0; i < net.n_readout(); ++i) os << ",count" << i;
  }
  os << "\n";

  auto emit = [&](const LabeledSequence& seq, Rng& rng) {
    net.reset();
    SpikeTrain y(net.n_readout(), seq.x.steps);
    std::vector<uint8_t> x_t(seq.x.units);
    for (int t = 0; t < seq.x.steps; ++t) {
      for (int u = 0; u < seq.x.units; ++u) x_t[u] = seq.x.at(u, t);
      const StepResult step = forward_step(net, x_t, rng);
      for (int i = 0; i < net.n_readout(); ++i) y.set(i, t, step.y[i]);
    }
    os << seq.label;
    if (full_train) {
      for (int i = 0; i < net.n_readout(); ++i) {
        for (int t = 0; t < seq.x.steps; ++t) {
          os << ',' << static_cast<int>(y.at(i, t));
        }
      }
    } else {
      for (int i = 0; i < net.n_readout(); ++i) {
        long count = 0;
        for (int t = 0; t < seq.x.steps; ++t) count += y.at(i, t);
        os << ',' << count;
      }
    }
    os << "\n";
  };

  Rng rng(31337, kStreamEvalSample);
  if (config.task == "predictive_coding") {
    Rng data_rng(31337, kStreamEvalData);
    for (int s = 0; s < config.n_eval; ++s) {
      emit(gen_blob_sequence(data_rng, config.blob, config.vdib.T), rng);
    }
  } else {
    const MnistData data = resolve_mnist_data(config);
    const int n = std::min(config.n_eval, data.test_images.count);
    for (int s = 0; s < n; ++s) {
      LabeledSequence seq =
          image_sequence(config, data.test_images.image(s),
                         data.test_labels[s], rng);
      emit(seq, rng);
    }
  }
  if (!os) throw IoError("failed writing export CSV: " + out_csv);
}

void write_pgm(const std::string& path, std::span<const double> pixels,
               int width, int height) {
  VDIB_CHECK(static_cast<size_t>(width) * height == pixels.size());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open PGM for writing: " + path);
  os << "P5\n" << width << ' ' << height << "\n255\n";
  for (double v : pixels) {
    const double c = std::min(1.0, std::max(0.0, v));
    os.put(static_cast<char>(std::lround(c * 255.0)));
  }
  if (!os) throw IoError("failed writing PGM: " + path);
}

}  // namespace vdib
