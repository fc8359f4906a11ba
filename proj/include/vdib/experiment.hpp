#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vdib/data.hpp"
#include "vdib/trainer.hpp"

namespace vdib {

// Fully resolved experiment description; every field overridable from the
// CLI via --set key=value. data_root falls back to $VDIB_DATA_ROOT.
struct ExperimentConfig {
  std::string task = "predictive_coding";

  VdibConfig vdib;
  std::string surrogate = "sigmoid_prime";

  // Architecture
  int n_x = 20;
  std::vector<int> n_hidden;
  int n_y = 10;
  int n_r = 210;
  double tau_mem = 20.0;
  double tau_syn = 5.0;
  double tau_ref = 10.0;
  int num_kernels = 1;
  std::string decoder = "linear";
  std::string likelihood = "categorical";

  // Run control
  long n_train = 5000;
  long log_interval = 100;
  long checkpoint_interval = 0;
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string out_dir;

  // Predictive coding
  BlobProcessParams blob;
  int eval_T = 1000;

  // MNIST-style tasks
  std::string data_root;
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";
  std::string encoding = "poisson";
  double poisson_gain = 0.5;
  std::string reference_mode = "final_step";
  int n_eval = 2000;
  bool synthetic_fallback = true;
  long synthetic_train_count = 30000;
  long synthetic_test_count = 5000;
  long classifier_train_n = 20000;
  int classifier_epochs = 3;

  // MNIST-DVS
  std::string aedat_dir;
  double bin_ms = 10.0;
  double duration_ms = 2000.0;
  CropRegion crop{51, 51, 26, 26};

  FilterParams hidden_filter() const;
  FilterParams readout_filter() const;
  void validate() const;
};

ExperimentConfig config_from_json_text(
    const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_experiment_config(
    const std::string& path, const std::vector<std::string>& overrides = {});

// Canonical JSON snapshot that reproduces the run exactly.
std::string resolved_config_text(const ExperimentConfig& config);

// Frozen multinomial-logistic surrogate for reconstruction quality scoring.
// Trained once on raw training images; classifying before training is a
// state error.
class SurrogateClassifier {
 public:
  void train(const IdxImages& images, const std::vector<int>& labels,
             long n_train, int epochs, uint64_t seed);
  int predict(std::span<const double> image) const;
  double accuracy(const std::vector<std::vector<double>>& images,
                  const std::vector<int>& labels) const;
  bool trained() const { return trained_; }

 private:
  Matrix w_;
  std::vector<double> b_;
  bool trained_ = false;
};

struct PredictiveSeedResult {
  uint64_t seed = 0;
  double mse = 0.0;            // probability-space MSE on the eval sequence
  double mse_untrained = 0.0;  // same eval with an untrained model
  double accuracy = 0.0;       // top-1 pair classification
  double position_error = 0.0; // mean circular distance of decoded pair
  double spike_rate_readout = 0.0;
  double spike_rate_hidden = 0.0;
};

struct PredictiveCodingResult {
  std::vector<PredictiveSeedResult> per_seed;
  double mean_mse = 0.0;
  double std_mse = 0.0;
  double mean_spike_rate = 0.0;
  double mean_accuracy = 0.0;
  double mean_mse_untrained = 0.0;
};

PredictiveCodingResult run_predictive_coding(const ExperimentConfig& config,
                                             bool write_artifacts = true);

struct MnistVariantResult {
  double recon_mse = 0.0;
  double accuracy = 0.0;
  double spike_rate_readout = 0.0;
  double spike_rate_hidden = 0.0;
};

struct MnistSeedResult {
  uint64_t seed = 0;
  MnistVariantResult vdib;
  MnistVariantResult rate;
};

struct MnistResult {
  std::vector<MnistSeedResult> per_seed;
  std::string dataset_kind;  // "idx-files" or "synthetic"
  double classifier_test_accuracy = 0.0;  // on raw test images
  double mean_vdib_mse = 0.0;
  double mean_rate_mse = 0.0;
  double mean_vdib_accuracy = 0.0;
  double mean_rate_accuracy = 0.0;
};

// Trains and evaluates both decoding schemes (windowed VDIB and the
// rate-pooling baseline) with the same budget per seed.
MnistResult run_mnist_naturalization(const ExperimentConfig& config,
                                     bool write_artifacts = true);

enum class SweepAxis { beta, delta, tau_e, tau_d };
SweepAxis sweep_axis_from_string(const std::string& name);

struct SweepPoint {
  double value = 0.0;
  uint64_t seed = 0;
  double mse = 0.0;
  double spike_rate = 0.0;
  double accuracy = 0.0;
};

// One full run per (value, seed); points run as independent parallel
// workers. Long-format CSV via write_sweep_csv.
std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepAxis axis,
                              const std::vector<double>& values);
void write_sweep_csv(const std::string& path,
                     const std::vector<SweepPoint>& points, SweepAxis axis);

// One row per sample: label plus per-unit readout spike counts (rate mode)
// or the full flattened spike train.
void export_representations(const std::string& checkpoint_path,
                            const ExperimentConfig& config,
                            const std::string& out_csv, bool full_train);

// Binary P5 graymap, values scaled to 0..255.
void write_pgm(const std::string& path, std::span<const double> pixels,
               int width, int height);

}  // namespace vdib
