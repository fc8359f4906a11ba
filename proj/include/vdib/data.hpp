#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vdib/rng.hpp"
#include "vdib/sequence.hpp"

namespace vdib {

// ----- Drifting Gaussian blob process -----

struct BlobProcessParams {
  int n_positions = 20;
  int n_blobs = 2;
  double sigma = 0.45;
  double ar_a = 0.9;
  double ar_b = 0.14;
  int delta = 0;  // reference lag; may be negative

  void validate() const;
};

// Canonical index of the unordered pair {p1, p2} (1-based positions, equal
// allowed), bijective onto 0 .. n(n+1)/2 - 1.
int pair_index(int p1, int p2, int n);

// Two independent blobs drift on a ring of n_positions units; each blob's
// center theta follows theta_t = theta_{t-1} + v_t, v_t = a v_{t-1} - b eps_t
// with eps ~ N(0,1), theta_0 uniform on the ring, v_0 = 0. Unit i spikes
// with probability exp(-d_wrap(i, theta_t)^2 / (2 sigma^2)), maximized over
// blobs. The reference at time t is the one-hot of the unordered pair of
// rounded blob positions at time t + delta; timesteps where t + delta falls
// outside [1, T] carry no reference.
LabeledSequence gen_blob_sequence(Rng& rng, const BlobProcessParams& params,
                                  int T);

// ----- MNIST-style IDX ingestion and spike encodings -----

struct IdxImages {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;  // [count x rows x cols], normalized to [0,1]

  std::span<const double> image(int i) const {
    const size_t n = static_cast<size_t>(rows) * cols;
    return {pixels.data() + i * n, n};
  }
};

IdxImages parse_idx_images(std::span<const uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const uint8_t> bytes);

// Serialization (fixtures, generated corpora). Pixels are raw bytes.
std::vector<uint8_t> idx_image_bytes(int count, int rows, int cols,
                                     std::span<const uint8_t> pixels);
std::vector<uint8_t> idx_label_bytes(std::span<const uint8_t> labels);

// Reads a file, transparently inflating gzip content.
std::vector<uint8_t> read_file_maybe_gzip(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> bytes);

// Bernoulli approximation of Poisson encoding: pixel i spikes at each step
// independently with probability gain * intensity_i.
SpikeTrain poisson_encode(std::span<const double> image, int T, double gain,
                          Rng& rng);

// Time-to-first-spike: pixel i emits one spike at
// t = 1 + round((1 - intensity_i) * (T - 1)) (round half to even);
// zero-intensity pixels stay silent.
SpikeTrain ttfs_encode(std::span<const double> image, int T);

enum class ReferenceMode { final_step, every_step };

struct ReferenceSignal {
  Matrix r;                        // [N_R x T]
  std::vector<uint8_t> defined;    // length T
};

ReferenceSignal build_reference(std::span<const double> image, int T,
                                ReferenceMode mode);

// ----- AEDAT 2.0 event streams (DVS128) -----

struct DvsEvent {
  int64_t timestamp_us = 0;  // normalized so the first event is at 0
  int x = 0;
  int y = 0;
  int polarity = 1;  // +1 / -1
};

struct EventStream {
  std::vector<DvsEvent> events;
};

// "#!AER-DAT2.0" header lines followed by 8-byte big-endian records
// (32-bit address, 32-bit microsecond timestamp). DVS128 address layout:
// bit 0 polarity, bits 1-7 x, bits 8-14 y.
EventStream parse_aedat(std::span<const uint8_t> bytes);

struct CropRegion {
  int x0 = 0;
  int y0 = 0;
  int width = 128;
  int height = 128;
};

// Spatiotemporal binning: T = duration/bin bins; a pixel-bin is 1 iff at
// least one event of either polarity falls in it. Pixels are flattened
// row-major over the crop.
SpikeTrain bin_events(const EventStream& stream, double bin_ms,
                      double duration_ms, const CropRegion& crop);

// ----- Generated-dataset cache (binary container + JSON sidecar) -----

void save_dataset(const std::string& path,
                  const std::vector<LabeledSequence>& sequences,
                  const std::string& params_json_sidecar = "");
std::vector<LabeledSequence> load_dataset(const std::string& path);

// ----- Synthetic digit corpus (stand-in when MNIST files are absent) -----

struct DigitCorpus {
  int rows = 28;
  int cols = 28;
  std::vector<uint8_t> pixels;  // [count x 28 x 28]
  std::vector<uint8_t> labels;

  int count() const { return static_cast<int>(labels.size()); }
};

// Deterministic jittered glyph renderer: 28x28 grayscale digits with random
// shift, scale, stroke intensity, and pixel noise. Written through the IDX
// writer so the full parsing path is exercised.
DigitCorpus render_digit_corpus(int count, uint64_t seed);

}  // namespace vdib
