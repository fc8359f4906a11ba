#include <cmath>

#include "vdib/data.hpp"

namespace vdib {

void BlobProcessParams::validate() const {
  if (n_positions < 2) throw ConfigError("n_positions must be >= 2");
  if (n_blobs < 1) throw ConfigError("n_blobs must be >= 1");
  if (sigma <= 0.0) throw ConfigError("sigma must be > 0");
  if (std::abs(ar_a) >= 1.0) throw ConfigError("|a| must be < 1");
}

int pair_index(int p1, int p2, int n) {
  VDIB_CHECK(n >= 1 && p1 >= 1 && p1 <= n && p2 >= 1 && p2 <= n,
             "pair positions out of range");
  int a = std::min(p1, p2) - 1;
  int b = std::max(p1, p2) - 1;
  return a * n - a * (a - 1) / 2 + (b - a);
}

namespace {

double wrap_distance(double a, double b, int n) {
  double d = std::fmod(std::abs(a - b), static_cast<double>(n));
  return std::min(d, n - d);
}

// Rounded blob center as a 1-based ring position.
int ring_position(double theta, int n) {
  double w = std::fmod(theta, static_cast<double>(n));
  if (w < 0) w += n;
  int p = static_cast<int>(std::lround(w)) % n;
  return p + 1;
}

}  // namespace

LabeledSequence gen_blob_sequence(Rng& rng, const BlobProcessParams& params,
                                  int T) {
  params.validate();
  VDIB_CHECK(T >= 1);
  const int n = params.n_positions;
  const int n_r = n * (n + 1) / 2;

  std::vector<double> theta(params.n_blobs);
  std::vector<double> v(params.n_blobs, 0.0);
  for (double& th : theta) th = rng.uniform(0.0, static_cast<double>(n));

  LabeledSequence seq;
  seq.x = SpikeTrain(n, T);
  seq.r = Matrix(n_r, T);
  seq.r_defined.assign(T, 0);
  seq.positions.assign(static_cast<size_t>(params.n_blobs) * T, 0);

  // Unit i sits at ring coordinate i (0-based); the blob bump has peak
  // probability 1 at its center.
  const double inv_two_sigma2 = 1.0 / (2.0 * params.sigma * params.sigma);
  std::vector<std::vector<int>> pos(params.n_blobs, std::vector<int>(T));
  for (int t = 0; t < T; ++t) {
    for (int blb = 0; blb < params.n_blobs; ++blb) {
      v[blb] = params.ar_a * v[blb] - params.ar_b * rng.gaussian();
      theta[blb] += v[blb];
      pos[blb][t] = ring_position(theta[blb], n);
      seq.positions[static_cast<size_t>(blb) * T + t] = pos[blb][t];
    }
    for (int i = 0; i < n; ++i) {
      double prob = 0.0;
      for (int blb = 0; blb < params.n_blobs; ++blb) {
        const double d = wrap_distance(static_cast<double>(i), theta[blb], n);
        prob = std::max(prob, std::exp(-d * d * inv_two_sigma2));
      }
      seq.x.set(i, t, static_cast<uint8_t>(rng.bernoulli(prob)));
    }
  }

  for (int t = 0; t < T; ++t) {
    const int target = t + params.delta;  // 0-based
    if (target < 0 || target >= T) continue;
    // Reference assumes exactly two blobs (unordered position pair).
    VDIB_CHECK(params.n_blobs == 2,
               "pair reference requires exactly two blobs");
    const int idx = pair_index(pos[0][target], pos[1][target], n);
    seq.r(idx, t) = 1.0;
    seq.r_defined[t] = 1;
  }
  return seq;
}

}  // namespace vdib
