#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vdib/check.hpp"

namespace vdib {

// Binary spike matrix [units x timesteps], row-major per unit.
struct SpikeTrain {
  int units = 0;
  int steps = 0;
  std::vector<uint8_t> data;

  SpikeTrain() = default;
  SpikeTrain(int n_units, int n_steps)
      : units(n_units),
        steps(n_steps),
        data(static_cast<size_t>(n_units) * n_steps, 0) {
    VDIB_CHECK(n_units >= 0 && n_steps >= 0);
  }

  uint8_t at(int unit, int t) const {
    return data[static_cast<size_t>(unit) * steps + t];
  }
  void set(int unit, int t, uint8_t v) {
    data[static_cast<size_t>(unit) * steps + t] = v;
  }

  std::span<const uint8_t> unit_row(int unit) const {
    return {data.data() + static_cast<size_t>(unit) * steps,
            static_cast<size_t>(steps)};
  }

  // Spike vector at timestep t (0-based), as a fresh column copy.
  std::vector<uint8_t> column(int t) const {
    std::vector<uint8_t> out(units);
    for (int u = 0; u < units; ++u) out[u] = at(u, t);
    return out;
  }

  size_t count_spikes() const {
    size_t n = 0;
    for (uint8_t v : data) n += v;
    return n;
  }
};

// Mean spikes per unit per timestep.
inline double spike_rate(const SpikeTrain& train) {
  VDIB_CHECK(train.units > 0 && train.steps > 0, "spike_rate of empty train");
  return static_cast<double>(train.count_spikes()) /
         static_cast<double>(train.data.size());
}

}  // namespace vdib
