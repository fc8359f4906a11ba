#pragma once

#include <cstdint>
#include <vector>

#include "vdib/matrix.hpp"
#include "vdib/spike_train.hpp"

namespace vdib {

// One training / evaluation example: exogenous spikes x plus the natural
// reference signal r. r is dense [N_R x T] with a per-timestep defined mask;
// tasks with a sparse reference (e.g. image at t = T only) mark the other
// columns undefined.
struct LabeledSequence {
  SpikeTrain x;
  Matrix r;                         // [N_R x T]
  std::vector<uint8_t> r_defined;   // length T
  int label = -1;                   // class label when meaningful
  std::vector<int> positions;       // generator metadata (blob tasks)

  int steps() const { return x.steps; }

  std::vector<double> reference_at(int t) const {
    std::vector<double> out(r.rows);
    for (int i = 0; i < r.rows; ++i) out[i] = r(i, t);
    return out;
  }
};

}  // namespace vdib
