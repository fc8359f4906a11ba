#pragma once

#include <string>

#include "vdib/decoder.hpp"
#include "vdib/encoder.hpp"

namespace vdib {

// One file holds both networks. Weights round-trip bit-exactly; runtime
// trace state is not persisted (networks load reset).
struct Checkpoint {
  EncoderNetwork encoder;
  DecoderModel decoder;
  std::string config_hash;
};

void save_checkpoint(const std::string& path, const EncoderNetwork& encoder,
                     const DecoderModel& decoder,
                     const std::string& config_hash);

Checkpoint load_checkpoint(const std::string& path);

// FNV-1a hash of a string, hex-encoded; used to stamp checkpoints with the
// resolved configuration they came from.
std::string fnv1a_hex(const std::string& text);

}  // namespace vdib
