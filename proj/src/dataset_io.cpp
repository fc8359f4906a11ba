#include <cstring>
#include <fstream>

#include "vdib/data.hpp"

namespace vdib {

// Binary container: magic "VDSQ", u32 version, u32 count, then per sequence
// dims, bit-packed spikes, sparse reference columns, label, positions.
// All integers little-endian u32 unless noted; doubles as raw IEEE754 bits.

namespace {

constexpr char kMagic[4] = {'V', 'D', 'S', 'Q'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
               static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  os.write(b, 4);
}

void put_i32(std::ostream& os, int32_t v) {
  put_u32(os, static_cast<uint32_t>(v));
}

void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(bits >> (8 * i));
  os.write(b, 8);
}

uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("truncated dataset file: " + path);
  }
  return uint32_t{b[0]} | (uint32_t{b[1]} << 8) | (uint32_t{b[2]} << 16) |
         (uint32_t{b[3]} << 24);
}

int32_t get_i32(std::istream& is, const std::string& path) {
  return static_cast<int32_t>(get_u32(is, path));
}

double get_f64(std::istream& is, const std::string& path) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) {
    throw IoError("truncated dataset file: " + path);
  }
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= uint64_t{b[i]} << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_dataset(const std::string& path,
                  const std::vector<LabeledSequence>& sequences,
                  const std::string& params_json_sidecar) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open dataset file for writing: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<uint32_t>(sequences.size()));

  for (const LabeledSequence& seq : sequences) {
    put_u32(os, static_cast<uint32_t>(seq.x.units));
    put_u32(os, static_cast<uint32_t>(seq.x.steps));
    // Bit-packed spikes, row-major.
    const size_t nbits = seq.x.data.size();
    std::vector<uint8_t> packed((nbits + 7) / 8, 0);
    for (size_t i = 0; i < nbits; ++i) {
      if (seq.x.data[i]) packed[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
    }
    os.write(reinterpret_cast<const char*>(packed.data()),
             static_cast<std::streamsize>(packed.size()));

    put_u32(os, static_cast<uint32_t>(seq.r.rows));
    uint32_t defined = 0;
    for (uint8_t d : seq.r_defined) defined += d != 0;
    put_u32(os, defined);
    for (int t = 0; t < seq.x.steps; ++t) {
      if (!seq.r_defined[t]) continue;
      put_u32(os, static_cast<uint32_t>(t));
      for (int i = 0; i < seq.r.rows; ++i) put_f64(os, seq.r(i, t));
    }

    put_i32(os, seq.label);
    put_u32(os, static_cast<uint32_t>(seq.positions.size()));
    for (int p : seq.positions) put_i32(os, p);
  }
  if (!os) throw IoError("failed writing dataset file: " + path);

  if (!params_json_sidecar.empty()) {
    std::ofstream js(path + ".json");
    if (!js) throw IoError("cannot write dataset sidecar for: " + path);
    js << params_json_sidecar << "\n";
  }
}

std::vector<LabeledSequence> load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open dataset file: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a dataset container: " + path);
  }
  const uint32_t version = get_u32(is, path);
  if (version != kVersion) {
    throw IoError("unsupported dataset version in: " + path);
  }
  const uint32_t count = get_u32(is, path);

  std::vector<LabeledSequence> sequences;
  sequences.reserve(count);
  for (uint32_t s = 0; s < count; ++s) {
    LabeledSequence seq;
    const uint32_t units = get_u32(is, path);
    const uint32_t steps = get_u32(is, path);
    seq.x = SpikeTrain(static_cast<int>(units), static_cast<int>(steps));
    const size_t nbits = seq.x.data.size();
    std::vector<uint8_t> packed((nbits + 7) / 8);
    if (!is.read(reinterpret_cast<char*>(packed.data()),
                 static_cast<std::streamsize>(packed.size()))) {
      throw IoError("truncated dataset file: " + path);
    }
    for (size_t i = 0; i < nbits; ++i) {
      seq.x.data[i] = (packed[i / 8] >> (i % 8)) & 1u;
    }

    const uint32_t n_r = get_u32(is, path);
    seq.r = Matrix(static_cast<int>(n_r), static_cast<int>(steps));
    seq.r_defined.assign(steps, 0);
    const uint32_t defined = get_u32(is, path);
    for (uint32_t d = 0; d < defined; ++d) {
      const uint32_t t = get_u32(is, path);
      if (t >= steps) throw IoError("corrupt dataset reference in: " + path);
      seq.r_defined[t] = 1;
      for (uint32_t i = 0; i < n_r; ++i) {
        seq.r(static_cast<int>(i), static_cast<int>(t)) = get_f64(is, path);
      }
    }

    seq.label = get_i32(is, path);
    const uint32_t n_pos = get_u32(is, path);
    seq.positions.resize(n_pos);
    for (uint32_t i = 0; i < n_pos; ++i) seq.positions[i] = get_i32(is, path);
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

}  // namespace vdib
