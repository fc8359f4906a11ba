#include <zlib.h>

#include <cmath>
#include <fstream>

#include "vdib/data.hpp"

namespace vdib {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;  // ubyte, 3 dimensions
constexpr uint32_t kLabelMagic = 0x00000801;  // ubyte, 1 dimension

uint32_t read_be32(std::span<const uint8_t> bytes, size_t offset) {
  if (offset + 4 > bytes.size()) {
    throw ParseError("IDX header truncated", offset);
  }
  return (uint32_t{bytes[offset]} << 24) | (uint32_t{bytes[offset + 1]} << 16) |
         (uint32_t{bytes[offset + 2]} << 8) | uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

}  // namespace

IdxImages parse_idx_images(std::span<const uint8_t> bytes) {
  const uint32_t magic = read_be32(bytes, 0);
  if (magic != kImageMagic) {
    throw ParseError("unexpected IDX magic for images", 0);
  }
  const uint32_t count = read_be32(bytes, 4);
  const uint32_t rows = read_be32(bytes, 8);
  const uint32_t cols = read_be32(bytes, 12);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096 ||
      count > (uint32_t{1} << 24)) {
    throw ParseError("IDX image dimensions out of range", 4);
  }
  const uint64_t payload = uint64_t{count} * rows * cols;
  if (bytes.size() < 16 + payload) {
    throw ParseError("IDX image payload truncated", bytes.size());
  }
  if (bytes.size() > 16 + payload) {
    throw ParseError("trailing bytes after IDX image payload", 16 + payload);
  }
  IdxImages images;
  images.count = static_cast<int>(count);
  images.rows = static_cast<int>(rows);
  images.cols = static_cast<int>(cols);
  images.pixels.resize(payload);
  for (uint64_t i = 0; i < payload; ++i) {
    images.pixels[i] = bytes[16 + i] / 255.0;
  }
  return images;
}

std::vector<int> parse_idx_labels(std::span<const uint8_t> bytes) {
  const uint32_t magic = read_be32(bytes, 0);
  if (magic != kLabelMagic) {
    throw ParseError("unexpected IDX magic for labels", 0);
  }
  const uint32_t count = read_be32(bytes, 4);
  if (bytes.size() < 8 + uint64_t{count}) {
    throw ParseError("IDX label payload truncated", bytes.size());
  }
  if (bytes.size() > 8 + uint64_t{count}) {
    throw ParseError("trailing bytes after IDX label payload", 8 + count);
  }
  std::vector<int> labels(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint8_t v = bytes[8 + i];
    if (v > 9) throw ParseError("label outside 0-9", 8 + i);
    labels[i] = v;
  }
  return labels;
}

std::vector<uint8_t> idx_image_bytes(int count, int rows, int cols,
                                     std::span<const uint8_t> pixels) {
  VDIB_CHECK(count >= 0 && rows > 0 && cols > 0);
  VDIB_CHECK(pixels.size() ==
             static_cast<size_t>(count) * rows * cols);
  std::vector<uint8_t> out;
  out.reserve(16 + pixels.size());
  write_be32(out, kImageMagic);
  write_be32(out, static_cast<uint32_t>(count));
  write_be32(out, static_cast<uint32_t>(rows));
  write_be32(out, static_cast<uint32_t>(cols));
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<uint8_t> idx_label_bytes(std::span<const uint8_t> labels) {
  std::vector<uint8_t> out;
  out.reserve(8 + labels.size());
  write_be32(out, kLabelMagic);
  write_be32(out, static_cast<uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<uint8_t> read_file_maybe_gzip(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open file: " + path);
  std::vector<uint8_t> raw((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
  if (raw.size() < 2 || raw[0] != 0x1f || raw[1] != 0x8b) return raw;

  // gzip container: inflate with a 16+MAX_WBITS window.
  std::vector<uint8_t> out;
  out.resize(std::max<size_t>(raw.size() * 4, 1 << 16));
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw IoError("zlib init failed for: " + path);
  }
  zs.next_in = raw.data();
  zs.avail_in = static_cast<uInt>(raw.size());
  size_t produced = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (produced == out.size()) out.resize(out.size() * 2);
    zs.next_out = out.data() + produced;
    zs.avail_out = static_cast<uInt>(out.size() - produced);
    rc = inflate(&zs, Z_NO_FLUSH);
    produced = out.size() - zs.avail_out;
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IoError("gzip decompression failed for: " + path);
    }
  }
  inflateEnd(&zs);
  out.resize(produced);
  return out;
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open file for writing: " + path);
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing file: " + path);
}

SpikeTrain poisson_encode(std::span<const double> image, int T, double gain,
                          Rng& rng) {
  VDIB_CHECK(T >= 1 && gain > 0.0 && gain <= 1.0);
  SpikeTrain train(static_cast<int>(image.size()), T);
  for (size_t i = 0; i < image.size(); ++i) {
    VDIB_CHECK(image[i] >= 0.0 && image[i] <= 1.0, "intensity outside [0,1]");
    const double p = gain * image[i];
    for (int t = 0; t < T; ++t) {
      train.set(static_cast<int>(i), t, static_cast<uint8_t>(rng.bernoulli(p)));
    }
  }
  return train;
}

namespace {

// Round half to even, for platform-stable encodings.
long round_half_even(double v) {
  const double f = std::floor(v);
  const double frac = v - f;
  if (frac > 0.5) return static_cast<long>(f) + 1;
  if (frac < 0.5) return static_cast<long>(f);
  const long lf = static_cast<long>(f);
  return lf % 2 == 0 ? lf : lf + 1;
}

}  // namespace

SpikeTrain ttfs_encode(std::span<const double> image, int T) {
  VDIB_CHECK(T >= 1);
  SpikeTrain train(static_cast<int>(image.size()), T);
  for (size_t i = 0; i < image.size(); ++i) {
    VDIB_CHECK(image[i] >= 0.0 && image[i] <= 1.0, "intensity outside [0,1]");
    if (image[i] <= 0.0) continue;
    const long t = 1 + round_half_even((1.0 - image[i]) * (T - 1));
    train.set(static_cast<int>(i), static_cast<int>(t - 1), 1);
  }
  return train;
}

ReferenceSignal build_reference(std::span<const double> image, int T,
                                ReferenceMode mode) {
  VDIB_CHECK(T >= 1 && !image.empty());
  ReferenceSignal ref;
  ref.r = Matrix(static_cast<int>(image.size()), T);
  ref.defined.assign(T, 0);
  if (mode == ReferenceMode::final_step) {
    for (size_t i = 0; i < image.size(); ++i) {
      ref.r(static_cast<int>(i), T - 1) = image[i];
    }
    ref.defined[T - 1] = 1;
  } else {
    for (int t = 0; t < T; ++t) {
      for (size_t i = 0; i < image.size(); ++i) {
        ref.r(static_cast<int>(i), t) = image[i];
      }
      ref.defined[t] = 1;
    }
  }
  return ref;
}

}  // namespace vdib
