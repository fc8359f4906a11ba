#include <cmath>
#include <cstring>

#include "vdib/data.hpp"

namespace vdib {

namespace {

constexpr char kAedatMagic[] = "#!AER-DAT2.0";
constexpr int kSensorSize = 128;

}  // namespace

EventStream parse_aedat(std::span<const uint8_t> bytes) {
  const size_t magic_len = std::strlen(kAedatMagic);
  if (bytes.size() < magic_len ||
      std::memcmp(bytes.data(), kAedatMagic, magic_len) != 0) {
    throw ParseError("missing AER-DAT2.0 magic", 0);
  }

  // Header: consecutive lines starting with '#'.
  size_t pos = 0;
  while (pos < bytes.size() && bytes[pos] == '#') {
    while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    if (pos < bytes.size()) ++pos;  // consume '\n'
  }

  const size_t body = bytes.size() - pos;
  if (body % 8 != 0) {
    throw ParseError("AEDAT body is not a multiple of 8 bytes", bytes.size());
  }

  EventStream stream;
  stream.events.reserve(body / 8);
  uint32_t prev_ts = 0;
  bool first = true;
  int64_t t0 = 0;
  for (size_t off = pos; off < bytes.size(); off += 8) {
    const uint32_t addr = (uint32_t{bytes[off]} << 24) |
                          (uint32_t{bytes[off + 1]} << 16) |
                          (uint32_t{bytes[off + 2]} << 8) |
                          uint32_t{bytes[off + 3]};
    const uint32_t ts = (uint32_t{bytes[off + 4]} << 24) |
                        (uint32_t{bytes[off + 5]} << 16) |
                        (uint32_t{bytes[off + 6]} << 8) |
                        uint32_t{bytes[off + 7]};
    if (!first && ts < prev_ts) {
      throw ParseError("AEDAT timestamp wrap", off + 4);
    }
    if (first) {
      t0 = ts;
      first = false;
    }
    prev_ts = ts;

    DvsEvent ev;
    ev.timestamp_us = static_cast<int64_t>(ts) - t0;
    ev.polarity = (addr & 1u) ? 1 : -1;
    ev.x = static_cast<int>((addr >> 1) & 0x7Fu);
    ev.y = static_cast<int>((addr >> 8) & 0x7Fu);
    stream.events.push_back(ev);
  }
  return stream;
}

SpikeTrain bin_events(const EventStream& stream, double bin_ms,
                      double duration_ms, const CropRegion& crop) {
  VDIB_CHECK(bin_ms > 0.0 && duration_ms > 0.0);
  VDIB_CHECK(crop.width > 0 && crop.height > 0 && crop.x0 >= 0 &&
             crop.y0 >= 0 && crop.x0 + crop.width <= kSensorSize &&
             crop.y0 + crop.height <= kSensorSize,
             "crop outside sensor bounds");
  const int T = static_cast<int>(std::llround(duration_ms / bin_ms));
  VDIB_CHECK(T >= 1, "duration shorter than one bin");

  SpikeTrain train(crop.width * crop.height, T);
  const double bin_us = bin_ms * 1000.0;
  const double duration_us = duration_ms * 1000.0;
  for (const DvsEvent& ev : stream.events) {
    if (ev.x < crop.x0 || ev.x >= crop.x0 + crop.width || ev.y < crop.y0 ||
        ev.y >= crop.y0 + crop.height) {
      continue;
    }
    if (static_cast<double>(ev.timestamp_us) >= duration_us) continue;
    const int t = static_cast<int>(ev.timestamp_us / bin_us);
    if (t < 0 || t >= T) continue;
    const int pixel = (ev.y - crop.y0) * crop.width + (ev.x - crop.x0);
    train.set(pixel, t, 1);
  }
  return train;
}

}  // namespace vdib
