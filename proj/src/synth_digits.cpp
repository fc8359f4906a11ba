#include <array>
#include <cmath>
#include <cstring>

#include "vdib/data.hpp"

namespace vdib {

namespace {

// 8x12 reference glyphs. '#' marks stroke pixels.
constexpr int kGlyphW = 8;
constexpr int kGlyphH = 12;
constexpr const char* kGlyphs[10][kGlyphH] = {
    {"..####..", ".##..##.", "##....##", "##....##", "##....##", "##....##",
     "##....##", "##....##", "##....##", "##....##", ".##..##.", "..####.."},
    {"...##...", "..###...", ".####...", "...##...", "...##...", "...##...",
     "...##...", "...##...", "...##...", "...##...", "...##...", ".######."},
    {".#####..", "##...##.", "......##", "......##", ".....##.", "....##..",
     "...##...", "..##....", ".##.....", "##......", "##......", "########"},
    {".#####..", "##...##.", "......##", "......##", "...###..", "...###..",
     "......##", "......##", "......##", "......##", "##...##.", ".#####.."},
    {"....###.", "...####.", "..##.##.", ".##..##.", "##...##.", "##...##.",
     "########", ".....##.", ".....##.", ".....##.", ".....##.", ".....##."},
    {"#######.", "##......", "##......", "##......", "######..", ".....##.",
     "......##", "......##", "......##", "......##", "##...##.", ".#####.."},
    {"..####..", ".##.....", "##......", "##......", "######..", "##...##.",
     "##....##", "##....##", "##....##", "##....##", ".##..##.", "..####.."},
    {"########", "......##", ".....##.", ".....##.", "....##..", "....##..",
     "...##...", "...##...", "..##....", "..##....", ".##.....", ".##....."},
    {"..####..", ".##..##.", "##....##", "##....##", ".##..##.", "..####..",
     ".##..##.", "##....##", "##....##", "##....##", ".##..##.", "..####.."},
    {"..####..", ".##..##.", "##....##", "##....##", "##....##", ".##..###",
     "..######", "......##", "......##", "......##", ".....##.", "..####.."}};

// Bilinear lookup into a glyph, coordinates in glyph units.
double glyph_sample(int digit, double gx, double gy) {
  auto at = [&](int x, int y) -> double {
    if (x < 0 || x >= kGlyphW || y < 0 || y >= kGlyphH) return 0.0;
    return kGlyphs[digit][y][x] == '#' ? 1.0 : 0.0;
  };
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const double fx = gx - x0;
  const double fy = gy - y0;
  return at(x0, y0) * (1 - fx) * (1 - fy) + at(x0 + 1, y0) * fx * (1 - fy) +
         at(x0, y0 + 1) * (1 - fx) * fy + at(x0 + 1, y0 + 1) * fx * fy;
}

}  // namespace

DigitCorpus render_digit_corpus(int count, uint64_t seed) {
  VDIB_CHECK(count >= 0);
  DigitCorpus corpus;
  corpus.pixels.resize(static_cast<size_t>(count) * 28 * 28);
  corpus.labels.resize(count);

  Rng rng(seed, /*stream_id=*/71);
  std::array<double, 28 * 28> canvas{};
  for (int n = 0; n < count; ++n) {
    const int digit = static_cast<int>(rng.uniform_below(10));
    corpus.labels[n] = static_cast<uint8_t>(digit);

    const double scale = rng.uniform(1.5, 1.9);     // glyph -> canvas
    const double shear = rng.uniform(-0.15, 0.15);  // mild slant
    const double intensity = rng.uniform(0.75, 1.0);
    const double gw = kGlyphW * scale;
    const double gh = kGlyphH * scale;
    const double ox = rng.uniform(2.0, 26.0 - gw - std::abs(shear) * gh);
    const double oy = rng.uniform(2.0, 26.0 - gh);

    canvas.fill(0.0);
    for (int py = 0; py < 28; ++py) {
      for (int px = 0; px < 28; ++px) {
        const double gy = (py - oy) / scale;
        const double gx = (px - ox - shear * (py - oy)) / scale;
        const double v = glyph_sample(digit, gx, gy);
        if (v > 0.0) canvas[py * 28 + px] = v * intensity;
      }
    }
    // Pixel noise.
    for (double& v : canvas) {
      v += 0.04 * rng.gaussian();
      if (rng.uniform01() < 0.01) v += rng.uniform(0.2, 0.6);
      v = std::min(1.0, std::max(0.0, v));
    }
    for (int i = 0; i < 28 * 28; ++i) {
      corpus.pixels[static_cast<size_t>(n) * 28 * 28 + i] =
          static_cast<uint8_t>(std::lround(canvas[i] * 255.0));
    }
  }
  return corpus;
}

}  // namespace vdib
