#include <algorithm>
#include <array>
#include <cmath>

#include "freqlab/spectrum.hpp"

namespace freqlab {
namespace {

// viridis sampled at 33 evenly spaced points.
constexpr std::array<std::array<std::uint8_t, 3>, 33> kViridis = {{
    {68, 1, 84},    {71, 13, 96},   {72, 24, 106},  {72, 35, 116},  {71, 45, 123},  {69, 55, 129},
    {66, 64, 134},  {62, 73, 137},  {59, 82, 139},  {55, 91, 141},  {51, 99, 141},  {47, 107, 142},
    {44, 114, 142}, {41, 122, 142}, {38, 130, 142}, {35, 137, 142}, {33, 145, 140}, {31, 152, 139},
    {31, 160, 136}, {34, 167, 133}, {40, 174, 128}, {50, 182, 122}, {63, 188, 115}, {78, 195, 107},
    {94, 201, 98},  {112, 207, 87}, {132, 212, 75}, {152, 216, 62}, {173, 220, 48}, {194, 223, 35},
    {216, 226, 25}, {236, 229, 27}, {253, 231, 37},
}};

}  // namespace

std::optional<Palette> parse_palette(std::string_view name) {
  if (name == "viridis") return Palette::Viridis;
  if (name == "gray" || name == "grey") return Palette::Gray;
  return std::nullopt;
}

std::array<std::uint8_t, 3> palette_color(Palette palette, double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  if (palette == Palette::Gray) {
    const auto v = static_cast<std::uint8_t>(std::lround(t * 255.0));
    return {v, v, v};
  }
  const double pos = t * (kViridis.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, kViridis.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  std::array<std::uint8_t, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    const double v = kViridis[lo][c] * (1.0 - frac) + kViridis[hi][c] * frac;
    out[c] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

}  // namespace freqlab
