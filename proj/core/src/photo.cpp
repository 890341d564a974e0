#include "freqlab/photo.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "freqlab/error.hpp"

namespace freqlab {

void PhotoConfig::validate() const {
  require(size >= 8, ErrorKind::InvalidInput, "photo size must be at least 8");
  require(channels == 1 || channels == 3, ErrorKind::InvalidInput, "photo channels must be 1 or 3");
  require(supersample >= 1 && max_shapes >= 0 && noise_sigma >= 0.0, ErrorKind::InvalidInput,
          "invalid photo settings");
}

RasterImage synthesize_photo(std::uint64_t seed, const PhotoConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> slope(0.0, 0.3);

  const int n = cfg.size * cfg.supersample;
  const int nc = cfg.channels;
  const std::size_t area = static_cast<std::size_t>(n) * n;
  std::vector<double> canvas(area * nc);
  std::vector<std::uint8_t> filled(area, 0);
  std::size_t filled_count = 0;

  for (int c = 0; c < nc; ++c) {
    const double base = 40.0 + 160.0 * unit(rng);
    for (std::size_t i = 0; i < area; ++i) canvas[i * nc + c] = base;
  }

  for (int s = 0; s < cfg.max_shapes && filled_count < area; ++s) {
    const double u = 0.01 + 0.99 * unit(rng);
    const double r = std::max(1.5, n * 0.5 * u * u);
    const double cx = n * (-0.1 + 1.2 * unit(rng));
    const double cy = n * (-0.1 + 1.2 * unit(rng));
    double color[3];
    for (int c = 0; c < nc; ++c) color[c] = 255.0 * unit(rng);
    const double gx = slope(rng);
    const double gy = slope(rng);

    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    const int y1 = std::min(n - 1, static_cast<int>(std::ceil(cy + r)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    const int x1 = std::min(n - 1, static_cast<int>(std::ceil(cx + r)));
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - cy;
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx;
        const std::size_t i = static_cast<std::size_t>(y) * n + x;
        if (filled[i] || dx * dx + dy * dy >= r * r) continue;
        const double shade = gx * dx + gy * dy;
        for (int c = 0; c < nc; ++c) canvas[i * nc + c] = std::clamp(color[c] + shade, 0.0, 255.0);
        filled[i] = 1;
        ++filled_count;
      }
    }
  }

  RasterImage out(cfg.size, cfg.size, nc);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);
  const int ss = cfg.supersample;
  const double inv = 1.0 / (ss * ss);
  for (int y = 0; y < cfg.size; ++y)
    for (int x = 0; x < cfg.size; ++x)
      for (int c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < ss; ++dy)
          for (int dx = 0; dx < ss; ++dx)
            acc += canvas[(static_cast<std::size_t>(y * ss + dy) * n + (x * ss + dx)) * nc + c];
        double v = acc * inv;
        if (cfg.noise_sigma > 0.0) v += noise(rng);
        out.at(y, x, c) = clamp_round(v);
      }
  return out;
}

}  // namespace freqlab
