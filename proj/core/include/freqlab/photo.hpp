#ifndef FREQLAB_PHOTO_HPP
#define FREQLAB_PHOTO_HPP

#include <cstdint>

#include "freqlab/image.hpp"

namespace freqlab {

struct PhotoConfig {
  int size = 128;
  int channels = 3;
  /// Rendering happens at size * supersample and is box-averaged down,
  /// which band-limits the occlusion edges the way a camera lens would.
  int supersample = 2;
  int max_shapes = 300;
  double noise_sigma = 2.0;

  void validate() const;
};

/// Procedural stand-in for a natural photograph: a "dead leaves" scene of
/// occluding shaded disks over a flat background, with sensor-like noise.
/// Its DCT spectrum decays smoothly with frequency and has no periodic
/// structure. Fully determined by (seed, config).
RasterImage synthesize_photo(std::uint64_t seed, const PhotoConfig& config = {});

}  // namespace freqlab

#endif  // FREQLAB_PHOTO_HPP
