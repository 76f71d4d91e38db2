#pragma once

#include <cstdint>

#include "pcwlad/raster.hpp"

namespace pcwlad {

/// Pointwise intensity map: optional inversion, then gamma, gain and offset,
/// clamped back to [0,1].
struct RadiometricMap {
    double gamma = 1.0;
    double gain = 1.0;
    double offset = 0.0;
    bool invert = false;

    double apply(double v) const;
};

struct SyntheticPair {
    Raster target;
    std::vector<std::uint8_t> valid; // resampling support mask
    AffinePair forward;              // reference -> target coordinate map
    RadiometricMap radiometric;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Target = radiometric(warp(ref, forward^-1)) + seeded Gaussian noise,
/// clamped to [0,1]. `forward` maps reference coordinates to target
/// coordinates and is stored verbatim as the ground truth.
SyntheticPair make_synthetic_pair(const Raster& ref, const AffinePair& forward,
                                  const RadiometricMap& radiometric, double noise_sigma,
                                  std::uint64_t seed);

/// Seeded multi-octave value noise in [0,1]; a desk-scale stand-in for a
/// natural image with texture at all scales.
Raster textured_test_image(int width, int height, std::uint64_t seed);

} // namespace pcwlad
