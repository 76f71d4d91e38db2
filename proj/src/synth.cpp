#include "pcwlad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pcwlad/errors.hpp"

namespace pcwlad {

double RadiometricMap::apply(double v) const {
    double u = std::clamp(v, 0.0, 1.0);
    if (invert)
        u = 1.0 - u;
    u = std::pow(u, gamma) * gain + offset;
    return std::clamp(u, 0.0, 1.0);
}

SyntheticPair make_synthetic_pair(const Raster& ref, const AffinePair& forward,
                                  const RadiometricMap& radiometric, double noise_sigma,
                                  std::uint64_t seed) {
    if (!forward.invertible())
        throw ParamError("make_synthetic_pair: singular forward map");
    if (noise_sigma < 0.0)
        throw ParamError("make_synthetic_pair: negative noise sigma");

    SyntheticPair pair;
    pair.forward = forward;
    pair.radiometric = radiometric;
    pair.noise_sigma = noise_sigma;
    pair.seed = seed;

    MaskedRaster warped = warp_affine(ref, forward.inverse());
    pair.valid = std::move(warped.valid);
    pair.target = std::move(warped.image);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : pair.target.samples()) {
        v = radiometric.apply(v);
        if (noise_sigma > 0.0)
            v = std::clamp(v + noise(rng), 0.0, 1.0);
    }
    return pair;
}

namespace {

// value-noise lattice upsampled with smoothstep blending
void add_octave(Raster& out, int cell, double amplitude, std::mt19937_64& rng) {
    const int w = out.width(), h = out.height();
    const int gw = w / cell + 3;
    const int gh = h / cell + 3;
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& v : lattice)
        v = uni(rng);

    auto fade = [](double t) { return t * t * (3.0 - 2.0 * t); };
    for (int y = 0; y < h; ++y) {
        const double fy = static_cast<double>(y) / cell;
        const int iy = static_cast<int>(fy);
        const double ty = fade(fy - iy);
        for (int x = 0; x < w; ++x) {
            const double fx = static_cast<double>(x) / cell;
            const int ix = static_cast<int>(fx);
            const double tx = fade(fx - ix);
            const double* row0 = lattice.data() + static_cast<std::size_t>(iy) * gw + ix;
            const double* row1 = row0 + gw;
            const double top = row0[0] + tx * (row0[1] - row0[0]);
            const double bot = row1[0] + tx * (row1[1] - row1[0]);
            out.at(x, y) += amplitude * (top + ty * (bot - top));
        }
    }
}

} // namespace

Raster textured_test_image(int width, int height, std::uint64_t seed) {
    if (width < 8 || height < 8)
        throw ParamError("textured_test_image: dimensions must be >= 8");
    Raster img(width, height, 0.0);
    std::mt19937_64 rng(seed);

    double amplitude = 1.0;
    for (int cell = std::max(width, height) / 4; cell >= 1; cell /= 2) {
        add_octave(img, std::max(cell, 1), amplitude, rng);
        amplitude *= 0.55;
        if (cell == 1)
            break;
    }
    // normalize into [0.02, 0.98]; a little headroom keeps radiometric maps
    // from clipping against the [0,1] clamp
    auto s = img.samples();
    const double lo = *std::min_element(s.begin(), s.end());
    const double hi = *std::max_element(s.begin(), s.end());
    const double scale = hi > lo ? 0.96 / (hi - lo) : 0.0;
    for (double& v : s)
        v = 0.02 + (v - lo) * scale;
    return img;
}

} // namespace pcwlad
