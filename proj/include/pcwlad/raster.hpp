#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace pcwlad {

/// Row-major grid of real-valued samples. Intensities are kept in [0,1] by
/// the loaders; derived maps (PC, weights) use whatever range their producer
/// documents. Immutable in practice: operations return new rasters.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return samples_.empty(); }
    std::size_t size() const noexcept { return samples_.size(); }

    double& at(int x, int y) { return samples_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return samples_[static_cast<std::size_t>(y) * width_ + x]; }

    double* row(int y) { return samples_.data() + static_cast<std::size_t>(y) * width_; }
    const double* row(int y) const { return samples_.data() + static_cast<std::size_t>(y) * width_; }

    std::span<double> samples() noexcept { return samples_; }
    std::span<const double> samples() const noexcept { return samples_; }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    bool all_finite() const noexcept;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> samples_;
};

/// Affine coordinate map (x,y) -> (a0 + a1*x + a2*y, b0 + b1*x + b2*y).
/// Default-constructed value is the identity.
struct AffinePair {
    double a0 = 0.0, a1 = 1.0, a2 = 0.0;
    double b0 = 0.0, b1 = 0.0, b2 = 1.0;

    double determinant() const noexcept { return a1 * b2 - a2 * b1; }
    bool invertible(double eps = 1e-12) const noexcept;
    AffinePair inverse() const; // throws ParamError when singular

    std::pair<double, double> apply(double x, double y) const noexcept {
        return {a0 + a1 * x + a2 * y, b0 + b1 * x + b2 * y};
    }

    static AffinePair shift(double dx, double dy) {
        AffinePair t;
        t.a0 = dx;
        t.b0 = dy;
        return t;
    }
};

/// True when (x,y) has the full 4x4 Catmull-Rom support inside r.
bool in_bicubic_support(const Raster& r, double x, double y) noexcept;

/// Catmull-Rom bicubic interpolation. Reproduces samples exactly at integer
/// coordinates and linear ramps to machine precision. Throws
/// std::domain_error outside the support box; callers on hot paths guard
/// with in_bicubic_support() instead.
double sample_bicubic(const Raster& r, double x, double y);

/// Central differences on the interior, one-sided at the borders.
/// Returns (d/dx, d/dy).
std::pair<Raster, Raster> gradient_central(const Raster& r);

struct MaskedRaster {
    Raster image;
    std::vector<std::uint8_t> valid; // 1 where the source sample had full support
};

/// Inverse-map resampling: out(x,y) = r(t.apply(x,y)) via bicubic sampling.
/// Pixels whose source coordinate leaves the support box are flagged invalid
/// in the mask; their value is taken at the clamped coordinate so no
/// artificial step edge appears at the raster boundary.
MaskedRaster warp_affine(const Raster& r, const AffinePair& t);

} // namespace pcwlad
