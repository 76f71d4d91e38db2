#include "pcwlad/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcwlad/errors.hpp"

namespace pcwlad {

Raster::Raster(int width, int height, double fill)
    : width_(width), height_(height),
      samples_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width <= 0 || height <= 0)
        throw ParamError("raster dimensions must be positive");
}

bool Raster::all_finite() const noexcept {
    for (double v : samples_)
        if (!std::isfinite(v))
            return false;
    return true;
}

bool AffinePair::invertible(double eps) const noexcept {
    return std::abs(determinant()) > eps;
}

AffinePair AffinePair::inverse() const {
    const double det = determinant();
    if (std::abs(det) <= 1e-12)
        throw ParamError("affine map is singular");
    AffinePair inv;
    inv.a1 = b2 / det;
    inv.a2 = -a2 / det;
    inv.b1 = -b1 / det;
    inv.b2 = a1 / det;
    inv.a0 = -(inv.a1 * a0 + inv.a2 * b0);
    inv.b0 = -(inv.b1 * a0 + inv.b2 * b0);
    return inv;
}

bool in_bicubic_support(const Raster& r, double x, double y) noexcept {
    // floor(x)-1 .. floor(x)+2 must be valid columns, same for rows
    return x >= 1.0 && x <= r.width() - 2.0 && y >= 1.0 && y <= r.height() - 2.0 &&
           std::isfinite(x) && std::isfinite(y);
}

namespace {

inline void catmull_rom_weights(double t, double w[4]) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

inline double bicubic_unchecked(const Raster& r, double x, double y) {
    int ix = static_cast<int>(std::floor(x));
    int iy = static_cast<int>(std::floor(y));
    // right/bottom edge of support: keep the 4x4 block inside
    ix = std::min(ix, r.width() - 3);
    iy = std::min(iy, r.height() - 3);
    const double fx = x - ix;
    const double fy = y - iy;

    double wx[4], wy[4];
    catmull_rom_weights(fx, wx);
    catmull_rom_weights(fy, wy);

    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double* row = r.row(iy - 1 + j);
        const double* p = row + (ix - 1);
        acc += wy[j] * (wx[0] * p[0] + wx[1] * p[1] + wx[2] * p[2] + wx[3] * p[3]);
    }
    return acc;
}

} // namespace

double sample_bicubic(const Raster& r, double x, double y) {
    if (!in_bicubic_support(r, x, y))
        throw std::domain_error("bicubic sample outside support");
    return bicubic_unchecked(r, x, y);
}

std::pair<Raster, Raster> gradient_central(const Raster& r) {
    const int w = r.width();
    const int h = r.height();
    if (w < 3 || h < 3)
        throw ParamError("gradient requires at least 3x3 raster");
    Raster gx(w, h), gy(w, h);
    for (int y = 0; y < h; ++y) {
        const double* row = r.row(y);
        double* gxr = gx.row(y);
        gxr[0] = row[1] - row[0];
        for (int x = 1; x < w - 1; ++x)
            gxr[x] = 0.5 * (row[x + 1] - row[x - 1]);
        gxr[w - 1] = row[w - 1] - row[w - 2];
    }
    for (int y = 0; y < h; ++y) {
        const double* above = r.row(y == 0 ? 0 : y - 1);
        const double* below = r.row(y == h - 1 ? h - 1 : y + 1);
        const double scale = (y == 0 || y == h - 1) ? 1.0 : 0.5;
        double* gyr = gy.row(y);
        for (int x = 0; x < w; ++x)
            gyr[x] = scale * (below[x] - above[x]);
    }
    return {std::move(gx), std::move(gy)};
}

MaskedRaster warp_affine(const Raster& r, const AffinePair& t) {
    if (!t.invertible())
        throw ParamError("warp_affine: singular transform");
    const int w = r.width();
    const int h = r.height();
    MaskedRaster out;
    out.image = Raster(w, h);
    out.valid.assign(static_cast<std::size_t>(w) * h, 0);

    const double lo_x = 1.0, hi_x = w - 2.0;
    const double lo_y = 1.0, hi_y = h - 2.0;
    for (int y = 0; y < h; ++y) {
        double* dst = out.image.row(y);
        std::uint8_t* mask = out.valid.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            auto [sx, sy] = t.apply(x, y);
            const bool inside = sx >= lo_x && sx <= hi_x && sy >= lo_y && sy <= hi_y;
            if (!inside) {
                sx = std::clamp(sx, lo_x, hi_x);
                sy = std::clamp(sy, lo_y, hi_y);
            }
            dst[x] = bicubic_unchecked(r, sx, sy);
            mask[x] = inside ? 1 : 0;
        }
    }
    return out;
}

} // namespace pcwlad
