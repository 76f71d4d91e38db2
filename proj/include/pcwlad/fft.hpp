#pragma once

#include <complex>
#include <vector>

#include "pcwlad/raster.hpp"

namespace pcwlad {

/// Frequency-domain grid in DFT bin layout (bin 0 is DC, frequencies wrap at
/// the Nyquist midpoint). Same row-major indexing as Raster.
struct ComplexImage {
    int width = 0;
    int height = 0;
    std::vector<std::complex<double>> bins;

    ComplexImage() = default;
    ComplexImage(int w, int h)
        : width(w), height(h), bins(static_cast<std::size_t>(w) * h) {}

    std::complex<double>& at(int x, int y) {
        return bins[static_cast<std::size_t>(y) * width + x];
    }
    const std::complex<double>& at(int x, int y) const {
        return bins[static_cast<std::size_t>(y) * width + x];
    }
};

/// Unnormalized forward 2-D DFT (DC bin of a constant c is c*w*h).
ComplexImage dft2(const Raster& r);
ComplexImage dft2(const ComplexImage& g);

/// Inverse 2-D DFT scaled by 1/(w*h); idft2(dft2(r)) == r to ~1e-12.
ComplexImage idft2(const ComplexImage& g);

/// Real part of the inverse transform, for real-input round trips.
Raster idft2_real(const ComplexImage& g);

} // namespace pcwlad
