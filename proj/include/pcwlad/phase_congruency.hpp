#pragma once

#include <span>
#include <vector>

#include "pcwlad/fft.hpp"
#include "pcwlad/raster.hpp"

namespace pcwlad {

enum class NoiseMode { Off, Rayleigh };

struct PcParams {
    int n_scales = 4;
    int n_orientations = 6;
    double min_wavelength = 3.0;
    double scale_mult = 2.1;
    double sigma_on_f = 0.55;    // ratio of the radial Gaussian width to center frequency
    double k_noise = 2.0;        // threshold = mu_R + k * sigma_R
    NoiseMode noise_mode = NoiseMode::Off;
    double epsilon = 1e-4;

    void validate() const; // throws ParamError
};

/// Frequency-domain Log-Gabor gains, one real raster per (scale, orientation),
/// in DFT bin layout matching the image size. Every filter has zero DC gain
/// and unit gain at its center frequency.
struct FilterBank {
    int width = 0;
    int height = 0;
    int n_scales = 0;
    int n_orientations = 0;
    std::vector<Raster> filters; // index = scale * n_orientations + orientation

    const Raster& filter(int scale, int orientation) const {
        return filters[static_cast<std::size_t>(scale) * n_orientations + orientation];
    }
};

struct PcMap {
    Raster pc;                             // values in [0,1]
    std::vector<Raster> orientation_energy; // optional diagnostics
};

FilterBank build_filter_bank(int width, int height, const PcParams& p);

struct RayleighThreshold {
    double mu = 0.0;
    double sigma = 0.0;
    double threshold = 0.0;
};

/// Threshold for a Rayleigh-distributed noise energy with scale sigma_g:
/// mu = sigma_g*sqrt(pi/2), sigma = sigma_g*sqrt((4-pi)/2), threshold = mu + k*sigma.
RayleighThreshold rayleigh_threshold(double sigma_g, double k);

/// Noise threshold for one orientation from the smallest-scale amplitude
/// samples. The Rayleigh scale comes from the median (median = sigma*sqrt(2 ln 2)),
/// extrapolated over scales by the filter-bank geometric series.
double estimate_noise_threshold(std::span<const double> smallest_scale_amplitudes,
                                const PcParams& p);

/// Phase congruency map. With noise_mode Off the threshold term is zero and
/// the map is invariant to affine intensity changes up to the epsilon term.
PcMap compute_pc(const Raster& img, const PcParams& p, bool keep_diagnostics = false);

} // namespace pcwlad
