#include "pcwlad/phase_congruency.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pcwlad/errors.hpp"
#include "pcwlad/parallel.hpp"

namespace pcwlad {

namespace {

constexpr double kPi = std::numbers::pi;

// Gaussian angular spread; 1.2 is the ratio of orientation spacing to sigma.
constexpr double kThetaSigmaRatio = 1.2;
// Sigmoid weighting of the frequency spread.
constexpr double kSpreadCutoff = 0.5;
constexpr double kSpreadGain = 10.0;

double median_of(std::vector<double> v) {
    if (v.empty())
        return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        m = 0.5 * (m + lo);
    }
    return m;
}

} // namespace

void PcParams::validate() const {
    if (n_scales < 1 || n_orientations < 1)
        throw ParamError("pc: scale and orientation counts must be >= 1");
    if (min_wavelength < 2.0)
        throw ParamError("pc: min_wavelength must be >= 2");
    if (scale_mult <= 1.0)
        throw ParamError("pc: scale_mult must exceed 1");
    if (!(sigma_on_f > 0.0 && sigma_on_f < 1.0))
        throw ParamError("pc: sigma_on_f must lie in (0,1)");
    if (!(epsilon > 0.0))
        throw ParamError("pc: epsilon must be positive");
    if (k_noise < 0.0)
        throw ParamError("pc: k_noise must be non-negative");
}

FilterBank build_filter_bank(int width, int height, const PcParams& p) {
    p.validate();
    if (width < 16 || height < 16)
        throw ParamError("filter bank requires dimensions >= 16");

    FilterBank bank;
    bank.width = width;
    bank.height = height;
    bank.n_scales = p.n_scales;
    bank.n_orientations = p.n_orientations;
    bank.filters.reserve(static_cast<std::size_t>(p.n_scales) * p.n_orientations);

    // normalized frequency grid in DFT layout
    std::vector<double> fx(width), fy(height);
    for (int x = 0; x < width; ++x)
        fx[x] = (x <= width / 2 ? x : x - width) / static_cast<double>(width);
    for (int y = 0; y < height; ++y)
        fy[y] = (y <= height / 2 ? y : y - height) / static_cast<double>(height);

    Raster radius(width, height), theta(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            radius.at(x, y) = std::hypot(fx[x], fy[y]);
            theta.at(x, y) = std::atan2(-fy[y], fx[x]);
        }
    }
    radius.at(0, 0) = 1.0; // keep log() finite; the DC gain is zeroed below

    const double log_sigma = std::log(p.sigma_on_f);
    const double radial_denom = 2.0 * log_sigma * log_sigma;
    const double theta_sigma = kPi / p.n_orientations / kThetaSigmaRatio;
    const double angular_denom = 2.0 * theta_sigma * theta_sigma;

    for (int s = 0; s < p.n_scales; ++s) {
        const double wavelength = p.min_wavelength * std::pow(p.scale_mult, s);
        const double f0 = 1.0 / wavelength;
        Raster radial(width, height);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double lr = std::log(radius.at(x, y) / f0);
                radial.at(x, y) = std::exp(-(lr * lr) / radial_denom);
            }
        radial.at(0, 0) = 0.0;

        for (int o = 0; o < p.n_orientations; ++o) {
            const double angle = o * kPi / p.n_orientations;
            const double cos_a = std::cos(angle);
            const double sin_a = std::sin(angle);
            Raster filt(width, height);
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const double th = theta.at(x, y);
                    // wrapped angular distance to the filter orientation
                    const double ds = std::atan2(std::sin(th) * cos_a - std::cos(th) * sin_a,
                                                 std::cos(th) * cos_a + std::sin(th) * sin_a);
                    filt.at(x, y) = radial.at(x, y) * std::exp(-(ds * ds) / angular_denom);
                }
            filt.at(0, 0) = 0.0;
            bank.filters.push_back(std::move(filt));
        }
    }
    return bank;
}

RayleighThreshold rayleigh_threshold(double sigma_g, double k) {
    RayleighThreshold t;
    t.mu = sigma_g * std::sqrt(kPi / 2.0);
    t.sigma = sigma_g * std::sqrt((4.0 - kPi) / 2.0);
    t.threshold = t.mu + k * t.sigma;
    return t;
}

double estimate_noise_threshold(std::span<const double> smallest_scale_amplitudes,
                                const PcParams& p) {
    if (smallest_scale_amplitudes.empty())
        throw ParamError("noise estimate needs a non-empty amplitude set");
    const double med =
        median_of({smallest_scale_amplitudes.begin(), smallest_scale_amplitudes.end()});
    if (med <= 0.0)
        return 0.0;
    // median of a Rayleigh distribution is sigma*sqrt(2 ln 2)
    const double tau = med / std::sqrt(std::log(4.0));
    // total energy over scales: amplitudes fall off geometrically with 1/mult
    const double inv_mult = 1.0 / p.scale_mult;
    const double total_tau = tau * (1.0 - std::pow(inv_mult, p.n_scales)) / (1.0 - inv_mult);
    return rayleigh_threshold(total_tau, p.k_noise).threshold;
}

PcMap compute_pc(const Raster& img, const PcParams& p, bool keep_diagnostics) {
    p.validate();
    if (img.width() < 32 || img.height() < 32)
        throw ParamError("compute_pc requires dimensions >= 32");
    if (!img.all_finite())
        throw NumericError("compute_pc: non-finite input samples");

    const int w = img.width();
    const int h = img.height();
    const std::size_t n = img.size();
    const FilterBank bank = build_filter_bank(w, h, p);
    const ComplexImage spectrum = dft2(img);

    // per-orientation partials, combined in a fixed order afterwards
    std::vector<std::vector<double>> numer(p.n_orientations);
    std::vector<std::vector<double>> sum_an_per_o(p.n_orientations);

    parallel_for(0, p.n_orientations, [&](int o) {
        std::vector<ComplexImage> responses;
        responses.reserve(p.n_scales);
        std::vector<double> sum_e(n, 0.0), sum_o(n, 0.0), sum_an(n, 0.0), max_an(n, 0.0);

        for (int s = 0; s < p.n_scales; ++s) {
            const auto gains = bank.filter(s, o).samples();
            ComplexImage prod(w, h);
            for (std::size_t i = 0; i < n; ++i)
                prod.bins[i] = spectrum.bins[i] * gains[i];
            responses.push_back(idft2(prod));
            const ComplexImage& resp = responses.back();
            for (std::size_t i = 0; i < n; ++i) {
                const double even = resp.bins[i].real();
                const double odd = resp.bins[i].imag();
                const double an = std::hypot(even, odd);
                sum_e[i] += even;
                sum_o[i] += odd;
                sum_an[i] += an;
                max_an[i] = std::max(max_an[i], an);
            }
        }

        double threshold = 0.0;
        if (p.noise_mode == NoiseMode::Rayleigh) {
            std::vector<double> smallest_an(n);
            for (std::size_t i = 0; i < n; ++i)
                smallest_an[i] =
                    std::hypot(responses[0].bins[i].real(), responses[0].bins[i].imag());
            threshold = estimate_noise_threshold(smallest_an, p);
        }

        // sensitive phase deviation: sum over scales of A*(cos(dphi) - |sin(dphi)|)
        // against the mean phase vector (sum_e, sum_o)/|.|
        std::vector<double> energy(n, 0.0);
        {
            std::vector<double> me(n), mo(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double mag = std::hypot(sum_e[i], sum_o[i]);
                if (mag > 1e-300) {
                    me[i] = sum_e[i] / mag;
                    mo[i] = sum_o[i] / mag;
                } else {
                    me[i] = 1.0;
                    mo[i] = 0.0;
                }
            }
            for (int s = 0; s < p.n_scales; ++s) {
                const ComplexImage& resp = responses[s];
                for (std::size_t i = 0; i < n; ++i) {
                    const double even = resp.bins[i].real();
                    const double odd = resp.bins[i].imag();
                    energy[i] +=
                        even * me[i] + odd * mo[i] - std::abs(even * mo[i] - odd * me[i]);
                }
            }
        }

        // frequency-spread weight: ~1 when amplitude is even across scales
        std::vector<double> weighted(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double width_ratio = 1.0;
            if (p.n_scales > 1)
                width_ratio = (sum_an[i] / (max_an[i] + p.epsilon) - 1.0) / (p.n_scales - 1);
            const double weight =
                1.0 / (1.0 + std::exp(kSpreadGain * (kSpreadCutoff - width_ratio)));
            weighted[i] = std::max(energy[i] * weight - threshold, 0.0);
        }
        numer[o] = std::move(weighted);
        sum_an_per_o[o] = std::move(sum_an);
    });

    PcMap out;
    out.pc = Raster(w, h);
    auto pc = out.pc.samples();
    std::vector<double> total_an(n, 0.0), total_energy(n, 0.0);
    for (int o = 0; o < p.n_orientations; ++o)
        for (std::size_t i = 0; i < n; ++i) {
            total_energy[i] += numer[o][i];
            total_an[i] += sum_an_per_o[o][i];
        }
    for (std::size_t i = 0; i < n; ++i)
        pc[i] = std::clamp(total_energy[i] / (total_an[i] + p.epsilon), 0.0, 1.0);

    if (keep_diagnostics) {
        out.orientation_energy.reserve(p.n_orientations);
        for (int o = 0; o < p.n_orientations; ++o) {
            Raster e(w, h);
            auto dst = e.samples();
            for (std::size_t i = 0; i < n; ++i)
                dst[i] = numer[o][i];
            out.orientation_energy.push_back(std::move(e));
        }
    }
    return out;
}

} // namespace pcwlad
