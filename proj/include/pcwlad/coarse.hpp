#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcwlad/detect.hpp"
#include "pcwlad/raster.hpp"

namespace pcwlad {

enum class Metric { Ssd, Lad, Ncc, Ssim };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& name); // throws ParamError

// SSIM stabilizers for a unit dynamic range: C1=(0.01)^2, C2=(0.03)^2, C3=C2/2.
inline constexpr double kSsimC1 = 1e-4;
inline constexpr double kSsimC2 = 9e-4;
inline constexpr double kSsimC3 = 4.5e-4;

struct TemplateSpec {
    int template_size = 101; // odd, >= 5
    int search_radius = 10;
    Metric metric = Metric::Ssim;

    void validate() const; // throws ParamError
};

struct CoarseMatch {
    Keypoint ref;
    int tgt_x = 0;
    int tgt_y = 0;
    double score = 0.0; // chosen metric at the optimum
    double ssim = 0.0;  // SSIM at the optimum (gating and fine-match init)
};

/// Single-window SSIM with population (1/n) variance convention.
double ssim_patch(std::span<const double> g, std::span<const double> i,
                  double c1 = kSsimC1, double c2 = kSsimC2);

/// Larger-is-better score: SSD -> -sum((G-I)^2), LAD -> -sum|G-I|,
/// NCC in [-1,1] (0 when either window is flat), SSIM per ssim_patch.
double metric_score(std::span<const double> g, std::span<const double> i, Metric metric);

/// Summed-area tables of the target map and its square, shared across
/// keypoints so per-candidate means and variances cost O(1).
struct TargetSums {
    int width = 0;
    int height = 0;
    std::vector<double> s1; // (width+1)*(height+1)
    std::vector<double> s2;

    // inclusive box sums over [x0, x0+bw) x [y0, y0+bh)
    double box1(int x0, int y0, int bw, int bh) const;
    double box2(int x0, int y0, int bw, int bh) const;
};

TargetSums build_target_sums(const Raster& r);

/// Exhaustive sliding match over (2*search_radius+1)^2 candidate centers
/// around `predicted`. Ties break toward the smallest displacement from the
/// prediction, then lexicographic (y, x). Returns nullopt when the template
/// or any candidate window leaves either raster (skip-keypoint signal).
std::optional<CoarseMatch> coarse_match(const Raster& pc_ref, const Raster& pc_tgt,
                                        const TargetSums& tgt_sums, const Keypoint& kp,
                                        const TemplateSpec& spec, int predicted_x,
                                        int predicted_y);

} // namespace pcwlad
