#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcwlad/coarse.hpp"
#include "pcwlad/raster.hpp"

namespace pcwlad {

/// Radiometric gain/offset plus affine geometry, in window-relative
/// coordinates. The model maps the reference window G onto the target:
/// G(x', y') ~ r0 + r1 * I(a0 + a1 x' + a2 y', b0 + b1 x' + b2 y').
struct TransformParams {
    double r0 = 0.0;
    double r1 = 1.0;
    double a0 = 0.0, a1 = 1.0, a2 = 0.0;
    double b0 = 0.0, b1 = 0.0, b2 = 1.0;

    double affine_determinant() const noexcept { return a1 * b2 - a2 * b1; }
};

enum class MsRefresh { Once, Each };

std::string to_string(MsRefresh m);
MsRefresh ms_refresh_from_string(const std::string& name);

struct FineConfig {
    int window_size = 81; // odd, >= 9
    int ms_patch = 5;     // odd, >= 3
    int max_iters = 20;
    double shift_tol = 0.05;  // pixels, on the per-iteration (da0, db0)
    double ssim_gate = 0.4;
    MsRefresh ms_refresh = MsRefresh::Each;

    void validate() const;
};

struct FineMatch {
    Keypoint ref;
    double tgt_x = 0.0;
    double tgt_y = 0.0;
    TransformParams params;
    int iterations = 0;
    bool converged = false;
    double initial_ssim = 0.0;
    double final_ssim = 0.0;
};

/// Symmetric two-way regression residual power between equal-size patches:
/// zero exactly when the patches are related by a linear intensity map.
/// Closed form (var_g + var_i) * (1 - rho^2) with degenerate variances
/// handled so a flat patch against a textured one scores the full
/// unexplained variance.
double mutual_structure(std::span<const double> g, std::span<const double> i);

/// Per-pixel weights in (0, 1] from the mean mutual structure of
/// ms_patch-sized patches, box-averaged over the same neighborhood and
/// inverted with median scaling: w = 1 / (1 + ms_mean / median(ms_mean)).
/// Patches near the window border are slid inward to keep full support.
Raster structure_weights(const Raster& g_win, const Raster& i_win, int ms_patch);

/// Dense linearization of the radiometric+affine model, rows ordered
/// [r0, r1, a0, a1, a2, b0, b1, b2].
struct LinearSystem {
    int rows = 0;
    std::vector<double> coeffs; // rows x 8, row-major
    std::vector<double> obs;    // rows

    std::span<const double> row(int i) const { return {coeffs.data() + 8 * i, 8}; }
};

/// Sampled view of the target around (center_x, center_y) under `params`:
/// interpolated intensities and gradients per window pixel. Empty optional
/// when any sample point leaves the bicubic support (divergence signal).
struct WarpedWindow {
    int size = 0;
    std::vector<double> value;   // I(fx, fy)
    std::vector<double> grad_x;  // dI/dx at (fx, fy)
    std::vector<double> grad_y;
    std::vector<double> model;   // r0 + r1 * value
};

std::optional<WarpedWindow> sample_warped_window(const Raster& tgt, const Raster& tgt_gx,
                                                 const Raster& tgt_gy,
                                                 const TransformParams& params,
                                                 double center_x, double center_y,
                                                 int window_size);

/// Build the error equations from a reference window and a sampled target
/// view: l_i = G_i - (r0 + r1 * I_i), coefficient rows
/// [1, I, r1*Ix, r1*Ix*x', r1*Ix*y', r1*Iy, r1*Iy*x', r1*Iy*y'].
LinearSystem linearize(const Raster& g_win, const WarpedWindow& w,
                       const TransformParams& params);

/// Convenience overload sampling the target itself (gradients computed
/// internally); empty optional on support exit.
std::optional<LinearSystem> linearize(const Raster& g_win, const Raster& tgt,
                                      const TransformParams& params, double center_x,
                                      double center_y);

struct WladSolution {
    std::array<double, 8> update{};
    std::vector<double> residuals;
    int iterations = 0;
};

/// Weighted least-absolute-deviation fit by iteratively reweighted least
/// squares. Iteration t solves the normal equations under combined weights
/// w_struct_i / (1 + |d_i^(t-1)|); the first pass uses w_struct alone. When
/// that reweight stalls, any remaining iteration budget switches to the
/// 1/max(|d|, eps) form, which drives the iterate onto the weighted-LAD
/// minimizer itself. Steps are halved when the weighted L1 objective would
/// increase, so the objective is non-increasing over accepted iterations.
/// Throws RankError on a singular normal matrix and NumericError on
/// non-finite values.
WladSolution wlad_solve(const LinearSystem& sys, std::span<const double> struct_weights,
                        int max_iters, double tol);

/// Sub-pixel refinement of one coarse match on PC rasters.
FineMatch refine(const CoarseMatch& coarse, const Raster& pc_ref, const Raster& pc_tgt,
                 const Raster& tgt_gx, const Raster& tgt_gy, const FineConfig& cfg);
FineMatch refine(const CoarseMatch& coarse, const Raster& pc_ref, const Raster& pc_tgt,
                 const FineConfig& cfg);

} // namespace pcwlad
