#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pcwlad/linalg.hpp"
#include "pcwlad/raster.hpp"

namespace pcwlad {

struct PointMatch {
    double ref_x = 0.0, ref_y = 0.0;
    double tgt_x = 0.0, tgt_y = 0.0;
};

/// Rank-2, Frobenius-normalized 3x3 matrix H with x2^T H x1 = 0.
struct FundamentalMatrix {
    linalg::Mat3 m{};
};

enum class RansacModel : std::uint8_t { Affine, Fundamental };

struct RansacResult {
    RansacModel model = RansacModel::Affine;
    std::vector<std::uint8_t> inlier_mask;
    int inlier_count = 0;
    int trials = 0;
    AffinePair affine;               // valid when model == Affine
    FundamentalMatrix fundamental;   // valid when model == Fundamental
};

/// Least-squares affine fit ref -> tgt from >= 3 matches. Throws
/// DegenerateError for collinear/insufficient input.
AffinePair fit_affine_lsq(std::span<const PointMatch> matches);

/// Normalized (Hartley) eight-point estimate with SVD rank-2 projection and
/// Frobenius normalization. Throws DegenerateError below 8 matches or on a
/// degenerate configuration.
FundamentalMatrix fit_fundamental_8point(std::span<const PointMatch> matches);

/// Seeded RANSAC; best model by inlier count (ties: lower inlier error sum),
/// refit on all inliers at the end. Trial count adapts to the observed
/// inlier ratio at 99.9% confidence, capped by max_trials.
RansacResult ransac_model(std::span<const PointMatch> matches, RansacModel model,
                          double threshold_px, int max_trials, std::uint64_t seed);

struct Residual2 {
    double x = 0.0;
    double y = 0.0;
    double norm() const;
};

/// Displacement from the target point to the foot of the perpendicular on
/// its epipolar line H*x1. Empty when the line normal degenerates.
std::optional<Residual2> epipolar_residual(const FundamentalMatrix& f, const PointMatch& m);

struct KnownTransform {
    AffinePair forward; // maps reference coordinates to target coordinates
};

struct GroundTruthPoints {
    std::vector<PointMatch> points; // matched to inputs by exact (ref_x, ref_y)
};

using TruthSource = std::variant<KnownTransform, FundamentalMatrix, GroundTruthPoints>;

struct EvalReport {
    int total = 0;
    int ncm = 0;           // residual magnitude < threshold
    double cmr = 0.0;      // ncm / total
    double rmse = 0.0;     // over correct matches only
    bool failure = false;  // ncm == 0 or rmse > 2 px
    std::vector<Residual2> residuals; // one per input match (degenerate -> NaN)
};

EvalReport score_matches(std::span<const PointMatch> matches, const TruthSource& truth,
                         double ncm_threshold = 2.0);

/// Fraction of coarse-stage correct matches surviving fine matching,
/// clamped to [0, 1].
double convergence_rate(int coarse_ncm, int fine_ncm);

} // namespace pcwlad
