#pragma once

#include <vector>

#include "pcwlad/raster.hpp"

namespace pcwlad {

struct Keypoint {
    int x = 0;
    int y = 0;
    double score = 0.0;
};

/// FAST-9 corner response at (x, y): the largest threshold at which a
/// contiguous arc of 9 circle pixels stays uniformly brighter or darker than
/// the center. Returns 0 when the segment test fails at `threshold`.
/// (x, y) must be at least 3 pixels from every border.
double fast_corner_score(const Raster& r, int x, int y, double threshold);

/// FAST-9 detection with 3x3 non-maximum suppression, then round-robin
/// selection from a grid x grid bucketing for spatial uniformity. Keypoints
/// closer than border_margin (at least 4) to any edge are discarded. The
/// result holds at most target_count corners, sorted by score (ties: lower
/// y, then lower x).
std::vector<Keypoint> detect_fast(const Raster& pc, int target_count, double threshold,
                                  int grid = 8, int border_margin = 4);

} // namespace pcwlad
