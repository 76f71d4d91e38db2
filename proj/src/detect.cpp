#include "pcwlad/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "pcwlad/errors.hpp"

namespace pcwlad {

namespace {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr std::array<std::array<int, 2>, 16> kCircle = {{{0, -3},
                                                         {1, -3},
                                                         {2, -2},
                                                         {3, -1},
                                                         {3, 0},
                                                         {3, 1},
                                                         {2, 2},
                                                         {1, 3},
                                                         {0, 3},
                                                         {-1, 3},
                                                         {-2, 2},
                                                         {-3, 1},
                                                         {-3, 0},
                                                         {-3, -1},
                                                         {-2, -2},
                                                         {-1, -3}}};

constexpr int kArc = 9;

// max over contiguous arcs of length kArc of (min diff inside the arc),
// evaluated on a doubled ring to handle wraparound
double best_arc_strength(const double d[16]) {
    double best = 0.0;
    for (int start = 0; start < 16; ++start) {
        double lo = d[start];
        for (int k = 1; k < kArc && lo > 0.0; ++k)
            lo = std::min(lo, d[(start + k) & 15]);
        best = std::max(best, lo);
    }
    return best;
}

bool keypoint_order(const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score)
        return a.score > b.score;
    if (a.y != b.y)
        return a.y < b.y;
    return a.x < b.x;
}

} // namespace

double fast_corner_score(const Raster& r, int x, int y, double threshold) {
    const double c = r.at(x, y);
    double bright[16], dark[16];
    for (int i = 0; i < 16; ++i) {
        const double v = r.at(x + kCircle[i][0], y + kCircle[i][1]);
        bright[i] = v - c; // > threshold when pixel is brighter than center
        dark[i] = c - v;
    }
    const double strength = std::max(best_arc_strength(bright), best_arc_strength(dark));
    return strength > threshold ? strength : 0.0;
}

std::vector<Keypoint> detect_fast(const Raster& pc, int target_count, double threshold,
                                  int grid, int border_margin) {
    if (target_count < 1)
        throw ParamError("detect_fast: target_count must be >= 1");
    if (grid < 1)
        throw ParamError("detect_fast: grid must be >= 1");
    const int margin = std::max(border_margin, 4);
    const int w = pc.width();
    const int h = pc.height();
    if (w - 2 * margin <= 0 || h - 2 * margin <= 0)
        return {};

    // scores one pixel beyond the detection margin so suppression sees the
    // true neighborhood of border keypoints
    const int ring = margin - 1;
    Raster score(w, h, 0.0);
    for (int y = ring; y < h - ring; ++y)
        for (int x = ring; x < w - ring; ++x)
            score.at(x, y) = fast_corner_score(pc, x, y, threshold);

    // 3x3 non-maximum suppression; ties resolved toward lower (y, x)
    std::vector<Keypoint> corners;
    for (int y = margin; y < h - margin; ++y) {
        for (int x = margin; x < w - margin; ++x) {
            const double s = score.at(x, y);
            if (s <= 0.0)
                continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1 && is_max; ++dx) {
                    if (dx == 0 && dy == 0)
                        continue;
                    const double sn = score.at(x + dx, y + dy);
                    if (sn > s || (sn == s && (dy < 0 || (dy == 0 && dx < 0))))
                        is_max = false;
                }
            if (is_max)
                corners.push_back({x, y, s});
        }
    }
    if (corners.empty())
        return corners;

    // bucket into grid cells, strongest first within each cell
    std::vector<std::vector<Keypoint>> cells(static_cast<std::size_t>(grid) * grid);
    for (const Keypoint& k : corners) {
        const int cx = std::min(k.x * grid / w, grid - 1);
        const int cy = std::min(k.y * grid / h, grid - 1);
        cells[static_cast<std::size_t>(cy) * grid + cx].push_back(k);
    }
    for (auto& cell : cells)
        std::sort(cell.begin(), cell.end(), keypoint_order);

    // round-robin: fill every cell's quota evenly before over-allocating
    std::vector<Keypoint> selected;
    selected.reserve(std::min<std::size_t>(corners.size(), target_count));
    std::size_t round = 0;
    while (selected.size() < static_cast<std::size_t>(target_count)) {
        bool any = false;
        for (auto& cell : cells) {
            if (round < cell.size()) {
                selected.push_back(cell[round]);
                any = true;
                if (selected.size() == static_cast<std::size_t>(target_count))
                    break;
            }
        }
        if (!any)
            break;
        ++round;
    }
    std::sort(selected.begin(), selected.end(), keypoint_order);
    return selected;
}

} // namespace pcwlad
