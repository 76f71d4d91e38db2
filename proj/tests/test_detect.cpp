#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "pcwlad/detect.hpp"
#include "support/oracles.hpp"

using namespace pcwlad;

TEST_CASE("constant map yields no keypoints") {
    CHECK(detect_fast(Raster(64, 64, 0.5), 100, 0.05).empty());
}

TEST_CASE("single bright dot survives as exactly one keypoint") {
    Raster r(32, 32, 0.0);
    r.at(15, 17) = 1.0;
    const auto kps = detect_fast(r, 100, 0.1);
    REQUIRE(kps.size() == 1);
    CHECK(kps[0].x == 15);
    CHECK(kps[0].y == 17);
    CHECK(kps[0].score > 0.5);
}

TEST_CASE("segment test agrees with the brute-force oracle") {
    const Raster r = oracle::random_raster(40, 40, 55);
    const double threshold = 0.08;
    for (int y = 3; y < 37; ++y)
        for (int x = 3; x < 37; ++x) {
            const bool mine = fast_corner_score(r, x, y, threshold) > 0.0;
            const bool ref = oracle::fast_segment_brute(r, x, y, threshold);
            CHECK(mine == ref);
        }
}

TEST_CASE("detections are strict 3x3 local maxima of the score") {
    const Raster r = oracle::random_raster(48, 48, 9);
    const double threshold = 0.05;
    const auto kps = detect_fast(r, 10000, threshold);
    REQUIRE(!kps.empty());
    for (const auto& k : kps) {
        const double s = fast_corner_score(r, k.x, k.y, threshold);
        CHECK(s == k.score);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0)
                    continue;
                CHECK(fast_corner_score(r, k.x + dx, k.y + dy, threshold) <= s);
            }
    }
}

TEST_CASE("border margin is honored") {
    const Raster r = oracle::random_raster(64, 64, 23);
    const int margin = 20;
    const auto kps = detect_fast(r, 10000, 0.03, 8, margin);
    for (const auto& k : kps) {
        CHECK(k.x >= margin);
        CHECK(k.x < 64 - margin);
        CHECK(k.y >= margin);
        CHECK(k.y < 64 - margin);
    }
}

TEST_CASE("determinism and score ordering") {
    const Raster r = oracle::random_raster(64, 64, 12);
    const auto a = detect_fast(r, 50, 0.05);
    const auto b = detect_fast(r, 50, 0.05);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].score == b[i].score);
    }
    for (std::size_t i = 1; i < a.size(); ++i)
        CHECK(a[i - 1].score >= a[i].score);
}

TEST_CASE("grid quotas fill evenly before over-allocating") {
    const int grid = 4;
    const Raster r = oracle::random_raster(96, 96, 31);
    const int target = 60;
    const auto kps = detect_fast(r, target, 0.02, grid);
    const auto all_corners = detect_fast(r, 1 << 20, 0.02, grid); // full inventory

    REQUIRE(static_cast<int>(kps.size()) == target);

    std::map<int, int> taken, available;
    for (const auto& k : kps)
        ++taken[std::min(k.y * grid / 96, grid - 1) * grid + std::min(k.x * grid / 96, grid - 1)];
    for (const auto& k : all_corners)
        ++available[std::min(k.y * grid / 96, grid - 1) * grid +
                    std::min(k.x * grid / 96, grid - 1)];

    // round robin: a cell may exceed another by more than one only when the
    // other ran out of corners
    for (const auto& [cell_a, count_a] : taken)
        for (const auto& [cell_b, count_b] : available) {
            const int taken_b = taken.count(cell_b) ? taken.at(cell_b) : 0;
            if (count_a > taken_b + 1)
                CHECK(taken_b == count_b);
        }
}
