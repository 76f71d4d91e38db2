#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcwlad/errors.hpp"
#include "pcwlad/pipeline.hpp"
#include "pcwlad/report.hpp"
#include "pcwlad/synth.hpp"
#include "support/oracles.hpp"

using namespace pcwlad;

TEST_CASE("config serialization round-trips and is a fixed point") {
    PipelineConfig cfg;
    cfg.pc.noise_mode = NoiseMode::Rayleigh;
    cfg.pc.k_noise = 2.5;
    cfg.coarse.metric = Metric::Ncc;
    cfg.coarse.template_size = 51;
    cfg.fine.window_size = 41;
    cfg.fine.ms_refresh = MsRefresh::Once;
    cfg.features = 321;
    cfg.seed = 987654321;

    const std::string text = serialize_config(cfg);
    const PipelineConfig parsed = parse_config(text);
    CHECK(serialize_config(parsed) == text);
    CHECK(parsed.pc.noise_mode == NoiseMode::Rayleigh);
    CHECK(parsed.pc.k_noise == cfg.pc.k_noise);
    CHECK(parsed.coarse.metric == Metric::Ncc);
    CHECK(parsed.coarse.template_size == 51);
    CHECK(parsed.fine.window_size == 41);
    CHECK(parsed.fine.ms_refresh == MsRefresh::Once);
    CHECK(parsed.features == 321);
    CHECK(parsed.seed == cfg.seed);
}

TEST_CASE("unknown config keys and malformed lines are rejected") {
    CHECK_THROWS_AS(parse_config("bogus-key=1\n"), ParamError);
    CHECK_THROWS_AS(parse_config("features\n"), ParamError);
    CHECK_THROWS_AS(parse_config("features=abc\n"), ParamError);
}

TEST_CASE("config validation catches out-of-range values") {
    PipelineConfig cfg;
    cfg.coarse.template_size = 100; // even
    CHECK_THROWS_AS(cfg.validate(), ParamError);
    cfg = PipelineConfig{};
    cfg.features = 0;
    CHECK_THROWS_AS(cfg.validate(), ParamError);
    cfg = PipelineConfig{};
    cfg.fine.ms_patch = 4;
    CHECK_THROWS_AS(cfg.validate(), ParamError);
}

namespace {

PipelineConfig desk_config() {
    PipelineConfig cfg;
    cfg.coarse.template_size = 41;
    cfg.coarse.search_radius = 6;
    cfg.fine.window_size = 31;
    cfg.features = 120;
    cfg.threads = 1;
    return cfg;
}

} // namespace

TEST_CASE("identity pair: nearly everything converges at zero offset") {
    const Raster img = textured_test_image(200, 200, 11);
    const PipelineConfig cfg = desk_config();
    const PipelineResult res = run_match_pipeline(img, img, cfg);

    REQUIRE(!res.keypoints.empty());
    REQUIRE(!res.coarse.empty());
    REQUIRE(!res.fine.empty());

    int near_zero = 0;
    for (const FineMatch& m : res.converged) {
        if (std::abs(m.tgt_x - m.ref.x) < 0.05 && std::abs(m.tgt_y - m.ref.y) < 0.05)
            ++near_zero;
    }
    CHECK(res.converged.size() >= res.fine.size() * 95 / 100);
    CHECK(near_zero >= static_cast<int>(res.converged.size()) * 95 / 100);
    CHECK(res.convergence_fraction >= 0.95);
}

TEST_CASE("synthetic sub-pixel pair is matched below half a pixel rmse") {
    const Raster ref = textured_test_image(220, 220, 21);
    RadiometricMap map;
    map.gain = 0.85;
    map.offset = 0.03;
    map.gamma = 1.2;
    const AffinePair forward = AffinePair::shift(0.4, -0.6);
    const SyntheticPair pair = make_synthetic_pair(ref, forward, map, 0.005, 77);

    const PipelineConfig cfg = desk_config();
    const PipelineResult res = run_match_pipeline(ref, pair.target, cfg);
    REQUIRE(res.inliers.size() >= 20);

    const EvalReport rep = score_matches(res.inliers, KnownTransform{forward});
    CHECK(rep.cmr > 0.95);
    CHECK(rep.rmse < 0.5);
}

TEST_CASE("pipeline outputs are deterministic") {
    const Raster ref = textured_test_image(180, 180, 5);
    const SyntheticPair pair =
        make_synthetic_pair(ref, AffinePair::shift(0.2, 0.3), RadiometricMap{}, 0.01, 9);
    const PipelineConfig cfg = desk_config();

    const PipelineResult a = run_match_pipeline(ref, pair.target, cfg);
    const PipelineResult b = run_match_pipeline(ref, pair.target, cfg);
    CHECK(fine_csv(a.fine) == fine_csv(b.fine));
    CHECK(matches_csv(a.inliers) == matches_csv(b.inliers));
    CHECK(keypoints_csv(a.keypoints) == keypoints_csv(b.keypoints));
}

TEST_CASE("matches csv parses back") {
    std::vector<PointMatch> matches = {{1.5, 2.25, 3.125, 4.0625}, {5, 6, 7, 8}};
    const auto parsed = parse_matches_csv(matches_csv(matches));
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].ref_x == 1.5);
    CHECK(parsed[0].tgt_y == 4.0625);
    CHECK(parsed[1].tgt_x == 7.0);
}

TEST_CASE("inverting radiometric map is monotone decreasing") {
    RadiometricMap map;
    map.invert = true;
    map.gamma = 1.4;
    double prev = map.apply(0.0);
    for (double v = 0.05; v <= 1.0; v += 0.05) {
        const double cur = map.apply(v);
        CHECK(cur <= prev);
        prev = cur;
    }
    CHECK(map.apply(0.0) == doctest::Approx(1.0));
    CHECK(map.apply(1.0) == doctest::Approx(0.0));
}

TEST_CASE("truth json round-trips the forward map") {
    const Raster ref = textured_test_image(64, 64, 3);
    AffinePair fwd;
    fwd.a0 = 0.3;
    fwd.b0 = -0.7;
    const SyntheticPair pair = make_synthetic_pair(ref, fwd, RadiometricMap{}, 0.0, 1);
    const KnownTransform t = parse_truth_json(truth_json(pair));
    CHECK(t.forward.a0 == 0.3);
    CHECK(t.forward.b0 == -0.7);
    CHECK(t.forward.a1 == 1.0);
}

TEST_CASE("ablation rejects empty lists and even sizes") {
    const Raster img = textured_test_image(96, 96, 2);
    const KnownTransform truth{AffinePair{}};
    PipelineConfig cfg;
    CHECK_THROWS_AS(
        run_ablation(img, img, truth, {}, {21}, {NoiseMode::Off}, cfg), ParamError);
    CHECK_THROWS_AS(run_ablation(img, img, truth, {Metric::Ssim}, {20}, {NoiseMode::Off}, cfg),
                    ParamError);
}

TEST_CASE("ablation sweeps the full grid") {
    const Raster ref = textured_test_image(160, 160, 31);
    const AffinePair fwd = AffinePair::shift(0.3, -0.4);
    const SyntheticPair pair = make_synthetic_pair(ref, fwd, RadiometricMap{}, 0.01, 4);

    PipelineConfig cfg = desk_config();
    cfg.features = 60;
    const auto cells = run_ablation(ref, pair.target, KnownTransform{fwd},
                                    {Metric::Ssim, Metric::Ncc}, {21, 41},
                                    {NoiseMode::Off}, cfg);
    CHECK(cells.size() == 4);
    for (const auto& c : cells) {
        CHECK(c.coarse_total > 0);
        CHECK(c.coarse_cmr >= 0.0);
        CHECK(c.coarse_cmr <= 1.0);
        CHECK(c.conv_rate >= 0.0);
        CHECK(c.conv_rate <= 1.0);
    }
    const std::string csv = ablation_csv(cells);
    CHECK(csv.find("ssim,21,off") != std::string::npos);
    CHECK(csv.find("ncc,41,off") != std::string::npos);
}
