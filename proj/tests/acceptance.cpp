// Acceptance suite: one pass/fail line per criterion, exit code = failures.
// argv[1] is the CLI binary path (used by the determinism criterion).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pcwlad/coarse.hpp"
#include "pcwlad/evaluate.hpp"
#include "pcwlad/fine.hpp"
#include "pcwlad/image_io.hpp"
#include "pcwlad/phase_congruency.hpp"
#include "pcwlad/pipeline.hpp"
#include "pcwlad/report.hpp"
#include "pcwlad/synth.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace pcwlad;

namespace {

int g_failures = 0;

void report(int criterion, const char* title, bool pass, const std::string& detail) {
    std::printf("%s  criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, title,
                detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++g_failures;
}

Raster add_noise(const Raster& r, double sigma, std::uint64_t seed) {
    Raster out = r;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    for (double& v : out.samples())
        v = std::clamp(v + g(rng), 0.0, 1.0);
    return out;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// ---------------------------------------------------------------- criteria

void criterion_1_subpixel_recovery() {
    const Raster ref = textured_test_image(512, 512, 20260808);
    RadiometricMap map;
    map.gain = 0.8;
    map.offset = 0.05;
    map.gamma = 1.4;
    const AffinePair fwd = AffinePair::shift(0.3, -0.7);
    const SyntheticPair pair = make_synthetic_pair(ref, fwd, map, 0.01, 11);

    PipelineConfig cfg; // defaults: M=101, N=81, 1000 features
    cfg.threads = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const PipelineResult res = run_match_pipeline(ref, pair.target, cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool pass = !res.inliers.empty();
    double cmr = 0.0, rmse = 99.0;
    if (pass) {
        const EvalReport rep = score_matches(res.inliers, KnownTransform{fwd});
        cmr = rep.cmr;
        rmse = rep.rmse;
        pass = rmse < 0.5 && cmr > 0.95 && secs <= 120.0;
    }
    report(1, "sub-pixel recovery on the 512x512 synthetic pair", pass,
           fmt("rmse %.3f px (<0.5), cmr %.3f (>0.95), %.1f s (<=120)", rmse, cmr, secs));
}

void criterion_2_crossmodal_proxy() {
    const Raster ref = textured_test_image(512, 512, 20260808);
    RadiometricMap map;
    map.invert = true;
    map.gamma = 1.4;
    const AffinePair fwd = AffinePair::shift(0.3, -0.7);
    const SyntheticPair pair = make_synthetic_pair(ref, fwd, map, 0.01, 12);

    PipelineConfig cfg;
    const PipelineResult res = run_match_pipeline(ref, pair.target, cfg);

    bool pass = !res.inliers.empty();
    double cmr = 0.0, rmse = 99.0;
    if (pass) {
        const EvalReport rep = score_matches(res.inliers, KnownTransform{fwd});
        cmr = rep.cmr;
        rmse = rep.rmse;
        pass = cmr > 0.85 && rmse < 0.8;
    }
    report(2, "inversion+gamma cross-modal proxy", pass,
           fmt("cmr %.3f (>0.85), rmse %.3f px (<0.8)", cmr, rmse));
}

struct NoisyFixture {
    Raster ref;
    Raster tgt;
    KnownTransform truth;
};

// both sensors carry noise, as in real multimodal pairs
NoisyFixture noisy_crossmodal_fixture() {
    const Raster clean = textured_test_image(256, 256, 777);
    RadiometricMap map;
    map.invert = true;
    map.gamma = 1.3;
    const AffinePair fwd = AffinePair::shift(0.4, -0.6);
    const SyntheticPair pair = make_synthetic_pair(clean, fwd, map, 0.04, 13);
    return {add_noise(clean, 0.04, 14), pair.target, KnownTransform{fwd}};
}

void criterion_3_metric_trend(const NoisyFixture& fx) {
    PipelineConfig cfg;
    cfg.features = 300;
    cfg.coarse.search_radius = 8;
    const auto cells = run_ablation(fx.ref, fx.tgt, fx.truth,
                                    {Metric::Ssd, Metric::Lad, Metric::Ncc, Metric::Ssim},
                                    {21, 101}, {NoiseMode::Off}, cfg);
    auto cmr_of = [&](Metric m, int size) {
        for (const auto& c : cells)
            if (c.metric == m && c.size == size)
                return c.coarse_cmr;
        return -1.0;
    };
    const double ssim21 = cmr_of(Metric::Ssim, 21);
    const double ncc21 = cmr_of(Metric::Ncc, 21);
    bool monotone = true;
    for (Metric m : {Metric::Ssd, Metric::Lad, Metric::Ncc, Metric::Ssim})
        monotone = monotone && cmr_of(m, 101) >= cmr_of(m, 21);
    const bool pass = ssim21 >= ncc21 && monotone;
    report(3, "metric ablation trend (SSIM vs NCC at 21; 101 >= 21)", pass,
           fmt("ssim@21 %.3f >= ncc@21 %.3f; every metric monotone in size: ", ssim21,
               ncc21) +
               (monotone ? "yes" : "no"));
}

void criterion_4_noise_mode_trend(const NoisyFixture& fx) {
    PipelineConfig cfg;
    cfg.features = 300;
    cfg.coarse.search_radius = 8;
    const auto cells = run_ablation(fx.ref, fx.tgt, fx.truth, {Metric::Ssim}, {41, 61, 81},
                                    {NoiseMode::Off, NoiseMode::Rayleigh}, cfg);
    auto cmr_of = [&](NoiseMode mode, int size) {
        for (const auto& c : cells)
            if (c.noise_mode == mode && c.size == size)
                return c.coarse_cmr;
        return -1.0;
    };
    bool pass = true;
    std::string detail;
    for (int size : {41, 61, 81}) {
        const double off = cmr_of(NoiseMode::Off, size);
        const double ray = cmr_of(NoiseMode::Rayleigh, size);
        pass = pass && off >= ray;
        detail += fmt("%.0f: off %.3f >= ray %.3f; ", size, off, ray);
    }
    report(4, "noise-off coarse CMR dominates Rayleigh at 41/61/81", pass, detail);
}

void criterion_5_wlad_vs_lp() {
    // 100x8 noiseless system with 10 gross outliers of magnitude 5
    std::array<double, 8> truth = {0.3, 1.2, -0.7, 0.05, -0.02, 0.4, 0.01, -0.03};
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> uni(-6.0, 6.0);
    LinearSystem sys;
    sys.rows = 100;
    sys.coeffs.resize(800);
    sys.obs.resize(100);
    const std::vector<double> weights(100, 1.0);
    for (int i = 0; i < 100; ++i) {
        double dot = 0.0;
        for (int j = 0; j < 8; ++j) {
            const double v = uni(rng);
            sys.coeffs[static_cast<std::size_t>(i) * 8 + j] = v;
            dot += v * truth[j];
        }
        sys.obs[i] = dot;
    }
    std::vector<int> rows(100);
    for (int i = 0; i < 100; ++i)
        rows[i] = i;
    std::shuffle(rows.begin(), rows.end(), rng);
    for (int k = 0; k < 10; ++k)
        sys.obs[rows[k]] += (k % 2 == 0 ? 5.0 : -5.0);

    const WladSolution irls = wlad_solve(sys, weights, 50, 1e-12);
    const auto lad = oracle::lad_simplex(sys.coeffs, sys.obs, weights, 8);
    const auto wls = oracle::wls_solve(sys.coeffs, sys.obs, weights, 8);

    double max_gap = 0.0, irls_err = 0.0, wls_err = 0.0;
    for (int j = 0; j < 8; ++j) {
        max_gap = std::max(max_gap, std::abs(irls.update[j] - lad[j]));
        irls_err = std::max(irls_err, std::abs(irls.update[j] - truth[j]));
        wls_err = std::max(wls_err, std::abs(wls[j] - truth[j]));
    }
    const bool pass = max_gap < 1e-2 && irls_err < wls_err;
    report(5, "WLAD IRLS matches the LP oracle and beats least squares", pass,
           fmt("max |irls-lp| %.2e (<1e-2); err irls %.2e < wls %.2e", max_gap, irls_err,
               wls_err));
}

void criterion_6_algebraic_identities() {
    bool pass = true;
    std::string detail;

    // MS closed form vs two regressions, 1000 random patch pairs
    std::mt19937_64 rng(616);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> g(25), i(25);
        for (int k = 0; k < 25; ++k) {
            g[k] = uni(rng);
            i[k] = uni(rng);
        }
        const double a = mutual_structure(g, i);
        const double b = oracle::ms_two_regression(g, i);
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
    }
    pass = pass && worst < 1e-9;
    detail += fmt("ms identity worst rel %.1e; ", worst);

    // Rayleigh ratio at machine precision
    double ratio_err = 0.0;
    for (double sg : {1e-3, 0.1, 1.0, 42.0}) {
        const RayleighThreshold t = rayleigh_threshold(sg, 2.0);
        ratio_err = std::max(ratio_err,
                             std::abs(t.sigma / t.mu - std::sqrt((4.0 - M_PI) / M_PI)));
    }
    pass = pass && ratio_err < 1e-14;
    detail += fmt("rayleigh ratio err %.1e; ", ratio_err);

    // SSIM self-similarity
    const Raster w = oracle::random_raster(11, 11, 3);
    const double self = ssim_patch(w.samples(), w.samples());
    pass = pass && std::abs(self - 1.0) < 1e-12;
    detail += fmt("ssim(G,G)-1 = %.1e; ", self - 1.0);

    // PC range on 100 random images
    bool in_range = true;
    for (int i = 0; i < 100; ++i) {
        const PcMap map = compute_pc(oracle::random_raster(48, 48, 9000 + i), PcParams{});
        for (double v : map.pc.samples())
            in_range = in_range && v >= 0.0 && v <= 1.0;
    }
    pass = pass && in_range;
    detail += in_range ? "pc in [0,1] on 100 images" : "pc out of range";

    report(6, "algebraic identities (MS, Rayleigh, SSIM, PC range)", pass, detail);
}

void criterion_7_jacobian_check() {
    const Raster tgt = oracle::smooth_raster(96, 96, 7, 0.008, 0.03);
    Raster g_win(25, 25, 0.0); // observations do not enter the Jacobian
    TransformParams p;
    p.r0 = 0.02;
    p.r1 = 0.9;
    p.a0 = 0.4;
    p.a1 = 1.01;
    p.a2 = -0.02;
    p.b0 = -0.3;
    p.b1 = 0.015;
    p.b2 = 0.99;
    const double cx = 48.0, cy = 48.0;
    const auto sys = linearize(g_win, tgt, p, cx, cy);
    bool pass = sys.has_value();
    double worst = 0.0;
    if (pass) {
        const double delta = 1e-3;
        for (int param = 0; param < 8 && pass; ++param) {
            TransformParams plus = p, minus = p;
            double* fp[8] = {&plus.r0, &plus.r1, &plus.a0, &plus.a1,
                             &plus.a2, &plus.b0, &plus.b1, &plus.b2};
            double* fm[8] = {&minus.r0, &minus.r1, &minus.a0, &minus.a1,
                             &minus.a2, &minus.b0, &minus.b1, &minus.b2};
            *fp[param] += delta;
            *fm[param] -= delta;
            const auto op = linearize(g_win, tgt, plus, cx, cy);
            const auto om = linearize(g_win, tgt, minus, cx, cy);
            pass = op.has_value() && om.has_value();
            if (!pass)
                break;
            double num = 0.0, den = 0.0;
            for (int i = 0; i < sys->rows; ++i) {
                const double fd = -(op->obs[i] - om->obs[i]) / (2.0 * delta);
                const double an = sys->row(i)[param];
                num += (fd - an) * (fd - an);
                den += an * an;
            }
            const double rel = std::sqrt(num / den);
            worst = std::max(worst, rel);
            pass = pass && rel < 1e-2;
        }
    }
    report(7, "analytic Jacobian vs central finite differences", pass,
           fmt("worst column rel err %.2e (<1e-2)", worst));
}

void criterion_8_epipolar_machinery() {
    // stereo translation along x with depth-varying disparity
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uni(5.0, 300.0);
    std::uniform_real_distribution<double> disparity(8.0, 60.0);
    std::vector<PointMatch> matches(60);
    for (auto& m : matches) {
        m.ref_x = uni(rng);
        m.ref_y = uni(rng);
        m.tgt_x = m.ref_x + disparity(rng);
        m.tgt_y = m.ref_y;
    }
    bool pass = true;
    double worst_res = 0.0, worst_horiz = 0.0;
    const RansacResult rr = ransac_model(matches, RansacModel::Fundamental, 2.0, 2000, 7);
    pass = pass && rr.inlier_count == 60;
    for (const auto& m : matches) {
        const auto line = linalg::mat3_apply(rr.fundamental.m, {m.ref_x, m.ref_y, 1.0});
        worst_horiz = std::max(worst_horiz, std::abs(line[0]) / std::abs(line[1]));
        const auto res = epipolar_residual(rr.fundamental, m);
        pass = pass && res.has_value();
        if (res)
            worst_res = std::max(worst_res, res->norm());
    }
    pass = pass && worst_res < 1e-6 && worst_horiz < 1e-6;

    // the 4-residual RMSE fixture
    AffinePair identity;
    std::vector<PointMatch> fixture = {
        {10, 10, 10, 10}, {20, 20, 21, 20}, {30, 30, 30, 31}, {40, 40, 43, 40}};
    const EvalReport rep = score_matches(fixture, KnownTransform{identity});
    pass = pass && std::abs(rep.rmse - 0.8165) < 1e-4;

    report(8, "epipolar machinery (translation F, residuals, RMSE fixture)", pass,
           fmt("max residual %.1e, max |l_x/l_y| %.1e, rmse %.4f", worst_res, worst_horiz,
               rep.rmse));
}

void criterion_9_cli_determinism(const char* cli) {
    const fs::path dir = fs::temp_directory_path() / "pcwlad_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const Raster ref = textured_test_image(192, 192, 31);
    const SyntheticPair pair =
        make_synthetic_pair(ref, AffinePair::shift(0.4, -0.3), RadiometricMap{}, 0.01, 15);
    save_png16(ref, (dir / "ref.png").string());
    save_png16(pair.target, (dir / "tgt.png").string());

    auto run_match = [&](const std::string& out) {
        std::ostringstream cmd;
        cmd << "PCWLAD_THREADS=2 " << cli << " match --ref " << (dir / "ref.png")
            << " --tgt " << (dir / "tgt.png") << " --out " << (dir / out)
            << " --features 150 --template-size 41 --window-size 31 --seed 42"
            << " > /dev/null 2>&1";
        return std::system(cmd.str().c_str());
    };
    bool pass = run_match("run1") == 0 && run_match("run2") == 0;
    std::string detail = pass ? "" : "cli runs failed; ";
    if (pass) {
        for (const char* name :
             {"keypoints.csv", "coarse.csv", "fine.csv", "inliers.csv"}) {
            const std::string a = read_file((dir / "run1" / name).string());
            const std::string b = read_file((dir / "run2" / name).string());
            if (a != b) {
                pass = false;
                detail += std::string(name) + " differs; ";
            }
        }
        if (pass)
            detail = "keypoints/coarse/fine/inliers byte-identical across runs";
    }
    report(9, "cmd_match determinism under a fixed seed", pass, detail);
    fs::remove_all(dir);
}

void criterion_10_table_reproduction() {
    std::printf("SKIP  criterion 10: Landsat table reproduction (optional: needs the "
                "published datasets; this suite runs without network access)\n");
    std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
    const char* cli = argc > 1 ? argv[1] : nullptr;

    criterion_1_subpixel_recovery();
    criterion_2_crossmodal_proxy();
    const NoisyFixture fx = noisy_crossmodal_fixture();
    criterion_3_metric_trend(fx);
    criterion_4_noise_mode_trend(fx);
    criterion_5_wlad_vs_lp();
    criterion_6_algebraic_identities();
    criterion_7_jacobian_check();
    criterion_8_epipolar_machinery();
    if (cli)
        criterion_9_cli_determinism(cli);
    else
        report(9, "cmd_match determinism under a fixed seed", false,
               "cli path not supplied");
    criterion_10_table_reproduction();

    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
