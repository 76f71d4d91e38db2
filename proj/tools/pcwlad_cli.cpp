// pcwlad command-line driver: pc / match / synth / ablate / eval subcommands.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcwlad/errors.hpp"
#include "pcwlad/image_io.hpp"
#include "pcwlad/pipeline.hpp"
#include "pcwlad/report.hpp"
#include "pcwlad/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pcwlad;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitDegenerate = 2;
constexpr int kExitUsage = 64;

// Inputs are image paths, or "noise:WxH:SEED" for a generated test texture.
Raster load_input(const std::string& spec) {
    static const std::regex noise_re(R"(^noise:(\d+)x(\d+):(\d+)$)");
    std::smatch m;
    if (std::regex_match(spec, m, noise_re))
        return textured_test_image(std::stoi(m[1]), std::stoi(m[2]), std::stoull(m[3]));
    return load_gray(spec);
}

void add_config_flags(CLI::App* cmd, PipelineConfig& cfg, std::string& noise_mode,
                      std::string& metric, std::string& ms_refresh) {
    cmd->add_option("--scales", cfg.pc.n_scales, "Log-Gabor scale count");
    cmd->add_option("--orientations", cfg.pc.n_orientations, "Log-Gabor orientation count");
    cmd->add_option("--min-wavelength", cfg.pc.min_wavelength, "smallest filter wavelength (px)");
    cmd->add_option("--scale-mult", cfg.pc.scale_mult, "wavelength multiplier between scales");
    cmd->add_option("--sigma-on-f", cfg.pc.sigma_on_f, "radial bandwidth ratio");
    cmd->add_option("--k-noise", cfg.pc.k_noise, "noise threshold k (mu + k*sigma)");
    cmd->add_option("--epsilon", cfg.pc.epsilon, "PC division guard");
    cmd->add_option("--noise-mode", noise_mode, "off|rayleigh");
    cmd->add_option("--metric", metric, "coarse metric: ssd|lad|ncc|ssim");
    cmd->add_option("--template-size", cfg.coarse.template_size, "coarse template size M (odd)");
    cmd->add_option("--search-radius", cfg.coarse.search_radius, "coarse search radius (px)");
    cmd->add_option("--min-score", cfg.min_score, "SSIM gate before fine matching");
    cmd->add_option("--window-size", cfg.fine.window_size, "fine window size N (odd)");
    cmd->add_option("--ms-patch", cfg.fine.ms_patch, "mutual-structure patch size (odd)");
    cmd->add_option("--max-iters", cfg.fine.max_iters, "fine iteration cap");
    cmd->add_option("--shift-tol", cfg.fine.shift_tol, "stop when |da0|,|db0| fall below (px)");
    cmd->add_option("--ssim-gate", cfg.fine.ssim_gate, "convergence SSIM gate");
    cmd->add_option("--ms-refresh", ms_refresh, "recompute structure weights: once|each");
    cmd->add_option("--features", cfg.features, "FAST keypoint budget");
    cmd->add_option("--fast-threshold", cfg.fast_threshold, "FAST threshold on PC values");
    cmd->add_option("--grid", cfg.grid, "bucketing grid for keypoint uniformity");
    cmd->add_option("--ransac-threshold", cfg.ransac_threshold, "RANSAC inlier threshold (px)");
    cmd->add_option("--ransac-max-trials", cfg.ransac_max_trials, "RANSAC trial cap");
    cmd->add_option("--seed", cfg.seed, "seed for all randomized stages");
    cmd->add_option("--threads", cfg.threads, "worker cap (0 = auto, PCWLAD_THREADS also caps)");
}

void apply_enum_flags(PipelineConfig& cfg, const std::string& noise_mode,
                      const std::string& metric, const std::string& ms_refresh) {
    if (noise_mode == "off")
        cfg.pc.noise_mode = NoiseMode::Off;
    else if (noise_mode == "rayleigh")
        cfg.pc.noise_mode = NoiseMode::Rayleigh;
    else
        throw ParamError("unknown noise mode: " + noise_mode);
    cfg.coarse.metric = metric_from_string(metric);
    cfg.fine.ms_refresh = ms_refresh_from_string(ms_refresh);
}

int cmd_pc(const std::string& input, const std::string& out_base, PipelineConfig cfg,
           const std::string& noise_mode, const std::string& metric,
           const std::string& ms_refresh) {
    apply_enum_flags(cfg, noise_mode, metric, ms_refresh);
    const Raster img = load_input(input);
    const PcMap map = compute_pc(img, cfg.pc);
    save_pcw1(map.pc, out_base + ".pcw1");
    save_png16(map.pc, out_base + ".png", /*normalize=*/true);
    std::cout << "pc map written to " << out_base << ".pcw1 / .png\n";
    return kExitOk;
}

int cmd_match(const std::string& ref_path, const std::string& tgt_path,
              const std::string& out_dir, PipelineConfig cfg, const std::string& noise_mode,
              const std::string& metric, const std::string& ms_refresh) {
    apply_enum_flags(cfg, noise_mode, metric, ms_refresh);
    const Raster ref = load_input(ref_path);
    const Raster tgt = load_input(tgt_path);
    fs::create_directories(out_dir);

    const PipelineResult res = run_match_pipeline(ref, tgt, cfg);
    if (res.keypoints.empty()) {
        std::cerr << "no keypoints detected; adjust --fast-threshold\n";
        return kExitDegenerate;
    }
    write_file(out_dir + "/keypoints.csv", keypoints_csv(res.keypoints));
    write_file(out_dir + "/coarse.csv", coarse_csv(res.coarse, cfg.coarse.metric));
    write_file(out_dir + "/fine.csv", fine_csv(res.fine));
    write_file(out_dir + "/inliers.csv", matches_csv(res.inliers));
    write_file(out_dir + "/summary.json", summary_json(res, cfg));
    write_file(out_dir + "/config.cfg", serialize_config(cfg));
    std::cout << res.keypoints.size() << " keypoints, " << res.coarse.size()
              << " coarse, " << res.converged.size() << " converged, "
              << res.inliers.size() << " inliers -> " << out_dir << "\n";
    if (res.coarse.empty() || res.converged.empty() || res.inliers.empty()) {
        std::cerr << "pipeline produced an empty match stage\n";
        return kExitDegenerate;
    }
    return kExitOk;
}

int cmd_synth(const std::string& input, const std::string& out_dir,
              const std::vector<double>& shift, const std::vector<double>& affine,
              const std::vector<std::string>& radiometric, double noise_sigma,
              std::uint64_t seed) {
    const Raster ref = load_input(input);

    AffinePair forward;
    if (!shift.empty() && !affine.empty())
        throw ParamError("--shift and --affine are mutually exclusive");
    if (!shift.empty()) {
        forward = AffinePair::shift(shift[0], shift[1]);
    } else if (!affine.empty()) {
        forward.a0 = affine[0];
        forward.a1 = affine[1];
        forward.a2 = affine[2];
        forward.b0 = affine[3];
        forward.b1 = affine[4];
        forward.b2 = affine[5];
    }

    RadiometricMap map;
    if (!radiometric.empty()) {
        map.gamma = std::stod(radiometric[0]);
        map.gain = std::stod(radiometric[1]);
        map.offset = std::stod(radiometric[2]);
        map.invert = radiometric[3] == "1" || radiometric[3] == "true";
    }

    const SyntheticPair pair = make_synthetic_pair(ref, forward, map, noise_sigma, seed);
    fs::create_directories(out_dir);
    save_png16(ref, out_dir + "/ref.png");
    save_png16(pair.target, out_dir + "/tgt.png");
    write_file(out_dir + "/truth.json", truth_json(pair));
    std::cout << "synthetic pair written to " << out_dir << "\n";
    return kExitOk;
}

int cmd_ablate(const std::string& ref_path, const std::string& tgt_path,
               const std::string& truth_path, const std::string& out_path,
               const std::vector<std::string>& metric_names, const std::vector<int>& sizes,
               const std::vector<std::string>& mode_names, PipelineConfig cfg,
               const std::string& noise_mode, const std::string& metric,
               const std::string& ms_refresh) {
    apply_enum_flags(cfg, noise_mode, metric, ms_refresh);
    if (metric_names.empty() || sizes.empty() || mode_names.empty())
        throw ParamError("ablate: metric/size/noise-mode lists must be non-empty");

    std::vector<Metric> metrics;
    for (const auto& name : metric_names)
        metrics.push_back(metric_from_string(name));
    std::vector<NoiseMode> modes;
    for (const auto& name : mode_names) {
        if (name == "off")
            modes.push_back(NoiseMode::Off);
        else if (name == "rayleigh")
            modes.push_back(NoiseMode::Rayleigh);
        else
            throw ParamError("unknown noise mode: " + name);
    }

    const Raster ref = load_input(ref_path);
    const Raster tgt = load_input(tgt_path);
    const KnownTransform truth = parse_truth_json(read_file(truth_path));
    const auto cells = run_ablation(ref, tgt, truth, metrics, sizes, modes, cfg);
    write_file(out_path, ablation_csv(cells));
    std::cout << cells.size() << " ablation cells -> " << out_path << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& matches_path, const std::string& truth_spec,
             const std::string& out_base, double threshold, std::uint64_t seed) {
    const std::vector<PointMatch> matches = parse_matches_csv(read_file(matches_path));
    if (matches.empty()) {
        std::cerr << "no matches in " << matches_path << "\n";
        return kExitDegenerate;
    }

    TruthSource truth;
    if (truth_spec == "fundamental") {
        const RansacResult rr =
            ransac_model(matches, RansacModel::Fundamental, threshold, 10000, seed);
        truth = rr.fundamental;
    } else {
        truth = parse_truth_json(read_file(truth_spec));
    }

    const EvalReport report = score_matches(matches, truth, threshold);
    write_file(out_base + ".json", eval_report_json(report));
    write_file(out_base + "_residuals.csv", residuals_csv(matches, report.residuals));
    std::cout << "ncm " << report.ncm << "/" << report.total << ", cmr " << report.cmr
              << ", rmse " << report.rmse << (report.failure ? " (failure)" : "") << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PCWLAD sub-pixel multimodal image matching"};
    app.require_subcommand(1);

    PipelineConfig cfg;
    std::string noise_mode = "off";
    std::string metric = "ssim";
    std::string ms_refresh = "each";
    std::string config_path;

    // config file first, explicit flags override it
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc)
            config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0)
            config_path = arg.substr(9);
    }
    if (!config_path.empty()) {
        try {
            cfg = load_config_file(config_path);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitIo;
        }
        noise_mode = cfg.pc.noise_mode == NoiseMode::Rayleigh ? "rayleigh" : "off";
        metric = to_string(cfg.coarse.metric);
        ms_refresh = to_string(cfg.fine.ms_refresh);
    }

    // pc
    auto* pc = app.add_subcommand("pc", "compute a phase congruency map");
    std::string pc_input, pc_out;
    pc->add_option("--input", pc_input, "input image (png/tiff/pgm or noise:WxH:SEED)")
        ->required();
    pc->add_option("--out", pc_out, "output base path (.pcw1 and .png)")->required();
    add_config_flags(pc, cfg, noise_mode, metric, ms_refresh);

    // match
    auto* match = app.add_subcommand("match", "end-to-end matching pipeline");
    std::string match_ref, match_tgt, match_out;
    match->add_option("--ref", match_ref, "reference (visible) image")->required();
    match->add_option("--tgt", match_tgt, "target image")->required();
    match->add_option("--out", match_out, "output directory")->required();
    match->add_option("--config", config_path,
                      "key=value config file; explicit flags take precedence");
    add_config_flags(match, cfg, noise_mode, metric, ms_refresh);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic pair with known truth");
    std::string synth_input, synth_out;
    std::vector<double> synth_shift, synth_affine;
    std::vector<std::string> synth_radiometric;
    double synth_noise = 0.0;
    std::uint64_t synth_seed = 42;
    synth->add_option("--input", synth_input, "input image")->required();
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--shift", synth_shift, "forward shift dx,dy (ref -> tgt)")
        ->delimiter(',')
        ->expected(2);
    synth->add_option("--affine", synth_affine, "forward a0,a1,a2,b0,b1,b2")
        ->delimiter(',')
        ->expected(6);
    synth->add_option("--radiometric", synth_radiometric, "gamma,gain,offset,invert")
        ->delimiter(',')
        ->expected(4);
    synth->add_option("--noise-sigma", synth_noise, "Gaussian noise level");
    synth->add_option("--seed", synth_seed, "noise seed");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "metric x size x noise-mode sweep");
    std::string ab_ref, ab_tgt, ab_truth, ab_out;
    std::vector<std::string> ab_metrics, ab_modes;
    std::vector<int> ab_sizes;
    ablate->add_option("--ref", ab_ref)->required();
    ablate->add_option("--tgt", ab_tgt)->required();
    ablate->add_option("--truth", ab_truth, "truth json from synth")->required();
    ablate->add_option("--out", ab_out, "output csv path")->required();
    ablate->add_option("--metrics", ab_metrics, "subset of ssd,lad,ncc,ssim")
        ->delimiter(',');
    ablate->add_option("--sizes", ab_sizes, "window sizes (odd)")->delimiter(',');
    ablate->add_option("--noise-modes", ab_modes, "subset of off,rayleigh")->delimiter(',');
    add_config_flags(ablate, cfg, noise_mode, metric, ms_refresh);

    // eval
    auto* eval = app.add_subcommand("eval", "score a matches csv against a truth source");
    std::string ev_matches, ev_truth, ev_out;
    double ev_threshold = 2.0;
    std::uint64_t ev_seed = 42;
    eval->add_option("--matches", ev_matches, "csv with ref_x,ref_y,tgt_x,tgt_y columns")
        ->required();
    eval->add_option("--truth", ev_truth, "truth json path or 'fundamental'")->required();
    eval->add_option("--out", ev_out, "output base path")->required();
    eval->add_option("--threshold", ev_threshold, "correct-match threshold (px)");
    eval->add_option("--seed", ev_seed, "RANSAC seed for --truth=fundamental");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (pc->parsed())
            return cmd_pc(pc_input, pc_out, cfg, noise_mode, metric, ms_refresh);
        if (match->parsed())
            return cmd_match(match_ref, match_tgt, match_out, cfg, noise_mode, metric,
                             ms_refresh);
        if (synth->parsed())
            return cmd_synth(synth_input, synth_out, synth_shift, synth_affine,
                             synth_radiometric, synth_noise, synth_seed);
        if (ablate->parsed())
            return cmd_ablate(ab_ref, ab_tgt, ab_truth, ab_out, ab_metrics, ab_sizes,
                              ab_modes, cfg, noise_mode, metric, ms_refresh);
        if (eval->parsed())
            return cmd_eval(ev_matches, ev_truth, ev_out, ev_threshold, ev_seed);
    } catch (const DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
