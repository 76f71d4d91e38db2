#include "pcwlad/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "pcwlad/errors.hpp"
#include "pcwlad/parallel.hpp"

namespace pcwlad {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void PipelineConfig::validate() const {
    pc.validate();
    coarse.validate();
    fine.validate();
    if (features < 1)
        throw ParamError("features must be >= 1");
    if (fast_threshold <= 0.0)
        throw ParamError("fast_threshold must be positive");
    if (grid < 1)
        throw ParamError("grid must be >= 1");
    if (ransac_threshold <= 0.0)
        throw ParamError("ransac_threshold must be positive");
    if (ransac_max_trials < 1)
        throw ParamError("ransac_max_trials must be >= 1");
    if (threads < 0)
        throw ParamError("threads must be >= 0");
}

std::string serialize_config(const PipelineConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["epsilon"] = format_double(cfg.pc.epsilon);
    kv["fast-threshold"] = format_double(cfg.fast_threshold);
    kv["features"] = std::to_string(cfg.features);
    kv["grid"] = std::to_string(cfg.grid);
    kv["k-noise"] = format_double(cfg.pc.k_noise);
    kv["max-iters"] = std::to_string(cfg.fine.max_iters);
    kv["metric"] = to_string(cfg.coarse.metric);
    kv["min-score"] = format_double(cfg.min_score);
    kv["min-wavelength"] = format_double(cfg.pc.min_wavelength);
    kv["ms-patch"] = std::to_string(cfg.fine.ms_patch);
    kv["ms-refresh"] = to_string(cfg.fine.ms_refresh);
    kv["noise-mode"] = cfg.pc.noise_mode == NoiseMode::Rayleigh ? "rayleigh" : "off";
    kv["orientations"] = std::to_string(cfg.pc.n_orientations);
    kv["ransac-max-trials"] = std::to_string(cfg.ransac_max_trials);
    kv["ransac-threshold"] = format_double(cfg.ransac_threshold);
    kv["scale-mult"] = format_double(cfg.pc.scale_mult);
    kv["scales"] = std::to_string(cfg.pc.n_scales);
    kv["search-radius"] = std::to_string(cfg.coarse.search_radius);
    kv["seed"] = std::to_string(cfg.seed);
    kv["shift-tol"] = format_double(cfg.fine.shift_tol);
    kv["sigma-on-f"] = format_double(cfg.pc.sigma_on_f);
    kv["ssim-gate"] = format_double(cfg.fine.ssim_gate);
    kv["template-size"] = std::to_string(cfg.coarse.template_size);
    kv["threads"] = std::to_string(cfg.threads);
    kv["window-size"] = std::to_string(cfg.fine.window_size);

    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParamError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "epsilon")
                cfg.pc.epsilon = std::stod(value);
            else if (key == "fast-threshold")
                cfg.fast_threshold = std::stod(value);
            else if (key == "features")
                cfg.features = std::stoi(value);
            else if (key == "grid")
                cfg.grid = std::stoi(value);
            else if (key == "k-noise")
                cfg.pc.k_noise = std::stod(value);
            else if (key == "max-iters")
                cfg.fine.max_iters = std::stoi(value);
            else if (key == "metric")
                cfg.coarse.metric = metric_from_string(value);
            else if (key == "min-score")
                cfg.min_score = std::stod(value);
            else if (key == "min-wavelength")
                cfg.pc.min_wavelength = std::stod(value);
            else if (key == "ms-patch")
                cfg.fine.ms_patch = std::stoi(value);
            else if (key == "ms-refresh")
                cfg.fine.ms_refresh = ms_refresh_from_string(value);
            else if (key == "noise-mode")
                cfg.pc.noise_mode = value == "rayleigh" ? NoiseMode::Rayleigh : NoiseMode::Off;
            else if (key == "orientations")
                cfg.pc.n_orientations = std::stoi(value);
            else if (key == "ransac-max-trials")
                cfg.ransac_max_trials = std::stoi(value);
            else if (key == "ransac-threshold")
                cfg.ransac_threshold = std::stod(value);
            else if (key == "scale-mult")
                cfg.pc.scale_mult = std::stod(value);
            else if (key == "scales")
                cfg.pc.n_scales = std::stoi(value);
            else if (key == "search-radius")
                cfg.coarse.search_radius = std::stoi(value);
            else if (key == "seed")
                cfg.seed = std::stoull(value);
            else if (key == "shift-tol")
                cfg.fine.shift_tol = std::stod(value);
            else if (key == "sigma-on-f")
                cfg.pc.sigma_on_f = std::stod(value);
            else if (key == "ssim-gate")
                cfg.fine.ssim_gate = std::stod(value);
            else if (key == "template-size")
                cfg.coarse.template_size = std::stoi(value);
            else if (key == "threads")
                cfg.threads = std::stoi(value);
            else if (key == "window-size")
                cfg.fine.window_size = std::stoi(value);
            else
                throw ParamError("config: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw ParamError("config: bad value for '" + key + "'");
        } catch (const std::out_of_range&) {
            throw ParamError("config: value out of range for '" + key + "'");
        }
    }
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

PipelineResult run_match_pipeline(const Raster& ref, const Raster& tgt,
                                  const PipelineConfig& cfg) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    PipelineResult res;

    auto t0 = std::chrono::steady_clock::now();
    res.pc_ref = compute_pc(ref, cfg.pc);
    res.pc_tgt = compute_pc(tgt, cfg.pc);
    res.timings.pc_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    res.keypoints = detect_fast(res.pc_ref.pc, cfg.features, cfg.fast_threshold, cfg.grid,
                                cfg.border_margin());
    res.timings.detect_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const TargetSums sums = build_target_sums(res.pc_tgt.pc);
    const int n_kp = static_cast<int>(res.keypoints.size());
    std::vector<std::optional<CoarseMatch>> coarse_slots(n_kp);
    parallel_for(
        0, n_kp,
        [&](int i) {
            const Keypoint& kp = res.keypoints[i];
            coarse_slots[i] = coarse_match(res.pc_ref.pc, res.pc_tgt.pc, sums, kp,
                                           cfg.coarse, kp.x, kp.y);
        },
        cfg.threads);
    for (auto& slot : coarse_slots) {
        if (!slot) {
            ++res.skipped_border;
        } else if (slot->ssim < cfg.min_score) {
            ++res.skipped_score;
        } else {
            res.coarse.push_back(*slot);
        }
    }
    res.timings.coarse_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    auto [tgt_gx, tgt_gy] = gradient_central(res.pc_tgt.pc);
    const int n_coarse = static_cast<int>(res.coarse.size());
    res.fine.resize(n_coarse);
    parallel_for(
        0, n_coarse,
        [&](int i) {
            res.fine[i] =
                refine(res.coarse[i], res.pc_ref.pc, res.pc_tgt.pc, tgt_gx, tgt_gy, cfg.fine);
        },
        cfg.threads);
    for (const FineMatch& fm : res.fine)
        if (fm.converged)
            res.converged.push_back(fm);
    res.convergence_fraction =
        n_coarse > 0 ? static_cast<double>(res.converged.size()) / n_coarse : 0.0;
    res.timings.fine_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    if (res.converged.size() >= 3) {
        std::vector<PointMatch> candidates;
        candidates.reserve(res.converged.size());
        for (const FineMatch& fm : res.converged)
            candidates.push_back({static_cast<double>(fm.ref.x),
                                  static_cast<double>(fm.ref.y), fm.tgt_x, fm.tgt_y});
        try {
            const RansacResult rr = ransac_model(candidates, RansacModel::Affine,
                                                 cfg.ransac_threshold,
                                                 cfg.ransac_max_trials, cfg.seed);
            res.ransac_ok = true;
            res.ransac_trials = rr.trials;
            res.ransac_affine = rr.affine;
            for (std::size_t i = 0; i < candidates.size(); ++i)
                if (rr.inlier_mask[i])
                    res.inliers.push_back(candidates[i]);
        } catch (const DegenerateError&) {
            res.ransac_ok = false;
        }
    }
    res.timings.ransac_s = seconds_since(t0);
    res.timings.total_s = seconds_since(t_start);
    return res;
}

std::vector<AblationCell> run_ablation(const Raster& ref, const Raster& tgt,
                                       const KnownTransform& truth,
                                       const std::vector<Metric>& metrics,
                                       const std::vector<int>& sizes,
                                       const std::vector<NoiseMode>& modes,
                                       const PipelineConfig& base) {
    if (metrics.empty() || sizes.empty() || modes.empty())
        throw ParamError("ablation: metric, size and noise-mode lists must be non-empty");

    std::vector<AblationCell> cells;
    for (NoiseMode mode : modes) {
        PipelineConfig cfg = base;
        cfg.pc.noise_mode = mode;
        const PcMap pc_ref = compute_pc(ref, cfg.pc);
        const PcMap pc_tgt = compute_pc(tgt, cfg.pc);
        const TargetSums sums = build_target_sums(pc_tgt.pc);
        auto [tgt_gx, tgt_gy] = gradient_central(pc_tgt.pc);

        for (int size : sizes) {
            if (size < 9 || size % 2 == 0)
                throw ParamError("ablation: sizes must be odd and >= 9");
            cfg.coarse.template_size = size;
            cfg.fine.window_size = size;
            const std::vector<Keypoint> kps = detect_fast(
                pc_ref.pc, cfg.features, cfg.fast_threshold, cfg.grid, cfg.border_margin());

            for (Metric metric : metrics) {
                cfg.coarse.metric = metric;
                AblationCell cell;
                cell.metric = metric;
                cell.size = size;
                cell.noise_mode = mode;

                const int n_kp = static_cast<int>(kps.size());
                std::vector<std::optional<CoarseMatch>> slots(n_kp);
                parallel_for(
                    0, n_kp,
                    [&](int i) {
                        slots[i] = coarse_match(pc_ref.pc, pc_tgt.pc, sums, kps[i],
                                                cfg.coarse, kps[i].x, kps[i].y);
                    },
                    cfg.threads);

                std::vector<CoarseMatch> gated;
                std::vector<PointMatch> coarse_points;
                for (const auto& slot : slots) {
                    if (!slot)
                        continue;
                    coarse_points.push_back({static_cast<double>(slot->ref.x),
                                             static_cast<double>(slot->ref.y),
                                             static_cast<double>(slot->tgt_x),
                                             static_cast<double>(slot->tgt_y)});
                    if (slot->ssim >= base.min_score)
                        gated.push_back(*slot);
                }
                cell.coarse_total = static_cast<int>(coarse_points.size());
                if (coarse_points.empty()) {
                    cell.failure = true;
                    cells.push_back(cell);
                    continue;
                }
                const EvalReport coarse_report =
                    score_matches(coarse_points, TruthSource{truth});
                cell.coarse_ncm = coarse_report.ncm;
                cell.coarse_cmr = coarse_report.cmr;

                const int n_gated = static_cast<int>(gated.size());
                std::vector<FineMatch> fine(n_gated);
                parallel_for(
                    0, n_gated,
                    [&](int i) {
                        fine[i] = refine(gated[i], pc_ref.pc, pc_tgt.pc, tgt_gx, tgt_gy,
                                         cfg.fine);
                    },
                    cfg.threads);

                std::vector<PointMatch> fine_points;
                for (const FineMatch& fm : fine)
                    if (fm.converged)
                        fine_points.push_back({static_cast<double>(fm.ref.x),
                                               static_cast<double>(fm.ref.y), fm.tgt_x,
                                               fm.tgt_y});
                if (!fine_points.empty()) {
                    const EvalReport fine_report =
                        score_matches(fine_points, TruthSource{truth});
                    cell.fine_ncm = fine_report.ncm;
                    cell.rmse = fine_report.rmse;
                    cell.failure = fine_report.failure;
                } else {
                    cell.failure = true;
                }
                cell.conv_rate = convergence_rate(cell.coarse_ncm, cell.fine_ncm);
                cells.push_back(cell);
            }
        }
    }
    return cells;
}

} // namespace pcwlad
