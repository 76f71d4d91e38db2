#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcwlad/coarse.hpp"
#include "pcwlad/detect.hpp"
#include "pcwlad/evaluate.hpp"
#include "pcwlad/fine.hpp"
#include "pcwlad/phase_congruency.hpp"

namespace pcwlad {

struct PipelineConfig {
    PcParams pc;
    TemplateSpec coarse;
    FineConfig fine;
    int features = 1000;
    double fast_threshold = 0.05;
    int grid = 8;
    double min_score = 0.15;          // SSIM gate between coarse and fine
    double ransac_threshold = 2.0;    // pixels
    int ransac_max_trials = 10000;
    std::uint64_t seed = 42;
    int threads = 0;                  // 0 = worker_count()

    int border_margin() const {
        return std::max(coarse.template_size, fine.window_size) / 2 + 2;
    }
    void validate() const;
};

/// Flat key=value form, keys sorted; parse(serialize(c)) == c and
/// serialize(parse(s)) is a fixed point.
std::string serialize_config(const PipelineConfig& cfg);
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config_file(const std::string& path);

struct StageTimings {
    double pc_s = 0.0;
    double detect_s = 0.0;
    double coarse_s = 0.0;
    double fine_s = 0.0;
    double ransac_s = 0.0;
    double total_s = 0.0;
};

struct PipelineResult {
    PcMap pc_ref;
    PcMap pc_tgt;
    std::vector<Keypoint> keypoints;
    std::vector<CoarseMatch> coarse;      // matches that passed the score gate
    int skipped_border = 0;
    int skipped_score = 0;
    std::vector<FineMatch> fine;          // one per gated coarse match
    std::vector<FineMatch> converged;     // converged subset, keypoint order
    std::vector<PointMatch> inliers;      // converged matches kept by RANSAC
    bool ransac_ok = false;
    int ransac_trials = 0;
    AffinePair ransac_affine;
    double convergence_fraction = 0.0;    // converged / gated coarse
    StageTimings timings;
};

/// detect -> coarse (metric template search) -> fine (WLAD) -> RANSAC.
PipelineResult run_match_pipeline(const Raster& ref, const Raster& tgt,
                                  const PipelineConfig& cfg);

struct AblationCell {
    Metric metric = Metric::Ssim;
    int size = 0;
    NoiseMode noise_mode = NoiseMode::Off;
    double coarse_cmr = 0.0;   // correct rate of integer coarse matches
    double rmse = 0.0;         // fine-stage RMSE over correct matches
    double conv_rate = 0.0;    // fine NCM / coarse NCM
    int coarse_total = 0;
    int coarse_ncm = 0;
    int fine_ncm = 0;
    bool failure = false;
};

/// Full-factorial sweep; PC maps are computed once per noise mode. `size`
/// drives both the coarse template and the fine window.
std::vector<AblationCell> run_ablation(const Raster& ref, const Raster& tgt,
                                       const KnownTransform& truth,
                                       const std::vector<Metric>& metrics,
                                       const std::vector<int>& sizes,
                                       const std::vector<NoiseMode>& modes,
                                       const PipelineConfig& base);

} // namespace pcwlad
