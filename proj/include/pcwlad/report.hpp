#pragma once

#include <string>
#include <vector>

#include "pcwlad/evaluate.hpp"
#include "pcwlad/pipeline.hpp"
#include "pcwlad/synth.hpp"

namespace pcwlad {

// CSV emitters; all floating-point fields use shortest round-trip formatting
// so identical runs produce byte-identical files.
std::string keypoints_csv(const std::vector<Keypoint>& kps);
std::string coarse_csv(const std::vector<CoarseMatch>& matches, Metric metric);
std::string fine_csv(const std::vector<FineMatch>& matches);
std::string matches_csv(const std::vector<PointMatch>& matches);
std::string residuals_csv(const std::vector<PointMatch>& matches,
                          const std::vector<Residual2>& residuals);
std::string ablation_csv(const std::vector<AblationCell>& cells);

/// Matches from a CSV whose first four columns are ref_x, ref_y, tgt_x, tgt_y
/// (header row required).
std::vector<PointMatch> parse_matches_csv(const std::string& text);

// JSON payloads ("schema": 1)
std::string summary_json(const PipelineResult& res, const PipelineConfig& cfg);
std::string eval_report_json(const EvalReport& report);
std::string truth_json(const SyntheticPair& pair);
KnownTransform parse_truth_json(const std::string& text);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

} // namespace pcwlad
