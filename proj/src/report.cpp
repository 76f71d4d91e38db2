#include "pcwlad/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pcwlad/errors.hpp"

namespace pcwlad {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

std::string keypoints_csv(const std::vector<Keypoint>& kps) {
    std::string out = "x,y,score\n";
    for (const auto& k : kps)
        out += std::to_string(k.x) + "," + std::to_string(k.y) + "," + fmt(k.score) + "\n";
    return out;
}

std::string coarse_csv(const std::vector<CoarseMatch>& matches, Metric metric) {
    std::string out = "ref_x,ref_y,tgt_x,tgt_y,metric,score\n";
    const std::string name = to_string(metric);
    for (const auto& m : matches)
        out += std::to_string(m.ref.x) + "," + std::to_string(m.ref.y) + "," +
               std::to_string(m.tgt_x) + "," + std::to_string(m.tgt_y) + "," + name + "," +
               fmt(m.score) + "\n";
    return out;
}

std::string fine_csv(const std::vector<FineMatch>& matches) {
    std::string out =
        "ref_x,ref_y,tgt_x,tgt_y,r0,r1,a1,a2,b1,b2,iterations,converged,final_ssim\n";
    for (const auto& m : matches) {
        const auto& p = m.params;
        out += std::to_string(m.ref.x) + "," + std::to_string(m.ref.y) + "," + fmt(m.tgt_x) +
               "," + fmt(m.tgt_y) + "," + fmt(p.r0) + "," + fmt(p.r1) + "," + fmt(p.a1) +
               "," + fmt(p.a2) + "," + fmt(p.b1) + "," + fmt(p.b2) + "," +
               std::to_string(m.iterations) + "," + (m.converged ? "1" : "0") + "," +
               fmt(m.final_ssim) + "\n";
    }
    return out;
}

std::string matches_csv(const std::vector<PointMatch>& matches) {
    std::string out = "ref_x,ref_y,tgt_x,tgt_y\n";
    for (const auto& m : matches)
        out += fmt(m.ref_x) + "," + fmt(m.ref_y) + "," + fmt(m.tgt_x) + "," + fmt(m.tgt_y) +
               "\n";
    return out;
}

std::string residuals_csv(const std::vector<PointMatch>& matches,
                          const std::vector<Residual2>& residuals) {
    if (matches.size() != residuals.size())
        throw ParamError("residuals_csv: size mismatch");
    std::string out = "ref_x,ref_y,tgt_x,tgt_y,rx,ry\n";
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const auto& m = matches[i];
        out += fmt(m.ref_x) + "," + fmt(m.ref_y) + "," + fmt(m.tgt_x) + "," + fmt(m.tgt_y) +
               "," + fmt(residuals[i].x) + "," + fmt(residuals[i].y) + "\n";
    }
    return out;
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
    std::string out = "metric,size,noise_mode,cmr,rmse,convergence_rate\n";
    for (const auto& c : cells)
        out += to_string(c.metric) + "," + std::to_string(c.size) + "," +
               (c.noise_mode == NoiseMode::Rayleigh ? "rayleigh" : "off") + "," +
               fmt(c.coarse_cmr) + "," + fmt(c.rmse) + "," + fmt(c.conv_rate) + "\n";
    return out;
}

std::vector<PointMatch> parse_matches_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("matches csv: empty file");
    std::vector<PointMatch> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream row(line);
        PointMatch m;
        char sep = 0;
        if (!(row >> m.ref_x >> sep >> m.ref_y >> sep >> m.tgt_x >> sep >> m.tgt_y))
            throw FormatError("matches csv: malformed line " + std::to_string(lineno));
        out.push_back(m);
    }
    return out;
}

std::string summary_json(const PipelineResult& res, const PipelineConfig& cfg) {
    json j;
    j["schema"] = 1;
    j["seed"] = cfg.seed;
    j["counts"] = {{"keypoints", res.keypoints.size()},
                   {"coarse", res.coarse.size()},
                   {"skipped_border", res.skipped_border},
                   {"skipped_score", res.skipped_score},
                   {"fine", res.fine.size()},
                   {"converged", res.converged.size()},
                   {"inliers", res.inliers.size()}};
    j["convergence_rate"] = res.convergence_fraction;
    j["ransac"] = {{"ok", res.ransac_ok}, {"trials", res.ransac_trials}};
    j["timings_s"] = {{"pc", res.timings.pc_s},
                      {"detect", res.timings.detect_s},
                      {"coarse", res.timings.coarse_s},
                      {"fine", res.timings.fine_s},
                      {"ransac", res.timings.ransac_s},
                      {"total", res.timings.total_s}};
    j["config"] = {{"metric", to_string(cfg.coarse.metric)},
                   {"template_size", cfg.coarse.template_size},
                   {"window_size", cfg.fine.window_size},
                   {"features", cfg.features},
                   {"noise_mode",
                    cfg.pc.noise_mode == NoiseMode::Rayleigh ? "rayleigh" : "off"}};
    return j.dump(2) + "\n";
}

std::string eval_report_json(const EvalReport& report) {
    json j;
    j["schema"] = 1;
    j["total"] = report.total;
    j["ncm"] = report.ncm;
    j["cmr"] = report.cmr;
    j["rmse"] = report.rmse;
    j["failure"] = report.failure;
    return j.dump(2) + "\n";
}

std::string truth_json(const SyntheticPair& pair) {
    json j;
    j["schema"] = 1;
    j["forward"] = {pair.forward.a0, pair.forward.a1, pair.forward.a2,
                    pair.forward.b0, pair.forward.b1, pair.forward.b2};
    j["radiometric"] = {{"gamma", pair.radiometric.gamma},
                        {"gain", pair.radiometric.gain},
                        {"offset", pair.radiometric.offset},
                        {"invert", pair.radiometric.invert}};
    j["noise_sigma"] = pair.noise_sigma;
    j["seed"] = pair.seed;
    return j.dump(2) + "\n";
}

KnownTransform parse_truth_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("truth json: ") + e.what());
    }
    if (!j.contains("forward") || !j["forward"].is_array() || j["forward"].size() != 6)
        throw FormatError("truth json: missing 6-element 'forward' array");
    KnownTransform t;
    t.forward.a0 = j["forward"][0].get<double>();
    t.forward.a1 = j["forward"][1].get<double>();
    t.forward.a2 = j["forward"][2].get<double>();
    t.forward.b0 = j["forward"][3].get<double>();
    t.forward.b1 = j["forward"][4].get<double>();
    t.forward.b2 = j["forward"][5].get<double>();
    return t;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw IoError("failed to write " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace pcwlad
