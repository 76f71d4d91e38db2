#include "pcwlad/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "pcwlad/errors.hpp"

namespace pcwlad {

namespace {

using linalg::Mat3;

Mat3 hartley_normalization(std::span<const PointMatch> matches, bool target_side) {
    double mx = 0.0, my = 0.0;
    for (const auto& m : matches) {
        mx += target_side ? m.tgt_x : m.ref_x;
        my += target_side ? m.tgt_y : m.ref_y;
    }
    const double n = static_cast<double>(matches.size());
    mx /= n;
    my /= n;
    double mean_dist = 0.0;
    for (const auto& m : matches) {
        const double x = (target_side ? m.tgt_x : m.ref_x) - mx;
        const double y = (target_side ? m.tgt_y : m.ref_y) - my;
        mean_dist += std::hypot(x, y);
    }
    mean_dist /= n;
    if (mean_dist < 1e-12)
        throw DegenerateError("fundamental: coincident points");
    const double s = std::sqrt(2.0) / mean_dist;
    return {s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0};
}

FundamentalMatrix finalize_fundamental(Mat3 f) {
    // closest rank-2 matrix: remove the smallest right-singular direction
    const auto ftf = linalg::mat3_mul(linalg::mat3_transpose(f), f);
    const auto eig = linalg::jacobi_eigen_sym({ftf.begin(), ftf.end()}, 3);
    const std::array<double, 3> v3 = {eig.vectors[0], eig.vectors[3], eig.vectors[6]};
    const auto fv = linalg::mat3_apply(f, v3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            f[i * 3 + j] -= fv[i] * v3[j];

    const double norm = linalg::mat3_frobenius(f);
    if (norm < 1e-14)
        throw DegenerateError("fundamental: zero matrix");
    for (double& v : f)
        v /= norm;
    // deterministic sign: largest-magnitude entry positive
    int arg = 0;
    for (int i = 1; i < 9; ++i)
        if (std::abs(f[i]) > std::abs(f[arg]))
            arg = i;
    if (f[arg] < 0.0)
        for (double& v : f)
            v = -v;
    return FundamentalMatrix{f};
}

double affine_error(const AffinePair& t, const PointMatch& m) {
    auto [px, py] = t.apply(m.ref_x, m.ref_y);
    return std::hypot(m.tgt_x - px, m.tgt_y - py);
}

double fundamental_error(const FundamentalMatrix& f, const PointMatch& m) {
    auto r = epipolar_residual(f, m);
    if (!r)
        return std::numeric_limits<double>::infinity();
    return r->norm();
}

} // namespace

AffinePair fit_affine_lsq(std::span<const PointMatch> matches) {
    if (matches.size() < 3)
        throw DegenerateError("affine fit needs >= 3 matches");
    // normal equations of [1 x y] for both coordinate systems
    double s[6] = {static_cast<double>(matches.size()), 0, 0, 0, 0, 0};
    double bx[3] = {0, 0, 0}, by[3] = {0, 0, 0};
    for (const auto& m : matches) {
        s[1] += m.ref_x;
        s[2] += m.ref_y;
        s[3] += m.ref_x * m.ref_x;
        s[4] += m.ref_x * m.ref_y;
        s[5] += m.ref_y * m.ref_y;
        bx[0] += m.tgt_x;
        bx[1] += m.tgt_x * m.ref_x;
        bx[2] += m.tgt_x * m.ref_y;
        by[0] += m.tgt_y;
        by[1] += m.tgt_y * m.ref_x;
        by[2] += m.tgt_y * m.ref_y;
    }
    const std::vector<double> a = {s[0], s[1], s[2], s[1], s[3], s[4], s[2], s[4], s[5]};
    std::vector<double> cx = {bx[0], bx[1], bx[2]};
    std::vector<double> cy = {by[0], by[1], by[2]};
    std::vector<double> a1 = a, a2 = a;
    if (!linalg::cholesky_solve(a1, cx, 3) || !linalg::cholesky_solve(a2, cy, 3))
        throw DegenerateError("affine fit: collinear points");
    AffinePair t;
    t.a0 = cx[0];
    t.a1 = cx[1];
    t.a2 = cx[2];
    t.b0 = cy[0];
    t.b1 = cy[1];
    t.b2 = cy[2];
    return t;
}

FundamentalMatrix fit_fundamental_8point(std::span<const PointMatch> matches) {
    if (matches.size() < 8)
        throw DegenerateError("fundamental fit needs >= 8 matches");
    const Mat3 t1 = hartley_normalization(matches, false);
    const Mat3 t2 = hartley_normalization(matches, true);

    // accumulate A^T A over rows [x2x1, x2y1, x2, y2x1, y2y1, y2, x1, y1, 1]
    std::vector<double> ata(81, 0.0);
    for (const auto& m : matches) {
        const auto p1 = linalg::mat3_apply(t1, {m.ref_x, m.ref_y, 1.0});
        const auto p2 = linalg::mat3_apply(t2, {m.tgt_x, m.tgt_y, 1.0});
        const double row[9] = {p2[0] * p1[0], p2[0] * p1[1], p2[0],
                               p2[1] * p1[0], p2[1] * p1[1], p2[1],
                               p1[0],         p1[1],         1.0};
        for (int i = 0; i < 9; ++i)
            for (int j = 0; j < 9; ++j)
                ata[i * 9 + j] += row[i] * row[j];
    }
    const auto eig = linalg::jacobi_eigen_sym(ata, 9);
    // the two smallest eigenvalues coinciding means the sample is degenerate
    if (eig.values[1] < 1e-12 * std::max(eig.values[8], 1.0))
        throw DegenerateError("fundamental: degenerate configuration");
    Mat3 f{};
    for (int i = 0; i < 9; ++i)
        f[i] = eig.vectors[static_cast<std::size_t>(i) * 9]; // first column
    const Mat3 denorm = linalg::mat3_mul(linalg::mat3_transpose(t2), linalg::mat3_mul(f, t1));
    return finalize_fundamental(denorm);
}

RansacResult ransac_model(std::span<const PointMatch> matches, RansacModel model,
                          double threshold_px, int max_trials, std::uint64_t seed) {
    const std::size_t sample_size = model == RansacModel::Affine ? 3 : 8;
    if (matches.size() < sample_size)
        throw DegenerateError("ransac: not enough matches for the model");
    if (threshold_px <= 0.0)
        throw ParamError("ransac: threshold must be positive");
    if (max_trials < 1)
        throw ParamError("ransac: max_trials must be >= 1");

    std::mt19937_64 rng(seed);
    const int n = static_cast<int>(matches.size());

    RansacResult best;
    best.model = model;
    best.inlier_mask.assign(matches.size(), 0);
    double best_error_sum = 0.0;

    auto model_error = [&](const RansacResult& r, const PointMatch& m) {
        return model == RansacModel::Affine ? affine_error(r.affine, m)
                                            : fundamental_error(r.fundamental, m);
    };

    std::vector<PointMatch> sample(sample_size);
    std::vector<int> idx(sample_size);
    int needed_trials = max_trials;
    int trial = 0;
    for (; trial < needed_trials; ++trial) {
        // sample distinct indices
        for (std::size_t k = 0; k < sample_size; ++k) {
            while (true) {
                const int cand = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
                bool dup = false;
                for (std::size_t j = 0; j < k; ++j)
                    if (idx[j] == cand)
                        dup = true;
                if (!dup) {
                    idx[k] = cand;
                    break;
                }
            }
            sample[k] = matches[idx[k]];
        }

        RansacResult cand;
        cand.model = model;
        try {
            if (model == RansacModel::Affine)
                cand.affine = fit_affine_lsq(sample);
            else
                cand.fundamental = fit_fundamental_8point(sample);
        } catch (const DegenerateError&) {
            continue; // collinear or coincident sample, draw again
        }

        int count = 0;
        double error_sum = 0.0;
        cand.inlier_mask.assign(matches.size(), 0);
        for (int i = 0; i < n; ++i) {
            const double e = model_error(cand, matches[i]);
            if (e < threshold_px) {
                cand.inlier_mask[i] = 1;
                ++count;
                error_sum += e;
            }
        }
        if (count > best.inlier_count ||
            (count == best.inlier_count && count > 0 && error_sum < best_error_sum)) {
            best = cand;
            best.inlier_count = count;
            best_error_sum = error_sum;
            // adaptive trial bound at 99.9% confidence
            const double w = static_cast<double>(count) / n;
            const double p_all = std::pow(w, static_cast<double>(sample_size));
            if (p_all > 1e-12 && p_all < 1.0) {
                const int bound =
                    static_cast<int>(std::ceil(std::log(1.0 - 0.999) / std::log(1.0 - p_all)));
                needed_trials = std::clamp(bound, trial + 1, max_trials);
            } else if (p_all >= 1.0) {
                needed_trials = trial + 1;
            }
        }
    }
    best.trials = trial;

    if (best.inlier_count >= static_cast<int>(sample_size)) {
        // refit on the consensus set
        std::vector<PointMatch> inliers;
        inliers.reserve(best.inlier_count);
        for (int i = 0; i < n; ++i)
            if (best.inlier_mask[i])
                inliers.push_back(matches[i]);
        try {
            if (model == RansacModel::Affine)
                best.affine = fit_affine_lsq(inliers);
            else
                best.fundamental = fit_fundamental_8point(inliers);
            // refresh the mask under the refit model
            int count = 0;
            for (int i = 0; i < n; ++i) {
                const double e = model_error(best, matches[i]);
                best.inlier_mask[i] = e < threshold_px ? 1 : 0;
                count += best.inlier_mask[i];
            }
            best.inlier_count = count;
        } catch (const DegenerateError&) {
            // keep the minimal-sample model
        }
    }
    if (best.inlier_count == 0)
        throw DegenerateError("ransac: no consensus found");
    return best;
}

double Residual2::norm() const {
    return std::hypot(x, y);
}

std::optional<Residual2> epipolar_residual(const FundamentalMatrix& f, const PointMatch& m) {
    const auto line = linalg::mat3_apply(f.m, {m.ref_x, m.ref_y, 1.0});
    const double nn = line[0] * line[0] + line[1] * line[1];
    if (nn < 1e-24)
        return std::nullopt;
    const double signed_dist =
        (line[0] * m.tgt_x + line[1] * m.tgt_y + line[2]) / nn;
    return Residual2{signed_dist * line[0], signed_dist * line[1]};
}

EvalReport score_matches(std::span<const PointMatch> matches, const TruthSource& truth,
                         double ncm_threshold) {
    if (matches.empty())
        throw DegenerateError("score_matches: empty match list");

    EvalReport report;
    report.total = static_cast<int>(matches.size());
    report.residuals.reserve(matches.size());

    const auto residual_of = [&](const PointMatch& m) -> std::optional<Residual2> {
        if (const auto* kt = std::get_if<KnownTransform>(&truth)) {
            auto [px, py] = kt->forward.apply(m.ref_x, m.ref_y);
            return Residual2{m.tgt_x - px, m.tgt_y - py};
        }
        if (const auto* f = std::get_if<FundamentalMatrix>(&truth))
            return epipolar_residual(*f, m);
        const auto& pts = std::get<GroundTruthPoints>(truth).points;
        for (const auto& p : pts)
            if (p.ref_x == m.ref_x && p.ref_y == m.ref_y)
                return Residual2{m.tgt_x - p.tgt_x, m.tgt_y - p.tgt_y};
        return std::nullopt;
    };

    double sq_sum = 0.0;
    for (const auto& m : matches) {
        const auto r = residual_of(m);
        if (!r) {
            report.residuals.push_back(
                {std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN()});
            continue; // degenerate line / missing truth point: excluded
        }
        report.residuals.push_back(*r);
        const double mag = r->norm();
        if (mag < ncm_threshold) {
            ++report.ncm;
            sq_sum += mag * mag;
        }
    }

    report.cmr = static_cast<double>(report.ncm) / report.total;
    if (report.ncm > 0)
        report.rmse = std::sqrt(sq_sum / report.ncm);
    report.failure = report.ncm == 0 || report.rmse > 2.0;
    return report;
}

double convergence_rate(int coarse_ncm, int fine_ncm) {
    if (coarse_ncm < 0 || fine_ncm < 0)
        throw ParamError("convergence_rate: counts must be non-negative");
    const double rate = static_cast<double>(fine_ncm) / std::max(coarse_ncm, 1);
    if (rate > 1.0 || coarse_ncm == 0)
        std::fprintf(stderr,
                     "warning: convergence rate clamped (coarse ncm %d, fine ncm %d)\n",
                     coarse_ncm, fine_ncm);
    return std::clamp(rate, 0.0, 1.0);
}

} // namespace pcwlad
