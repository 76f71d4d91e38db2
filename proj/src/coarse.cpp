#include "pcwlad/coarse.hpp"

#include <cmath>

#include "pcwlad/errors.hpp"

namespace pcwlad {

std::string to_string(Metric m) {
    switch (m) {
    case Metric::Ssd:
        return "ssd";
    case Metric::Lad:
        return "lad";
    case Metric::Ncc:
        return "ncc";
    case Metric::Ssim:
        return "ssim";
    }
    return "ssim";
}

Metric metric_from_string(const std::string& name) {
    if (name == "ssd")
        return Metric::Ssd;
    if (name == "lad")
        return Metric::Lad;
    if (name == "ncc")
        return Metric::Ncc;
    if (name == "ssim")
        return Metric::Ssim;
    throw ParamError("unknown metric: " + name);
}

void TemplateSpec::validate() const {
    if (template_size < 5 || template_size % 2 == 0)
        throw ParamError("template_size must be odd and >= 5");
    if (search_radius < 0)
        throw ParamError("search_radius must be >= 0");
}

namespace {

struct Moments {
    double mean_g = 0.0, mean_i = 0.0;
    double var_g = 0.0, var_i = 0.0;
    double cov = 0.0;
};

Moments window_moments(std::span<const double> g, std::span<const double> i) {
    const std::size_t n = g.size();
    double sg = 0.0, si = 0.0, sgg = 0.0, sii = 0.0, sgi = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sg += g[k];
        si += i[k];
        sgg += g[k] * g[k];
        sii += i[k] * i[k];
        sgi += g[k] * i[k];
    }
    Moments m;
    const double inv = 1.0 / static_cast<double>(n);
    m.mean_g = sg * inv;
    m.mean_i = si * inv;
    m.var_g = std::max(sgg * inv - m.mean_g * m.mean_g, 0.0);
    m.var_i = std::max(sii * inv - m.mean_i * m.mean_i, 0.0);
    m.cov = sgi * inv - m.mean_g * m.mean_i;
    return m;
}

double ssim_from_moments(const Moments& m, double c1, double c2) {
    const double lum = (2.0 * m.mean_g * m.mean_i + c1) /
                       (m.mean_g * m.mean_g + m.mean_i * m.mean_i + c1);
    const double cs = (2.0 * m.cov + c2) / (m.var_g + m.var_i + c2);
    return lum * cs;
}

} // namespace

double ssim_patch(std::span<const double> g, std::span<const double> i, double c1, double c2) {
    if (g.size() != i.size() || g.size() < 2)
        throw ParamError("ssim_patch: windows must match and hold >= 2 samples");
    return ssim_from_moments(window_moments(g, i), c1, c2);
}

double metric_score(std::span<const double> g, std::span<const double> i, Metric metric) {
    if (g.size() != i.size() || g.empty())
        throw ParamError("metric_score: windows must match and be non-empty");
    switch (metric) {
    case Metric::Ssd: {
        double s = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double d = g[k] - i[k];
            s += d * d;
        }
        return -s;
    }
    case Metric::Lad: {
        double s = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            s += std::abs(g[k] - i[k]);
        return -s;
    }
    case Metric::Ncc: {
        const Moments m = window_moments(g, i);
        const double denom = std::sqrt(m.var_g * m.var_i);
        if (denom < 1e-300)
            return 0.0;
        return m.cov / denom;
    }
    case Metric::Ssim:
        return ssim_patch(g, i);
    }
    return 0.0;
}

double TargetSums::box1(int x0, int y0, int bw, int bh) const {
    const int stride = width + 1;
    const double* t = s1.data();
    return t[(y0 + bh) * stride + (x0 + bw)] - t[(y0 + bh) * stride + x0] -
           t[y0 * stride + (x0 + bw)] + t[y0 * stride + x0];
}

double TargetSums::box2(int x0, int y0, int bw, int bh) const {
    const int stride = width + 1;
    const double* t = s2.data();
    return t[(y0 + bh) * stride + (x0 + bw)] - t[(y0 + bh) * stride + x0] -
           t[y0 * stride + (x0 + bw)] + t[y0 * stride + x0];
}

TargetSums build_target_sums(const Raster& r) {
    TargetSums s;
    s.width = r.width();
    s.height = r.height();
    const int stride = s.width + 1;
    s.s1.assign(static_cast<std::size_t>(stride) * (s.height + 1), 0.0);
    s.s2.assign(s.s1.size(), 0.0);
    for (int y = 0; y < s.height; ++y) {
        const double* src = r.row(y);
        double run1 = 0.0, run2 = 0.0;
        for (int x = 0; x < s.width; ++x) {
            run1 += src[x];
            run2 += src[x] * src[x];
            s.s1[(y + 1) * static_cast<std::size_t>(stride) + (x + 1)] =
                s.s1[y * static_cast<std::size_t>(stride) + (x + 1)] + run1;
            s.s2[(y + 1) * static_cast<std::size_t>(stride) + (x + 1)] =
                s.s2[y * static_cast<std::size_t>(stride) + (x + 1)] + run2;
        }
    }
    return s;
}

namespace {

// Metric evaluated for one candidate window using precomputed template sums
// plus the target integral images; only the cross/abs term costs O(M^2).
double candidate_score(Metric metric, const std::vector<double>& tmpl, double tmpl_sum,
                       double tmpl_sum2, const Raster& tgt, const TargetSums& sums, int m,
                       int cx0, int cy0) {
    const double n = static_cast<double>(m) * m;
    const double si = sums.box1(cx0, cy0, m, m);
    const double sii = sums.box2(cx0, cy0, m, m);

    if (metric == Metric::Lad) {
        double s = 0.0;
        const double* t = tmpl.data();
        for (int y = 0; y < m; ++y) {
            const double* row = tgt.row(cy0 + y) + cx0;
            for (int x = 0; x < m; ++x)
                s += std::abs(t[x] - row[x]);
            t += m;
        }
        return -s;
    }

    double sgi = 0.0;
    {
        const double* t = tmpl.data();
        for (int y = 0; y < m; ++y) {
            const double* row = tgt.row(cy0 + y) + cx0;
            for (int x = 0; x < m; ++x)
                sgi += t[x] * row[x];
            t += m;
        }
    }

    switch (metric) {
    case Metric::Ssd:
        return -(tmpl_sum2 - 2.0 * sgi + sii);
    case Metric::Ncc: {
        const double mg = tmpl_sum / n;
        const double mi = si / n;
        const double var_g = std::max(tmpl_sum2 / n - mg * mg, 0.0);
        const double var_i = std::max(sii / n - mi * mi, 0.0);
        const double denom = std::sqrt(var_g * var_i);
        if (denom < 1e-300)
            return 0.0;
        return (sgi / n - mg * mi) / denom;
    }
    case Metric::Ssim: {
        Moments mo;
        mo.mean_g = tmpl_sum / n;
        mo.mean_i = si / n;
        mo.var_g = std::max(tmpl_sum2 / n - mo.mean_g * mo.mean_g, 0.0);
        mo.var_i = std::max(sii / n - mo.mean_i * mo.mean_i, 0.0);
        mo.cov = sgi / n - mo.mean_g * mo.mean_i;
        return ssim_from_moments(mo, kSsimC1, kSsimC2);
    }
    default:
        return 0.0;
    }
}

} // namespace

std::optional<CoarseMatch> coarse_match(const Raster& pc_ref, const Raster& pc_tgt,
                                        const TargetSums& tgt_sums, const Keypoint& kp,
                                        const TemplateSpec& spec, int predicted_x,
                                        int predicted_y) {
    spec.validate();
    const int m = spec.template_size;
    const int half = m / 2;
    const int r = spec.search_radius;

    // template fully inside the reference
    if (kp.x - half < 0 || kp.x + half >= pc_ref.width() || kp.y - half < 0 ||
        kp.y + half >= pc_ref.height())
        return std::nullopt;
    // every candidate window fully inside the target
    if (predicted_x - r - half < 0 || predicted_x + r + half >= pc_tgt.width() ||
        predicted_y - r - half < 0 || predicted_y + r + half >= pc_tgt.height())
        return std::nullopt;

    std::vector<double> tmpl(static_cast<std::size_t>(m) * m);
    double tmpl_sum = 0.0, tmpl_sum2 = 0.0;
    for (int y = 0; y < m; ++y) {
        const double* src = pc_ref.row(kp.y - half + y) + (kp.x - half);
        double* dst = tmpl.data() + static_cast<std::size_t>(y) * m;
        for (int x = 0; x < m; ++x) {
            dst[x] = src[x];
            tmpl_sum += src[x];
            tmpl_sum2 += src[x] * src[x];
        }
    }

    bool have_best = false;
    double best_score = 0.0;
    int best_dx = 0, best_dy = 0;
    long best_d2 = 0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const int cx0 = predicted_x + dx - half;
            const int cy0 = predicted_y + dy - half;
            const double score = candidate_score(spec.metric, tmpl, tmpl_sum, tmpl_sum2,
                                                 pc_tgt, tgt_sums, m, cx0, cy0);
            const long d2 = static_cast<long>(dx) * dx + static_cast<long>(dy) * dy;
            bool better = false;
            if (!have_best || score > best_score) {
                better = true;
            } else if (score == best_score) {
                if (d2 < best_d2)
                    better = true;
                else if (d2 == best_d2 && (dy < best_dy || (dy == best_dy && dx < best_dx)))
                    better = true;
            }
            if (better) {
                have_best = true;
                best_score = score;
                best_dx = dx;
                best_dy = dy;
                best_d2 = d2;
            }
        }
    }

    CoarseMatch out;
    out.ref = kp;
    out.tgt_x = predicted_x + best_dx;
    out.tgt_y = predicted_y + best_dy;
    out.score = best_score;
    if (spec.metric == Metric::Ssim) {
        out.ssim = best_score;
    } else {
        const double ssim = candidate_score(Metric::Ssim, tmpl, tmpl_sum, tmpl_sum2, pc_tgt,
                                            tgt_sums, m, out.tgt_x - half, out.tgt_y - half);
        out.ssim = ssim;
    }
    return out;
}

} // namespace pcwlad
