#include "pcwlad/fine.hpp"

#include <algorithm>
#include <cmath>

#include "pcwlad/errors.hpp"
#include "pcwlad/linalg.hpp"

namespace pcwlad {

namespace {

constexpr double kVarFloor = 1e-15;   // below this a patch counts as flat
constexpr double kMedianFloor = 1e-12;
constexpr int kIrlsItersPerStep = 4;  // inner IRLS passes per refine iteration
constexpr double kIrlsTol = 1e-10;

struct PatchStats {
    double var_g = 0.0, var_i = 0.0, cov = 0.0;
};

double ms_from_stats(PatchStats s) {
    // variances at rounding-noise level are genuinely flat patches
    if (s.var_g <= kVarFloor)
        s.var_g = 0.0;
    if (s.var_i <= kVarFloor)
        s.var_i = 0.0;
    if (s.var_g == 0.0 && s.var_i == 0.0)
        return 0.0;
    const double res_g = s.var_g - (s.var_i > 0.0 ? s.cov * s.cov / s.var_i : 0.0);
    const double res_i = s.var_i - (s.var_g > 0.0 ? s.cov * s.cov / s.var_g : 0.0);
    return std::max(res_g + res_i, 0.0);
}

} // namespace

std::string to_string(MsRefresh m) {
    return m == MsRefresh::Once ? "once" : "each";
}

MsRefresh ms_refresh_from_string(const std::string& name) {
    if (name == "once")
        return MsRefresh::Once;
    if (name == "each")
        return MsRefresh::Each;
    throw ParamError("unknown ms-refresh mode: " + name);
}

void FineConfig::validate() const {
    if (window_size < 9 || window_size % 2 == 0)
        throw ParamError("fine window_size must be odd and >= 9");
    if (ms_patch < 3 || ms_patch % 2 == 0)
        throw ParamError("ms_patch must be odd and >= 3");
    if (max_iters < 1)
        throw ParamError("max_iters must be >= 1");
    if (!(shift_tol > 0.0))
        throw ParamError("shift_tol must be positive");
}

double mutual_structure(std::span<const double> g, std::span<const double> i) {
    if (g.size() != i.size() || g.size() < 4)
        throw ParamError("mutual_structure: patches must match and hold >= 4 samples");
    const double n = static_cast<double>(g.size());
    double sg = 0.0, si = 0.0, sgg = 0.0, sii = 0.0, sgi = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        sg += g[k];
        si += i[k];
        sgg += g[k] * g[k];
        sii += i[k] * i[k];
        sgi += g[k] * i[k];
    }
    PatchStats s;
    const double mg = sg / n, mi = si / n;
    s.var_g = std::max(sgg / n - mg * mg, 0.0);
    s.var_i = std::max(sii / n - mi * mi, 0.0);
    s.cov = sgi / n - mg * mi;
    return ms_from_stats(s);
}

namespace {

// integral image with a leading zero row/column
std::vector<double> sat(const Raster& r, bool squared, const Raster* other = nullptr) {
    const int w = r.width(), h = r.height();
    std::vector<double> s(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        const double* a = r.row(y);
        const double* b = other ? other->row(y) : nullptr;
        double run = 0.0;
        for (int x = 0; x < w; ++x) {
            run += b ? a[x] * b[x] : (squared ? a[x] * a[x] : a[x]);
            s[(y + 1) * static_cast<std::size_t>(w + 1) + (x + 1)] =
                s[y * static_cast<std::size_t>(w + 1) + (x + 1)] + run;
        }
    }
    return s;
}

inline double box(const std::vector<double>& s, int stride, int x0, int y0, int size) {
    return s[(y0 + size) * static_cast<std::size_t>(stride) + (x0 + size)] -
           s[(y0 + size) * static_cast<std::size_t>(stride) + x0] -
           s[y0 * static_cast<std::size_t>(stride) + (x0 + size)] +
           s[y0 * static_cast<std::size_t>(stride) + x0];
}

} // namespace

Raster structure_weights(const Raster& g_win, const Raster& i_win, int ms_patch) {
    if (g_win.width() != i_win.width() || g_win.height() != i_win.height())
        throw ParamError("structure_weights: window sizes differ");
    if (ms_patch < 3 || ms_patch % 2 == 0)
        throw ParamError("structure_weights: ms_patch must be odd and >= 3");
    const int w = g_win.width(), h = g_win.height();
    if (w < ms_patch || h < ms_patch)
        throw ParamError("structure_weights: window smaller than ms_patch");
    const int half = ms_patch / 2;
    const double np = static_cast<double>(ms_patch) * ms_patch;
    const int stride = w + 1;

    const auto s_g = sat(g_win, false);
    const auto s_i = sat(i_win, false);
    const auto s_gg = sat(g_win, true);
    const auto s_ii = sat(i_win, true);
    const auto s_gi = sat(g_win, false, &i_win);

    // per-pixel patch MS, patches slid inward at the window border
    Raster ms(w, h);
    for (int y = 0; y < h; ++y) {
        const int cy = std::clamp(y, half, h - 1 - half) - half;
        for (int x = 0; x < w; ++x) {
            const int cx = std::clamp(x, half, w - 1 - half) - half;
            PatchStats st;
            const double mg = box(s_g, stride, cx, cy, ms_patch) / np;
            const double mi = box(s_i, stride, cx, cy, ms_patch) / np;
            st.var_g = std::max(box(s_gg, stride, cx, cy, ms_patch) / np - mg * mg, 0.0);
            st.var_i = std::max(box(s_ii, stride, cx, cy, ms_patch) / np - mi * mi, 0.0);
            st.cov = box(s_gi, stride, cx, cy, ms_patch) / np - mg * mi;
            double v = ms_from_stats(st);
            // summed-area cancellation leaves ~1e-13 residue on perfectly
            // linear windows; PC-scale structure sits many orders above this
            if (v < 1e-12)
                v = 0.0;
            ms.at(x, y) = v;
        }
    }

    // neighborhood mean of MS with the same sliding window
    const auto s_ms = sat(ms, false);
    Raster ms_mean(w, h);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const int cy = std::clamp(y, half, h - 1 - half) - half;
        for (int x = 0; x < w; ++x) {
            const int cx = std::clamp(x, half, w - 1 - half) - half;
            const double m = box(s_ms, stride, cx, cy, ms_patch) / np;
            ms_mean.at(x, y) = m;
            values.push_back(m);
        }
    }

    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double scale = std::max(values[mid], kMedianFloor);

    Raster weights(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            weights.at(x, y) = 1.0 / (1.0 + ms_mean.at(x, y) / scale);
    return weights;
}

std::optional<WarpedWindow> sample_warped_window(const Raster& tgt, const Raster& tgt_gx,
                                                 const Raster& tgt_gy,
                                                 const TransformParams& params,
                                                 double center_x, double center_y,
                                                 int window_size) {
    const int half = window_size / 2;
    WarpedWindow w;
    w.size = window_size;
    const std::size_t n = static_cast<std::size_t>(window_size) * window_size;
    w.value.resize(n);
    w.grad_x.resize(n);
    w.grad_y.resize(n);
    w.model.resize(n);

    std::size_t idx = 0;
    for (int yy = -half; yy <= half; ++yy) {
        for (int xx = -half; xx <= half; ++xx, ++idx) {
            const double fx = params.a0 + params.a1 * xx + params.a2 * yy;
            const double fy = params.b0 + params.b1 * xx + params.b2 * yy;
            const double sx = center_x + fx;
            const double sy = center_y + fy;
            if (!in_bicubic_support(tgt, sx, sy))
                return std::nullopt;
            const double v = sample_bicubic(tgt, sx, sy);
            w.value[idx] = v;
            w.grad_x[idx] = sample_bicubic(tgt_gx, sx, sy);
            w.grad_y[idx] = sample_bicubic(tgt_gy, sx, sy);
            w.model[idx] = params.r0 + params.r1 * v;
        }
    }
    return w;
}

LinearSystem linearize(const Raster& g_win, const WarpedWindow& w,
                       const TransformParams& params) {
    const int size = w.size;
    const int half = size / 2;
    LinearSystem sys;
    sys.rows = size * size;
    sys.coeffs.resize(static_cast<std::size_t>(sys.rows) * 8);
    sys.obs.resize(sys.rows);

    std::size_t idx = 0;
    for (int yy = -half; yy <= half; ++yy) {
        for (int xx = -half; xx <= half; ++xx, ++idx) {
            const double iv = w.value[idx];
            const double gx = params.r1 * w.grad_x[idx];
            const double gy = params.r1 * w.grad_y[idx];
            double* row = sys.coeffs.data() + idx * 8;
            row[0] = 1.0;
            row[1] = iv;
            row[2] = gx;
            row[3] = gx * xx;
            row[4] = gx * yy;
            row[5] = gy;
            row[6] = gy * xx;
            row[7] = gy * yy;
            sys.obs[idx] = g_win.at(xx + half, yy + half) - (params.r0 + params.r1 * iv);
        }
    }
    return sys;
}

std::optional<LinearSystem> linearize(const Raster& g_win, const Raster& tgt,
                                      const TransformParams& params, double center_x,
                                      double center_y) {
    auto [gx, gy] = gradient_central(tgt);
    auto w = sample_warped_window(tgt, gx, gy, params, center_x, center_y, g_win.width());
    if (!w)
        return std::nullopt;
    return linearize(g_win, *w, params);
}

namespace {

double weighted_l1(const LinearSystem& sys, std::span<const double> struct_w,
                   const std::array<double, 8>& x) {
    double obj = 0.0;
    for (int i = 0; i < sys.rows; ++i) {
        const double* row = sys.coeffs.data() + static_cast<std::size_t>(i) * 8;
        double r = -sys.obs[i];
        for (int j = 0; j < 8; ++j)
            r += row[j] * x[j];
        obj += struct_w[i] * std::abs(r);
    }
    return obj;
}

void compute_residuals(const LinearSystem& sys, const std::array<double, 8>& x,
                       std::vector<double>& d) {
    d.resize(sys.rows);
    for (int i = 0; i < sys.rows; ++i) {
        const double* row = sys.coeffs.data() + static_cast<std::size_t>(i) * 8;
        double r = -sys.obs[i];
        for (int j = 0; j < 8; ++j)
            r += row[j] * x[j];
        d[i] = r;
    }
}

} // namespace

WladSolution wlad_solve(const LinearSystem& sys, std::span<const double> struct_weights,
                        int max_iters, double tol) {
    if (sys.rows < 16)
        throw ParamError("wlad_solve: needs at least 16 rows");
    if (static_cast<int>(struct_weights.size()) != sys.rows)
        throw ParamError("wlad_solve: weight count must equal row count");
    if (max_iters < 1)
        throw ParamError("wlad_solve: max_iters must be >= 1");

    WladSolution sol;
    std::array<double, 8> x{};
    std::vector<double> d;
    std::vector<double> normal(64);
    std::vector<double> rhs(8);

    double objective = weighted_l1(sys, struct_weights, x);

    // Phase 1 follows the bounded reweight 1/(1+|d|); its fixed point sits a
    // little off the L1 minimizer, so once it stalls the remaining budget
    // polishes with the classic 1/max(|d|, eps) reweight, which converges to
    // the weighted-LAD solution proper.
    bool polish = false;
    for (int iter = 1; iter <= max_iters; ++iter) {
        std::fill(normal.begin(), normal.end(), 0.0);
        std::fill(rhs.begin(), rhs.end(), 0.0);
        for (int i = 0; i < sys.rows; ++i) {
            const double* row = sys.coeffs.data() + static_cast<std::size_t>(i) * 8;
            double w = struct_weights[i];
            if (iter > 1)
                w *= polish ? 1.0 / std::max(std::abs(d[i]), 1e-8)
                            : 1.0 / (1.0 + std::abs(d[i]));
            for (int j = 0; j < 8; ++j) {
                const double wj = w * row[j];
                rhs[j] += wj * sys.obs[i];
                for (int k = j; k < 8; ++k)
                    normal[j * 8 + k] += wj * row[k];
            }
        }
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < j; ++k)
                normal[j * 8 + k] = normal[k * 8 + j];

        std::vector<double> a = normal;
        std::vector<double> b = rhs;
        if (!linalg::cholesky_solve(a, b, 8))
            throw RankError("wlad_solve: singular normal matrix");
        std::array<double, 8> x_new;
        for (int j = 0; j < 8; ++j) {
            if (!std::isfinite(b[j]))
                throw NumericError("wlad_solve: non-finite solution");
            x_new[j] = b[j];
        }

        // keep the weighted L1 objective non-increasing; halve toward the
        // previous iterate when the full step overshoots
        bool moved = false;
        double alpha = 1.0;
        double max_delta = 0.0;
        for (int attempt = 0; attempt < 4; ++attempt, alpha *= 0.5) {
            std::array<double, 8> cand;
            for (int j = 0; j < 8; ++j)
                cand[j] = x[j] + alpha * (x_new[j] - x[j]);
            const double cand_obj = weighted_l1(sys, struct_weights, cand);
            if (cand_obj <= objective + 1e-15) {
                max_delta = 0.0;
                for (int j = 0; j < 8; ++j)
                    max_delta = std::max(max_delta, std::abs(cand[j] - x[j]));
                x = cand;
                objective = cand_obj;
                moved = true;
                break;
            }
        }
        sol.iterations = iter;
        if (moved)
            compute_residuals(sys, x, d);
        if (objective < 1e-14 * sys.rows)
            break; // exact fit

        const bool stalled = !moved || max_delta < tol;
        if (stalled) {
            if (!polish && iter < max_iters) {
                polish = true;
                if (d.empty())
                    compute_residuals(sys, x, d);
                continue;
            }
            break;
        }
    }

    if (d.empty())
        compute_residuals(sys, x, d);
    for (double v : d)
        if (!std::isfinite(v))
            throw NumericError("wlad_solve: non-finite residuals");
    sol.update = x;
    sol.residuals = std::move(d);
    return sol;
}

namespace {

Raster extract_window(const Raster& r, int cx, int cy, int size) {
    const int half = size / 2;
    Raster out(size, size);
    for (int y = 0; y < size; ++y) {
        const double* src = r.row(cy - half + y) + (cx - half);
        double* dst = out.row(y);
        for (int x = 0; x < size; ++x)
            dst[x] = src[x];
    }
    return out;
}

Raster grid_to_raster(const std::vector<double>& v, int size) {
    Raster out(size, size);
    std::copy(v.begin(), v.end(), out.samples().begin());
    return out;
}

TransformParams apply_update(const TransformParams& p, const std::array<double, 8>& dx,
                             double alpha) {
    TransformParams q = p;
    q.r0 += alpha * dx[0];
    q.r1 += alpha * dx[1];
    q.a0 += alpha * dx[2];
    q.a1 += alpha * dx[3];
    q.a2 += alpha * dx[4];
    q.b0 += alpha * dx[5];
    q.b1 += alpha * dx[6];
    q.b2 += alpha * dx[7];
    return q;
}

} // namespace

FineMatch refine(const CoarseMatch& coarse, const Raster& pc_ref, const Raster& pc_tgt,
                 const Raster& tgt_gx, const Raster& tgt_gy, const FineConfig& cfg) {
    cfg.validate();
    const int size = cfg.window_size;
    const int half = size / 2;

    FineMatch out;
    out.ref = coarse.ref;
    out.tgt_x = coarse.tgt_x;
    out.tgt_y = coarse.tgt_y;

    // both windows must fit; otherwise report an unconverged match
    if (coarse.ref.x - half < 0 || coarse.ref.x + half >= pc_ref.width() ||
        coarse.ref.y - half < 0 || coarse.ref.y + half >= pc_ref.height() ||
        coarse.tgt_x - half < 1 || coarse.tgt_x + half >= pc_tgt.width() - 1 ||
        coarse.tgt_y - half < 1 || coarse.tgt_y + half >= pc_tgt.height() - 1)
        return out;

    const Raster g_win = extract_window(pc_ref, coarse.ref.x, coarse.ref.y, size);
    const Raster i_win0 = extract_window(pc_tgt, coarse.tgt_x, coarse.tgt_y, size);
    out.initial_ssim = ssim_patch(g_win.samples(), i_win0.samples());

    TransformParams params;
    {
        // closed-form radiometric start: G ~ r0 + r1 * I
        const auto g = g_win.samples();
        const auto i = i_win0.samples();
        const double n = static_cast<double>(g.size());
        double sg = 0.0, si = 0.0, sii = 0.0, sgi = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            sg += g[k];
            si += i[k];
            sii += i[k] * i[k];
            sgi += g[k] * i[k];
        }
        const double mi = si / n, mg = sg / n;
        const double var_i = sii / n - mi * mi;
        const double cov = sgi / n - mg * mi;
        if (var_i > kVarFloor) {
            const double r1 = cov / var_i;
            if (r1 > 0.05) {
                params.r1 = r1;
                params.r0 = mg - r1 * mi;
            }
        }
    }

    const double cx = coarse.tgt_x;
    const double cy = coarse.tgt_y;
    auto window = sample_warped_window(pc_tgt, tgt_gx, tgt_gy, params, cx, cy, size);
    if (!window)
        return out;
    double current_ssim = ssim_patch(g_win.samples(), window->model);

    Raster weights;
    bool loop_converged = false;
    bool diverged = false;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        out.iterations = iter;
        if (iter == 1 || cfg.ms_refresh == MsRefresh::Each)
            weights = structure_weights(g_win, grid_to_raster(window->value, size),
                                        cfg.ms_patch);

        const LinearSystem sys = linearize(g_win, *window, params);
        std::array<double, 8> dx;
        try {
            dx = wlad_solve(sys, weights.samples(), kIrlsItersPerStep, kIrlsTol).update;
        } catch (const RankError&) {
            diverged = true;
            break;
        } catch (const NumericError&) {
            diverged = true;
            break;
        }

        // damped step: halve up to 3 times while SSIM drops, then accept
        double alpha = 1.0;
        bool stepped = false;
        for (int attempt = 0; attempt <= 3; ++attempt, alpha *= 0.5) {
            const TransformParams cand = apply_update(params, dx, alpha);
            auto cand_window =
                sample_warped_window(pc_tgt, tgt_gx, tgt_gy, cand, cx, cy, size);
            if (!cand_window)
                continue; // leaving support counts as a rejected step
            const double cand_ssim = ssim_patch(g_win.samples(), cand_window->model);
            const bool last = attempt == 3;
            if (cand_ssim >= current_ssim - 1e-12 || last) {
                params = cand;
                window = std::move(cand_window);
                current_ssim = cand_ssim;
                stepped = true;
                break;
            }
        }
        if (!stepped) {
            diverged = true; // every damped candidate left the raster
            break;
        }
        const double step_alpha = alpha;
        if (std::abs(step_alpha * dx[2]) < cfg.shift_tol &&
            std::abs(step_alpha * dx[5]) < cfg.shift_tol) {
            loop_converged = true;
            break;
        }
    }

    out.params = params;
    out.tgt_x = cx + params.a0;
    out.tgt_y = cy + params.b0;
    out.final_ssim = current_ssim;

    const double det = params.affine_determinant();
    out.converged = loop_converged && !diverged && out.final_ssim >= cfg.ssim_gate &&
                    out.final_ssim >= out.initial_ssim - 1e-9 && params.r1 > 0.0 &&
                    det >= 0.5 && det <= 2.0;
    return out;
}

FineMatch refine(const CoarseMatch& coarse, const Raster& pc_ref, const Raster& pc_tgt,
                 const FineConfig& cfg) {
    auto [gx, gy] = gradient_central(pc_tgt);
    return refine(coarse, pc_ref, pc_tgt, gx, gy, cfg);
}

} // namespace pcwlad
