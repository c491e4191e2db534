#include "tri/metrics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>

#include "tri/camera.hpp"
#include "tri/error.hpp"

namespace tri {

namespace {

void check_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw DomainError(std::string(what) + ": image shapes differ");
}

void check_mask(const Image& img, const Mask* mask, const char* what) {
    if (mask && (mask->height != img.height || mask->width != img.width))
        throw DomainError(std::string(what) + ": mask shape differs from image");
}

std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// "Valid" separable filtering of a height x width plane.
std::vector<double> filter_valid(const std::vector<double>& src, int height, int width, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int ow = width - k + 1, oh = height - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(height) * ow);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * src[static_cast<std::size_t>(y) * width + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

} // namespace

double psnr(const Image& a, const Image& b, const Mask* mask, double peak) {
    check_same_shape(a, b, "psnr");
    check_mask(a, mask, "psnr");
    if (!(peak > 0.0)) throw DomainError("psnr: peak must be positive");
    double sum = 0.0;
    std::size_t n = 0;
    for (int c = 0; c < a.channels; ++c)
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                if (mask && !mask->at(y, x)) continue;
                const double d = static_cast<double>(a.at(c, y, x)) - b.at(c, y, x);
                sum += d * d;
                ++n;
            }
    if (n == 0) throw DomainError("psnr: mask selects no pixels");
    const double mse = sum / static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& a, const Image& b, const Mask* mask, const SsimOptions& opt) {
    check_same_shape(a, b, "ssim");
    check_mask(a, mask, "ssim");
    const int k = opt.window;
    if (a.height < k || a.width < k) throw DomainError("ssim: image is smaller than the window");
    const std::vector<double> taps = gaussian_taps(k, opt.sigma);
    const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
    const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
    const int oh = a.height - k + 1, ow = a.width - k + 1;
    const std::size_t P = a.pixels();

    // Window validity from a summed-area table of invalid pixels.
    std::vector<unsigned char> window_ok(static_cast<std::size_t>(oh) * ow, 1);
    if (mask) {
        std::vector<long> sat(static_cast<std::size_t>(a.height + 1) * (a.width + 1), 0);
        const auto S = [&](int y, int x) -> long& { return sat[static_cast<std::size_t>(y) * (a.width + 1) + x]; };
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x)
                S(y + 1, x + 1) = (mask->at(y, x) ? 0 : 1) + S(y, x + 1) + S(y + 1, x) - S(y, x);
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
                window_ok[static_cast<std::size_t>(y) * ow + x] = (S(y + k, x + k) - S(y, x + k) - S(y + k, x) + S(y, x)) == 0;
    }

    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        std::vector<double> pa(P), pb(P), aa(P), bb(P), ab(P);
        for (std::size_t i = 0; i < P; ++i) {
            pa[i] = a.data[c * P + i];
            pb[i] = b.data[c * P + i];
            aa[i] = pa[i] * pa[i];
            bb[i] = pb[i] * pb[i];
            ab[i] = pa[i] * pb[i];
        }
        const auto mu_a = filter_valid(pa, a.height, a.width, taps);
        const auto mu_b = filter_valid(pb, a.height, a.width, taps);
        const auto e_aa = filter_valid(aa, a.height, a.width, taps);
        const auto e_bb = filter_valid(bb, a.height, a.width, taps);
        const auto e_ab = filter_valid(ab, a.height, a.width, taps);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            if (!window_ok[i]) continue;
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            sum += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
            ++count;
        }
        if (count == 0) throw DomainError("ssim: mask leaves no complete window");
        total += sum / static_cast<double>(count);
    }
    return total / a.channels;
}

DepthErrors depth_si_errors(const DepthPair& pair) {
    const Image& pred = pair.prediction;
    const Image& gt = pair.ground_truth;
    check_same_shape(pred, gt, "depth_si_errors");
    if (pred.channels != 1) throw DomainError("depth_si_errors: depth maps must have one channel");
    const bool masked = !pair.valid.data.empty();
    if (masked) check_mask(pred, &pair.valid, "depth_si_errors");

    std::vector<double> p, g;
    for (int y = 0; y < pred.height; ++y)
        for (int x = 0; x < pred.width; ++x) {
            if (masked && !pair.valid.at(y, x)) continue;
            const double pv = pred.at(0, y, x), gv = gt.at(0, y, x);
            if (!std::isfinite(pv) || !std::isfinite(gv)) throw DomainError("depth_si_errors: non-finite depth");
            p.push_back(pv);
            g.push_back(gv);
        }
    const std::size_t n = p.size();
    if (n < 2) throw DomainError("depth_si_errors: need at least 2 valid pixels");

    const auto [gmin, gmax] = std::minmax_element(g.begin(), g.end());
    const double lo = *gmin, range = *gmax - *gmin;
    if (!(range > 0.0)) throw DomainError("depth_si_errors: ground truth is constant");
    for (double& v : g) v = (v - lo) / range;

    double pm = 0.0, gm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pm += p[i];
        gm += g[i];
    }
    pm /= n;
    gm /= n;
    double var = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var += (p[i] - pm) * (p[i] - pm);
        cov += (p[i] - pm) * (g[i] - gm);
    }

    DepthErrors out;
    out.n_pixels = n;
    out.scale = var > 0.0 ? cov / var : 0.0;
    out.shift = gm - out.scale * pm;

    // Depth maps are float32: a residual within the inputs' own rounding
    // (relative 2^-24 on each value, carried through the normalization and
    // the fitted scale) cannot be told apart from an exact fit.
    constexpr double kF32 = 0x1p-24;
    const double g_abs = std::max(std::abs(lo), std::abs(*gmax));
    double l1 = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = out.scale * (p[i] - pm) + gm - g[i];
        const double tol = kF32 * (g_abs / range + std::abs(out.scale * p[i])) + 16.0 * DBL_EPSILON;
        if (std::abs(r) <= tol) continue;
        l1 += std::abs(r);
        sq += r * r;
    }
    out.l1 = l1 / n;
    out.rmse = std::sqrt(sq / n);
    return out;
}

SimilarityTransform2D SimilarityTransform2D::from_angle(double theta, double tx, double ty) {
    SimilarityTransform2D t;
    const double c = std::cos(theta), s = std::sin(theta);
    t.rotation = {{{c, -s}, {s, c}}};
    t.tx = tx;
    t.ty = ty;
    return t;
}

SimilarityTransform2D SimilarityTransform2D::about(Point2 center, double theta, double dx, double dy) {
    SimilarityTransform2D t = from_angle(theta, 0.0, 0.0);
    const Point2 rc = t.apply(center);
    t.tx = center.x - rc.x + dx;
    t.ty = center.y - rc.y + dy;
    return t;
}

double SimilarityTransform2D::angle() const { return std::atan2(rotation[1][0], rotation[0][0]); }

Point2 SimilarityTransform2D::apply(Point2 p) const {
    return {rotation[0][0] * p.x + rotation[0][1] * p.y + tx, rotation[1][0] * p.x + rotation[1][1] * p.y + ty};
}

SimilarityTransform2D SimilarityTransform2D::inverse() const {
    SimilarityTransform2D inv;
    inv.rotation = {{{rotation[0][0], rotation[1][0]}, {rotation[0][1], rotation[1][1]}}};
    inv.tx = -(inv.rotation[0][0] * tx + inv.rotation[0][1] * ty);
    inv.ty = -(inv.rotation[1][0] * tx + inv.rotation[1][1] * ty);
    return inv;
}

SimilarityTransform2D procrustes_2d(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size()) throw DomainError("procrustes: point sets differ in size");
    if (src.size() < 2) throw DomainError("procrustes: need at least 2 points");
    const double n = static_cast<double>(src.size());
    Point2 cs, cd;
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs.x += src[i].x;
        cs.y += src[i].y;
        cd.x += dst[i].x;
        cd.y += dst[i].y;
    }
    cs = {cs.x / n, cs.y / n};
    cd = {cd.x / n, cd.y / n};
    double s_cos = 0.0, s_sin = 0.0, spread_s = 0.0, spread_d = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double ax = src[i].x - cs.x, ay = src[i].y - cs.y;
        const double bx = dst[i].x - cd.x, by = dst[i].y - cd.y;
        s_cos += ax * bx + ay * by;
        s_sin += ax * by - ay * bx;
        spread_s += ax * ax + ay * ay;
        spread_d += bx * bx + by * by;
    }
    if (!(spread_s > 0.0) || !(spread_d > 0.0)) throw DomainError("procrustes: degenerate (coincident) points");
    if (s_cos == 0.0 && s_sin == 0.0) throw DomainError("procrustes: rotation is undetermined");
    SimilarityTransform2D t = SimilarityTransform2D::from_angle(std::atan2(s_sin, s_cos), 0.0, 0.0);
    const Point2 rc = t.apply(cs);
    t.tx = cd.x - rc.x;
    t.ty = cd.y - rc.y;
    return t;
}

Warped warp_image(const Image& img, const SimilarityTransform2D& t) {
    const SimilarityTransform2D inv = t.inverse();
    Warped out{Image(img.channels, img.height, img.width), Mask(img.height, img.width, false)};
    constexpr double tol = 1e-9;
    const auto snap = [](double v) {
        const double r = std::round(v);
        return std::abs(v - r) < tol ? r : v;
    };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const Point2 s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
            const double sx = snap(s.x), sy = snap(s.y);
            if (sx < 0.0 || sy < 0.0 || sx > img.width - 1 || sy > img.height - 1) continue;
            const int x0 = std::min(static_cast<int>(std::floor(sx)), img.width - 1);
            const int y0 = std::min(static_cast<int>(std::floor(sy)), img.height - 1);
            const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
            const double fx = sx - x0, fy = sy - y0;
            for (int c = 0; c < img.channels; ++c) {
                const double top = (1 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1);
                const double bot = (1 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1);
                out.image.at(c, y, x) = static_cast<float>((1 - fy) * top + fy * bot);
            }
            out.coverage.set(y, x, true);
        }
    return out;
}

Image black_out(const Image& img, const Mask& keep) {
    Image out = img;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                if (!keep.at(y, x)) out.at(c, y, x) = 0.0f;
    return out;
}

std::vector<Point2> landmark_lattice(int width, int height, int n) {
    std::vector<Point2> pts;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double fx = n > 1 ? 0.1 + 0.8 * i / (n - 1) : 0.5;
            const double fy = n > 1 ? 0.1 + 0.8 * j / (n - 1) : 0.5;
            pts.push_back({fx * (width - 1), fy * (height - 1)});
        }
    return pts;
}

AlignedPair align_to_reference(const Image& reference, const Image& moving, std::span<const Point2> moving_landmarks,
                               std::span<const Point2> reference_landmarks) {
    check_same_shape(reference, moving, "align");
    AlignedPair out;
    out.transform = procrustes_2d(moving_landmarks, reference_landmarks);
    const Warped w = warp_image(moving, out.transform);
    out.reference = black_out(reference, w.coverage);
    out.aligned = w.image;
    out.covered = w.coverage.count();
    return out;
}

std::vector<SweepRow> misalignment_sweep(const Image& reference, std::span<const MisalignmentOffset> offsets) {
    const Point2 center{(reference.width - 1) / 2.0, (reference.height - 1) / 2.0};
    const std::vector<Point2> lattice = landmark_lattice(reference.width, reference.height);
    std::vector<SweepRow> rows;
    for (const MisalignmentOffset& off : offsets) {
        SweepRow row;
        row.offset = off;
        const SimilarityTransform2D t = SimilarityTransform2D::about(center, deg2rad(off.dtheta_deg), off.dx, off.dy);
        const Warped moved = warp_image(reference, t);
        const Image ref_raw = black_out(reference, moved.coverage);
        row.raw_psnr = psnr(ref_raw, moved.image);
        row.raw_ssim = ssim(ref_raw, moved.image);

        std::vector<Point2> detected;
        for (const Point2& p : lattice) detected.push_back(t.apply(p));
        row.recovered = procrustes_2d(detected, lattice);
        const Warped back = warp_image(moved.image, row.recovered);

        // Valid where the back-warp stayed in frame and read only covered pixels.
        Image coverage(1, reference.height, reference.width);
        for (int y = 0; y < reference.height; ++y)
            for (int x = 0; x < reference.width; ++x) coverage.at(0, y, x) = moved.coverage.at(y, x) ? 1.0f : 0.0f;
        const Warped cov_back = warp_image(coverage, row.recovered);
        Mask keep(reference.height, reference.width, false);
        for (int y = 0; y < reference.height; ++y)
            for (int x = 0; x < reference.width; ++x)
                keep.set(y, x, back.coverage.at(y, x) && cov_back.image.at(0, y, x) >= 1.0f - 1e-6f);
        const Image ref_aligned = black_out(reference, keep);
        const Image img_aligned = black_out(back.image, keep);
        row.aligned_psnr = psnr(ref_aligned, img_aligned);
        row.aligned_ssim = ssim(ref_aligned, img_aligned);
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    const auto opt = [](const std::optional<double>& v) -> nlohmann::json {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    j["psnr_db"] = psnr_db ? nlohmann::json(capped_psnr(*psnr_db)) : nlohmann::json(nullptr);
    j["ssim"] = opt(ssim);
    j["depth_l1"] = opt(depth_l1);
    j["depth_rmse"] = opt(depth_rmse);
    j["n_pixels"] = n_pixels;
    j["aligned"] = aligned;
    if (transform)
        j["transform"] = {{"theta_deg", rad2deg(transform->angle())}, {"tx", transform->tx}, {"ty", transform->ty}};
    else
        j["transform"] = nullptr;
    return j;
}

} // namespace tri
