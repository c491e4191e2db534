#pragma once

#include <algorithm>

#include "tri/error.hpp"
#include "tri/parallel.hpp"

namespace tri {

namespace detail {

inline void ray_points(const Vec3& o, const Vec3& d, std::span<const double> ts, std::vector<Vec3>& out) {
    out.resize(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) out[i] = o + d * ts[i];
}

} // namespace detail

template <class Evaluator>
std::vector<double> plan_ray(Evaluator& eval, const Vec3& origin, const Vec3& dir, double near, double far,
                             const SamplingConfig& cfg, Rng& rng) {
    std::vector<double> ts = stratified_ts(near, far, cfg.n_coarse, cfg.stratified, rng);
    if (cfg.n_fine <= 0) return ts;
    std::vector<Vec3> pts;
    std::vector<double> sigma, feat;
    detail::ray_points(origin, dir, ts, pts);
    eval(std::span<const Vec3>(pts), sigma, feat);
    const std::vector<double> w = composite_weights(sigma, ts, far);
    const Resampled fine = importance_resample(ts, w, cfg.n_fine, cfg.stratified, rng, near, far);
    std::vector<double> merged(ts.size() + fine.ts.size());
    std::merge(ts.begin(), ts.end(), fine.ts.begin(), fine.ts.end(), merged.begin());
    return merged;
}

template <class Evaluator>
Composited trace_ray(Evaluator& eval, const Vec3& origin, const Vec3& dir, double near, double far,
                     const SamplingConfig& cfg, Rng& rng) {
    const int F = eval.feature_width();
    std::vector<double> ts = stratified_ts(near, far, cfg.n_coarse, cfg.stratified, rng);
    std::vector<Vec3> pts;
    std::vector<double> sigma, feat;
    detail::ray_points(origin, dir, ts, pts);
    eval(std::span<const Vec3>(pts), sigma, feat);
    if (cfg.n_fine <= 0) return composite(sigma, feat, ts, far, cfg.background);

    const std::vector<double> w = composite_weights(sigma, ts, far);
    const Resampled fine = importance_resample(ts, w, cfg.n_fine, cfg.stratified, rng, near, far);
    std::vector<double> fsigma, ffeat;
    detail::ray_points(origin, dir, fine.ts, pts);
    eval(std::span<const Vec3>(pts), fsigma, ffeat);

    // Merge by depth; coarse samples win ties.
    const std::size_t n = ts.size() + fine.ts.size();
    std::vector<double> mts(n), msigma(n), mfeat(n * F);
    std::size_t a = 0, b = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const bool take_coarse = b >= fine.ts.size() || (a < ts.size() && ts[a] <= fine.ts[b]);
        const double* src = take_coarse ? &feat[a * F] : &ffeat[b * F];
        std::copy_n(src, F, &mfeat[k * F]);
        if (take_coarse) {
            mts[k] = ts[a];
            msigma[k] = sigma[a++];
        } else {
            mts[k] = fine.ts[b];
            msigma[k] = fsigma[b++];
        }
    }
    return composite(msigma, mfeat, mts, far, cfg.background);
}

template <class MakeEvaluator>
RenderOutput render_field(MakeEvaluator&& make_evaluator, int feature_width, const Camera& camera,
                          const SamplingConfig& cfg, std::uint64_t seed, int threads) {
    cfg.validate();
    Intrinsics intr = camera.intrinsics;
    intr.width = cfg.width;
    intr.height = cfg.height;
    intr.validate();
    if (!(camera.near >= 0.0) || !(camera.near < camera.far)) throw DomainError("render: need 0 <= near < far");
    const Transform c2w = camera.camera_to_world();

    RenderOutput out;
    out.width = cfg.width;
    out.height = cfg.height;
    out.feature_channels = feature_width;
    const std::size_t P = out.pixels();
    out.features.assign(P * feature_width, 0.0f);
    out.depth.assign(P, 0.0f);
    out.opacity.assign(P, 0.0f);

    parallel_for(static_cast<std::size_t>(cfg.height), threads, [&](std::size_t row) {
        auto eval = make_evaluator();
        for (int col = 0; col < cfg.width; ++col) {
            const std::size_t p = row * cfg.width + col;
            Rng rng = Rng::derive(seed, p);
            const Vec3 dir = pixel_direction(c2w, intr, static_cast<double>(row), col);
            const Composited px = trace_ray(eval, c2w.translation, dir, camera.near, camera.far, cfg, rng);
            for (int c = 0; c < feature_width; ++c) out.features[c * P + p] = static_cast<float>(px.feature[c]);
            out.depth[p] = static_cast<float>(px.depth);
            out.opacity[p] = static_cast<float>(px.opacity);
        }
    });
    return out;
}

} // namespace tri
