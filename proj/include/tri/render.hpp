#pragma once

// Two-pass volume rendering of a view-independent field.
//
// Per ray: n_coarse stratified depths on [near, far], importance resampling
// of n_fine extra depths from the coarse weights, then compositing of the
// merged, sorted set. Alpha uses the gap to the next sample; the last gap
// closes at `far`. Depth is the expected termination depth sum(w t)/sum(w),
// or `far` for an empty ray. The background color is added to the first
// three feature channels only.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tri/camera.hpp"
#include "tri/field.hpp"
#include "tri/image.hpp"
#include "tri/rng.hpp"

namespace tri {

struct SamplingConfig {
    int n_coarse = 48;
    int n_fine = 48;
    bool stratified = false;
    int width = 128;
    int height = 128;
    std::array<double, 3> background{0.0, 0.0, 0.0};

    /// 96 coarse samples, no fine pass.
    static SamplingConfig offline() {
        SamplingConfig c;
        c.n_coarse = 96;
        c.n_fine = 0;
        return c;
    }
    void validate() const;
};

struct RenderOutput {
    int width = 0;
    int height = 0;
    int feature_channels = 0;
    std::vector<float> features; // F x H x W
    std::vector<float> depth;    // H x W
    std::vector<float> opacity;  // H x W

    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
    float feature(int c, int y, int x) const { return features[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    Image feature_image() const;
    /// First three feature channels.
    Image rgb() const;
    Image depth_image() const;
    Image opacity_image() const;

    bool operator==(const RenderOutput&) const = default;
};

/// n sorted depths in [near, far]: bin midpoints, or one uniform draw per
/// bin when `stratified`.
std::vector<double> stratified_ts(double near, double far, int n, bool stratified, Rng& rng);

struct Resampled {
    std::vector<double> ts;
    bool fallback = false; // weights summed to zero; uniform bins were used
};

/// Inverse-CDF sampling of the piecewise-constant density that gives bin i
/// mass weights[i]. Bin edges are the midpoints between consecutive depths,
/// with outer edges at lo and hi. Returns n sorted depths.
Resampled importance_resample(std::span<const double> ts, std::span<const double> weights, int n, bool stratified,
                              Rng& rng, double lo, double hi);

/// Compositing weights w_i = T_i * alpha_i. Throws DomainError if ts is not
/// sorted or a density is negative.
std::vector<double> composite_weights(std::span<const double> sigmas, std::span<const double> ts, double far);

struct Composited {
    std::vector<double> feature;
    double depth = 0;
    double opacity = 0;
};

/// `features` holds n x F values, F = features.size() / n.
Composited composite(std::span<const double> sigmas, std::span<const double> features, std::span<const double> ts,
                     double far, const std::array<double, 3>& background);

/// Evaluates a triplane field into double buffers; holds per-thread scratch.
template <class T>
class TriplaneEvaluator {
public:
    TriplaneEvaluator(const BasicTriplane<T>& grid, const BasicDecoder<T>& dec) : grid_(&grid), dec_(&dec) {}

    int feature_width() const { return dec_->feature_width(); }

    void operator()(std::span<const Vec3> points, std::vector<double>& sigma, std::vector<double>& features) {
        query_field(*grid_, *dec_, points, batch_, ws_);
        sigma.assign(batch_.density.begin(), batch_.density.end());
        features.assign(batch_.features.begin(), batch_.features.end());
    }

private:
    const BasicTriplane<T>* grid_;
    const BasicDecoder<T>* dec_;
    FieldBatch<T> batch_;
    FieldWorkspace<T> ws_;
};

/// Depth samples for one ray after both passes (merged and sorted). The
/// field is only evaluated for the coarse pass.
template <class Evaluator>
std::vector<double> plan_ray(Evaluator& eval, const Vec3& origin, const Vec3& dir, double near, double far,
                             const SamplingConfig& cfg, Rng& rng);

/// Renders one ray.
template <class Evaluator>
Composited trace_ray(Evaluator& eval, const Vec3& origin, const Vec3& dir, double near, double far,
                     const SamplingConfig& cfg, Rng& rng);

/// Renders a full image with any field evaluator. `make_evaluator()` is
/// called once per row so evaluators can own scratch space. Pixel p uses
/// Rng::derive(seed, p), so the result does not depend on `threads`.
template <class MakeEvaluator>
RenderOutput render_field(MakeEvaluator&& make_evaluator, int feature_width, const Camera& camera,
                          const SamplingConfig& cfg, std::uint64_t seed, int threads = 1);

/// Triplane render. The camera's image size is replaced by cfg.width/height.
RenderOutput render(const TriplaneGrid& grid, const FieldDecoder& dec, const Camera& camera,
                    const SamplingConfig& cfg, std::uint64_t seed, int threads = 1);

/// Separable bilinear upsampling by an integer factor. Output pixel x reads
/// input position x / factor (so output(f*i, f*j) == input(i, j)); positions
/// past the last input pixel clamp to it.
Image upsample_bilinear(const Image& img, int factor = 4);

} // namespace tri

#include "tri/render_impl.hpp"
