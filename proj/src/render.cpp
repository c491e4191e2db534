#include "tri/render.hpp"

#include <cmath>
#include <numeric>

namespace tri {

void SamplingConfig::validate() const {
    if (n_coarse < 1) throw DomainError("sampling: n_coarse must be >= 1");
    if (n_fine < 0) throw DomainError("sampling: n_fine must be >= 0");
    if (width < 1 || height < 1) throw DomainError("sampling: resolution must be >= 1");
    for (double b : background)
        if (!std::isfinite(b)) throw DomainError("sampling: background must be finite");
}

namespace {

Image planes_to_image(const std::vector<float>& src, int channels, int height, int width) {
    Image img(channels, height, width);
    std::copy_n(src.begin(), img.data.size(), img.data.begin());
    return img;
}

} // namespace

Image RenderOutput::feature_image() const { return planes_to_image(features, feature_channels, height, width); }
Image RenderOutput::rgb() const { return planes_to_image(features, 3, height, width); }
Image RenderOutput::depth_image() const { return planes_to_image(depth, 1, height, width); }
Image RenderOutput::opacity_image() const { return planes_to_image(opacity, 1, height, width); }

std::vector<double> stratified_ts(double near, double far, int n, bool stratified, Rng& rng) {
    if (n < 1) throw DomainError("stratified_ts: n must be >= 1");
    if (!std::isfinite(near) || !std::isfinite(far) || !(near < far))
        throw DomainError("stratified_ts: need finite near < far");
    const double step = (far - near) / n;
    std::vector<double> ts(n);
    for (int i = 0; i < n; ++i) {
        const double offset = stratified ? rng.uniform() : 0.5;
        ts[i] = near + (i + offset) * step;
    }
    return ts;
}

Resampled importance_resample(std::span<const double> ts, std::span<const double> weights, int n, bool stratified,
                              Rng& rng, double lo, double hi) {
    if (ts.size() != weights.size()) throw DomainError("importance_resample: ts and weights differ in length");
    if (ts.empty()) throw DomainError("importance_resample: no bins");
    if (n < 0) throw DomainError("importance_resample: n must be >= 0");
    if (!(lo < hi)) throw DomainError("importance_resample: need lo < hi");
    Resampled out;
    if (n == 0) return out;

    const std::size_t m = ts.size();
    std::vector<double> edges(m + 1);
    edges[0] = lo;
    for (std::size_t i = 1; i < m; ++i) edges[i] = 0.5 * (ts[i - 1] + ts[i]);
    edges[m] = hi;

    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw DomainError("importance_resample: weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        out.ts = stratified_ts(lo, hi, n, stratified, rng);
        out.fallback = true;
        return out;
    }

    std::vector<double> cdf(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) cdf[i + 1] = cdf[i] + weights[i] / total;
    cdf[m] = 1.0;

    out.ts.resize(n);
    for (int k = 0; k < n; ++k) {
        const double u = (k + (stratified ? rng.uniform() : 0.5)) / n;
        // Bin with cdf[i] <= u < cdf[i+1]; zero-mass bins are skipped.
        std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        i = std::clamp<std::size_t>(i, 1, m) - 1;
        const double mass = cdf[i + 1] - cdf[i];
        const double frac = mass > 0.0 ? std::clamp((u - cdf[i]) / mass, 0.0, 1.0) : 0.5;
        out.ts[k] = edges[i] + frac * (edges[i + 1] - edges[i]);
    }
    std::sort(out.ts.begin(), out.ts.end());
    return out;
}

std::vector<double> composite_weights(std::span<const double> sigmas, std::span<const double> ts, double far) {
    if (sigmas.size() != ts.size()) throw DomainError("composite: sigmas and ts differ in length");
    const std::size_t n = ts.size();
    std::vector<double> w(n);
    double transmittance = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && ts[i] < ts[i - 1]) throw DomainError("composite: depths are not sorted");
        if (!(sigmas[i] >= 0.0)) throw DomainError("composite: density must be non-negative");
        const double next = i + 1 < n ? ts[i + 1] : far;
        const double delta = std::max(next - ts[i], 0.0);
        const double tau = sigmas[i] * delta;
        const double alpha = -std::expm1(-tau);
        w[i] = transmittance * alpha;
        transmittance *= std::exp(-tau);
    }
    return w;
}

Composited composite(std::span<const double> sigmas, std::span<const double> features, std::span<const double> ts,
                     double far, const std::array<double, 3>& background) {
    const std::size_t n = ts.size();
    if (n == 0) throw DomainError("composite: no samples");
    if (features.size() % n != 0) throw DomainError("composite: feature buffer is not n x F");
    const std::size_t F = features.size() / n;
    const std::vector<double> w = composite_weights(sigmas, ts, far);

    Composited out;
    out.feature.assign(F, 0.0);
    double wsum = 0.0, wt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* f = features.data() + i * F;
        for (std::size_t c = 0; c < F; ++c) out.feature[c] += w[i] * f[c];
        wsum += w[i];
        wt += w[i] * ts[i];
    }
    const double rest = 1.0 - wsum;
    for (std::size_t c = 0; c < std::min<std::size_t>(F, 3); ++c) out.feature[c] += rest * background[c];
    out.opacity = wsum;
    out.depth = wsum > 1e-10 ? wt / wsum : far;
    return out;
}

RenderOutput render(const TriplaneGrid& grid, const FieldDecoder& dec, const Camera& camera,
                    const SamplingConfig& cfg, std::uint64_t seed, int threads) {
    check_compatible(grid, dec);
    dec.validate();
    return render_field([&] { return TriplaneEvaluator<float>(grid, dec); }, dec.feature_width(), camera, cfg, seed,
                        threads);
}

Image upsample_bilinear(const Image& img, int factor) {
    if (factor < 1) throw DomainError("upsample: factor must be >= 1");
    Image out(img.channels, img.height * factor, img.width * factor);
    const auto coord = [&](int o, int n, int& i0, int& i1, double& f) {
        const double p = std::min(static_cast<double>(o) / factor, static_cast<double>(n - 1));
        i0 = static_cast<int>(std::floor(p));
        i1 = std::min(i0 + 1, n - 1);
        f = p - i0;
    };
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < out.height; ++y) {
            int y0, y1;
            double fy;
            coord(y, img.height, y0, y1, fy);
            for (int x = 0; x < out.width; ++x) {
                int x0, x1;
                double fx;
                coord(x, img.width, x0, x1, fx);
                const double top = (1 - fx) * img.at(c, y0, x0) + fx * img.at(c, y0, x1);
                const double bot = (1 - fx) * img.at(c, y1, x0) + fx * img.at(c, y1, x1);
                out.at(c, y, x) = static_cast<float>((1 - fy) * top + fy * bot);
            }
        }
    }
    return out;
}

} // namespace tri
