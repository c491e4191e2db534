#include "tri/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tri/error.hpp"
#include "tri/parallel.hpp"

namespace tri {

// ---------------------------------------------------------------------------
// ParameterSet

ParameterSet::ParameterSet(const BasicTriplane<double>& grid, const BasicDecoder<double>& dec) {
    check_compatible(grid, dec);
    dec.validate();
    resolution_ = grid.resolution();
    channels_ = grid.channels();
    box_scale_ = grid.box_scale();
    hidden_ = dec.hidden;
    density_ = dec.density;
    feature_ = dec.feature;
    triplane_size_ = grid.size();

    values_.assign(grid.values().begin(), grid.values().end());
    segments_.push_back({"triplane", 0, triplane_size_});
    for (std::size_t l = 0; l < dec.layers.size(); ++l) {
        const auto& layer = dec.layers[l];
        layer_shapes_.emplace_back(layer.in, layer.out);
        segments_.push_back({"layer" + std::to_string(l) + ".weight", values_.size(), layer.weight.size()});
        values_.insert(values_.end(), layer.weight.begin(), layer.weight.end());
        segments_.push_back({"layer" + std::to_string(l) + ".bias", values_.size(), layer.bias.size()});
        values_.insert(values_.end(), layer.bias.begin(), layer.bias.end());
    }
}

ParameterSet::ParameterSet(const TriplaneGrid& grid, const FieldDecoder& dec)
    : ParameterSet(grid.cast<double>(), dec.cast<double>()) {}

BasicTriplane<double> ParameterSet::triplane() const {
    BasicTriplane<double> g(resolution_, channels_, box_scale_);
    std::copy_n(values_.begin(), triplane_size_, g.values().begin());
    return g;
}

BasicDecoder<double> ParameterSet::decoder() const {
    BasicDecoder<double> d;
    d.hidden = hidden_;
    d.density = density_;
    d.feature = feature_;
    for (std::size_t l = 0; l < layer_shapes_.size(); ++l) {
        const Segment& w = segments_[1 + 2 * l];
        const Segment& b = segments_[2 + 2 * l];
        DenseLayer<double> layer{layer_shapes_[l].first, layer_shapes_[l].second, {}, {}};
        layer.weight.assign(values_.begin() + w.offset, values_.begin() + w.offset + w.size);
        layer.bias.assign(values_.begin() + b.offset, values_.begin() + b.offset + b.size);
        d.layers.push_back(std::move(layer));
    }
    return d;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet z = *this;
    std::fill(z.values_.begin(), z.values_.end(), 0.0);
    return z;
}

std::string ParameterSet::describe(std::size_t index) const {
    if (index >= values_.size()) return "out-of-range";
    if (index < triplane_size_) {
        const std::size_t plane_size = static_cast<std::size_t>(resolution_) * resolution_ * channels_;
        const std::size_t p = index / plane_size;
        std::size_t rem = index % plane_size;
        const std::size_t ch = rem % channels_;
        rem /= channels_;
        return std::string("triplane[") + plane_name(kPlanes[p]) + "," + std::to_string(rem / resolution_) + "," +
               std::to_string(rem % resolution_) + "," + std::to_string(ch) + "]";
    }
    for (const Segment& s : segments_)
        if (index >= s.offset && index < s.offset + s.size)
            return s.name + "[" + std::to_string(index - s.offset) + "]";
    return "?";
}

void DistillLossConfig::validate() const {
    for (double w : {color_weight, feature_weight, triplane_weight, reference_view_weight, multiview_view_weight})
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("loss weights must be finite and non-negative");
}

// ---------------------------------------------------------------------------
// Per-ray forward / backward

namespace {

struct LayerRef {
    const double* weight;
    const double* bias;
    int in;
    int out;
};

// Read-only view of a flat parameter vector.
struct Model {
    const double* grid = nullptr;
    int resolution = 0;
    int channels = 0;
    double box_scale = 1;
    std::size_t plane_size = 0;
    std::vector<LayerRef> layers;
    std::vector<std::size_t> weight_offsets;
    std::vector<std::size_t> bias_offsets;
    Activation hidden{}, density{}, feature{};
    int feature_width = 0;
    std::size_t act_stride = 0; // doubles of cached activations per sample

    Model(const ParameterSet& p, const BasicDecoder<double>& tags) {
        const auto& v = p.values();
        grid = v.data();
        resolution = p.resolution();
        channels = p.channels();
        box_scale = p.box_scale();
        plane_size = static_cast<std::size_t>(resolution) * resolution * channels;
        hidden = tags.hidden;
        density = tags.density;
        feature = tags.feature;
        const auto& segs = p.segments();
        for (std::size_t l = 0; l < tags.layers.size(); ++l) {
            const auto& w = segs[1 + 2 * l];
            const auto& b = segs[2 + 2 * l];
            layers.push_back({v.data() + w.offset, v.data() + b.offset, tags.layers[l].in, tags.layers[l].out});
            weight_offsets.push_back(w.offset);
            bias_offsets.push_back(b.offset);
            act_stride += tags.layers[l].in + tags.layers[l].out;
        }
        feature_width = tags.feature_width();
    }
};

struct RayWork {
    std::vector<BilinearStencil> stencils; // 3 per sample
    std::vector<double> acts;              // per sample: [in_0, z_0, in_1, z_1, ...]
    std::vector<double> sigma;
    std::vector<double> feat; // n x F
    std::vector<double> planes;
    std::vector<double> dout, din;
    std::vector<Vec3> points;
};

void forward_ray(const Model& m, const PlannedRay& ray, RayWork& w) {
    const std::size_t n = ray.ts.size();
    const int C = m.channels;
    const int F = m.feature_width;
    w.stencils.resize(3 * n);
    w.acts.resize(n * m.act_stride);
    w.sigma.resize(n);
    w.feat.resize(n * F);
    w.planes.resize(3 * C);

    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x = ray.origin + ray.direction * ray.ts[i];
        const PlaneCoords uv = project_to_planes(x, m.box_scale);
        for (int p = 0; p < 3; ++p) {
            const BilinearStencil s = bilinear_stencil(uv[p], m.resolution, C);
            w.stencils[3 * i + p] = s;
            const double* base = m.grid + p * m.plane_size;
            const double* a = base + s.offsets[0];
            const double* b = base + s.offsets[1];
            const double* c = base + s.offsets[2];
            const double* d = base + s.offsets[3];
            double* out = w.planes.data() + p * C;
            for (int ch = 0; ch < C; ++ch)
                out[ch] = s.weights[0] * a[ch] + s.weights[1] * b[ch] + s.weights[2] * c[ch] + s.weights[3] * d[ch];
        }
        double* act = w.acts.data() + i * m.act_stride;
        for (int ch = 0; ch < C; ++ch)
            act[ch] = mean_of_three(w.planes[ch], w.planes[C + ch], w.planes[2 * C + ch]);

        const std::size_t L = m.layers.size();
        for (std::size_t l = 0; l < L; ++l) {
            const LayerRef& layer = m.layers[l];
            const double* in = act;
            double* z = act + layer.in;
            for (int o = 0; o < layer.out; ++o) {
                double acc = layer.bias[o];
                const double* row = layer.weight + static_cast<std::size_t>(o) * layer.in;
                for (int j = 0; j < layer.in; ++j) acc += row[j] * in[j];
                z[o] = acc;
            }
            if (l + 1 < L) {
                double* next_in = z + layer.out;
                for (int o = 0; o < layer.out; ++o) next_in[o] = activate(m.hidden, z[o]);
                act = next_in;
            } else {
                w.sigma[i] = activate(m.density, z[0]);
                for (int k = 0; k < F; ++k) w.feat[i * F + k] = activate(m.feature, z[1 + k]);
            }
        }
    }
}

// Accumulates d(loss)/d(params) for one ray given d(loss)/d(pixel feature).
void backward_ray(const Model& m, const PlannedRay& ray, RayWork& w, std::span<const double> weights,
                  std::span<const double> gpix, const std::array<double, 3>& background, double* grad) {
    const std::size_t n = ray.ts.size();
    const int F = m.feature_width;
    const int C = m.channels;
    const std::size_t L = m.layers.size();

    // e_i = dL/dw_i
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < F; ++c) s += gpix[c] * w.feat[i * F + c];
        for (int c = 0; c < std::min(F, 3); ++c) s -= gpix[c] * background[c];
        e[i] = s;
    }
    // dL/dsigma_k = delta_k * (T_{k+1} e_k - sum_{i>k} w_i e_i)
    std::vector<double> dsigma(n);
    double suffix = 0.0;
    {
        std::vector<double> t_after(n);
        double T = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double next = i + 1 < n ? ray.ts[i + 1] : ray.far;
            const double delta = std::max(next - ray.ts[i], 0.0);
            T *= std::exp(-w.sigma[i] * delta);
            t_after[i] = T;
        }
        for (std::size_t k = n; k-- > 0;) {
            const double next = k + 1 < n ? ray.ts[k + 1] : ray.far;
            const double delta = std::max(next - ray.ts[k], 0.0);
            dsigma[k] = delta * (t_after[k] * e[k] - suffix);
            suffix += weights[k] * e[k];
        }
    }

    w.dout.resize(m.act_stride);
    w.din.resize(m.act_stride);
    for (std::size_t i = 0; i < n; ++i) {
        const double* act = w.acts.data() + i * m.act_stride;
        // Locate cached activations of each layer.
        std::vector<const double*> ins(L), zs(L);
        {
            const double* p = act;
            for (std::size_t l = 0; l < L; ++l) {
                ins[l] = p;
                zs[l] = p + m.layers[l].in;
                p = zs[l] + m.layers[l].out;
            }
        }
        double* dout = w.dout.data();
        const double* zl = zs[L - 1];
        dout[0] = dsigma[i] * activate_grad(m.density, zl[0]);
        for (int k = 0; k < F; ++k) dout[1 + k] = weights[i] * gpix[k] * activate_grad(m.feature, zl[1 + k]);

        for (std::size_t l = L; l-- > 0;) {
            const LayerRef& layer = m.layers[l];
            double* gw = grad + m.weight_offsets[l];
            double* gb = grad + m.bias_offsets[l];
            const double* in = ins[l];
            for (int o = 0; o < layer.out; ++o) {
                const double d = dout[o];
                if (d == 0.0) continue;
                gb[o] += d;
                double* row = gw + static_cast<std::size_t>(o) * layer.in;
                for (int j = 0; j < layer.in; ++j) row[j] += d * in[j];
            }
            double* din = w.din.data();
            for (int j = 0; j < layer.in; ++j) din[j] = 0.0;
            for (int o = 0; o < layer.out; ++o) {
                const double d = dout[o];
                if (d == 0.0) continue;
                const double* row = layer.weight + static_cast<std::size_t>(o) * layer.in;
                for (int j = 0; j < layer.in; ++j) din[j] += row[j] * d;
            }
            if (l > 0) {
                const double* zprev = zs[l - 1];
                for (int j = 0; j < layer.in; ++j) dout[j] = din[j] * activate_grad(m.hidden, zprev[j]);
            } else {
                // Mean aggregation spreads 1/3 to each plane, bilinear weights
                // scatter into the grid.
                for (int p = 0; p < 3; ++p) {
                    const BilinearStencil& s = w.stencils[3 * i + p];
                    double* base = grad + p * m.plane_size;
                    for (int k = 0; k < 4; ++k) {
                        if (s.weights[k] == 0.0) continue;
                        const double scale = s.weights[k] / 3.0;
                        double* g = base + s.offsets[k];
                        for (int ch = 0; ch < C; ++ch) g[ch] += scale * din[ch];
                    }
                }
            }
        }
    }
}

double sign(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

struct RayIndex {
    std::size_t view;
    std::size_t pixel;
};

std::vector<RayIndex> flatten_rays(const SamplePlan& plan) {
    std::vector<RayIndex> rays;
    for (std::size_t v = 0; v < plan.views.size(); ++v)
        for (std::size_t p = 0; p < plan.views[v].size(); ++p) rays.push_back({v, p});
    return rays;
}

constexpr std::size_t kReductionChunks = 32;

} // namespace

SamplePlan plan_samples(const ParameterSet& params, std::span<const SupervisionView> views,
                        const SamplingConfig& sampling, std::uint64_t seed, int threads) {
    sampling.validate();
    const BasicTriplane<double> grid = params.triplane();
    const BasicDecoder<double> dec = params.decoder();
    SamplePlan plan;
    plan.background = sampling.background;
    plan.views.resize(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
        const SupervisionView& view = views[v];
        Intrinsics intr = view.camera.intrinsics;
        intr.width = view.target.width;
        intr.height = view.target.height;
        intr.validate();
        const Transform c2w = view.camera.camera_to_world();
        auto& rays = plan.views[v];
        rays.resize(static_cast<std::size_t>(intr.width) * intr.height);
        parallel_for(static_cast<std::size_t>(intr.height), threads, [&](std::size_t row) {
            TriplaneEvaluator<double> eval(grid, dec);
            for (int col = 0; col < intr.width; ++col) {
                const std::size_t p = row * intr.width + col;
                Rng rng = Rng::derive(seed, (static_cast<std::uint64_t>(v) << 32) + p);
                PlannedRay& ray = rays[p];
                ray.origin = c2w.translation;
                ray.direction = pixel_direction(c2w, intr, static_cast<double>(row), col);
                ray.far = view.camera.far;
                ray.ts = plan_ray(eval, ray.origin, ray.direction, view.camera.near, view.camera.far, sampling, rng);
            }
        });
    }
    return plan;
}

LossTerms evaluate_loss(const ParameterSet& params, const SamplePlan& plan, std::span<const SupervisionView> views,
                        const DistillLossConfig& cfg, const std::vector<double>* target_triplane,
                        std::vector<double>* grad, int threads) {
    cfg.validate();
    if (plan.views.size() != views.size()) throw DomainError("loss: plan and views differ in count");
    const BasicDecoder<double> tags = params.decoder();
    const Model model(params, tags);
    const int F = model.feature_width;

    for (std::size_t v = 0; v < views.size(); ++v) {
        const RenderOutput& t = views[v].target;
        if (t.pixels() != plan.views[v].size()) throw DomainError("loss: target size does not match plan");
        if (t.feature_channels < 3) throw DomainError("loss: target needs at least 3 channels");
        for (float x : t.features)
            if (!std::isfinite(x)) throw DomainError("loss: target is not finite");
    }

    const std::vector<RayIndex> rays = flatten_rays(plan);
    const std::size_t chunks = std::min(kReductionChunks, std::max<std::size_t>(rays.size(), 1));
    std::vector<double> color_part(chunks, 0.0), feature_part(chunks, 0.0);
    std::vector<std::vector<double>> grad_part(grad ? chunks : 0);
    const std::array<double, 3> background = plan.background;

    parallel_for(chunks, threads, [&](std::size_t chunk) {
        const std::size_t begin = rays.size() * chunk / chunks;
        const std::size_t end = rays.size() * (chunk + 1) / chunks;
        if (grad) grad_part[chunk].assign(params.size(), 0.0);
        RayWork work;
        std::vector<double> gpix(F);
        double color_sum = 0.0, feature_sum = 0.0;
        for (std::size_t r = begin; r < end; ++r) {
            const auto [v, p] = rays[r];
            const SupervisionView& view = views[v];
            const PlannedRay& ray = plan.views[v][p];
            forward_ray(model, ray, work);
            const std::vector<double> w = composite_weights(work.sigma, ray.ts, ray.far);

            std::vector<double> pix(F, 0.0);
            double wsum = 0.0;
            for (std::size_t i = 0; i < ray.ts.size(); ++i) {
                for (int c = 0; c < F; ++c) pix[c] += w[i] * work.feat[i * F + c];
                wsum += w[i];
            }
            for (int c = 0; c < std::min(F, 3); ++c) pix[c] += (1.0 - wsum) * background[c];

            const double lambda = cfg.view_weight(view.role);
            const std::size_t P = view.target.pixels();
            const int fmin = std::min(F, view.target.feature_channels);
            const double col_scale = lambda * cfg.color_weight / (3.0 * P);
            const double feat_scale = fmin > 3 ? lambda * cfg.feature_weight / (static_cast<double>(fmin - 3) * P) : 0.0;
            std::fill(gpix.begin(), gpix.end(), 0.0);
            for (int c = 0; c < fmin; ++c) {
                const double r_c = pix[c] - view.target.features[c * P + p];
                const double scale = c < 3 ? col_scale : feat_scale;
                if (c < 3)
                    color_sum += scale * std::abs(r_c);
                else
                    feature_sum += scale * std::abs(r_c);
                gpix[c] = scale * sign(r_c);
            }
            if (grad) backward_ray(model, ray, work, w, gpix, background, grad_part[chunk].data());
        }
        color_part[chunk] = color_sum;
        feature_part[chunk] = feature_sum;
    });

    LossTerms terms;
    for (std::size_t c = 0; c < chunks; ++c) {
        terms.color += color_part[c];
        terms.feature += feature_part[c];
    }
    if (grad) {
        grad->assign(params.size(), 0.0);
        for (std::size_t c = 0; c < chunks; ++c)
            for (std::size_t i = 0; i < params.size(); ++i) (*grad)[i] += grad_part[c][i];
    }

    if (target_triplane) {
        const std::size_t N = params.triplane_size();
        if (target_triplane->size() != N) throw DomainError("loss: target triplane size mismatch");
        const double scale = cfg.triplane_weight / static_cast<double>(N);
        const auto& vals = params.values();
        for (std::size_t i = 0; i < N; ++i) {
            const double r = vals[i] - (*target_triplane)[i];
            terms.triplane += scale * std::abs(r);
            if (grad) (*grad)[i] += scale * sign(r);
        }
    }
    terms.total = terms.color + terms.feature + terms.triplane;

    if (!std::isfinite(terms.color)) throw NumericalError("loss term 'color' is not finite");
    if (!std::isfinite(terms.feature)) throw NumericalError("loss term 'feature' is not finite");
    if (!std::isfinite(terms.triplane)) throw NumericalError("loss term 'triplane' is not finite");
    return terms;
}

LossAndGrad loss_and_grad(const ParameterSet& params, std::span<const SupervisionView> views,
                          const DistillLossConfig& cfg, const SamplingConfig& sampling, std::uint64_t seed,
                          const std::vector<double>* target_triplane, int threads) {
    LossAndGrad out;
    out.plan = plan_samples(params, views, sampling, seed, threads);
    out.loss = evaluate_loss(params, out.plan, views, cfg, target_triplane, &out.grad, threads);
    return out;
}

std::vector<RenderOutput> render_plan(const ParameterSet& params, const SamplePlan& plan,
                                      std::span<const SupervisionView> views, int threads) {
    const BasicDecoder<double> tags = params.decoder();
    const Model model(params, tags);
    const int F = model.feature_width;
    std::vector<RenderOutput> outs(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
        RenderOutput& o = outs[v];
        o.width = views[v].target.width;
        o.height = views[v].target.height;
        o.feature_channels = F;
        const std::size_t P = o.pixels();
        o.features.assign(P * F, 0.0f);
        o.depth.assign(P, 0.0f);
        o.opacity.assign(P, 0.0f);
        parallel_for(P, threads, [&](std::size_t p) {
            RayWork work;
            const PlannedRay& ray = plan.views[v][p];
            forward_ray(model, ray, work);
            const Composited px = composite(work.sigma, work.feat, ray.ts, ray.far, plan.background);
            for (int c = 0; c < F; ++c) o.features[c * P + p] = static_cast<float>(px.feature[c]);
            o.depth[p] = static_cast<float>(px.depth);
            o.opacity[p] = static_cast<float>(px.opacity);
        });
    }
    return outs;
}

FiniteDiffReport finite_diff_check(const LossFn& loss_fn, std::span<const double> params, double h, int n_probe,
                                   Rng& rng, std::span<const std::size_t> candidates, double eps) {
    if (!(h > 0.0)) throw DomainError("finite_diff_check: step must be positive");
    std::vector<double> x(params.begin(), params.end());
    std::vector<double> grad;
    loss_fn(x, &grad);
    if (grad.size() != x.size()) throw DomainError("finite_diff_check: gradient size mismatch");

    std::vector<std::size_t> pool;
    if (candidates.empty()) {
        pool.resize(x.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
    } else {
        pool.assign(candidates.begin(), candidates.end());
    }
    const std::size_t count = std::min<std::size_t>(std::max(n_probe, 0), pool.size());
    // Partial Fisher-Yates: the first `count` entries become the probes.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next() % (pool.size() - i));
        std::swap(pool[i], pool[j]);
    }

    FiniteDiffReport report;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t idx = pool[k];
        const double saved = x[idx];
        x[idx] = saved + h;
        const double up = loss_fn(x, nullptr);
        x[idx] = saved - h;
        const double down = loss_fn(x, nullptr);
        x[idx] = saved;
        ProbeResult r;
        r.index = idx;
        r.analytic = grad[idx];
        r.numeric = (up - down) / (2.0 * h);
        r.rel_error = std::abs(r.analytic - r.numeric) / (std::abs(r.analytic) + std::abs(r.numeric) + eps);
        if (k == 0 || r.rel_error > report.max_rel_error) {
            report.max_rel_error = r.rel_error;
            report.worst_index = idx;
        }
        report.probes.push_back(r);
    }
    return report;
}

} // namespace tri
