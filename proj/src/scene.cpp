#include "tri/scene.hpp"

#include <algorithm>
#include <cmath>

#include "tri/error.hpp"
#include "tri/parallel.hpp"

namespace tri {

const char* scene_kind_name(SceneKind k) {
    switch (k) {
    case SceneKind::empty: return "empty";
    case SceneKind::constant: return "constant";
    case SceneKind::sphere: return "sphere";
    case SceneKind::two_sphere: return "two_sphere";
    case SceneKind::slab: return "slab";
    case SceneKind::gaussian_blob: return "gaussian_blob";
    }
    return "?";
}

SceneKind parse_scene_kind(std::string_view name) {
    for (SceneKind k : {SceneKind::empty, SceneKind::constant, SceneKind::sphere, SceneKind::two_sphere,
                        SceneKind::slab, SceneKind::gaussian_blob})
        if (name == scene_kind_name(k)) return k;
    throw DomainError("unknown scene kind '" + std::string(name) + "'");
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::array<double, 3> radial_color(const Vec3& x, const Vec3& c, double r) {
    const Vec3 d = (x - c) * (1.0 / r);
    return {clamp01(0.5 + 0.5 * d.x), clamp01(0.5 + 0.5 * d.y), clamp01(0.5 + 0.5 * d.z)};
}

} // namespace

double ProceduralScene::density(const Vec3& x) const {
    const SceneParams& p = params_;
    switch (kind_) {
    case SceneKind::empty: return 0.0;
    case SceneKind::constant: return p.density;
    case SceneKind::sphere: return (x - p.center).dot(x - p.center) <= p.radius * p.radius ? p.density : 0.0;
    case SceneKind::two_sphere: {
        const double r2 = 0.7 * p.radius;
        const bool in1 = (x - p.center).dot(x - p.center) <= p.radius * p.radius;
        const bool in2 = (x - p.center2).dot(x - p.center2) <= r2 * r2;
        return in1 || in2 ? p.density : 0.0;
    }
    case SceneKind::slab: return x.z <= p.slab_front && x.z >= p.slab_front - p.slab_thickness ? p.density : 0.0;
    case SceneKind::gaussian_blob: {
        const double d2 = (x - p.center).dot(x - p.center);
        return p.density * std::exp(-d2 / (2.0 * p.blob_width * p.blob_width));
    }
    }
    return 0.0;
}

std::array<double, 3> ProceduralScene::color(const Vec3& x) const {
    const SceneParams& p = params_;
    switch (kind_) {
    case SceneKind::two_sphere: {
        const bool first = (x - p.center).dot(x - p.center) <= p.radius * p.radius;
        if (first) return radial_color(x, p.center, p.radius);
        const auto c = radial_color(x, p.center2, 0.7 * p.radius);
        return {c[2], c[0], c[1]};
    }
    case SceneKind::slab: return {clamp01(0.5 + 0.5 * x.x), clamp01(0.5 + 0.5 * x.y), 0.8};
    case SceneKind::gaussian_blob: return radial_color(x, p.center, 3.0 * p.blob_width);
    default: return radial_color(x, p.center, p.radius);
    }
}

void ProceduralScene::Evaluator::operator()(std::span<const Vec3> points, std::vector<double>& sigma,
                                            std::vector<double>& features) const {
    sigma.resize(points.size());
    features.resize(points.size() * 3);
    for (std::size_t i = 0; i < points.size(); ++i) {
        sigma[i] = scene->density(points[i]);
        const auto c = scene->color(points[i]);
        std::copy(c.begin(), c.end(), features.begin() + i * 3);
    }
}

RenderOutput ProceduralScene::render(const Camera& camera, const SamplingConfig& cfg, std::uint64_t seed,
                                     int threads) const {
    return render_field([this] { return evaluator(); }, 3, camera, cfg, seed, threads);
}

Composited ProceduralScene::oracle_ray(const Vec3& origin, const Vec3& dir, double near, double far, int steps,
                                       const std::array<double, 3>& background) const {
    if (steps < 1 || !(near < far)) throw DomainError("oracle_ray: invalid quadrature");
    const double h = (far - near) / steps;
    double transmittance = 1.0;
    double acc[3] = {0, 0, 0};
    double depth_acc = 0.0;
    for (int i = 0; i < steps && transmittance > 1e-300; ++i) {
        const double a = near + i * h;
        const Vec3 mid = origin + dir * (a + 0.5 * h);
        const double s = density(mid);
        if (s <= 0.0) continue;
        const double tau = s * h;
        const double absorbed = transmittance * -std::expm1(-tau);
        // Mean termination depth inside a homogeneous segment [a, a + h].
        const double mean_t = tau < 1e-6 ? a + 0.5 * h : a + 1.0 / s - h * std::exp(-tau) / -std::expm1(-tau);
        const auto c = color(mid);
        for (int k = 0; k < 3; ++k) acc[k] += absorbed * c[k];
        depth_acc += absorbed * mean_t;
        transmittance *= std::exp(-tau);
    }
    Composited out;
    out.opacity = 1.0 - transmittance;
    out.feature.resize(3);
    for (int k = 0; k < 3; ++k) out.feature[k] = acc[k] + transmittance * background[k];
    out.depth = out.opacity > 1e-10 ? depth_acc / out.opacity : far;
    return out;
}

RenderOutput ProceduralScene::render_oracle(const Camera& camera, const SamplingConfig& cfg, int steps,
                                            int threads) const {
    Intrinsics intr = camera.intrinsics;
    intr.width = cfg.width;
    intr.height = cfg.height;
    const Transform c2w = camera.camera_to_world();
    RenderOutput out;
    out.width = cfg.width;
    out.height = cfg.height;
    out.feature_channels = 3;
    const std::size_t P = out.pixels();
    out.features.assign(3 * P, 0.0f);
    out.depth.assign(P, 0.0f);
    out.opacity.assign(P, 0.0f);
    parallel_for(static_cast<std::size_t>(cfg.height), threads, [&](std::size_t row) {
        for (int col = 0; col < cfg.width; ++col) {
            const std::size_t p = row * cfg.width + col;
            const Vec3 dir = pixel_direction(c2w, intr, static_cast<double>(row), col);
            const Composited px = oracle_ray(c2w.translation, dir, camera.near, camera.far, steps, cfg.background);
            for (int c = 0; c < 3; ++c) out.features[c * P + p] = static_cast<float>(px.feature[c]);
            out.depth[p] = static_cast<float>(px.depth);
            out.opacity[p] = static_cast<float>(px.opacity);
        }
    });
    return out;
}

ProceduralScene make_procedural_scene(SceneKind kind, const SceneParams& params) {
    if (!(params.density >= 0.0)) throw DomainError("scene density must be non-negative");
    if (!(params.radius > 0.0) || !(params.blob_width > 0.0) || !(params.slab_thickness > 0.0))
        throw DomainError("scene sizes must be positive");
    return ProceduralScene(kind, params);
}

ProceduralScene make_procedural_scene(std::string_view kind, const SceneParams& params) {
    return make_procedural_scene(parse_scene_kind(kind), params);
}

} // namespace tri
