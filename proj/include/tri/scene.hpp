#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "tri/camera.hpp"
#include "tri/render.hpp"

namespace tri {

enum class SceneKind { empty, constant, sphere, two_sphere, slab, gaussian_blob };

const char* scene_kind_name(SceneKind k);
/// Throws DomainError for unknown names.
SceneKind parse_scene_kind(std::string_view name);

struct SceneParams {
    double density = 1e3;          // interior density (peak density for the blob)
    Vec3 center{};                 // sphere / blob / first sphere
    double radius = 0.25;          // sphere radius; second sphere uses 0.7x
    Vec3 center2{0.12, 0.04, -0.08};
    double slab_front = 0.2;       // slab occupies z in [front - thickness, front]
    double slab_thickness = 0.3;
    double blob_width = 0.15;      // Gaussian standard deviation
};

/// Analytic density and color over space. Colors vary with position so a
/// single view does not determine the whole object.
class ProceduralScene {
public:
    ProceduralScene(SceneKind kind, SceneParams params) : kind_(kind), params_(params) {}

    SceneKind kind() const { return kind_; }
    const SceneParams& params() const { return params_; }

    double density(const Vec3& x) const;
    std::array<double, 3> color(const Vec3& x) const;

    /// Field evaluator (3 feature channels = color) for render_field.
    struct Evaluator {
        const ProceduralScene* scene;
        int feature_width() const { return 3; }
        void operator()(std::span<const Vec3> points, std::vector<double>& sigma, std::vector<double>& features) const;
    };
    Evaluator evaluator() const { return Evaluator{this}; }

    /// Same sampler and compositor as triplane rendering.
    RenderOutput render(const Camera& camera, const SamplingConfig& cfg, std::uint64_t seed, int threads = 1) const;

    /// Reference integral along one ray: `steps` equal segments, each treated
    /// as a homogeneous slab with closed-form absorption and expected depth.
    Composited oracle_ray(const Vec3& origin, const Vec3& dir, double near, double far, int steps,
                          const std::array<double, 3>& background) const;

    /// Oracle image at cfg.width x cfg.height (sample counts in cfg unused).
    RenderOutput render_oracle(const Camera& camera, const SamplingConfig& cfg, int steps = 16384,
                               int threads = 1) const;

private:
    SceneKind kind_;
    SceneParams params_;
};

ProceduralScene make_procedural_scene(SceneKind kind, const SceneParams& params = {});
ProceduralScene make_procedural_scene(std::string_view kind, const SceneParams& params = {});

} // namespace tri
