#include "tri/camera.hpp"

#include <algorithm>
#include <cmath>

#include "tri/error.hpp"

namespace tri {

double Intrinsics::pixel_focal() const {
    return width / (std::sqrt(2.0) * std::tan(deg2rad(focal) * 0.5));
}

void Intrinsics::validate() const {
    if (!(focal > 0.0) || !(focal < 180.0)) throw DomainError("intrinsics: focal must lie in (0, 180)");
    if (!std::isfinite(cx) || !std::isfinite(cy)) throw DomainError("intrinsics: principal point must be finite");
    if (width < 1 || height < 1) throw DomainError("intrinsics: image size must be positive");
}

Transform pose_from_orbit(const OrbitPose& p) {
    if (!(p.radius > 0.0) || !std::isfinite(p.radius)) throw DomainError("orbit pose: radius must be positive");
    if (!std::isfinite(p.pitch) || !std::isfinite(p.yaw) || !std::isfinite(p.roll) || !p.look_at.finite())
        throw DomainError("orbit pose: angles and look_at must be finite");

    const double cp = std::cos(p.pitch), sp = std::sin(p.pitch);
    const double cyw = std::cos(p.yaw), syw = std::sin(p.yaw);
    const Vec3 offset{p.radius * cp * syw, p.radius * sp, p.radius * cp * cyw};
    const Vec3 position = p.look_at + offset;
    const Vec3 forward = (offset * -1.0).normalized();

    // Azimuthal right vector; well defined even at the poles.
    const Vec3 right{cyw, 0.0, -syw};
    const Vec3 up = right.cross(forward);
    const Vec3 down = up * -1.0;

    // Roll rotates the image plane about the optical axis.
    const double cr = std::cos(p.roll), sr = std::sin(p.roll);
    const Vec3 x_axis = right * cr + down * sr;
    const Vec3 y_axis = down * cr - right * sr;

    Transform t;
    const Vec3 cols[3] = {x_axis, y_axis, forward};
    for (int c = 0; c < 3; ++c) {
        t.rotation[0][c] = cols[c].x;
        t.rotation[1][c] = cols[c].y;
        t.rotation[2][c] = cols[c].z;
    }
    t.translation = position;
    return t;
}

NearFar default_near_far(double radius, double box_scale) {
    const double half_diag = std::sqrt(3.0) * box_scale;
    return {std::max(radius - half_diag, 0.05), radius + half_diag};
}

Vec3 pixel_direction(const Transform& c2w, const Intrinsics& intr, double row, double col) {
    const double f = intr.pixel_focal();
    const Vec3 d_cam{(col + 0.5 - intr.principal_x()) / f, (row + 0.5 - intr.principal_y()) / f, 1.0};
    return c2w.apply_rotation(d_cam.normalized()).normalized();
}

RayBundle generate_rays(const Transform& c2w, const Intrinsics& intr, double near, double far) {
    intr.validate();
    if (!(near >= 0.0) || !(near < far) || !std::isfinite(far)) throw DomainError("rays: need 0 <= near < far");
    RayBundle b;
    b.width = intr.width;
    b.height = intr.height;
    b.near = near;
    b.far = far;
    const std::size_t n = static_cast<std::size_t>(intr.width) * intr.height;
    b.origins.assign(n, c2w.translation);
    b.directions.resize(n);
    for (int r = 0; r < intr.height; ++r)
        for (int c = 0; c < intr.width; ++c)
            b.directions[static_cast<std::size_t>(r) * intr.width + c] = pixel_direction(c2w, intr, r, c);
    return b;
}

Camera Camera::make(const OrbitPose& pose, const Intrinsics& intr, double box_scale) {
    const NearFar nf = default_near_far(pose.radius, box_scale);
    return Camera{pose, intr, nf.near, nf.far};
}

AugmentationConfig AugmentationConfig::ffhq() { return AugmentationConfig{}; }

AugmentationConfig AugmentationConfig::afhq() {
    AugmentationConfig c;
    c.focal.stddev = 1.5;
    c.principal.stddev = 25.0;
    c.roll_deg.stddev = 6.0;
    return c;
}

AugmentationConfig AugmentationConfig::fixed() {
    AugmentationConfig c;
    c.focal.stddev = 0.0;
    c.radius.stddev = 0.0;
    c.principal.stddev = 0.0;
    c.roll_deg.stddev = 0.0;
    return c;
}

void AugmentationConfig::validate() const {
    for (const NormalParam* p : {&focal, &radius, &principal, &roll_deg})
        if (!(p->stddev >= 0.0) || !std::isfinite(p->mean)) throw DomainError("augmentation: invalid distribution");
    for (const AngleRange* r : {&reference_pitch, &reference_yaw, &multiview_pitch, &multiview_yaw})
        if (!(r->min_deg <= r->max_deg)) throw DomainError("augmentation: range bounds out of order");
}

namespace {

double draw_angle(const AngleRange& r, Rng& rng) {
    if (r.min_deg == r.max_deg) return deg2rad(r.min_deg);
    return deg2rad(rng.uniform(r.min_deg, r.max_deg));
}

} // namespace

CameraSample sample_reference_camera(const AugmentationConfig& cfg, Rng& rng, int width, int height) {
    cfg.validate();
    CameraSample s;
    s.pose.pitch = draw_angle(cfg.reference_pitch, rng);
    s.pose.yaw = draw_angle(cfg.reference_yaw, rng);
    s.intrinsics.focal = std::clamp(rng.normal(cfg.focal.mean, cfg.focal.stddev), 1.0, 170.0);
    s.pose.radius = std::max(rng.normal(cfg.radius.mean, cfg.radius.stddev), 0.1);
    s.intrinsics.cx = rng.normal(cfg.principal.mean, cfg.principal.stddev);
    s.intrinsics.cy = rng.normal(cfg.principal.mean, cfg.principal.stddev);
    s.pose.roll = deg2rad(rng.normal(cfg.roll_deg.mean, cfg.roll_deg.stddev));
    s.intrinsics.width = width;
    s.intrinsics.height = height;
    return s;
}

CameraSample sample_multiview_camera(const AugmentationConfig& cfg, Rng& rng, int width, int height) {
    cfg.validate();
    CameraSample s;
    s.pose.pitch = draw_angle(cfg.multiview_pitch, rng);
    s.pose.yaw = draw_angle(cfg.multiview_yaw, rng);
    s.pose.radius = cfg.radius.mean;
    s.pose.roll = deg2rad(cfg.roll_deg.mean);
    s.intrinsics.focal = cfg.focal.mean;
    s.intrinsics.cx = cfg.principal.mean;
    s.intrinsics.cy = cfg.principal.mean;
    s.intrinsics.width = width;
    s.intrinsics.height = height;
    return s;
}

} // namespace tri
