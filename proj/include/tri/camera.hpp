#pragma once

// Orbit cameras, pinhole rays, and the randomized camera distributions used
// to synthesize supervision views.
//
// Conventions:
//  * World is y-up. An orbit camera at pitch = yaw = 0 sits at
//    look_at + (0, 0, radius) and looks down -z. Positive pitch raises the
//    camera, positive yaw swings it toward +x.
//  * Camera frame is x right, y down, z forward (optical axis).
//  * `focal` is EG3D's field-of-view parameter in degrees; the pixel focal
//    length is width / (sqrt(2) * tan(focal / 2)). 18.83 gives a normalized
//    focal of ~4.26.
//  * The principal point is given in pixels of a 512-wide reference image
//    and scales by width/512 (height/512 for cy).

#include <cstdint>
#include <vector>

#include "tri/linalg.hpp"
#include "tri/rng.hpp"

namespace tri {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDefaultFocal = 18.83;
inline constexpr double kDefaultRadius = 2.7;
inline constexpr double kDefaultPrincipal = 256.0;
inline constexpr double kReferenceWidth = 512.0;

inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

struct Intrinsics {
    double focal = kDefaultFocal;
    double cx = kDefaultPrincipal;
    double cy = kDefaultPrincipal;
    int width = 128;
    int height = 128;

    double pixel_focal() const;
    double principal_x() const { return cx * width / kReferenceWidth; }
    double principal_y() const { return cy * height / kReferenceWidth; }
    void validate() const;

    bool operator==(const Intrinsics&) const = default;
};

struct OrbitPose {
    double pitch = 0; // radians
    double yaw = 0;
    double roll = 0;
    double radius = kDefaultRadius;
    Vec3 look_at{};

    static OrbitPose from_degrees(double pitch_deg, double yaw_deg, double roll_deg = 0,
                                  double radius = kDefaultRadius) {
        return {deg2rad(pitch_deg), deg2rad(yaw_deg), deg2rad(roll_deg), radius, {}};
    }
};

/// Camera-to-world transform of an orbit pose. Throws DomainError if
/// radius <= 0 or any angle is non-finite.
Transform pose_from_orbit(const OrbitPose& p);

struct NearFar {
    double near = 0;
    double far = 0;
};

/// Integration bracket that covers the [-box_scale, box_scale]^3 cube from
/// any direction: radius -/+ sqrt(3) * box_scale, near clamped to 0.05.
NearFar default_near_far(double radius, double box_scale);

struct RayBundle {
    int width = 0;
    int height = 0;
    std::vector<Vec3> origins;    // row-major, one per pixel
    std::vector<Vec3> directions; // unit length
    double near = 0;
    double far = 0;
};

/// Unit ray direction through the centre of pixel (row, col).
Vec3 pixel_direction(const Transform& c2w, const Intrinsics& intr, double row, double col);

RayBundle generate_rays(const Transform& c2w, const Intrinsics& intr, double near, double far);

/// Everything needed to render one view.
struct Camera {
    OrbitPose pose;
    Intrinsics intrinsics;
    double near = 0;
    double far = 0;

    /// Pose + intrinsics with the default near/far for `box_scale`.
    static Camera make(const OrbitPose& pose, const Intrinsics& intr, double box_scale = 1.0);
    Transform camera_to_world() const { return pose_from_orbit(pose); }
};

struct NormalParam {
    double mean = 0;
    double stddev = 0;
};

struct AngleRange {
    double min_deg = 0;
    double max_deg = 0;
};

/// Camera sampling distributions. Pitch and yaw are uniform over their
/// ranges; the other parameters are normal.
struct AugmentationConfig {
    NormalParam focal{kDefaultFocal, 1.0};
    NormalParam radius{kDefaultRadius, 0.1};
    NormalParam principal{kDefaultPrincipal, 14.0}; // per axis, 512-reference pixels
    NormalParam roll_deg{0.0, 2.0};
    AngleRange reference_pitch{-26.0, 26.0};
    AngleRange reference_yaw{-49.0, 49.0};
    AngleRange multiview_pitch{-26.0, 26.0};
    AngleRange multiview_yaw{-36.0, 36.0};

    static AugmentationConfig ffhq();
    static AugmentationConfig afhq();
    /// All standard deviations zero: the fixed EG3D camera.
    static AugmentationConfig fixed();

    void validate() const;
};

struct CameraSample {
    OrbitPose pose;
    Intrinsics intrinsics;
};

/// Augmented input-view camera. Draw order: pitch, yaw, focal, radius, cx,
/// cy, roll.
CameraSample sample_reference_camera(const AugmentationConfig& cfg, Rng& rng, int width = 128, int height = 128);

/// Supervision-view camera: fixed intrinsics, radius and roll; pitch then
/// yaw drawn from the multiview ranges.
CameraSample sample_multiview_camera(const AugmentationConfig& cfg, Rng& rng, int width = 128, int height = 128);

} // namespace tri
