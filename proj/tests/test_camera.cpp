#include <gtest/gtest.h>

#include <cmath>

#include "tri/camera.hpp"
#include "tri/error.hpp"

using namespace tri;

namespace {

void expect_rigid(const Transform& t) {
    const Mat3& R = t.rotation;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += R[k][i] * R[k][j];
            EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-9);
        }
    EXPECT_NEAR(det(R), 1.0, 1e-9);
}

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

// Focal whose pixel focal is `scale` times that of `focal`.
double focal_scaled(double focal, double scale) {
    return 2.0 * rad2deg(std::atan(std::tan(deg2rad(focal) / 2.0) / scale));
}

} // namespace

TEST(CameraDefaults, SupplementConstants) {
    const Intrinsics in;
    EXPECT_EQ(in.focal, 18.83);
    EXPECT_EQ(in.cx, 256.0);
    EXPECT_EQ(in.cy, 256.0);
    EXPECT_EQ(OrbitPose{}.radius, 2.7);
    EXPECT_EQ(OrbitPose{}.roll, 0.0);
}

TEST(PoseFromOrbit, FrontalCamera) {
    const Transform t = pose_from_orbit(OrbitPose{});
    EXPECT_NEAR(t.translation.x, 0.0, 1e-12);
    EXPECT_NEAR(t.translation.y, 0.0, 1e-12);
    EXPECT_NEAR(t.translation.z, 2.7, 1e-12);
    const Vec3 fwd = t.column(2);
    EXPECT_NEAR(fwd.z, -1.0, 1e-12);
    expect_rigid(t);
}

TEST(PoseFromOrbit, AntipodalYaw) {
    const Transform t = pose_from_orbit(OrbitPose::from_degrees(0, 180));
    EXPECT_NEAR(t.translation.z, -2.7, 1e-12);
    EXPECT_NEAR(t.translation.x, 0.0, 1e-12);
    const Vec3 to_origin = (t.translation * -1.0).normalized();
    EXPECT_NEAR(t.column(2).dot(to_origin), 1.0, 1e-12);
}

TEST(PoseFromOrbit, RollRotatesUpAboutAxis) {
    const Transform a = pose_from_orbit(OrbitPose::from_degrees(10, 20, 0));
    const Transform b = pose_from_orbit(OrbitPose::from_degrees(10, 20, 90));
    EXPECT_NEAR((a.translation - b.translation).norm(), 0.0, 1e-12);
    EXPECT_NEAR(a.column(2).dot(b.column(2)), 1.0, 1e-12);
    EXPECT_NEAR(a.column(1).dot(b.column(1)), 0.0, 1e-12);
    // Image-plane rotation by +90 degrees maps x onto y.
    EXPECT_NEAR(b.column(0).dot(a.column(1)), 1.0, 1e-12);
}

TEST(PoseFromOrbit, PositiveYawAndPitchDirections) {
    const Transform t = pose_from_orbit(OrbitPose::from_degrees(20, 30));
    EXPECT_GT(t.translation.x, 0.0);
    EXPECT_GT(t.translation.y, 0.0);
}

TEST(PoseFromOrbit, RigidAndAtRadiusEverywhere) {
    Rng rng(3);
    for (int k = 0; k < 500; ++k) {
        OrbitPose p{rng.uniform(-1.5, 1.5), rng.uniform(-3.1, 3.1), rng.uniform(-3.1, 3.1), rng.uniform(0.5, 5.0),
                    {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
        const Transform t = pose_from_orbit(p);
        expect_rigid(t);
        EXPECT_NEAR((t.translation - p.look_at).norm(), p.radius, 1e-9);
        EXPECT_NEAR(t.column(2).dot((p.look_at - t.translation).normalized()), 1.0, 1e-9);
    }
}

TEST(PoseFromOrbit, RejectsBadRadius) {
    OrbitPose p;
    p.radius = 0.0;
    EXPECT_THROW(pose_from_orbit(p), DomainError);
    p.radius = -1.0;
    EXPECT_THROW(pose_from_orbit(p), DomainError);
}

TEST(Intrinsics, PrincipalPointScalesWithImage) {
    Intrinsics in;
    in.cx = 300;
    in.cy = 200;
    in.width = 128;
    in.height = 64;
    EXPECT_DOUBLE_EQ(in.principal_x(), 75.0);
    EXPECT_DOUBLE_EQ(in.principal_y(), 25.0);
}

TEST(Intrinsics, DefaultNormalisedFocal) {
    Intrinsics in;
    in.width = 512;
    EXPECT_NEAR(in.pixel_focal() / 512.0, 4.2647, 1e-3);
}

TEST(GenerateRays, PrincipalRayIsOpticalAxis) {
    Intrinsics in;
    in.cx = 270;
    in.cy = 240;
    const Transform t = pose_from_orbit(OrbitPose::from_degrees(5, -12, 7));
    const Vec3 d = pixel_direction(t, in, in.principal_y() - 0.5, in.principal_x() - 0.5);
    EXPECT_NEAR(d.dot(t.column(2)), 1.0, 1e-12);
}

TEST(GenerateRays, DoublingPixelFocalHalvesCornerAngle) {
    const Transform t = pose_from_orbit(OrbitPose{});
    Intrinsics a;
    Intrinsics b = a;
    b.focal = focal_scaled(a.focal, 2.0);
    ASSERT_NEAR(b.pixel_focal(), 2.0 * a.pixel_focal(), 1e-9);
    const Vec3 axis = t.column(2);
    const double ta = angle_between(pixel_direction(t, a, 0, 0), axis);
    const double tb = angle_between(pixel_direction(t, b, 0, 0), axis);
    EXPECT_NEAR(tb / ta, 0.5, 0.005);
}

TEST(GenerateRays, UnitDirections) {
    Intrinsics in;
    in.width = 16;
    in.height = 16;
    const RayBundle b = generate_rays(pose_from_orbit(OrbitPose::from_degrees(3, 4, 5)), in, 1.0, 4.0);
    ASSERT_EQ(b.directions.size(), 256u);
    for (const Vec3& d : b.directions) EXPECT_NEAR(d.norm(), 1.0, 1e-6);
    EXPECT_THROW(generate_rays(pose_from_orbit(OrbitPose{}), in, 4.0, 1.0), DomainError);
}

TEST(GenerateRays, InvariantToResolutionRescaling) {
    const Transform t = pose_from_orbit(OrbitPose::from_degrees(-8, 15, 3));
    Intrinsics a;
    a.width = 32;
    a.height = 32;
    a.cx = 280;
    Intrinsics b = a;
    b.width = 64;
    b.height = 64;
    // Pixel (r, c) centre in a sits at (2r + 0.5, 2c + 0.5) in b.
    for (int r = 0; r < 32; r += 5)
        for (int c = 0; c < 32; c += 7) {
            const Vec3 da = pixel_direction(t, a, r, c);
            const Vec3 db = pixel_direction(t, b, 2.0 * r + 0.5, 2.0 * c + 0.5);
            EXPECT_NEAR((da - db).norm(), 0.0, 1e-12);
        }
}

TEST(NearFar, CoversTheCube) {
    const NearFar nf = default_near_far(2.7, 1.0);
    EXPECT_NEAR(nf.near, 2.7 - std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(nf.far, 2.7 + std::sqrt(3.0), 1e-12);
    EXPECT_EQ(default_near_far(1.0, 1.0).near, 0.05);
}

TEST(Augmentation, ConfigsMatchSupplement) {
    const AugmentationConfig f = AugmentationConfig::ffhq();
    EXPECT_EQ(f.focal.mean, 18.83);
    EXPECT_EQ(f.focal.stddev, 1.0);
    EXPECT_EQ(f.radius.mean, 2.7);
    EXPECT_EQ(f.radius.stddev, 0.1);
    EXPECT_EQ(f.principal.mean, 256.0);
    EXPECT_EQ(f.principal.stddev, 14.0);
    EXPECT_EQ(f.roll_deg.stddev, 2.0);
    EXPECT_EQ(f.reference_pitch.max_deg, 26.0);
    EXPECT_EQ(f.reference_yaw.max_deg, 49.0);
    EXPECT_EQ(f.multiview_pitch.max_deg, 26.0);
    EXPECT_EQ(f.multiview_yaw.max_deg, 36.0);
    const AugmentationConfig a = AugmentationConfig::afhq();
    EXPECT_EQ(a.focal.stddev, 1.5);
    EXPECT_EQ(a.radius.stddev, 0.1);
    EXPECT_EQ(a.principal.stddev, 25.0);
    EXPECT_EQ(a.roll_deg.stddev, 6.0);
}

TEST(Augmentation, ZeroSigmaIsFixedCamera) {
    Rng rng(5);
    for (int k = 0; k < 50; ++k) {
        const CameraSample s = sample_reference_camera(AugmentationConfig::fixed(), rng);
        EXPECT_EQ(s.intrinsics.focal, 18.83);
        EXPECT_EQ(s.pose.radius, 2.7);
        EXPECT_EQ(s.pose.roll, 0.0);
        EXPECT_EQ(s.intrinsics.cx, 256.0);
        EXPECT_EQ(s.intrinsics.cy, 256.0);
    }
}

TEST(Augmentation, FfhqFocalMoments) {
    Rng rng(6);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
        const double f = sample_reference_camera(AugmentationConfig::ffhq(), rng).intrinsics.focal;
        s += f;
        s2 += f * f;
    }
    const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
    EXPECT_NEAR(mean, 18.83, 0.05);
    EXPECT_NEAR(sd, 1.0, 0.05);
}

TEST(Augmentation, ReferencePoseWithinRanges) {
    Rng rng(7);
    for (int k = 0; k < 20000; ++k) {
        const CameraSample s = sample_reference_camera(AugmentationConfig::ffhq(), rng);
        EXPECT_LE(std::abs(rad2deg(s.pose.pitch)), 26.0 + 1e-9);
        EXPECT_LE(std::abs(rad2deg(s.pose.yaw)), 49.0 + 1e-9);
    }
}

TEST(Augmentation, MultiviewFixedIntrinsicsAndYawRange) {
    Rng rng(8);
    double max_yaw = 0;
    for (int k = 0; k < 100000; ++k) {
        const CameraSample s = sample_multiview_camera(AugmentationConfig::ffhq(), rng);
        if (k < 100) {
            EXPECT_EQ(s.intrinsics, Intrinsics{});
            EXPECT_EQ(s.pose.radius, 2.7);
            EXPECT_EQ(s.pose.roll, 0.0);
        }
        max_yaw = std::max(max_yaw, std::abs(rad2deg(s.pose.yaw)));
        ASSERT_LE(std::abs(rad2deg(s.pose.pitch)), 26.0 + 1e-9);
    }
    EXPECT_LE(max_yaw, 36.0 + 1e-9);
    EXPECT_GT(max_yaw, 35.9);
}

TEST(Augmentation, SeedReproducible) {
    Rng a(42), b(42);
    for (int k = 0; k < 10; ++k) {
        const CameraSample x = sample_reference_camera(AugmentationConfig::afhq(), a);
        const CameraSample y = sample_reference_camera(AugmentationConfig::afhq(), b);
        EXPECT_EQ(x.intrinsics, y.intrinsics);
        EXPECT_EQ(x.pose.pitch, y.pose.pitch);
        EXPECT_EQ(x.pose.yaw, y.pose.yaw);
        EXPECT_EQ(x.pose.roll, y.pose.roll);
        EXPECT_EQ(x.pose.radius, y.pose.radius);
    }
}

TEST(Augmentation, InvalidConfigRejected) {
    AugmentationConfig c;
    c.focal.stddev = -1;
    Rng rng(1);
    EXPECT_THROW(sample_reference_camera(c, rng), DomainError);
    AugmentationConfig d;
    d.reference_yaw = {10, -10};
    EXPECT_THROW(sample_reference_camera(d, rng), DomainError);
}
