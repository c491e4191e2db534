#pragma once

#include <array>
#include <cmath>

namespace tri {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this * (1.0 / norm()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Row-major 3x3 matrix.
using Mat3 = std::array<std::array<double, 3>, 3>;

/// Rigid camera-to-world transform: x_world = rotation * x_cam + translation.
struct Transform {
    Mat3 rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    Vec3 translation;

    Vec3 apply_rotation(const Vec3& v) const {
        return {rotation[0][0] * v.x + rotation[0][1] * v.y + rotation[0][2] * v.z,
                rotation[1][0] * v.x + rotation[1][1] * v.y + rotation[1][2] * v.z,
                rotation[2][0] * v.x + rotation[2][1] * v.y + rotation[2][2] * v.z};
    }
    Vec3 column(int c) const { return {rotation[0][c], rotation[1][c], rotation[2][c]}; }

    /// 4x4 homogeneous matrix, row-major.
    std::array<std::array<double, 4>, 4> matrix() const {
        std::array<std::array<double, 4>, 4> m{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m[r][c] = rotation[r][c];
        m[0][3] = translation.x;
        m[1][3] = translation.y;
        m[2][3] = translation.z;
        m[3][3] = 1.0;
        return m;
    }
};

inline double det(const Mat3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

} // namespace tri
