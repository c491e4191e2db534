#pragma once

// Triplane feature grids.
//
// World points live in the cube [-box_scale, box_scale]^3. Each of the three
// canonical planes is an R x R lattice of C-channel features:
//
//   xy plane: u = x, v = y
//   xz plane: u = x, v = z
//   yz plane: u = y, v = z
//
// Plane coordinates are the selected world coordinates divided by box_scale,
// so the cube maps onto [-1, 1]^2. Lattice node (row j, col i) sits at
// u = -1 + 2i/(R-1), v = -1 + 2j/(R-1) (corner-aligned). Storage is plane
// major (xy, xz, yz), then rows (v), then columns (u), channels innermost.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "tri/linalg.hpp"

namespace tri {

enum class Plane : int { xy = 0, xz = 1, yz = 2 };

inline constexpr std::array<Plane, 3> kPlanes{Plane::xy, Plane::xz, Plane::yz};

const char* plane_name(Plane p);

struct PlaneCoord {
    double u = 0;
    double v = 0;
    bool operator==(const PlaneCoord&) const = default;
};

using PlaneCoords = std::array<PlaneCoord, 3>; // indexed by Plane

template <class T>
class BasicTriplane {
public:
    using value_type = T;

    BasicTriplane() = default;
    /// Zero-initialised grid. Throws DomainError on non-positive sizes.
    BasicTriplane(int resolution, int channels, double box_scale = 1.0);

    int resolution() const noexcept { return resolution_; }
    int channels() const noexcept { return channels_; }
    double box_scale() const noexcept { return box_scale_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(resolution_) * resolution_ * channels_;
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    std::size_t index(Plane p, int row, int col, int channel = 0) const noexcept {
        return static_cast<std::size_t>(static_cast<int>(p)) * plane_size() +
               (static_cast<std::size_t>(row) * resolution_ + col) * channels_ + channel;
    }
    T& at(Plane p, int row, int col, int channel) noexcept { return data_[index(p, row, col, channel)]; }
    const T& at(Plane p, int row, int col, int channel) const noexcept {
        return data_[index(p, row, col, channel)];
    }
    std::span<const T> feature(Plane p, int row, int col) const noexcept {
        return std::span<const T>(data_).subspan(index(p, row, col), channels_);
    }

    /// Throws DomainError if any stored value is non-finite.
    void validate() const;

    template <class U>
    BasicTriplane<U> cast() const {
        BasicTriplane<U> out(resolution_, channels_, box_scale_);
        auto dst = out.values();
        for (std::size_t i = 0; i < data_.size(); ++i) dst[i] = static_cast<U>(data_[i]);
        return out;
    }

    bool operator==(const BasicTriplane&) const = default;

private:
    int resolution_ = 0;
    int channels_ = 0;
    double box_scale_ = 1.0;
    std::vector<T> data_;
};

using TriplaneGrid = BasicTriplane<float>;

/// Plane coordinate of lattice node `i` on an R-node axis.
double node_coordinate(int i, int resolution);

/// Selects the per-plane coordinates of `x`. Non-finite input or
/// box_scale <= 0 throws DomainError. Coordinates outside [-1, 1] are
/// returned as-is; sampling clamps them.
PlaneCoords project_to_planes(const Vec3& x, double box_scale);

/// Bilinear footprint of a plane coordinate: four lattice corners (as
/// offsets of the first channel inside one plane) and their weights.
struct BilinearStencil {
    std::array<std::size_t, 4> offsets{};
    std::array<double, 4> weights{};
};

BilinearStencil bilinear_stencil(PlaneCoord uv, int resolution, int channels);

/// Bilinear sample of one plane, border-clamped. Writes C values to `out`.
template <class T>
void sample_plane(const BasicTriplane<T>& grid, Plane plane, PlaneCoord uv, std::span<T> out);

template <class T>
std::vector<T> sample_plane(const BasicTriplane<T>& grid, Plane plane, PlaneCoord uv) {
    std::vector<T> out(grid.channels());
    sample_plane(grid, plane, uv, std::span<T>(out));
    return out;
}

/// Componentwise mean of the three plane features. Evaluated on the sorted
/// triple so the result does not depend on argument order and equals v
/// exactly for (v, v, v).
template <class T>
void aggregate_mean(std::span<const T> a, std::span<const T> b, std::span<const T> c, std::span<T> out);

template <class T>
std::vector<T> aggregate_mean(std::span<const T> a, std::span<const T> b, std::span<const T> c) {
    std::vector<T> out(a.size());
    aggregate_mean(a, b, c, std::span<T>(out));
    return out;
}

template <class T>
inline T mean_of_three(T a, T b, T c) noexcept {
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    return b + ((a - b) + (c - b)) / T(3);
}

} // namespace tri
