#include "tri/triplane.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tri/error.hpp"

namespace tri {

const char* plane_name(Plane p) {
    switch (p) {
    case Plane::xy: return "xy";
    case Plane::xz: return "xz";
    case Plane::yz: return "yz";
    }
    return "?";
}

template <class T>
BasicTriplane<T>::BasicTriplane(int resolution, int channels, double box_scale)
    : resolution_(resolution), channels_(channels), box_scale_(box_scale) {
    if (resolution < 1) throw DomainError("triplane resolution must be >= 1");
    if (channels < 1) throw DomainError("triplane channels must be >= 1");
    if (!(box_scale > 0.0) || !std::isfinite(box_scale)) throw DomainError("triplane box_scale must be positive");
    data_.assign(3 * plane_size(), T(0));
}

template <class T>
void BasicTriplane<T>::validate() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(static_cast<double>(data_[i])))
            throw DomainError("triplane value " + std::to_string(i) + " is not finite");
    }
}

double node_coordinate(int i, int resolution) {
    if (resolution <= 1) return 0.0;
    return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(resolution - 1);
}

PlaneCoords project_to_planes(const Vec3& x, double box_scale) {
    if (!x.finite()) throw DomainError("project_to_planes: point is not finite");
    if (!(box_scale > 0.0) || !std::isfinite(box_scale))
        throw DomainError("project_to_planes: box_scale must be positive");
    const double inv = 1.0 / box_scale;
    const double u = x.x * inv, v = x.y * inv, w = x.z * inv;
    return {PlaneCoord{u, v}, PlaneCoord{u, w}, PlaneCoord{v, w}};
}

namespace {

// Continuous lattice position of a plane coordinate, clamped to the border.
// Positions within 1e-9 of a node snap onto it so nodes are reproduced
// bit-for-bit even when (u+1)/2*(R-1) rounds just below the integer.
double lattice_position(double u, int resolution) {
    if (resolution <= 1) return 0.0;
    const double last = resolution - 1;
    double p = (u + 1.0) * 0.5 * last;
    p = std::clamp(p, 0.0, last);
    const double nearest = std::round(p);
    if (std::abs(p - nearest) < 1e-9) p = nearest;
    return p;
}

} // namespace

BilinearStencil bilinear_stencil(PlaneCoord uv, int resolution, int channels) {
    const double px = lattice_position(uv.u, resolution);
    const double py = lattice_position(uv.v, resolution);
    const int x0 = std::min(static_cast<int>(std::floor(px)), resolution - 1);
    const int y0 = std::min(static_cast<int>(std::floor(py)), resolution - 1);
    const int x1 = std::min(x0 + 1, resolution - 1);
    const int y1 = std::min(y0 + 1, resolution - 1);
    const double fx = px - x0;
    const double fy = py - y0;

    const auto off = [&](int row, int col) {
        return (static_cast<std::size_t>(row) * resolution + col) * channels;
    };
    BilinearStencil s;
    s.offsets = {off(y0, x0), off(y0, x1), off(y1, x0), off(y1, x1)};
    s.weights = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    return s;
}

template <class T>
void sample_plane(const BasicTriplane<T>& grid, Plane plane, PlaneCoord uv, std::span<T> out) {
    const int C = grid.channels();
    if (static_cast<int>(out.size()) != C) throw DomainError("sample_plane: output width mismatch");
    const BilinearStencil s = bilinear_stencil(uv, grid.resolution(), C);
    const T* base = grid.values().data() + grid.index(plane, 0, 0);
    const T w0 = static_cast<T>(s.weights[0]), w1 = static_cast<T>(s.weights[1]);
    const T w2 = static_cast<T>(s.weights[2]), w3 = static_cast<T>(s.weights[3]);
    const T* a = base + s.offsets[0];
    const T* b = base + s.offsets[1];
    const T* c = base + s.offsets[2];
    const T* d = base + s.offsets[3];
    for (int ch = 0; ch < C; ++ch) out[ch] = w0 * a[ch] + w1 * b[ch] + w2 * c[ch] + w3 * d[ch];
}

template <class T>
void aggregate_mean(std::span<const T> a, std::span<const T> b, std::span<const T> c, std::span<T> out) {
    if (a.size() != b.size() || a.size() != c.size() || a.size() != out.size())
        throw DomainError("aggregate_mean: feature lengths differ");
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = mean_of_three(a[i], b[i], c[i]);
}

template class BasicTriplane<float>;
template class BasicTriplane<double>;
template void sample_plane(const BasicTriplane<float>&, Plane, PlaneCoord, std::span<float>);
template void sample_plane(const BasicTriplane<double>&, Plane, PlaneCoord, std::span<double>);
template void aggregate_mean(std::span<const float>, std::span<const float>, std::span<const float>, std::span<float>);
template void aggregate_mean(std::span<const double>, std::span<const double>, std::span<const double>,
                             std::span<double>);

} // namespace tri
