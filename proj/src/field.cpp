#include "tri/field.hpp"

#include <string>

#include "tri/error.hpp"

namespace tri {

template <class T>
FieldSample FieldBatch<T>::sample(std::size_t i) const {
    FieldSample s;
    s.density = static_cast<double>(density.at(i));
    s.features.assign(features.begin() + i * feature_width, features.begin() + (i + 1) * feature_width);
    return s;
}

template <class T>
void check_compatible(const BasicTriplane<T>& grid, const BasicDecoder<T>& dec) {
    if (grid.channels() != dec.input_width())
        throw DomainError("triplane has " + std::to_string(grid.channels()) + " channels but decoder expects " +
                          std::to_string(dec.input_width()));
}

template <class T>
void gather_feature(const BasicTriplane<T>& grid, const Vec3& x, std::span<T> out, std::span<T> plane_scratch) {
    const std::size_t C = grid.channels();
    const PlaneCoords uv = project_to_planes(x, grid.box_scale());
    for (int p = 0; p < 3; ++p) sample_plane(grid, kPlanes[p], uv[p], plane_scratch.subspan(p * C, C));
    aggregate_mean<T>(plane_scratch.subspan(0, C), plane_scratch.subspan(C, C), plane_scratch.subspan(2 * C, C), out);
}

template <class T>
void query_field(const BasicTriplane<T>& grid, const BasicDecoder<T>& dec, std::span<const Vec3> points,
                 FieldBatch<T>& out, FieldWorkspace<T>& ws) {
    check_compatible(grid, dec);
    const std::size_t N = points.size();
    const std::size_t C = grid.channels();
    const int F = dec.feature_width();
    ws.aggregated.resize(N * C);
    ws.planes.resize(3 * C);
    for (std::size_t i = 0; i < N; ++i)
        gather_feature(grid, points[i], std::span<T>(ws.aggregated).subspan(i * C, C), std::span<T>(ws.planes));
    out.feature_width = F;
    out.density.resize(N);
    out.features.resize(N * F);
    decode_batch(dec, std::span<const T>(ws.aggregated), N, std::span<T>(out.density), std::span<T>(out.features),
                 ws.scratch);
}

template <class T>
FieldSample query_point(const BasicTriplane<T>& grid, const BasicDecoder<T>& dec, const Vec3& x) {
    check_compatible(grid, dec);
    const std::size_t C = grid.channels();
    std::vector<T> planes(3 * C), feat(C);
    gather_feature(grid, x, std::span<T>(feat), std::span<T>(planes));
    return decode(dec, std::span<const T>(feat));
}

#define TRI_INSTANTIATE(T)                                                                                      \
    template struct FieldBatch<T>;                                                                              \
    template void check_compatible(const BasicTriplane<T>&, const BasicDecoder<T>&);                           \
    template void gather_feature(const BasicTriplane<T>&, const Vec3&, std::span<T>, std::span<T>);            \
    template void query_field(const BasicTriplane<T>&, const BasicDecoder<T>&, std::span<const Vec3>,          \
                              FieldBatch<T>&, FieldWorkspace<T>&);                                              \
    template FieldSample query_point(const BasicTriplane<T>&, const BasicDecoder<T>&, const Vec3&);

TRI_INSTANTIATE(float)
TRI_INSTANTIATE(double)
#undef TRI_INSTANTIATE

} // namespace tri
