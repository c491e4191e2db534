#pragma once

#include <span>
#include <vector>

#include "tri/decoder.hpp"
#include "tri/linalg.hpp"
#include "tri/triplane.hpp"

namespace tri {

/// Decoded values for a batch of points: N densities and N x F features.
template <class T>
struct FieldBatch {
    int feature_width = 0;
    std::vector<T> density;
    std::vector<T> features;

    std::size_t size() const { return density.size(); }
    FieldSample sample(std::size_t i) const;
};

/// Reusable buffers for query_field; one per evaluating thread.
template <class T>
struct FieldWorkspace {
    std::vector<T> aggregated;
    std::vector<T> planes;
    std::vector<T> scratch;
};

/// Triplane + decoder pair, evaluated as a view-independent field.
template <class T>
struct BasicTriplaneField {
    const BasicTriplane<T>* grid = nullptr;
    const BasicDecoder<T>* decoder = nullptr;

    int feature_width() const { return decoder->feature_width(); }
};

/// Throws DomainError if the grid and decoder cannot be paired.
template <class T>
void check_compatible(const BasicTriplane<T>& grid, const BasicDecoder<T>& dec);

/// Aggregated triplane feature at one point (project, sample, mean).
template <class T>
void gather_feature(const BasicTriplane<T>& grid, const Vec3& x, std::span<T> out, std::span<T> plane_scratch);

/// Point-wise composition of projection, plane sampling, mean aggregation
/// and decoding over a contiguous batch.
template <class T>
void query_field(const BasicTriplane<T>& grid, const BasicDecoder<T>& dec, std::span<const Vec3> points,
                 FieldBatch<T>& out, FieldWorkspace<T>& ws);

template <class T>
FieldBatch<T> query_field(const BasicTriplane<T>& grid, const BasicDecoder<T>& dec, std::span<const Vec3> points) {
    FieldBatch<T> out;
    FieldWorkspace<T> ws;
    query_field(grid, dec, points, out, ws);
    return out;
}

template <class T>
FieldSample query_point(const BasicTriplane<T>& grid, const BasicDecoder<T>& dec, const Vec3& x);

} // namespace tri
