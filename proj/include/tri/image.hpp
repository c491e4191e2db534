#pragma once

#include <cstddef>
#include <vector>

#include "tri/error.hpp"

namespace tri {

/// Planar float image, channels x height x width.
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int c, int h, int w, float fill = 0.0f) : channels(c), height(h), width(w) {
        if (c < 1 || h < 1 || w < 1) throw DomainError("image dimensions must be positive");
        data.assign(static_cast<std::size_t>(c) * h * w, fill);
    }

    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
    float& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    float at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    bool same_shape(const Image& o) const { return channels == o.channels && height == o.height && width == o.width; }

    bool operator==(const Image&) const = default;
};

/// Per-pixel validity mask, height x width, row-major.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<unsigned char> data;

    Mask() = default;
    Mask(int h, int w, bool fill) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill ? 1 : 0) {}

    bool at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += v != 0;
        return n;
    }
};

} // namespace tri
