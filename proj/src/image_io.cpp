#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>

#include "tri/error.hpp"
#include "tri/io.hpp"

namespace tri {

namespace {

void require_finite(const Image& img, const char* what) {
    for (float v : img.data)
        if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite pixel value");
}

std::uint8_t to_byte(float v) {
    const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

} // namespace

Bytes encode_pfm(const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw DomainError("pfm: image must have 1 or 3 channels");
    require_finite(img, "pfm");
    const std::string header = std::string(img.channels == 1 ? "Pf" : "PF") + "\n" + std::to_string(img.width) + " " +
                               std::to_string(img.height) + "\n-1.0\n";
    Bytes out(header.begin(), header.end());
    out.reserve(out.size() + img.data.size() * 4);
    for (int y = img.height - 1; y >= 0; --y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                const float v = img.at(c, y, x);
                std::uint8_t b[4];
                std::memcpy(b, &v, 4);
                out.insert(out.end(), b, b + 4);
            }
    return out;
}

Image decode_pfm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    const auto line = [&](const char* field) {
        std::string s;
        while (pos < bytes.size() && bytes[pos] != '\n') {
            s.push_back(static_cast<char>(bytes[pos++]));
            if (s.size() > 64) throw ParseError(field, "header line too long");
        }
        if (pos >= bytes.size()) throw ParseError(field, "truncated header");
        ++pos;
        return s;
    };
    const std::string magic = line("magic");
    int channels;
    if (magic == "Pf")
        channels = 1;
    else if (magic == "PF")
        channels = 3;
    else
        throw ParseError("magic", "expected \"Pf\" or \"PF\"");

    const std::string dims = line("dimensions");
    unsigned long w = 0, h = 0;
    char tail = 0;
    if (std::sscanf(dims.c_str(), "%lu %lu%c", &w, &h, &tail) != 2 || dims.find('-') != std::string::npos)
        throw ParseError("dimensions", "expected \"<width> <height>\"");
    if (w < 1 || h < 1 || w > 65535 || h > 65535) throw ParseError("dimensions", "out of range");

    const std::string scale = line("scale");
    char* end = nullptr;
    const double sc = std::strtod(scale.c_str(), &end);
    if (scale.empty() || end != scale.c_str() + scale.size() || !std::isfinite(sc) || sc == 0.0)
        throw ParseError("scale", "expected a non-zero number");
    if (sc > 0.0) throw ParseError("scale", "big-endian PFM is not supported");

    const std::uint64_t count = static_cast<std::uint64_t>(w) * h * channels;
    const std::size_t left = bytes.size() - pos;
    if (count * 4 > left) throw ParseError("payload", "truncated input");
    if (count * 4 < left) throw ParseError("trailing", std::to_string(left - count * 4) + " unexpected bytes after payload");

    Image img(channels, static_cast<int>(h), static_cast<int>(w));
    for (int y = img.height - 1; y >= 0; --y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < channels; ++c) {
                float v;
                std::memcpy(&v, bytes.data() + pos, 4);
                pos += 4;
                if (!std::isfinite(v)) throw ParseError("payload", "non-finite value");
                img.at(c, y, x) = v;
            }
    return img;
}

void write_depth_pfm(const std::filesystem::path& path, const Image& depth) { write_file(path, encode_pfm(depth)); }

Image read_depth_pfm(const std::filesystem::path& path) { return decode_pfm(read_file(path)); }

Bytes encode_png(const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw DomainError("png: image must have 1 or 3 channels");
    require_finite(img, "png");
    std::vector<std::uint8_t> pixels(img.pixels() * img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                pixels[(static_cast<std::size_t>(y) * img.width + x) * img.channels + c] = to_byte(img.at(c, y, x));

    png_image im;
    std::memset(&im, 0, sizeof im);
    im.version = PNG_IMAGE_VERSION;
    im.width = static_cast<png_uint_32>(img.width);
    im.height = static_cast<png_uint_32>(img.height);
    im.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&im, nullptr, &size, 0, pixels.data(), 0, nullptr))
        throw std::runtime_error(std::string("png encode: ") + im.message);
    Bytes out(size);
    if (!png_image_write_to_memory(&im, out.data(), &size, 0, pixels.data(), 0, nullptr))
        throw std::runtime_error(std::string("png encode: ") + im.message);
    out.resize(size);
    return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    png_image im;
    std::memset(&im, 0, sizeof im);
    im.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&im, bytes.data(), bytes.size()))
        throw ParseError("png", im.message[0] ? im.message : "not a PNG");
    if (im.width < 1 || im.height < 1 || im.width > 16384 || im.height > 16384) {
        png_image_free(&im);
        throw ParseError("png", "dimensions out of range");
    }
    const bool color = (im.format & PNG_FORMAT_FLAG_COLOR) != 0;
    im.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(im));
    const png_color black{0, 0, 0};
    if (!png_image_finish_read(&im, &black, pixels.data(), 0, nullptr)) {
        const std::string msg = im.message;
        png_image_free(&im);
        throw ParseError("png", msg);
    }
    Image img(channels, static_cast<int>(im.height), static_cast<int>(im.width));
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) = pixels[(static_cast<std::size_t>(y) * img.width + x) * channels + c] / 255.0f;
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img) { write_file(path, encode_png(img)); }

Image read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

} // namespace tri
