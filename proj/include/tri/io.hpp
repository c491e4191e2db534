#pragma once

// File formats. All multi-byte values are little-endian.
//
// Triplane (.trpl):
//   "TRPL" | u32 version = 1 | u32 R | u32 C | f32 box_scale |
//   3*R*R*C f32 values (planes xy, xz, yz; rows; columns; channels)
//
// Decoder (.tdec):
//   "TDEC" | u32 version = 1 | u32 n_layers | u32 hidden, density, feature
//   activation | per layer: u32 in | u32 out | out*in f32 weight | out f32 bias
//
// Readers throw ParseError naming the failing field; they never read past
// the input or allocate more than the input size implies.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tri/camera.hpp"
#include "tri/decoder.hpp"
#include "tri/image.hpp"
#include "tri/metrics.hpp"
#include "tri/triplane.hpp"

namespace tri {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline constexpr std::uint32_t kTriplaneVersion = 1;
inline constexpr std::uint32_t kDecoderVersion = 1;

Bytes serialize_triplane(const TriplaneGrid& grid);
TriplaneGrid parse_triplane(std::span<const std::uint8_t> bytes);
void write_triplane(const std::filesystem::path& path, const TriplaneGrid& grid);
TriplaneGrid read_triplane(const std::filesystem::path& path);

Bytes serialize_decoder(const FieldDecoder& dec);
FieldDecoder parse_decoder(std::span<const std::uint8_t> bytes);
void write_decoder(const std::filesystem::path& path, const FieldDecoder& dec);
FieldDecoder read_decoder(const std::filesystem::path& path);

/// Grayscale ("Pf") for 1 channel, color ("PF") for 3. Scale line "-1.0",
/// rows stored bottom-up. Throws DomainError on non-finite values.
Bytes encode_pfm(const Image& img);
Image decode_pfm(std::span<const std::uint8_t> bytes);
void write_depth_pfm(const std::filesystem::path& path, const Image& depth);
Image read_depth_pfm(const std::filesystem::path& path);

/// 8-bit PNG of a 1- or 3-channel image; values are clamped to [0, 1] and
/// rounded. Throws DomainError on non-finite values.
Bytes encode_png(const Image& img);
/// Gray images decode to 1 channel, everything else to RGB.
Image decode_png(std::span<const std::uint8_t> bytes);
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

/// Camera JSON. Keys: pitch_deg, yaw_deg, roll_deg, radius, focal, cx, cy,
/// width, height, near, far; every key optional, every value a number.
struct CameraSpec {
    OrbitPose pose;
    Intrinsics intrinsics;
    std::optional<double> near;
    std::optional<double> far;

    /// Missing near/far take the default bracket for `box_scale`.
    Camera to_camera(double box_scale) const;
    bool operator==(const CameraSpec&) const = default;
};

/// Applies the keys present in `j` on top of `base`. `extra_keys` are
/// accepted and ignored (used by the stream protocol).
CameraSpec camera_from_json(const nlohmann::json& j, const CameraSpec& base = {},
                            std::span<const std::string> extra_keys = {});
nlohmann::json camera_to_json(const CameraSpec& spec);
CameraSpec parse_camera_json(const std::string& text);
CameraSpec read_camera_json(const std::filesystem::path& path);

/// JSON array of [x, y] pairs.
std::vector<Point2> parse_landmarks_json(const std::string& text);
std::vector<Point2> read_landmarks(const std::filesystem::path& path);
void write_landmarks(const std::filesystem::path& path, std::span<const Point2> pts);

} // namespace tri
