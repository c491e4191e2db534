#include "tri/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "tri/error.hpp"

namespace tri {

namespace {

static_assert(std::endian::native == std::endian::little, "io assumes a little-endian host");

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void f32(float v) { raw(&v, 4); }
    void f32s(std::span<const float> v) { raw(v.data(), v.size() * 4); }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::size_t remaining() const { return in_.size() - pos_; }

    void need(std::size_t n, const std::string& field) const {
        if (remaining() < n) throw ParseError(field, "truncated input");
    }
    void raw(void* p, std::size_t n, const std::string& field) {
        need(n, field);
        std::memcpy(p, in_.data() + pos_, n);
        pos_ += n;
    }
    std::uint32_t u32(const std::string& field) {
        std::uint32_t v;
        raw(&v, 4, field);
        return v;
    }
    float f32(const std::string& field) {
        float v;
        raw(&v, 4, field);
        return v;
    }
    void f32s(std::span<float> out, const std::string& field) {
        raw(out.data(), out.size() * 4, field);
        for (float v : out)
            if (!std::isfinite(v)) throw ParseError(field, "non-finite value");
    }
    void magic(const char (&m)[5]) {
        char got[4];
        raw(got, 4, "magic");
        if (std::memcmp(got, m, 4) != 0) throw ParseError("magic", std::string("expected \"") + m + "\"");
    }
    void end() const {
        if (remaining() != 0) throw ParseError("trailing", std::to_string(remaining()) + " unexpected bytes after payload");
    }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

Activation parse_activation(std::uint32_t v, const std::string& field) {
    if (v > static_cast<std::uint32_t>(Activation::sigmoid)) throw ParseError(field, "unknown activation " + std::to_string(v));
    return static_cast<Activation>(v);
}

} // namespace

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("read failed: " + path.string());
    return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Bytes serialize_triplane(const TriplaneGrid& grid) {
    if (grid.resolution() < 2 || grid.channels() < 1) throw DomainError("triplane: empty grid");
    grid.validate();
    const float box = static_cast<float>(grid.box_scale());
    if (!std::isfinite(box) || !(box > 0.0f)) throw DomainError("triplane: box_scale must be positive and finite");
    Writer w;
    w.raw("TRPL", 4);
    w.u32(kTriplaneVersion);
    w.u32(static_cast<std::uint32_t>(grid.resolution()));
    w.u32(static_cast<std::uint32_t>(grid.channels()));
    w.f32(box);
    w.f32s(grid.values());
    return w.take();
}

TriplaneGrid parse_triplane(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.magic("TRPL");
    const std::uint32_t version = r.u32("version");
    if (version != kTriplaneVersion) throw ParseError("version", "unsupported version " + std::to_string(version));
    const std::uint32_t R = r.u32("resolution");
    const std::uint32_t C = r.u32("channels");
    const float box = r.f32("box_scale");
    if (R < 2 || R > 65535) throw ParseError("resolution", "out of range: " + std::to_string(R));
    if (C < 1 || C > 65535) throw ParseError("channels", "out of range: " + std::to_string(C));
    if (!std::isfinite(box) || !(box > 0.0f)) throw ParseError("box_scale", "must be positive and finite");
    const std::uint64_t count = 3ull * R * R * C;
    if (count > r.remaining() / 4) throw ParseError("payload", "truncated: expected " + std::to_string(count * 4) + " bytes, found " + std::to_string(r.remaining()));
    TriplaneGrid grid(static_cast<int>(R), static_cast<int>(C), box);
    r.f32s(grid.values(), "payload");
    r.end();
    return grid;
}

void write_triplane(const std::filesystem::path& path, const TriplaneGrid& grid) { write_file(path, serialize_triplane(grid)); }

TriplaneGrid read_triplane(const std::filesystem::path& path) { return parse_triplane(read_file(path)); }

Bytes serialize_decoder(const FieldDecoder& dec) {
    dec.validate();
    Writer w;
    w.raw("TDEC", 4);
    w.u32(kDecoderVersion);
    w.u32(static_cast<std::uint32_t>(dec.layers.size()));
    w.u32(static_cast<std::uint32_t>(dec.hidden));
    w.u32(static_cast<std::uint32_t>(dec.density));
    w.u32(static_cast<std::uint32_t>(dec.feature));
    for (const auto& l : dec.layers) {
        w.u32(static_cast<std::uint32_t>(l.in));
        w.u32(static_cast<std::uint32_t>(l.out));
        w.f32s(l.weight);
        w.f32s(l.bias);
    }
    return w.take();
}

FieldDecoder parse_decoder(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.magic("TDEC");
    const std::uint32_t version = r.u32("version");
    if (version != kDecoderVersion) throw ParseError("version", "unsupported version " + std::to_string(version));
    const std::uint32_t n = r.u32("layers");
    if (n < 1 || n > 64) throw ParseError("layers", "out of range: " + std::to_string(n));
    FieldDecoder dec;
    dec.hidden = parse_activation(r.u32("hidden_activation"), "hidden_activation");
    dec.density = parse_activation(r.u32("density_activation"), "density_activation");
    dec.feature = parse_activation(r.u32("feature_activation"), "feature_activation");
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::string tag = "layer[" + std::to_string(i) + "]";
        const std::uint32_t in = r.u32(tag + ".in");
        const std::uint32_t out = r.u32(tag + ".out");
        if (in < 1 || in > 65535) throw ParseError(tag + ".in", "out of range");
        if (out < 1 || out > 65535) throw ParseError(tag + ".out", "out of range");
        if (!dec.layers.empty() && static_cast<int>(in) != dec.layers.back().out)
            throw ParseError(tag + ".in", "does not match previous layer width");
        const std::uint64_t need = (static_cast<std::uint64_t>(in) * out + out) * 4;
        if (need > r.remaining()) throw ParseError(tag + ".weight", "truncated input");
        DenseLayer<float> l{static_cast<int>(in), static_cast<int>(out), {}, {}};
        l.weight.resize(static_cast<std::size_t>(in) * out);
        l.bias.resize(out);
        r.f32s(l.weight, tag + ".weight");
        r.f32s(l.bias, tag + ".bias");
        dec.layers.push_back(std::move(l));
    }
    r.end();
    try {
        dec.validate();
    } catch (const DomainError& e) {
        throw ParseError("layers", e.what());
    }
    return dec;
}

void write_decoder(const std::filesystem::path& path, const FieldDecoder& dec) { write_file(path, serialize_decoder(dec)); }

FieldDecoder read_decoder(const std::filesystem::path& path) { return parse_decoder(read_file(path)); }

// ---- camera JSON -----------------------------------------------------------

namespace {

double number(const nlohmann::json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ParseError(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(key, "must be finite");
    return d;
}

int integer(const nlohmann::json& j, const std::string& key) {
    const double d = number(j, key);
    if (d != std::floor(d) || d < 1 || d > 8192) throw ParseError(key, "expected an integer in [1, 8192]");
    return static_cast<int>(d);
}

} // namespace

Camera CameraSpec::to_camera(double box_scale) const {
    Camera cam = Camera::make(pose, intrinsics, box_scale);
    if (near) cam.near = *near;
    if (far) cam.far = *far;
    if (!(cam.near > 0.0) || !(cam.far > cam.near)) throw DomainError("camera: need 0 < near < far");
    return cam;
}

CameraSpec camera_from_json(const nlohmann::json& j, const CameraSpec& base, std::span<const std::string> extra_keys) {
    if (!j.is_object()) throw ParseError("camera", "expected a JSON object");
    static const char* const known[] = {"pitch_deg", "yaw_deg", "roll_deg", "radius", "focal", "cx",
                                        "cy",        "width",   "height",   "near",   "far"};
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        for (const auto& k : extra_keys) ok = ok || item.key() == k;
        if (!ok) throw ParseError(item.key(), "unknown key");
    }
    CameraSpec s = base;
    if (j.contains("pitch_deg")) s.pose.pitch = deg2rad(number(j, "pitch_deg"));
    if (j.contains("yaw_deg")) s.pose.yaw = deg2rad(number(j, "yaw_deg"));
    if (j.contains("roll_deg")) s.pose.roll = deg2rad(number(j, "roll_deg"));
    if (j.contains("radius")) s.pose.radius = number(j, "radius");
    if (j.contains("focal")) s.intrinsics.focal = number(j, "focal");
    if (j.contains("cx")) s.intrinsics.cx = number(j, "cx");
    if (j.contains("cy")) s.intrinsics.cy = number(j, "cy");
    if (j.contains("width")) s.intrinsics.width = integer(j, "width");
    if (j.contains("height")) s.intrinsics.height = integer(j, "height");
    if (j.contains("near")) s.near = number(j, "near");
    if (j.contains("far")) s.far = number(j, "far");

    if (!(s.pose.radius > 0.0)) throw ParseError("radius", "must be positive");
    if (!(s.intrinsics.focal > 0.0 && s.intrinsics.focal < 180.0)) throw ParseError("focal", "must be in (0, 180)");
    if (s.near && !(*s.near > 0.0)) throw ParseError("near", "must be positive");
    if (s.far && s.near && !(*s.far > *s.near)) throw ParseError("far", "must exceed near");
    if (s.far && !(*s.far > 0.0)) throw ParseError("far", "must be positive");
    return s;
}

nlohmann::json camera_to_json(const CameraSpec& s) {
    nlohmann::json j = {{"pitch_deg", rad2deg(s.pose.pitch)}, {"yaw_deg", rad2deg(s.pose.yaw)},
                        {"roll_deg", rad2deg(s.pose.roll)},   {"radius", s.pose.radius},
                        {"focal", s.intrinsics.focal},        {"cx", s.intrinsics.cx},
                        {"cy", s.intrinsics.cy},              {"width", s.intrinsics.width},
                        {"height", s.intrinsics.height}};
    if (s.near) j["near"] = *s.near;
    if (s.far) j["far"] = *s.far;
    return j;
}

CameraSpec parse_camera_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("camera", std::string("invalid JSON: ") + e.what());
    }
    return camera_from_json(j);
}

CameraSpec read_camera_json(const std::filesystem::path& path) {
    const Bytes b = read_file(path);
    return parse_camera_json(std::string(b.begin(), b.end()));
}

std::vector<Point2> parse_landmarks_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("landmarks", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_array()) throw ParseError("landmarks", "expected an array of [x, y] pairs");
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& p = j[i];
        const std::string tag = "landmarks[" + std::to_string(i) + "]";
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw ParseError(tag, "expected [x, y]");
        const Point2 q{p[0].get<double>(), p[1].get<double>()};
        if (!std::isfinite(q.x) || !std::isfinite(q.y)) throw ParseError(tag, "non-finite coordinate");
        pts.push_back(q);
    }
    return pts;
}

std::vector<Point2> read_landmarks(const std::filesystem::path& path) {
    const Bytes b = read_file(path);
    return parse_landmarks_json(std::string(b.begin(), b.end()));
}

void write_landmarks(const std::filesystem::path& path, std::span<const Point2> pts) {
    nlohmann::json j = nlohmann::json::array();
    for (const Point2& p : pts) j.push_back({p.x, p.y});
    const std::string s = j.dump() + "\n";
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

} // namespace tri
