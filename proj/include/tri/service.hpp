#pragma once

// HTTP + WebSocket frame service.
//
//   POST   /v1/triplanes               body = .trpl bytes -> 201 {"id": "..."}
//   GET    /v1/triplanes/{id}/render   ?<camera keys>&samples&samples_fine
//                                      &stratified&channel=rgb|depth&seed
//                                      -> image/png or image/x-portable-floatmap
//   DELETE /v1/triplanes/{id}          -> 204
//   GET    /v1/healthz                 -> 200
//   WS     /v1/stream?id={id}          camera JSON messages in, frames out
//
// Stream frames are a 16-byte header followed by the payload:
//   "FRME" | u32 frame_id | u16 width | u16 height | u8 kind | u24 skipped
// kind 1 = PNG, 2 = depth PFM, 0xFF = error (payload is a UTF-8 reason).
// `skipped` counts camera messages dropped in favour of a newer one since the
// previous frame.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "tri/io.hpp"
#include "tri/render.hpp"

namespace tri {

enum class FrameKind : std::uint8_t { rgb = 1, depth = 2, error = 0xFF };

struct FrameHeader {
    std::uint32_t frame_id = 0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    FrameKind kind = FrameKind::rgb;
    std::uint32_t skipped = 0; // saturates at 2^24 - 1
};

inline constexpr std::size_t kFrameHeaderSize = 16;

Bytes encode_frame(const FrameHeader& h, std::span<const std::uint8_t> payload);
/// Throws ParseError on a short buffer, bad magic or unknown kind.
FrameHeader decode_frame_header(std::span<const std::uint8_t> frame);

/// One render with everything that affects its bytes.
struct RenderJob {
    CameraSpec camera;
    int n_coarse = 48;
    int n_fine = 48;
    bool stratified = false;
    bool depth = false;
    std::uint64_t seed = 0;

    SamplingConfig sampling() const;
};

RenderOutput render_job(const TriplaneGrid& grid, const FieldDecoder& dec, const RenderJob& job, int threads = 1);

/// PNG of the RGB image, or the depth PFM when job.depth is set.
Bytes encode_job_output(const RenderOutput& out, const RenderJob& job);

/// Renders `job` and encodes it (PNG of the RGB image, or depth PFM). The
/// CLI and the service both go through here.
Bytes render_job_bytes(const TriplaneGrid& grid, const FieldDecoder& dec, const RenderJob& job, int threads = 1);

/// Builds a job from HTTP query parameters on top of `base`. Throws
/// ParseError naming the offending parameter.
RenderJob render_job_from_query(const std::map<std::string, std::string>& query, const RenderJob& base);

/// Builds a job from a stream message (camera JSON plus frame_id, samples,
/// samples_fine, stratified, channel, seed). Returns the frame id too.
RenderJob render_job_from_message(const std::string& text, const RenderJob& base, std::uint32_t& frame_id);

struct ServiceConfig {
    std::string address = "127.0.0.1";
    unsigned short port = 8080; // 0 picks a free port
    int workers = 4;
    std::size_t max_upload_bytes = std::size_t{256} << 20;
    /// Decoder applied to every triplane; default_decoder(C) when unset.
    std::optional<FieldDecoder> decoder;
    int io_threads = 1;
};

class RenderServer {
public:
    explicit RenderServer(ServiceConfig cfg);
    ~RenderServer();
    RenderServer(const RenderServer&) = delete;
    RenderServer& operator=(const RenderServer&) = delete;

    /// Binds and starts serving in background threads.
    void start();
    /// Port actually bound (valid after start()).
    unsigned short port() const;
    /// Stops accepting, closes connections and joins all threads.
    void stop();
    /// Blocks until stop() is called or SIGINT/SIGTERM arrives.
    void wait_for_signal();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace tri
