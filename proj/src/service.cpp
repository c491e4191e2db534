#include "tri/service.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/asio/thread_pool.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <charconv>
#include <cmath>
#include <cstring>
#include <deque>
#include <iostream>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <thread>

#include "tri/error.hpp"

namespace tri {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

// ---- frames ------------------------------------------------------------------

Bytes encode_frame(const FrameHeader& h, std::span<const std::uint8_t> payload) {
    Bytes out(kFrameHeaderSize + payload.size());
    std::memcpy(out.data(), "FRME", 4);
    const auto put = [&](std::size_t at, std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
    };
    put(4, h.frame_id, 4);
    put(8, h.width, 2);
    put(10, h.height, 2);
    out[12] = static_cast<std::uint8_t>(h.kind);
    put(13, std::min<std::uint32_t>(h.skipped, 0xFFFFFF), 3);
    if (!payload.empty()) std::memcpy(out.data() + kFrameHeaderSize, payload.data(), payload.size());
    return out;
}

FrameHeader decode_frame_header(std::span<const std::uint8_t> f) {
    if (f.size() < kFrameHeaderSize) throw ParseError("frame", "shorter than the 16-byte header");
    if (std::memcmp(f.data(), "FRME", 4) != 0) throw ParseError("magic", "expected \"FRME\"");
    const auto get = [&](std::size_t at, int n) {
        std::uint32_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint32_t>(f[at + i]) << (8 * i);
        return v;
    };
    FrameHeader h;
    h.frame_id = get(4, 4);
    h.width = static_cast<std::uint16_t>(get(8, 2));
    h.height = static_cast<std::uint16_t>(get(10, 2));
    const std::uint8_t kind = f[12];
    if (kind != 1 && kind != 2 && kind != 0xFF) throw ParseError("kind", "unknown payload kind " + std::to_string(kind));
    h.kind = static_cast<FrameKind>(kind);
    h.skipped = get(13, 3);
    return h;
}

// ---- jobs --------------------------------------------------------------------

SamplingConfig RenderJob::sampling() const {
    SamplingConfig c;
    c.n_coarse = n_coarse;
    c.n_fine = n_fine;
    c.stratified = stratified;
    c.width = camera.intrinsics.width;
    c.height = camera.intrinsics.height;
    c.validate();
    return c;
}

RenderOutput render_job(const TriplaneGrid& grid, const FieldDecoder& dec, const RenderJob& job, int threads) {
    return render(grid, dec, job.camera.to_camera(grid.box_scale()), job.sampling(), job.seed, threads);
}

Bytes encode_job_output(const RenderOutput& out, const RenderJob& job) {
    return job.depth ? encode_pfm(out.depth_image()) : encode_png(out.rgb());
}

Bytes render_job_bytes(const TriplaneGrid& grid, const FieldDecoder& dec, const RenderJob& job, int threads) {
    return encode_job_output(render_job(grid, dec, job, threads), job);
}

namespace {

constexpr int kMaxSamples = 4096;
constexpr int kMaxServiceSide = 2048;

const char* const kCameraKeys[] = {"pitch_deg", "yaw_deg", "roll_deg", "radius", "focal", "cx",
                                   "cy",        "width",   "height",   "near",   "far"};

bool is_camera_key(const std::string& k) {
    for (const char* c : kCameraKeys)
        if (k == c) return true;
    return false;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v, Int lo, Int hi) {
    Int out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || out < lo || out > hi)
        throw ParseError(key, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) throw ParseError(key, "expected a finite number");
    return d;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ParseError(key, "expected true/false");
}

bool parse_channel(const std::string& v) {
    if (v == "rgb") return false;
    if (v == "depth") return true;
    throw ParseError("channel", "expected \"rgb\" or \"depth\"");
}

void check_side(const RenderJob& job) {
    if (job.camera.intrinsics.width > kMaxServiceSide) throw ParseError("width", "too large");
    if (job.camera.intrinsics.height > kMaxServiceSide) throw ParseError("height", "too large");
}

} // namespace

RenderJob render_job_from_query(const std::map<std::string, std::string>& query, const RenderJob& base) {
    RenderJob job = base;
    nlohmann::json cam = nlohmann::json::object();
    for (const auto& [k, v] : query) {
        if (is_camera_key(k))
            cam[k] = parse_double(k, v);
        else if (k == "samples")
            job.n_coarse = parse_int<int>(k, v, 1, kMaxSamples);
        else if (k == "samples_fine")
            job.n_fine = parse_int<int>(k, v, 0, kMaxSamples);
        else if (k == "stratified")
            job.stratified = parse_bool(k, v);
        else if (k == "channel")
            job.depth = parse_channel(v);
        else if (k == "seed")
            job.seed = parse_int<std::uint64_t>(k, v, 0, UINT64_MAX);
        else
            throw ParseError(k, "unknown parameter");
    }
    job.camera = camera_from_json(cam, base.camera);
    check_side(job);
    return job;
}

RenderJob render_job_from_message(const std::string& text, const RenderJob& base, std::uint32_t& frame_id) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("message", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("message", "expected a JSON object");
    const auto integer = [&](const char* key, std::int64_t lo, std::int64_t hi) {
        const auto& v = j.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < lo || v.get<std::int64_t>() > hi)
            throw ParseError(key, "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v.get<std::int64_t>();
    };
    if (j.contains("frame_id")) frame_id = static_cast<std::uint32_t>(integer("frame_id", 0, UINT32_MAX));

    RenderJob job = base;
    if (j.contains("samples")) job.n_coarse = static_cast<int>(integer("samples", 1, kMaxSamples));
    if (j.contains("samples_fine")) job.n_fine = static_cast<int>(integer("samples_fine", 0, kMaxSamples));
    if (j.contains("seed")) {
        const auto& v = j.at("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ParseError("seed", "expected a non-negative integer");
        job.seed = v.get<std::uint64_t>();
    }
    if (j.contains("stratified")) {
        if (!j["stratified"].is_boolean()) throw ParseError("stratified", "expected a boolean");
        job.stratified = j["stratified"].get<bool>();
    }
    if (j.contains("channel")) {
        if (!j["channel"].is_string()) throw ParseError("channel", "expected a string");
        job.depth = parse_channel(j["channel"].get<std::string>());
    }
    static const std::string extra[] = {"frame_id", "samples", "samples_fine", "seed", "stratified", "channel"};
    job.camera = camera_from_json(j, base.camera, extra);
    check_side(job);
    return job;
}

// ---- server ------------------------------------------------------------------

namespace {

struct Entry {
    TriplaneGrid grid;
    FieldDecoder decoder;
};

class Registry {
public:
    std::string add(std::shared_ptr<const Entry> e) {
        std::unique_lock lock(mutex_);
        std::string id;
        do {
            char buf[33];
            std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(ids_()),
                          static_cast<unsigned long long>(ids_()));
            id = buf;
        } while (entries_.count(id));
        entries_.emplace(id, std::move(e));
        return id;
    }
    std::shared_ptr<const Entry> get(const std::string& id) const {
        std::shared_lock lock(mutex_);
        const auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : it->second;
    }
    bool erase(const std::string& id) {
        std::unique_lock lock(mutex_);
        return entries_.erase(id) > 0;
    }

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const Entry>> entries_;
    std::mt19937_64 ids_{std::random_device{}()};
};

struct Shared {
    const ServiceConfig* cfg = nullptr;
    Registry registry;
    net::thread_pool* pool = nullptr;
};

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

std::string percent_decode(std::string_view s, const std::string& field) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            out.push_back(' ');
        } else if (s[i] == '%') {
            if (i + 2 >= s.size()) throw ParseError(field, "bad percent escape");
            int v = 0;
            const auto [p, ec] = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
            if (ec != std::errc() || p != s.data() + i + 3) throw ParseError(field, "bad percent escape");
            out.push_back(static_cast<char>(v));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::map<std::string, std::string> parse_query(std::string_view q) {
    std::map<std::string, std::string> out;
    while (!q.empty()) {
        const std::size_t amp = q.find('&');
        const std::string_view part = q.substr(0, amp);
        q = amp == std::string_view::npos ? std::string_view{} : q.substr(amp + 1);
        if (part.empty()) continue;
        const std::size_t eq = part.find('=');
        const std::string key = percent_decode(part.substr(0, eq), "query");
        const std::string value = eq == std::string_view::npos ? "" : percent_decode(part.substr(eq + 1), key);
        if (!out.emplace(key, value).second) throw ParseError(key, "repeated parameter");
    }
    return out;
}

Response json_response(const Request& req, http::status status, const nlohmann::json& body) {
    Response res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.keep_alive(req.keep_alive());
    res.body() = body.dump();
    res.prepare_payload();
    return res;
}

Response error_response(const Request& req, http::status status, const std::string& message) {
    return json_response(req, status, {{"error", message}});
}

std::shared_ptr<const Entry> make_entry(const Shared& sh, std::span<const std::uint8_t> body) {
    auto e = std::make_shared<Entry>();
    e->grid = parse_triplane(body);
    if (sh.cfg->decoder) {
        if (sh.cfg->decoder->input_width() != e->grid.channels())
            throw ParseError("channels", "triplane has " + std::to_string(e->grid.channels()) +
                                             " channels but the decoder expects " +
                                             std::to_string(sh.cfg->decoder->input_width()));
        e->decoder = *sh.cfg->decoder;
    } else {
        e->decoder = default_decoder(e->grid.channels());
    }
    return e;
}

Response handle(Shared& sh, const Request& req) {
    const std::string_view target(req.target().data(), req.target().size());
    const std::size_t qpos = target.find('?');
    const std::string_view path = target.substr(0, qpos);
    const std::string_view query = qpos == std::string_view::npos ? std::string_view{} : target.substr(qpos + 1);
    const auto method_not_allowed = [&] { return error_response(req, http::status::method_not_allowed, "method not allowed"); };

    if (path == "/v1/healthz") {
        if (req.method() != http::verb::get) return method_not_allowed();
        return json_response(req, http::status::ok, {{"status", "ok"}});
    }
    if (path == "/v1/triplanes") {
        if (req.method() != http::verb::post) return method_not_allowed();
        const auto& b = req.body();
        try {
            const std::string id =
                sh.registry.add(make_entry(sh, std::span(reinterpret_cast<const std::uint8_t*>(b.data()), b.size())));
            return json_response(req, http::status::created, {{"id", id}});
        } catch (const ParseError& e) {
            return error_response(req, http::status::bad_request, e.what());
        }
    }
    constexpr std::string_view prefix = "/v1/triplanes/";
    if (path.substr(0, prefix.size()) == prefix) {
        std::string_view rest = path.substr(prefix.size());
        const std::size_t slash = rest.find('/');
        const std::string id(rest.substr(0, slash));
        const std::string_view action = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash);
        if (action.empty()) {
            if (req.method() != http::verb::delete_) return method_not_allowed();
            if (!sh.registry.erase(id)) return error_response(req, http::status::not_found, "unknown triplane id");
            Response res{http::status::no_content, req.version()};
            res.keep_alive(req.keep_alive());
            res.prepare_payload();
            return res;
        }
        if (action == "/render") {
            if (req.method() != http::verb::get) return method_not_allowed();
            const auto entry = sh.registry.get(id);
            if (!entry) return error_response(req, http::status::not_found, "unknown triplane id");
            RenderJob job;
            Bytes bytes;
            try {
                job = render_job_from_query(parse_query(query), RenderJob{});
                bytes = render_job_bytes(entry->grid, entry->decoder, job);
            } catch (const ParseError& e) {
                return error_response(req, http::status::bad_request, e.what());
            } catch (const DomainError& e) {
                return error_response(req, http::status::bad_request, e.what());
            }
            Response res{http::status::ok, req.version()};
            res.set(http::field::content_type, job.depth ? "image/x-portable-floatmap" : "image/png");
            res.keep_alive(req.keep_alive());
            res.body().assign(bytes.begin(), bytes.end());
            res.prepare_payload();
            return res;
        }
    }
    return error_response(req, http::status::not_found, "no such endpoint");
}

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, Shared& sh, std::string id) : ws_(std::move(socket)), sh_(sh), id_(std::move(id)) {
        base_.n_fine = 0;
    }

    void run(Request req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.read_message_max(1 << 20);
        ws_.binary(true);
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        do_read();
    }

    void do_read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        std::uint32_t frame_id = 0;
        try {
            RenderJob job = render_job_from_message(text, base_, frame_id);
            if (rendering_) {
                if (pending_) ++skipped_;
                pending_.emplace(std::move(job), frame_id);
            } else {
                start_render(std::move(job), frame_id);
            }
        } catch (const std::exception& e) {
            send_error(frame_id, e.what());
        }
        do_read();
    }

    void send_error(std::uint32_t frame_id, const std::string& reason) {
        FrameHeader h;
        h.frame_id = frame_id;
        h.kind = FrameKind::error;
        queue(encode_frame(h, std::span(reinterpret_cast<const std::uint8_t*>(reason.data()), reason.size())));
    }

    void start_render(RenderJob job, std::uint32_t frame_id) {
        rendering_ = true;
        const std::uint32_t skipped = std::exchange(skipped_, 0);
        net::post(*sh_.pool, [self = shared_from_this(), job = std::move(job), frame_id, skipped] {
            Bytes frame;
            FrameHeader h;
            h.frame_id = frame_id;
            h.skipped = skipped;
            try {
                const auto entry = self->sh_.registry.get(self->id_);
                if (!entry) throw std::runtime_error("unknown triplane id");
                const Bytes payload = render_job_bytes(entry->grid, entry->decoder, job);
                h.width = static_cast<std::uint16_t>(job.camera.intrinsics.width);
                h.height = static_cast<std::uint16_t>(job.camera.intrinsics.height);
                h.kind = job.depth ? FrameKind::depth : FrameKind::rgb;
                frame = encode_frame(h, payload);
            } catch (const std::exception& e) {
                const std::string reason = e.what();
                h.kind = FrameKind::error;
                frame = encode_frame(h, std::span(reinterpret_cast<const std::uint8_t*>(reason.data()), reason.size()));
            }
            net::post(self->ws_.get_executor(), [self, frame = std::move(frame)]() mutable {
                self->queue(std::move(frame));
                self->rendering_ = false;
                if (self->pending_) {
                    auto [job, id] = std::move(*self->pending_);
                    self->pending_.reset();
                    self->start_render(std::move(job), id);
                }
            });
        });
    }

    void queue(Bytes frame) {
        outq_.push_back(std::move(frame));
        if (!writing_) do_write();
    }

    void do_write() {
        writing_ = true;
        ws_.async_write(net::buffer(outq_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            outq_.clear();
            writing_ = false;
            return;
        }
        outq_.pop_front();
        if (outq_.empty())
            writing_ = false;
        else
            do_write();
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    Shared& sh_;
    std::string id_;
    RenderJob base_;
    bool rendering_ = false;
    std::optional<std::pair<RenderJob, std::uint32_t>> pending_;
    std::uint32_t skipped_ = 0;
    std::deque<Bytes> outq_;
    bool writing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, Shared& sh) : stream_(std::move(socket)), sh_(sh) {}

    void run() { net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this())); }

private:
    void do_read() {
        parser_.emplace();
        parser_->body_limit(sh_.cfg->max_upload_bytes);
        stream_.expires_after(std::chrono::seconds(60));
        http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec == http::error::body_limit) {
            Request head;
            head.version(parser_->get().version());
            head.keep_alive(false);
            Response res = error_response(head, http::status::payload_too_large,
                                          "upload exceeds " + std::to_string(sh_.cfg->max_upload_bytes) + " bytes");
            write(std::move(res), true);
            return;
        }
        if (ec) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        Request req = parser_->release();

        if (websocket::is_upgrade(req)) {
            const std::string_view target(req.target().data(), req.target().size());
            const std::size_t qpos = target.find('?');
            std::string id;
            try {
                if (target.substr(0, qpos) != "/v1/stream") throw ParseError("path", "no such endpoint");
                const auto q = parse_query(qpos == std::string_view::npos ? "" : target.substr(qpos + 1));
                for (const auto& [k, v] : q)
                    if (k != "id") throw ParseError(k, "unknown parameter");
                if (!q.count("id")) throw ParseError("id", "missing");
                id = q.at("id");
            } catch (const ParseError& e) {
                write(error_response(req, target.substr(0, qpos) == "/v1/stream" ? http::status::bad_request
                                                                                 : http::status::not_found,
                                     e.what()),
                      false);
                return;
            }
            if (!sh_.registry.get(id)) {
                write(error_response(req, http::status::not_found, "unknown triplane id"), false);
                return;
            }
            stream_.expires_never();
            std::make_shared<WsSession>(stream_.release_socket(), sh_, id)->run(std::move(req));
            return;
        }

        net::post(*sh_.pool, [self = shared_from_this(), req = std::move(req)] {
            Response res;
            try {
                res = handle(self->sh_, req);
            } catch (const std::exception& e) {
                res = error_response(req, http::status::internal_server_error, e.what());
            }
            net::post(self->stream_.get_executor(),
                      [self, res = std::move(res)]() mutable { self->write(std::move(res), false); });
        });
    }

    void write(Response res, bool drain) {
        auto sp = std::make_shared<Response>(std::move(res));
        http::async_write(stream_, *sp, [self = shared_from_this(), sp, drain](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (drain) {
                self->drain();
                return;
            }
            if (sp->need_eof()) {
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                return;
            }
            self->do_read();
        });
    }

    // After an early rejection the client may still be sending its body;
    // swallow it so the response is not lost to a connection reset.
    void drain() {
        stream_.expires_after(std::chrono::seconds(10));
        scratch_.resize(1 << 16);
        stream_.async_read_some(net::buffer(scratch_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->stream_.socket().shutdown(tcp::socket::shutdown_both, ec);
                return;
            }
            self->drain();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    Shared& sh_;
    std::optional<http::request_parser<http::string_body>> parser_;
    std::vector<char> scratch_;
};

} // namespace

struct RenderServer::Impl {
    ServiceConfig cfg;
    net::io_context ioc;
    std::optional<net::thread_pool> pool;
    Shared shared;
    std::optional<tcp::acceptor> acceptor;
    std::vector<std::thread> threads;
    unsigned short bound_port = 0;
    bool running = false;

    void do_accept() {
        acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
            if (!acceptor->is_open()) return;
            if (!ec) std::make_shared<HttpSession>(std::move(socket), shared)->run();
            do_accept();
        });
    }
};

RenderServer::RenderServer(ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
    if (cfg.workers < 1) throw DomainError("service: workers must be >= 1");
    if (cfg.io_threads < 1) throw DomainError("service: io_threads must be >= 1");
    if (cfg.max_upload_bytes < 1) throw DomainError("service: upload limit must be positive");
    if (cfg.decoder) cfg.decoder->validate();
    impl_->cfg = std::move(cfg);
    impl_->shared.cfg = &impl_->cfg;
}

RenderServer::~RenderServer() { stop(); }

void RenderServer::start() {
    Impl& m = *impl_;
    if (m.running) return;
    m.pool.emplace(static_cast<std::size_t>(m.cfg.workers));
    m.shared.pool = &*m.pool;
    const tcp::endpoint ep(net::ip::make_address(m.cfg.address), m.cfg.port);
    m.acceptor.emplace(m.ioc);
    m.acceptor->open(ep.protocol());
    m.acceptor->set_option(net::socket_base::reuse_address(true));
    m.acceptor->bind(ep);
    m.acceptor->listen(net::socket_base::max_listen_connections);
    m.bound_port = m.acceptor->local_endpoint().port();
    m.do_accept();
    m.running = true;
    for (int i = 0; i < m.cfg.io_threads; ++i) m.threads.emplace_back([&m] { m.ioc.run(); });
}

unsigned short RenderServer::port() const { return impl_->bound_port; }

void RenderServer::stop() {
    Impl& m = *impl_;
    if (!m.running) return;
    m.running = false;
    net::post(m.ioc, [&m] {
        beast::error_code ec;
        m.acceptor->close(ec);
    });
    m.ioc.stop();
    for (auto& t : m.threads) t.join();
    m.threads.clear();
    m.pool->join();
}

void RenderServer::wait_for_signal() {
    net::io_context sig_ctx;
    net::signal_set signals(sig_ctx, SIGINT, SIGTERM);
    signals.async_wait([](beast::error_code, int) {});
    sig_ctx.run();
    stop();
}

} // namespace tri
