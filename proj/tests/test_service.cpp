#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <fstream>
#include <future>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "support.hpp"
#include "tri/error.hpp"
#include "tri/service.hpp"

using namespace tri;
using tri::test_support::random_grid;
using tri::test_support::run_process;
using tri::test_support::TempDir;

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;

namespace {

Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override { start({}); }

    void start(ServiceConfig cfg) {
        server_.reset();
        cfg.port = 0;
        cfg.workers = 3;
        server_ = std::make_unique<RenderServer>(cfg);
        server_->start();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", server_->port());
        client_->set_read_timeout(120, 0);
    }

    std::string upload(const TriplaneGrid& g) {
        const Bytes body = serialize_triplane(g);
        auto res = client_->Post("/v1/triplanes", to_string(body), "application/octet-stream");
        EXPECT_TRUE(res);
        EXPECT_EQ(res->status, 201) << res->body;
        return nlohmann::json::parse(res->body).at("id").get<std::string>();
    }

    std::unique_ptr<RenderServer> server_;
    std::unique_ptr<httplib::Client> client_;
};

struct WsClient {
    net::io_context ioc;
    websocket::stream<net::ip::tcp::socket> ws{ioc};

    void connect(unsigned short port, const std::string& target) {
        net::ip::tcp::resolver resolver(ioc);
        net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws.handshake("127.0.0.1", target);
    }
    void send(const std::string& text) {
        ws.text(true);
        ws.write(net::buffer(text));
    }
    Bytes receive() {
        beast::flat_buffer buf;
        ws.read(buf);
        const auto data = buf.data();
        const auto* p = static_cast<const std::uint8_t*>(data.data());
        return Bytes(p, p + data.size());
    }
};

} // namespace

TEST(Frame, HeaderRoundTrip) {
    FrameHeader h;
    h.frame_id = 0xdeadbeef;
    h.width = 640;
    h.height = 3;
    h.kind = FrameKind::depth;
    h.skipped = 70000;
    const Bytes f = encode_frame(h, to_bytes("xyz"));
    ASSERT_EQ(f.size(), kFrameHeaderSize + 3);
    EXPECT_EQ(to_string(Bytes(f.begin(), f.begin() + 4)), "FRME");
    EXPECT_EQ(f[4], 0xef);
    EXPECT_EQ(f[8], 0x80);
    EXPECT_EQ(f[9], 0x02);
    EXPECT_EQ(f[12], 2);
    EXPECT_EQ(f[13] | f[14] << 8 | f[15] << 16, 70000);
    const FrameHeader d = decode_frame_header(f);
    EXPECT_EQ(d.frame_id, h.frame_id);
    EXPECT_EQ(d.width, 640);
    EXPECT_EQ(d.height, 3);
    EXPECT_EQ(d.kind, FrameKind::depth);
    EXPECT_EQ(d.skipped, 70000u);

    h.skipped = 1u << 30;
    EXPECT_EQ(decode_frame_header(encode_frame(h, {})).skipped, 0xFFFFFFu);
}

TEST(Frame, HeaderErrors) {
    Bytes f = encode_frame(FrameHeader{}, {});
    EXPECT_THROW(decode_frame_header(Bytes(f.begin(), f.end() - 1)), ParseError);
    Bytes bad = f;
    bad[12] = 7;
    EXPECT_THROW(decode_frame_header(bad), ParseError);
    bad = f;
    bad[0] = 'X';
    EXPECT_THROW(decode_frame_header(bad), ParseError);
}

TEST(Jobs, QueryParsing) {
    const RenderJob j = render_job_from_query(
        {{"yaw_deg", "12.5"}, {"width", "20"}, {"samples", "7"}, {"samples_fine", "0"}, {"channel", "depth"},
         {"stratified", "true"}, {"seed", "42"}},
        RenderJob{});
    EXPECT_DOUBLE_EQ(j.camera.pose.yaw, deg2rad(12.5));
    EXPECT_EQ(j.camera.intrinsics.width, 20);
    EXPECT_EQ(j.n_coarse, 7);
    EXPECT_EQ(j.n_fine, 0);
    EXPECT_TRUE(j.depth);
    EXPECT_TRUE(j.stratified);
    EXPECT_EQ(j.seed, 42u);

    const auto field = [](std::map<std::string, std::string> q) {
        try {
            render_job_from_query(q, RenderJob{});
        } catch (const ParseError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(field({{"zoom", "2"}}), "zoom");
    EXPECT_EQ(field({{"samples", "0"}}), "samples");
    EXPECT_EQ(field({{"samples", "3x"}}), "samples");
    EXPECT_EQ(field({{"yaw_deg", "nan"}}), "yaw_deg");
    EXPECT_EQ(field({{"radius", "-2"}}), "radius");
    EXPECT_EQ(field({{"channel", "alpha"}}), "channel");
    EXPECT_EQ(field({{"width", "4096"}}), "width");
}

TEST(Jobs, MessageParsing) {
    std::uint32_t id = 0;
    const RenderJob j =
        render_job_from_message(R"({"frame_id": 9, "yaw_deg": -3, "samples": 5, "channel": "rgb"})", RenderJob{}, id);
    EXPECT_EQ(id, 9u);
    EXPECT_EQ(j.n_coarse, 5);
    EXPECT_DOUBLE_EQ(j.camera.pose.yaw, deg2rad(-3.0));
    EXPECT_THROW(render_job_from_message("not json", RenderJob{}, id), ParseError);
    EXPECT_THROW(render_job_from_message("[]", RenderJob{}, id), ParseError);
    EXPECT_THROW(render_job_from_message(R"({"frame_id": -1})", RenderJob{}, id), ParseError);
    EXPECT_THROW(render_job_from_message(R"({"stratified": 1})", RenderJob{}, id), ParseError);
    EXPECT_THROW(render_job_from_message(R"({"fov": 1})", RenderJob{}, id), ParseError);
}

TEST_F(ServiceTest, HealthAndUnknownRoutes) {
    auto r = client_->Get("/v1/healthz");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    r = client_->Get("/v1/nothing");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 404);
    r = client_->Get("/v1/triplanes");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 405);
}

TEST_F(ServiceTest, UploadRenderDelete) {
    const TriplaneGrid g = random_grid(8, 6, 1.0, 1);
    const std::string id = upload(g);
    EXPECT_EQ(id.size(), 32u);

    auto r = client_->Get("/v1/triplanes/" + id + "/render?width=16&height=12&yaw_deg=10&samples=16&samples_fine=8");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
    RenderJob job;
    job.camera.intrinsics.width = 16;
    job.camera.intrinsics.height = 12;
    job.camera.pose.yaw = deg2rad(10.0);
    job.n_coarse = 16;
    job.n_fine = 8;
    EXPECT_EQ(to_bytes(r->body), render_job_bytes(g, default_decoder(6), job, 2));

    r = client_->Get("/v1/triplanes/" + id + "/render?width=5&height=4&channel=depth&samples=8");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(r->get_header_value("Content-Type"), "image/x-portable-floatmap");
    const Image depth = decode_pfm(to_bytes(r->body));
    EXPECT_EQ(depth.width, 5);
    EXPECT_EQ(depth.channels, 1);

    r = client_->Delete("/v1/triplanes/" + id);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 204);
    r = client_->Get("/v1/triplanes/" + id + "/render");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 404);
    r = client_->Delete("/v1/triplanes/" + id);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 404);
}

TEST_F(ServiceTest, BadRequests) {
    auto r = client_->Post("/v1/triplanes", "TRPLgarbage", "application/octet-stream");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400);
    EXPECT_NE(nlohmann::json::parse(r->body).at("error").get<std::string>().find("version"), std::string::npos);

    const std::string id = upload(random_grid(4, 2, 1.0, 2));
    for (const char* q : {"?zoom=2", "?samples=0", "?radius=-1", "?width=abc", "?yaw_deg=1&yaw_deg=2", "?seed=%zz"}) {
        r = client_->Get("/v1/triplanes/" + id + "/render" + q);
        ASSERT_TRUE(r);
        EXPECT_EQ(r->status, 400) << q;
        EXPECT_TRUE(nlohmann::json::parse(r->body).contains("error"));
    }
}

TEST_F(ServiceTest, OversizedUploadIs413) {
    ServiceConfig cfg;
    cfg.max_upload_bytes = 1000;
    start(cfg);
    const Bytes body = serialize_triplane(random_grid(8, 8, 1.0, 3));
    ASSERT_GT(body.size(), 1000u);
    auto r = client_->Post("/v1/triplanes", to_string(body), "application/octet-stream");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 413);
    r = client_->Get("/v1/healthz");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
}

TEST_F(ServiceTest, DecoderWidthMismatchIs400) {
    ServiceConfig cfg;
    cfg.decoder = default_decoder(4);
    start(cfg);
    auto r = client_->Post("/v1/triplanes", to_string(serialize_triplane(random_grid(4, 3, 1.0, 4))),
                           "application/octet-stream");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400);
}

TEST_F(ServiceTest, ConcurrentRendersMatchSerial) {
    const TriplaneGrid g = random_grid(8, 4, 1.0, 5);
    const std::string id = upload(g);
    const unsigned short port = server_->port();
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 6; ++i)
        futures.push_back(std::async(std::launch::async, [=] {
            httplib::Client c("127.0.0.1", port);
            c.set_read_timeout(120, 0);
            auto r = c.Get("/v1/triplanes/" + id + "/render?width=10&height=10&samples=12&samples_fine=4&stratified=1" +
                           "&seed=" + std::to_string(i) + "&yaw_deg=" + std::to_string(5 * i));
            return r && r->status == 200 ? r->body : std::string();
        }));
    for (int i = 0; i < 6; ++i) {
        RenderJob job;
        job.camera.intrinsics.width = job.camera.intrinsics.height = 10;
        job.camera.pose.yaw = deg2rad(5.0 * i);
        job.n_coarse = 12;
        job.n_fine = 4;
        job.stratified = true;
        job.seed = static_cast<std::uint64_t>(i);
        EXPECT_EQ(to_bytes(futures[i].get()), render_job_bytes(g, default_decoder(4), job)) << i;
    }
}

TEST_F(ServiceTest, HttpMatchesCliBinary) {
    TempDir dir;
    const TriplaneGrid g = random_grid(8, 4, 1.0, 6);
    write_triplane(dir / "g.trpl", g);
    std::ofstream(dir / "cam.json") << R"({"width": 14, "height": 9, "pitch_deg": 7, "yaw_deg": -21, "radius": 2.9})";
    ASSERT_EQ(run_process(TRI_CLI_PATH,
                          {"--threads", "4", "--seed", "3", "render", "--triplane", (dir / "g.trpl").string(),
                           "--camera", (dir / "cam.json").string(), "--samples", "20", "--samples-fine", "12",
                           "--stratified", "--out", (dir / "o.png").string()},
                          dir / "out", dir / "err"),
              0);
    const std::string id = upload(g);
    auto r = client_->Get("/v1/triplanes/" + id +
                          "/render?width=14&height=9&pitch_deg=7&yaw_deg=-21&radius=2.9&samples=20&samples_fine=12"
                          "&stratified=true&seed=3");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(to_bytes(r->body), read_file(dir / "o.png"));
}

TEST_F(ServiceTest, StreamOneMessageOneFrame) {
    const TriplaneGrid g = random_grid(6, 4, 1.0, 7);
    const std::string id = upload(g);
    WsClient ws;
    ws.connect(server_->port(), "/v1/stream?id=" + id);
    ws.send(R"({"frame_id": 5, "width": 12, "height": 8, "yaw_deg": 15, "samples": 10, "samples_fine": 6})");
    const Bytes frame = ws.receive();
    const FrameHeader h = decode_frame_header(frame);
    EXPECT_EQ(h.frame_id, 5u);
    EXPECT_EQ(h.kind, FrameKind::rgb);
    EXPECT_EQ(h.width, 12);
    EXPECT_EQ(h.height, 8);
    EXPECT_EQ(h.skipped, 0u);

    auto r = client_->Get("/v1/triplanes/" + id + "/render?width=12&height=8&yaw_deg=15&samples=10&samples_fine=6");
    ASSERT_TRUE(r);
    EXPECT_EQ(Bytes(frame.begin() + kFrameHeaderSize, frame.end()), to_bytes(r->body));

    ws.send(R"({"frame_id": 6, "width": 4, "height": 4, "channel": "depth", "samples": 4})");
    const Bytes d = ws.receive();
    EXPECT_EQ(decode_frame_header(d).kind, FrameKind::depth);
    EXPECT_EQ(decode_pfm(Bytes(d.begin() + kFrameHeaderSize, d.end())).width, 4);
    ws.ws.close(websocket::close_code::normal);
}

TEST_F(ServiceTest, StreamMalformedMessageGivesErrorFrame) {
    const std::string id = upload(random_grid(4, 2, 1.0, 8));
    WsClient ws;
    ws.connect(server_->port(), "/v1/stream?id=" + id);
    ws.send("{not json");
    Bytes f = ws.receive();
    EXPECT_EQ(decode_frame_header(f).kind, FrameKind::error);
    EXPECT_NE(to_string(Bytes(f.begin() + kFrameHeaderSize, f.end())).find("message"), std::string::npos);
    ws.send(R"({"frame_id": 3, "radius": -1})");
    f = ws.receive();
    EXPECT_EQ(decode_frame_header(f).kind, FrameKind::error);
    EXPECT_EQ(decode_frame_header(f).frame_id, 3u);
    // The session survives.
    ws.send(R"({"frame_id": 4, "width": 4, "height": 4, "samples": 4, "samples_fine": 0})");
    EXPECT_EQ(decode_frame_header(ws.receive()).kind, FrameKind::rgb);
}

TEST_F(ServiceTest, StreamBurstIsCoalesced) {
    const std::string id = upload(random_grid(16, 8, 1.0, 9));
    WsClient ws;
    ws.connect(server_->port(), "/v1/stream?id=" + id);
    const int n = 30;
    for (int i = 1; i <= n; ++i)
        ws.send(R"({"frame_id": )" + std::to_string(i) + R"(, "width": 48, "height": 48, "samples": 48, "yaw_deg": )" +
                std::to_string(i) + "}");
    std::uint32_t last = 0, frames = 0, skipped = 0;
    while (last != static_cast<std::uint32_t>(n)) {
        const FrameHeader h = decode_frame_header(ws.receive());
        ASSERT_EQ(h.kind, FrameKind::rgb);
        EXPECT_GT(h.frame_id, last);
        last = h.frame_id;
        ++frames;
        skipped += h.skipped;
    }
    EXPECT_LT(frames, static_cast<std::uint32_t>(n));
    EXPECT_EQ(frames + skipped, static_cast<std::uint32_t>(n));
}

TEST_F(ServiceTest, StreamHandshakeErrors) {
    const std::string id = upload(random_grid(4, 2, 1.0, 10));
    for (const std::string& target : std::vector<std::string>{"/v1/stream?id=ffff", "/v1/stream", "/v1/elsewhere?id=" + id}) {
        WsClient ws;
        EXPECT_THROW(ws.connect(server_->port(), target), beast::system_error) << target;
    }
}
