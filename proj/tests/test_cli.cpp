#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tri/cli.hpp"
#include "tri/io.hpp"
#include "tri/service.hpp"
#include "json.hpp"

using namespace tri;
using tri::test_support::random_grid;
using tri::test_support::run_process;
using tri::test_support::TempDir;

namespace {

const std::string kFixtures = TRI_FIXTURE_DIR;

struct CliResult {
    int code;
    std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "tri");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_string(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

} // namespace

TEST(Cli, ZeroDecoderRendersConstantImage) {
    TempDir dir;
    write_triplane(dir / "g.trpl", random_grid(8, 4, 1.0, 1));
    write_decoder(dir / "z.tdec", zero_decoder(4, 3, 8));
    write_string(dir / "cam.json", R"({"width": 12, "height": 10, "yaw_deg": 20})");
    const CliResult r = cli({"render", "--triplane", (dir / "g.trpl").string(), "--decoder", (dir / "z.tdec").string(),
                             "--camera", (dir / "cam.json").string(), "--out", (dir / "o.png").string(), "--depth-out",
                             (dir / "d.pfm").string(), "--sr-out", (dir / "sr.png").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Image img = read_png(dir / "o.png");
    ASSERT_EQ(img.width, 12);
    ASSERT_EQ(img.height, 10);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) EXPECT_EQ(img.at(c, y, x), img.at(c, 0, 0));
    const Image sr = read_png(dir / "sr.png");
    EXPECT_EQ(sr.width, 48);
    EXPECT_EQ(sr.height, 40);
    EXPECT_EQ(read_depth_pfm(dir / "d.pfm").width, 12);
}

TEST(Cli, RenderMatchesLibraryBytes) {
    TempDir dir;
    const TriplaneGrid g = random_grid(8, 4, 1.0, 2);
    write_triplane(dir / "g.trpl", g);
    write_string(dir / "cam.json", R"({"width": 9, "height": 7, "pitch_deg": -8})");
    ASSERT_EQ(cli({"--seed", "5", "render", "--triplane", (dir / "g.trpl").string(), "--camera",
                   (dir / "cam.json").string(), "--stratified", "--samples", "20", "--samples-fine", "10", "--out",
                   (dir / "o.png").string()})
                  .code,
              0);
    RenderJob job;
    job.camera = read_camera_json(dir / "cam.json");
    job.n_coarse = 20;
    job.n_fine = 10;
    job.stratified = true;
    job.seed = 5;
    EXPECT_EQ(read_file(dir / "o.png"), render_job_bytes(read_triplane(dir / "g.trpl"), default_decoder(4), job, 2));
}

TEST(Cli, BinaryOutputIsIdenticalAcrossRunsAndThreads) {
    TempDir dir;
    write_triplane(dir / "g.trpl", random_grid(10, 6, 1.0, 3));
    write_string(dir / "cam.json", R"({"width": 24, "height": 20, "yaw_deg": -15})");
    std::vector<Bytes> pngs, pfms;
    for (const char* threads : {"1", "8", "8"}) {
        const std::string tag = std::to_string(pngs.size());
        const int code = run_process(TRI_CLI_PATH,
                                     {"--threads", threads, "--seed", "9", "render", "--triplane",
                                      (dir / "g.trpl").string(), "--camera", (dir / "cam.json").string(),
                                      "--stratified", "--samples", "24", "--samples-fine", "24", "--out",
                                      (dir / ("o" + tag + ".png")).string(), "--depth-out",
                                      (dir / ("d" + tag + ".pfm")).string()},
                                     dir / "stdout", dir / "stderr");
        ASSERT_EQ(code, 0) << slurp(dir / "stderr");
        pngs.push_back(read_file(dir / ("o" + tag + ".png")));
        pfms.push_back(read_file(dir / ("d" + tag + ".pfm")));
    }
    EXPECT_EQ(pngs[0], pngs[1]);
    EXPECT_EQ(pngs[1], pngs[2]);
    EXPECT_EQ(pfms[0], pfms[1]);
    EXPECT_EQ(pfms[1], pfms[2]);
}

TEST(Cli, UsageErrorsExitTwo) {
    TempDir dir;
    write_triplane(dir / "g.trpl", random_grid(4, 2, 1.0, 4));
    const std::string g = (dir / "g.trpl").string();
    const std::vector<std::vector<std::string>> bad{
        {},
        {"paint"},
        {"render", "--out", (dir / "o.png").string()},
        {"render", "--triplane", g},
        {"render", "--triplane", (dir / "missing.trpl").string(), "--out", "x.png"},
        {"--threads", "0", "render", "--triplane", g, "--out", "x.png"},
        {"render", "--triplane", g, "--out", "x.png", "--samples", "many"},
        {"render", "--triplane", g, "--out", "x.png", "--bogus"},
        {"orbit", "--triplane", g, "--out", "d", "--yaw-max", "60"},
        {"fit", "--views", "1", "--out", "x.trpl"},
    };
    for (const auto& args : bad) {
        std::string joined;
        for (const auto& a : args) joined += a + " ";
        EXPECT_EQ(cli(args).code, 2) << joined;
    }
    EXPECT_EQ(run_process(TRI_CLI_PATH, {"render", "--bogus"}, dir / "o", dir / "e"), 2);
    EXPECT_EQ(run_process(TRI_CLI_PATH, {"--help"}, dir / "o", dir / "e"), 0);
    EXPECT_NE(slurp(dir / "o").find("render"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitOne) {
    TempDir dir;
    write_string(dir / "bad.trpl", "TRPX-not-really");
    const CliResult r = cli({"render", "--triplane", (dir / "bad.trpl").string(), "--out", (dir / "o.png").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("magic"), std::string::npos) << r.err;

    write_triplane(dir / "g.trpl", random_grid(4, 2, 1.0, 5));
    write_decoder(dir / "d.tdec", default_decoder(3));
    EXPECT_EQ(cli({"render", "--triplane", (dir / "g.trpl").string(), "--decoder", (dir / "d.tdec").string(), "--out",
                   (dir / "o.png").string()})
                  .code,
              1);
    write_string(dir / "cam.json", R"({"radius": -1})");
    const CliResult c = cli({"render", "--triplane", (dir / "g.trpl").string(), "--camera",
                             (dir / "cam.json").string(), "--out", (dir / "o.png").string()});
    EXPECT_EQ(c.code, 1);
    EXPECT_NE(c.err.find("radius"), std::string::npos) << c.err;
    EXPECT_EQ(cli({"metrics"}).code, 1);
    EXPECT_EQ(cli({"gradcheck", "--case", "nope"}).code, 1);
}

TEST(Cli, GradcheckCase) {
    TempDir dir;
    const CliResult r = cli({"gradcheck", "--case", "color", "--out", (dir / "g.json").string()});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("ok"), std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "g.json"));
    ASSERT_EQ(j.size(), 1u);
    EXPECT_EQ(j[0]["case"], "color");
    EXPECT_LE(j[0]["max_rel_error"].get<double>(), 1e-4);
}

TEST(Cli, MetricsAlignRecoversShift) {
    const std::string a = kFixtures + "/reference.png", b = kFixtures + "/shifted.png";
    const CliResult raw = cli({"metrics", "--a", a, "--b", b});
    ASSERT_EQ(raw.code, 0) << raw.err;
    const auto jr = nlohmann::json::parse(raw.out);
    EXPECT_FALSE(jr["aligned"].get<bool>());
    EXPECT_TRUE(jr["transform"].is_null());

    const CliResult al = cli({"metrics", "--a", a, "--b", b, "--landmarks-a", kFixtures + "/landmarks_reference.json",
                              "--landmarks-b", kFixtures + "/landmarks_shifted.json", "--align"});
    ASSERT_EQ(al.code, 0) << al.err;
    const auto ja = nlohmann::json::parse(al.out);
    EXPECT_TRUE(ja["aligned"].get<bool>());
    EXPECT_NEAR(ja["transform"]["tx"].get<double>(), 2.0, 1e-9);
    EXPECT_NEAR(ja["transform"]["ty"].get<double>(), 0.0, 1e-9);
    EXPECT_NEAR(ja["transform"]["theta_deg"].get<double>(), 0.0, 1e-9);
    EXPECT_GT(ja["psnr_db"].get<double>(), jr["psnr_db"].get<double>() + 5.0);
    EXPECT_GT(ja["ssim"].get<double>(), jr["ssim"].get<double>());

    EXPECT_EQ(cli({"metrics", "--a", a, "--b", b, "--align"}).code, 1);
}

TEST(Cli, MetricsDepth) {
    TempDir dir;
    Image gt(1, 4, 4), pred(1, 4, 4);
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        gt.data[i] = 1.0f + 0.125f * static_cast<float>(i);
        pred.data[i] = 2.0f * gt.data[i] + 0.5f;
    }
    write_depth_pfm(dir / "gt.pfm", gt);
    write_depth_pfm(dir / "pred.pfm", pred);
    const CliResult r = cli({"metrics", "--depth-pred", (dir / "pred.pfm").string(), "--depth-gt",
                             (dir / "gt.pfm").string(), "--out", (dir / "m.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "m.json"));
    EXPECT_NEAR(j["depth_l1"].get<double>(), 0.0, 1e-6);
    EXPECT_EQ(j["n_pixels"], 16);
    EXPECT_TRUE(j["psnr_db"].is_null());
}

TEST(Cli, OrbitWritesFrames) {
    TempDir dir;
    write_triplane(dir / "g.trpl", random_grid(6, 4, 1.0, 6));
    write_string(dir / "cam.json", R"({"width": 6, "height": 6})");
    const CliResult r = cli({"orbit", "--triplane", (dir / "g.trpl").string(), "--camera", (dir / "cam.json").string(),
                             "--out", (dir / "orbit").string(), "--frames", "3", "--samples", "8", "--samples-fine",
                             "0", "--depth"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"frame_000.png", "frame_001.png", "frame_002.png", "frame_002.pfm"})
        EXPECT_TRUE(std::filesystem::exists(dir / "orbit" / f)) << f;
    // The middle frame is the frontal view.
    RenderJob job;
    job.camera = read_camera_json(dir / "cam.json");
    job.n_coarse = 8;
    job.n_fine = 0;
    EXPECT_EQ(read_file(dir / "orbit" / "frame_001.png"),
              render_job_bytes(read_triplane(dir / "g.trpl"), default_decoder(4), job));
    EXPECT_NE(read_file(dir / "orbit" / "frame_000.png"), read_file(dir / "orbit" / "frame_002.png"));
}

TEST(Cli, FitWritesArtifacts) {
    TempDir dir;
    const CliResult r = cli({"fit", "--scene", "sphere", "--views", "2", "--steps", "4", "--grid", "6", "--channels",
                             "4", "--out", (dir / "f.trpl").string(), "--decoder-out", (dir / "f.tdec").string(),
                             "--trace-out", (dir / "t.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("ratio"), std::string::npos);
    const TriplaneGrid g = read_triplane(dir / "f.trpl");
    EXPECT_EQ(g.resolution(), 6);
    EXPECT_EQ(g.channels(), 4);
    EXPECT_EQ(read_decoder(dir / "f.tdec").input_width(), 4);
    const std::string csv = slurp(dir / "t.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
    EXPECT_EQ(csv.rfind("step,loss,", 0), 0u);
}

TEST(Cli, BenchPrintsRows) {
    const CliResult r = cli({"bench", "--size", "8", "--samples", "8", "--samples-fine", "0", "--thread-counts", "1",
                             "--thread-counts", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("speedup"), std::string::npos);
    BenchConfig cfg;
    cfg.size = 4;
    cfg.threads = {1, 3};
    const auto rows = run_bench(cfg);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].speedup, 1.0);
    EXPECT_GT(rows[1].pixels_per_second, 0.0);
}
