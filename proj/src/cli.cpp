#include "tri/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "tri/diffcheck.hpp"
#include "tri/distill.hpp"
#include "tri/error.hpp"
#include "tri/io.hpp"
#include "tri/metrics.hpp"
#include "tri/service.hpp"

namespace tri {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool verbose = false;
};

struct RenderOpts {
    std::string triplane, camera, decoder, out, depth_out, sr_out;
    int n_coarse = 48;
    int n_fine = 48;
    bool stratified = false;
};

struct OrbitOpts {
    std::string triplane, camera, decoder, out;
    int frames = 13;
    double yaw_max = 49.0;
    int n_coarse = 48;
    int n_fine = 48;
    bool depth = false;
};

struct FitOpts {
    std::string scene = "sphere";
    std::string out, decoder_out, trace_out;
    int views = 8;
    int steps = 2000;
    int grid = 16;
    int channels = 8;
    std::optional<double> triplane_lr, decoder_lr;
};

struct GradcheckOpts {
    std::string only;
    std::string out;
    double tolerance = 1e-4;
};

struct MetricsOpts {
    std::string a, b, landmarks_a, landmarks_b, depth_pred, depth_gt, depth_mask, out;
    bool align = false;
};

struct BenchOpts {
    int size = 128;
    int n_coarse = 48;
    int n_fine = 48;
    std::vector<int> threads;
    int repeats = 1;
};

struct ServeOpts {
    std::string address = "127.0.0.1";
    int port = 8080;
    int workers = 0;
    double max_upload_mib = 256;
    std::string decoder;
};

FieldDecoder load_decoder(const std::string& path, int channels) {
    FieldDecoder dec = path.empty() ? default_decoder(channels) : read_decoder(path);
    if (dec.input_width() != channels)
        throw DomainError("decoder expects " + std::to_string(dec.input_width()) + " input channels, triplane has " +
                          std::to_string(channels));
    return dec;
}

void write_text(const std::string& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int cmd_render(const Globals& g, const RenderOpts& o, std::ostream& out) {
    const TriplaneGrid grid = read_triplane(o.triplane);
    const FieldDecoder dec = load_decoder(o.decoder, grid.channels());
    RenderJob job;
    if (!o.camera.empty()) job.camera = read_camera_json(o.camera);
    job.n_coarse = o.n_coarse;
    job.n_fine = o.n_fine;
    job.stratified = o.stratified;
    job.seed = g.seed;
    const auto t0 = std::chrono::steady_clock::now();
    const RenderOutput r = render_job(grid, dec, job, g.threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_png(o.out, r.rgb());
    if (!o.depth_out.empty()) write_depth_pfm(o.depth_out, r.depth_image());
    if (!o.sr_out.empty()) write_png(o.sr_out, upsample_bilinear(r.rgb(), 4));
    if (g.verbose) out << "rendered " << r.width << "x" << r.height << " in " << secs << " s\n";
    return 0;
}

int cmd_orbit(const Globals& g, const OrbitOpts& o, std::ostream& out) {
    const TriplaneGrid grid = read_triplane(o.triplane);
    const FieldDecoder dec = load_decoder(o.decoder, grid.channels());
    RenderJob job;
    if (!o.camera.empty()) job.camera = read_camera_json(o.camera);
    job.n_coarse = o.n_coarse;
    job.n_fine = o.n_fine;
    job.seed = g.seed;
    fs::create_directories(o.out);
    for (int i = 0; i < o.frames; ++i) {
        const double yaw = o.frames == 1 ? 0.0 : -o.yaw_max + 2.0 * o.yaw_max * i / (o.frames - 1);
        job.camera.pose.yaw = deg2rad(yaw);
        const RenderOutput r = render_job(grid, dec, job, g.threads);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03d", i);
        write_png(fs::path(o.out) / (std::string(name) + ".png"), r.rgb());
        if (o.depth) write_depth_pfm(fs::path(o.out) / (std::string(name) + ".pfm"), r.depth_image());
        if (g.verbose) out << name << " yaw " << yaw << "\n";
    }
    return 0;
}

int cmd_fit(const Globals& g, const FitOpts& o, std::ostream& out) {
    DistillConfig cfg;
    cfg.n_views = o.views;
    cfg.steps = o.steps;
    cfg.grid_resolution = o.grid;
    cfg.grid_channels = o.channels;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    if (o.triplane_lr) cfg.optimizer.triplane_lr = *o.triplane_lr;
    if (o.decoder_lr) cfg.optimizer.decoder_lr = *o.decoder_lr;
    const ProceduralScene scene = make_procedural_scene(o.scene);
    const auto t0 = std::chrono::steady_clock::now();
    const DistillResult r = distill_fit(scene, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_triplane(o.out, r.grid);
    if (!o.decoder_out.empty()) write_decoder(o.decoder_out, r.decoder);
    if (!o.trace_out.empty()) {
        std::ofstream csv(o.trace_out, std::ios::binary | std::ios::trunc);
        if (!csv) throw std::runtime_error("cannot open " + o.trace_out);
        write_loss_trace_csv(csv, r.trace);
    }
    const double first = r.trace.front().loss.total, last = r.trace.back().loss.total;
    char buf[200];
    std::snprintf(buf, sizeof buf, "loss %.6g -> %.6g (ratio %.4f) after %d steps, %.1f s\n", first, last,
                  first > 0 ? last / first : 0.0, o.steps, secs);
    out << buf;
    return 0;
}

int cmd_gradcheck(const Globals& g, const GradcheckOpts& o, std::ostream& out) {
    std::vector<GradcheckCase> cases = shipped_gradcheck_cases();
    if (!o.only.empty()) {
        std::erase_if(cases, [&](const GradcheckCase& c) { return c.name != o.only; });
        if (cases.empty()) throw DomainError("no gradcheck case named '" + o.only + "'");
    }
    nlohmann::json report = nlohmann::json::array();
    bool ok = true;
    double worst = 0.0;
    std::size_t probes = 0;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-20s %8s %7s %12s  %-28s %7s\n", "case", "params", "probes", "max_rel_err",
                  "worst", "seconds");
    out << buf;
    for (const GradcheckCase& c : cases) {
        const GradcheckResult r = run_gradcheck(c, g.threads);
        ok = ok && r.max_rel_error <= o.tolerance;
        worst = std::max(worst, r.max_rel_error);
        probes += r.probes();
        std::snprintf(buf, sizeof buf, "%-20s %8zu %7zu %12.3e  %-28s %7.2f\n", r.name.c_str(), r.n_parameters,
                      r.probes(), r.max_rel_error, r.worst_parameter.c_str(), r.seconds);
        out << buf;
        report.push_back({{"case", r.name},
                          {"parameters", r.n_parameters},
                          {"probes", r.probes()},
                          {"triplane_max_rel_error", r.triplane.max_rel_error},
                          {"decoder_max_rel_error", r.decoder.max_rel_error},
                          {"max_rel_error", r.max_rel_error},
                          {"worst_parameter", r.worst_parameter},
                          {"seconds", r.seconds}});
    }
    std::snprintf(buf, sizeof buf, "%zu probes, max relative error %.3e (tolerance %.1e): %s\n", probes, worst,
                  o.tolerance, ok ? "ok" : "FAILED");
    out << buf;
    if (!o.out.empty()) write_text(o.out, report.dump(2) + "\n");
    return ok ? 0 : 1;
}

int cmd_metrics(const Globals&, const MetricsOpts& o, std::ostream& out) {
    MetricReport rep;
    if (o.a.empty() != o.b.empty()) throw DomainError("--a and --b must be given together");
    if (o.depth_pred.empty() != o.depth_gt.empty()) throw DomainError("--depth-pred and --depth-gt must be given together");
    if (o.a.empty() && o.depth_pred.empty()) throw DomainError("nothing to compare: give --a/--b or --depth-pred/--depth-gt");
    if (o.align && (o.a.empty() || o.landmarks_a.empty() || o.landmarks_b.empty()))
        throw DomainError("--align needs --a, --b, --landmarks-a and --landmarks-b");

    if (!o.depth_pred.empty()) {
        DepthPair pair{read_depth_pfm(o.depth_pred), read_depth_pfm(o.depth_gt), {}};
        if (!o.depth_mask.empty()) {
            const Image m = read_png(o.depth_mask);
            pair.valid = Mask(m.height, m.width, false);
            for (int y = 0; y < m.height; ++y)
                for (int x = 0; x < m.width; ++x) pair.valid.set(y, x, m.at(0, y, x) > 0.0f);
        }
        const DepthErrors d = depth_si_errors(pair);
        rep.depth_l1 = d.l1;
        rep.depth_rmse = d.rmse;
        rep.n_pixels = d.n_pixels;
    }
    if (!o.a.empty()) {
        Image a = read_png(o.a);
        Image b = read_png(o.b);
        if (o.align) {
            const AlignedPair al = align_to_reference(a, b, read_landmarks(o.landmarks_b), read_landmarks(o.landmarks_a));
            a = al.reference;
            b = al.aligned;
            rep.aligned = true;
            rep.transform = al.transform;
        }
        rep.psnr_db = psnr(a, b);
        rep.ssim = ssim(a, b);
        rep.n_pixels = a.pixels();
    }
    const std::string text = rep.to_json().dump(2) + "\n";
    if (o.out.empty())
        out << text;
    else
        write_text(o.out, text);
    return 0;
}

int cmd_bench(const Globals& g, const BenchOpts& o, std::ostream& out) {
    BenchConfig cfg;
    cfg.size = o.size;
    cfg.n_coarse = o.n_coarse;
    cfg.n_fine = o.n_fine;
    cfg.repeats = o.repeats;
    cfg.seed = g.seed;
    cfg.threads = o.threads.empty() ? std::vector<int>{1, g.threads} : o.threads;
    cfg.threads.erase(std::unique(cfg.threads.begin(), cfg.threads.end()), cfg.threads.end());
    const std::vector<BenchRow> rows = run_bench(cfg);
    char buf[160];
    std::snprintf(buf, sizeof buf, "workload: %dx%d, %d+%d samples, hardware threads %u\n", o.size, o.size,
                  o.n_coarse, o.n_fine, std::thread::hardware_concurrency());
    out << buf;
    std::snprintf(buf, sizeof buf, "%8s %10s %14s %8s\n", "threads", "seconds", "pixels/s", "speedup");
    out << buf;
    for (const BenchRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%8d %10.3f %14.1f %8.2f\n", r.threads, r.seconds, r.pixels_per_second,
                      r.speedup);
        out << buf;
    }
    return 0;
}

int cmd_serve(const Globals& g, const ServeOpts& o, std::ostream& out) {
    ServiceConfig cfg;
    cfg.address = o.address;
    cfg.port = static_cast<unsigned short>(o.port);
    cfg.workers = o.workers > 0 ? o.workers : g.threads;
    cfg.max_upload_bytes = static_cast<std::size_t>(o.max_upload_mib * 1024.0 * 1024.0);
    if (!o.decoder.empty()) cfg.decoder = read_decoder(o.decoder);
    RenderServer server(cfg);
    server.start();
    out << "listening on " << o.address << ":" << server.port() << std::endl;
    server.wait_for_signal();
    return 0;
}

} // namespace

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    if (cfg.threads.empty()) throw DomainError("bench: no thread counts");
    if (cfg.repeats < 1) throw DomainError("bench: repeats must be >= 1");
    Rng rng(cfg.seed);
    TriplaneGrid grid(cfg.resolution, cfg.channels, 1.0);
    for (float& v : grid.values()) v = static_cast<float>(rng.normal(0.0, 0.5));
    const FieldDecoder dec = default_decoder(cfg.channels);
    const Camera cam = Camera::make(OrbitPose{}, Intrinsics{}, grid.box_scale());
    SamplingConfig sc;
    sc.n_coarse = cfg.n_coarse;
    sc.n_fine = cfg.n_fine;
    sc.width = cfg.size;
    sc.height = cfg.size;

    std::vector<BenchRow> rows;
    for (int t : cfg.threads) {
        if (t < 1) throw DomainError("bench: thread counts must be >= 1");
        BenchRow row;
        row.threads = t;
        for (int rep = 0; rep < cfg.repeats; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const RenderOutput r = render(grid, dec, cam, sc, cfg.seed, t);
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (rep == 0 || s < row.seconds) row.seconds = s;
        }
        row.pixels_per_second = static_cast<double>(cfg.size) * cfg.size / row.seconds;
        row.speedup = rows.empty() ? 1.0 : row.pixels_per_second / rows.front().pixels_per_second;
        rows.push_back(row);
    }
    return rows;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Triplane neural field engine: render, fit, verify and serve.", "tri"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1, 4096))->capture_default_str();
    app.add_flag("--verbose", g.verbose, "Print progress");

    std::function<int()> action;
    const auto sub = [&](const char* name, const char* help) {
        CLI::App* s = app.add_subcommand(name, help);
        s->fallthrough();
        return s;
    };

    RenderOpts ro;
    CLI::App* render_cmd = sub("render", "Render a triplane to PNG (and optionally depth PFM)");
    render_cmd->add_option("--triplane", ro.triplane, "Triplane file (.trpl)")->required()->check(CLI::ExistingFile);
    render_cmd->add_option("--camera", ro.camera, "Camera JSON (defaults when omitted)")->check(CLI::ExistingFile);
    render_cmd->add_option("--decoder", ro.decoder, "Decoder file (.tdec); default decoder when omitted")
        ->check(CLI::ExistingFile);
    render_cmd->add_option("--out", ro.out, "Output PNG")->required();
    render_cmd->add_option("--depth-out", ro.depth_out, "Output depth PFM");
    render_cmd->add_option("--sr-out", ro.sr_out, "4x bilinear upsampled PNG");
    render_cmd->add_option("--samples-coarse,--samples", ro.n_coarse, "Coarse samples per ray")
        ->check(CLI::Range(1, 4096))->capture_default_str();
    render_cmd->add_option("--samples-fine", ro.n_fine, "Importance samples per ray")
        ->check(CLI::Range(0, 4096))->capture_default_str();
    render_cmd->add_flag("--stratified", ro.stratified, "Jitter coarse samples within their bins");
    render_cmd->callback([&] { action = [&] { return cmd_render(g, ro, out); }; });

    OrbitOpts oo;
    CLI::App* orbit_cmd = sub("orbit", "Render a yaw sweep into a directory");
    orbit_cmd->add_option("--triplane", oo.triplane, "Triplane file (.trpl)")->required()->check(CLI::ExistingFile);
    orbit_cmd->add_option("--camera", oo.camera, "Base camera JSON")->check(CLI::ExistingFile);
    orbit_cmd->add_option("--decoder", oo.decoder, "Decoder file (.tdec)")->check(CLI::ExistingFile);
    orbit_cmd->add_option("--out", oo.out, "Output directory")->required();
    orbit_cmd->add_option("--frames", oo.frames, "Number of frames")->check(CLI::Range(1, 10000))->capture_default_str();
    orbit_cmd->add_option("--yaw-max", oo.yaw_max, "Sweep covers [-yaw-max, yaw-max] degrees")
        ->check(CLI::Range(0.0, 49.0))->capture_default_str();
    orbit_cmd->add_option("--samples-coarse,--samples", oo.n_coarse, "Coarse samples per ray")
        ->check(CLI::Range(1, 4096))->capture_default_str();
    orbit_cmd->add_option("--samples-fine", oo.n_fine, "Importance samples per ray")
        ->check(CLI::Range(0, 4096))->capture_default_str();
    orbit_cmd->add_flag("--depth", oo.depth, "Also write depth PFMs");
    orbit_cmd->callback([&] { action = [&] { return cmd_orbit(g, oo, out); }; });

    FitOpts fo;
    CLI::App* fit_cmd = sub("fit", "Distill a procedural scene into a triplane");
    fit_cmd->add_option("--scene", fo.scene, "empty|constant|sphere|two_sphere|slab|gaussian_blob")->capture_default_str();
    fit_cmd->add_option("--views", fo.views, "Supervision views")->check(CLI::Range(2, 1024))->capture_default_str();
    fit_cmd->add_option("--steps", fo.steps, "Optimisation steps")->check(CLI::Range(0, 10000000))->capture_default_str();
    fit_cmd->add_option("--grid", fo.grid, "Triplane resolution")->check(CLI::Range(2, 4096))->capture_default_str();
    fit_cmd->add_option("--channels", fo.channels, "Triplane channels")->check(CLI::Range(1, 1024))->capture_default_str();
    fit_cmd->add_option("--triplane-lr", fo.triplane_lr, "Triplane step size");
    fit_cmd->add_option("--decoder-lr", fo.decoder_lr, "Decoder step size");
    fit_cmd->add_option("--out", fo.out, "Output triplane (.trpl)")->required();
    fit_cmd->add_option("--decoder-out", fo.decoder_out, "Output decoder (.tdec)");
    fit_cmd->add_option("--trace-out", fo.trace_out, "Loss trace CSV");
    fit_cmd->callback([&] { action = [&] { return cmd_fit(g, fo, out); }; });

    GradcheckOpts go;
    CLI::App* gc_cmd = sub("gradcheck", "Compare analytic gradients with central finite differences");
    gc_cmd->add_option("--case", go.only, "Run only the named case");
    gc_cmd->add_option("--tolerance", go.tolerance, "Maximum relative error")->capture_default_str();
    gc_cmd->add_option("--out", go.out, "JSON report");
    gc_cmd->callback([&] { action = [&] { return cmd_gradcheck(g, go, out); }; });

    MetricsOpts mo;
    CLI::App* metrics_cmd = sub("metrics", "PSNR/SSIM/depth errors as a JSON report");
    metrics_cmd->add_option("--a", mo.a, "Reference PNG")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--b", mo.b, "Compared PNG")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--landmarks-a", mo.landmarks_a, "Landmarks of --a (JSON)")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--landmarks-b", mo.landmarks_b, "Landmarks of --b (JSON)")->check(CLI::ExistingFile);
    metrics_cmd->add_flag("--align", mo.align, "Rigidly align --b onto --a before scoring");
    metrics_cmd->add_option("--depth-pred", mo.depth_pred, "Predicted depth PFM")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--depth-gt", mo.depth_gt, "Ground-truth depth PFM")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--depth-mask", mo.depth_mask, "Valid-pixel PNG (nonzero = valid)")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--out", mo.out, "Output JSON (stdout when omitted)");
    metrics_cmd->callback([&] { action = [&] { return cmd_metrics(g, mo, out); }; });

    BenchOpts bo;
    CLI::App* bench_cmd = sub("bench", "Render throughput per thread count");
    bench_cmd->add_option("--size", bo.size, "Image side")->check(CLI::Range(1, 4096))->capture_default_str();
    bench_cmd->add_option("--samples-coarse,--samples", bo.n_coarse, "Coarse samples")->check(CLI::Range(1, 4096))
        ->capture_default_str();
    bench_cmd->add_option("--samples-fine", bo.n_fine, "Importance samples")->check(CLI::Range(0, 4096))
        ->capture_default_str();
    bench_cmd->add_option("--thread-counts", bo.threads, "Thread counts to time (default: 1 and --threads)")
        ->check(CLI::Range(1, 4096));
    bench_cmd->add_option("--repeats", bo.repeats, "Timed runs per thread count (best is kept)")
        ->check(CLI::Range(1, 1000))->capture_default_str();
    bench_cmd->callback([&] { action = [&] { return cmd_bench(g, bo, out); }; });

    ServeOpts so;
    CLI::App* serve_cmd = sub("serve", "Start the HTTP/WebSocket render service");
    serve_cmd->add_option("--address", so.address, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", so.port, "TCP port (0 = any free port)")->check(CLI::Range(0, 65535))
        ->capture_default_str();
    serve_cmd->add_option("--workers", so.workers, "Render workers (default: --threads)")->check(CLI::Range(0, 4096));
    serve_cmd->add_option("--max-upload-mib", so.max_upload_mib, "Upload size limit")
        ->check(CLI::PositiveNumber)->capture_default_str();
    serve_cmd->add_option("--decoder", so.decoder, "Decoder for every triplane (.tdec)")->check(CLI::ExistingFile);
    serve_cmd->callback([&] { action = [&] { return cmd_serve(g, so, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }
    try {
        return action();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace tri
