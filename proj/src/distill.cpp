#include "tri/distill.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "tri/error.hpp"

namespace tri {

std::vector<SupervisionView> make_supervision_views(const ProceduralScene& scene, const DistillConfig& cfg) {
    Rng rng(cfg.seed ^ 0xca3e'5a3d'1e00ULL);
    std::vector<SupervisionView> views;
    for (int v = 0; v < cfg.n_views; ++v) {
        const bool reference = v % 2 == 0;
        const CameraSample cs = reference
                                    ? sample_reference_camera(cfg.cameras, rng, cfg.sampling.width, cfg.sampling.height)
                                    : sample_multiview_camera(cfg.cameras, rng, cfg.sampling.width, cfg.sampling.height);
        SupervisionView view;
        view.camera = Camera::make(cs.pose, cs.intrinsics, cfg.box_scale);
        view.role = reference ? ViewRole::reference : ViewRole::multiview;
        view.target = scene.render_oracle(view.camera, cfg.sampling, cfg.oracle_steps, cfg.threads);
        views.push_back(std::move(view));
    }
    return views;
}

ParameterSet initial_parameters(const DistillConfig& cfg) {
    Rng rng(cfg.seed);
    BasicTriplane<double> grid(cfg.grid_resolution, cfg.grid_channels, cfg.box_scale);
    for (double& v : grid.values()) v = rng.normal(0.0, cfg.init_stddev);
    FieldDecoder dec =
        default_decoder(cfg.grid_channels, cfg.feature_width, cfg.hidden_width, cfg.seed + 0x5eed'dec0'deULL);
    dec.layers.back().bias[0] = static_cast<float>(cfg.density_bias_init);
    return ParameterSet(grid, dec.cast<double>());
}

DistillResult fit_views(ParameterSet params, std::span<const SupervisionView> views, const DistillConfig& cfg) {
    if (cfg.steps < 0) throw DomainError("distill: steps must be >= 0");
    if (views.empty()) throw DomainError("distill: no supervision views");
    const OptimizerConfig& opt = cfg.optimizer;
    const std::size_t n = params.size();
    const std::size_t n_tri = params.triplane_size();
    std::vector<double> velocity(n, 0.0);

    DistillResult result;
    double initial = 0.0;
    for (int step = 0; step <= cfg.steps; ++step) {
        const std::uint64_t step_seed = cfg.seed * 0x9e37'79b9ULL + static_cast<std::uint64_t>(step);
        const SamplePlan plan = plan_samples(params, views, cfg.sampling, step_seed, cfg.threads);
        std::vector<double> grad;
        const bool last = step == cfg.steps;
        const LossTerms loss = evaluate_loss(params, plan, views, cfg.loss, nullptr, last ? nullptr : &grad,
                                             cfg.threads);
        result.trace.push_back({step, loss});
        if (step == 0) initial = loss.total;
        if (loss.total > cfg.divergence_factor * initial)
            throw DivergenceError("distill diverged at step " + std::to_string(step) + ": loss " +
                                  std::to_string(loss.total) + " > " + std::to_string(cfg.divergence_factor) +
                                  " x initial " + std::to_string(initial));
        if (last) break;

        auto& vals = params.values();
        for (std::size_t i = 0; i < n; ++i) {
            const bool tri_value = i < n_tri;
            if (!tri_value && !cfg.train_decoder) continue;
            velocity[i] = opt.momentum * velocity[i] + grad[i];
            vals[i] -= (tri_value ? opt.triplane_lr : opt.decoder_lr) * velocity[i];
        }
    }

    result.grid = params.triplane().cast<float>();
    result.decoder = params.decoder().cast<float>();
    result.params = std::move(params);
    return result;
}

DistillResult distill_fit(const ProceduralScene& scene, const DistillConfig& cfg) {
    if (cfg.n_views < 2) throw DomainError("distill: need at least 2 views (reference + multiview)");
    const std::vector<SupervisionView> views = make_supervision_views(scene, cfg);
    return fit_views(initial_parameters(cfg), views, cfg);
}

void write_loss_trace_csv(std::ostream& os, std::span<const TraceEntry> trace) {
    os << "step,loss,loss_col,loss_feat,loss_tri\n";
    char buf[160];
    for (const TraceEntry& e : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", e.step, e.loss.total, e.loss.color,
                      e.loss.feature, e.loss.triplane);
        os << buf;
    }
}

} // namespace tri
