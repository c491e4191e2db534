#include "tri/diffcheck.hpp"

#include <chrono>
#include <numeric>

#include "tri/error.hpp"

namespace tri {

std::vector<GradcheckCase> shipped_gradcheck_cases() {
    std::vector<GradcheckCase> cases;

    GradcheckCase color;
    color.name = "color";
    color.sampling.width = 6;
    color.sampling.height = 6;
    color.sampling.n_coarse = 12;
    color.sampling.n_fine = 12;
    color.seed = 11;
    cases.push_back(color);

    GradcheckCase feat;
    feat.name = "features+triplane";
    feat.resolution = 5;
    feat.channels = 6;
    feat.feature_width = 5;
    feat.hidden_width = 10;
    feat.n_views = 3;
    feat.sampling.width = 5;
    feat.sampling.height = 5;
    feat.sampling.n_coarse = 10;
    feat.sampling.n_fine = 6;
    feat.sampling.stratified = true;
    feat.sampling.background = {0.2, 0.4, 0.6};
    feat.triplane_term = true;
    feat.seed = 23;
    cases.push_back(feat);

    // The distillation setup at reduced image size.
    GradcheckCase distill;
    distill.name = "distill";
    distill.resolution = 16;
    distill.channels = 8;
    distill.hidden_width = 32;
    distill.init_stddev = 0.1;
    distill.n_views = 4;
    distill.sampling.width = 8;
    distill.sampling.height = 8;
    distill.sampling.n_coarse = 32;
    distill.sampling.n_fine = 0;
    distill.sampling.stratified = true;
    distill.seed = 37;
    cases.push_back(distill);
    return cases;
}

double GradcheckProblem::evaluate(std::span<const double> values, std::vector<double>* grad, int threads) const {
    ParameterSet p = params;
    p.values().assign(values.begin(), values.end());
    return evaluate_loss(p, plan, views, loss, target_triplane ? &*target_triplane : nullptr, grad, threads).total;
}

GradcheckProblem make_gradcheck_problem(const GradcheckCase& c, int threads) {
    if (c.n_views < 1) throw DomainError("gradcheck: need at least one view");
    Rng rng(c.seed);
    BasicTriplane<double> grid(c.resolution, c.channels, c.box_scale);
    for (double& v : grid.values()) v = rng.normal(0.0, c.init_stddev);
    const FieldDecoder dec = default_decoder(c.channels, c.feature_width, c.hidden_width, c.seed + 1);

    GradcheckProblem prob;
    prob.params = ParameterSet(grid, dec.cast<double>());
    prob.loss = c.loss;

    const AugmentationConfig aug = AugmentationConfig::ffhq();
    for (int v = 0; v < c.n_views; ++v) {
        const bool reference = v % 2 == 0;
        const CameraSample cs = reference ? sample_reference_camera(aug, rng, c.sampling.width, c.sampling.height)
                                          : sample_multiview_camera(aug, rng, c.sampling.width, c.sampling.height);
        SupervisionView view;
        view.camera = Camera::make(cs.pose, cs.intrinsics, c.box_scale);
        view.role = reference ? ViewRole::reference : ViewRole::multiview;
        view.target.width = c.sampling.width;
        view.target.height = c.sampling.height;
        prob.views.push_back(std::move(view));
    }
    prob.plan = plan_samples(prob.params, prob.views, c.sampling, c.seed ^ 0x9d1f, threads);

    const auto offset = [&rng] {
        const double m = rng.uniform(0.05, 0.15);
        return rng.uniform() < 0.5 ? -m : m;
    };
    std::vector<RenderOutput> renders = render_plan(prob.params, prob.plan, prob.views, threads);
    for (std::size_t v = 0; v < renders.size(); ++v) {
        for (float& f : renders[v].features) f = static_cast<float>(f + offset());
        prob.views[v].target = std::move(renders[v]);
    }
    if (c.triplane_term) {
        std::vector<double> t(prob.params.values().begin(),
                              prob.params.values().begin() + static_cast<std::ptrdiff_t>(prob.params.triplane_size()));
        for (double& x : t) x += offset();
        prob.target_triplane = std::move(t);
    }
    return prob;
}

GradcheckResult run_gradcheck(const GradcheckCase& c, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    const GradcheckProblem prob = make_gradcheck_problem(c, threads);
    const LossFn fn = [&](std::span<const double> values, std::vector<double>* grad) {
        return prob.evaluate(values, grad, threads);
    };

    const std::size_t n_tri = prob.params.triplane_size();
    std::vector<std::size_t> tri_idx(n_tri), dec_idx(prob.params.size() - n_tri);
    std::iota(tri_idx.begin(), tri_idx.end(), std::size_t{0});
    std::iota(dec_idx.begin(), dec_idx.end(), n_tri);

    GradcheckResult r;
    r.name = c.name;
    r.n_parameters = prob.params.size();
    Rng rng(c.seed ^ 0x7072'6f62ULL);
    r.triplane = finite_diff_check(fn, prob.params.values(), c.h, c.triplane_probes, rng, tri_idx);
    r.decoder = finite_diff_check(fn, prob.params.values(), c.h, c.decoder_probes, rng, dec_idx);
    const bool tri_worse = r.triplane.max_rel_error >= r.decoder.max_rel_error;
    r.max_rel_error = tri_worse ? r.triplane.max_rel_error : r.decoder.max_rel_error;
    r.worst_parameter = prob.params.describe(tri_worse ? r.triplane.worst_index : r.decoder.worst_index);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

} // namespace tri
