#pragma once

// Loss and reverse-mode gradients through bilinear plane sampling, mean
// aggregation, the decoder MLP and compositing, all in 64-bit arithmetic.
//
// Sample depths are planned once per step (coarse pass + importance
// resampling against the current parameters) and then held fixed, so the
// loss is a deterministic, differentiable function of the parameters and
// can be checked against finite differences.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tri/camera.hpp"
#include "tri/decoder.hpp"
#include "tri/render.hpp"
#include "tri/rng.hpp"
#include "tri/triplane.hpp"

namespace tri {

/// Flat view of every trainable value: triplane values first (grid layout),
/// then per decoder layer its weights (out x in) and biases.
class ParameterSet {
public:
    struct Segment {
        std::string name;
        std::size_t offset = 0;
        std::size_t size = 0;
    };

    ParameterSet() = default;
    ParameterSet(const BasicTriplane<double>& grid, const BasicDecoder<double>& dec);
    ParameterSet(const TriplaneGrid& grid, const FieldDecoder& dec);

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    std::size_t triplane_size() const { return triplane_size_; }
    const std::vector<Segment>& segments() const { return segments_; }

    int resolution() const { return resolution_; }
    int channels() const { return channels_; }
    double box_scale() const { return box_scale_; }
    int feature_width() const { return layer_shapes_.back().second - 1; }

    BasicTriplane<double> triplane() const;
    BasicDecoder<double> decoder() const;

    /// Same layout, all values zero.
    ParameterSet zeros_like() const;
    /// Human-readable name of a flat index, e.g. "triplane[xz,3,4,1]".
    std::string describe(std::size_t index) const;

private:
    std::vector<double> values_;
    std::vector<Segment> segments_;
    std::size_t triplane_size_ = 0;
    int resolution_ = 0;
    int channels_ = 0;
    double box_scale_ = 1.0;
    std::vector<std::pair<int, int>> layer_shapes_; // (in, out)
    Activation hidden_ = Activation::softplus;
    Activation density_ = Activation::softplus;
    Activation feature_ = Activation::sigmoid;
};

enum class ViewRole { reference, multiview };

struct DistillLossConfig {
    double color_weight = 1.0;
    double feature_weight = 1.0;
    double triplane_weight = 1.0; // applied only when a target triplane is given
    double reference_view_weight = 0.1;
    double multiview_view_weight = 0.025;

    double view_weight(ViewRole r) const {
        return r == ViewRole::reference ? reference_view_weight : multiview_view_weight;
    }
    void validate() const;
};

/// One supervised camera: the student is rendered at target.width x
/// target.height and compared against `target`.
struct SupervisionView {
    Camera camera;
    RenderOutput target;
    ViewRole role = ViewRole::multiview;
};

struct PlannedRay {
    Vec3 origin;
    Vec3 direction;
    double far = 0;
    std::vector<double> ts;
};

struct SamplePlan {
    std::vector<std::vector<PlannedRay>> views; // per view, row-major pixels
    std::array<double, 3> background{0.0, 0.0, 0.0};
};

/// Plans sample depths for every pixel of every view with the current
/// parameters. Pixel p of view v draws from Rng::derive(seed, v * 2^32 + p).
SamplePlan plan_samples(const ParameterSet& params, std::span<const SupervisionView> views,
                        const SamplingConfig& sampling, std::uint64_t seed, int threads = 1);

struct LossTerms {
    double total = 0;
    double color = 0;
    double feature = 0;
    double triplane = 0;
};

/// Thrown when a loss term evaluates to a non-finite value.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Loss over a frozen plan; fills `grad` (resized to params.size()) when
/// non-null. The reduction order is fixed, so results do not depend on
/// `threads`.
LossTerms evaluate_loss(const ParameterSet& params, const SamplePlan& plan, std::span<const SupervisionView> views,
                        const DistillLossConfig& cfg, const std::vector<double>* target_triplane,
                        std::vector<double>* grad, int threads = 1);

struct LossAndGrad {
    LossTerms loss;
    std::vector<double> grad;
    SamplePlan plan;
};

/// Plans samples for `seed`, then evaluates loss and gradient.
LossAndGrad loss_and_grad(const ParameterSet& params, std::span<const SupervisionView> views,
                          const DistillLossConfig& cfg, const SamplingConfig& sampling, std::uint64_t seed,
                          const std::vector<double>* target_triplane = nullptr, int threads = 1);

/// Renders the current parameters over a frozen plan (same arithmetic as the
/// loss forward pass).
std::vector<RenderOutput> render_plan(const ParameterSet& params, const SamplePlan& plan,
                                      std::span<const SupervisionView> views, int threads = 1);

// Finite-difference verification.

struct ProbeResult {
    std::size_t index = 0;
    double analytic = 0;
    double numeric = 0;
    double rel_error = 0;
};

struct FiniteDiffReport {
    std::vector<ProbeResult> probes;
    double max_rel_error = 0;
    std::size_t worst_index = 0;
};

/// Loss function evaluated at `params`; writes the analytic gradient when
/// `grad` is non-null.
using LossFn = std::function<double(std::span<const double> params, std::vector<double>* grad)>;

/// Central differences on `n_probe` distinct coordinates drawn from
/// `candidates` (all coordinates when empty). Relative error per probe is
/// |a - n| / (|a| + |n| + eps).
FiniteDiffReport finite_diff_check(const LossFn& loss_fn, std::span<const double> params, double h, int n_probe,
                                   Rng& rng, std::span<const std::size_t> candidates = {}, double eps = 1e-8);

} // namespace tri
