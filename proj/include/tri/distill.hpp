#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "tri/camera.hpp"
#include "tri/gradient.hpp"
#include "tri/scene.hpp"

namespace tri {

/// Momentum SGD with separate fixed steps for triplane and decoder values.
struct OptimizerConfig {
    double triplane_lr = 2000.0;
    double decoder_lr = 0.05;
    double momentum = 0.9;
};

struct DistillConfig {
    int n_views = 8;
    int steps = 2000;
    std::uint64_t seed = 0;
    int threads = 1;

    int grid_resolution = 16;
    int grid_channels = 8;
    double box_scale = 0.5;
    int hidden_width = 32;
    int feature_width = 3;
    double init_stddev = 0.1;
    /// Initial density-logit bias; negative starts the student mostly transparent.
    double density_bias_init = -2.0;
    bool train_decoder = true;

    /// Student renders; the resolution is also the target resolution.
    SamplingConfig sampling = [] {
        SamplingConfig s;
        s.width = 16;
        s.height = 16;
        s.n_coarse = 32;
        s.n_fine = 0;
        s.stratified = true;
        return s;
    }();
    int oracle_steps = 8192;
    AugmentationConfig cameras = AugmentationConfig::ffhq();
    DistillLossConfig loss;
    OptimizerConfig optimizer;
    double divergence_factor = 10.0;
};

struct TraceEntry {
    int step = 0;
    LossTerms loss;
};

struct DistillResult {
    ParameterSet params;
    TriplaneGrid grid;
    FieldDecoder decoder;
    std::vector<TraceEntry> trace;
};

/// Raised when the loss exceeds divergence_factor x the initial loss.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Teacher views: even indices are augmented reference cameras, odd indices
/// multiview cameras, each rendered by the scene oracle.
std::vector<SupervisionView> make_supervision_views(const ProceduralScene& scene, const DistillConfig& cfg);

/// Student initialisation: N(0, init_stddev) triplane, default decoder.
ParameterSet initial_parameters(const DistillConfig& cfg);

/// Optimises `init` against `views`. The trace holds steps + 1 entries: the
/// loss before each update and after the last one.
DistillResult fit_views(ParameterSet init, std::span<const SupervisionView> views, const DistillConfig& cfg);

/// Requires n_views >= 2.
DistillResult distill_fit(const ProceduralScene& scene, const DistillConfig& cfg);

/// `step,loss,loss_col,loss_feat,loss_tri` with 17 significant digits.
void write_loss_trace_csv(std::ostream& os, std::span<const TraceEntry> trace);

} // namespace tri
