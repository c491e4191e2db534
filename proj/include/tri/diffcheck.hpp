#pragma once

// Finite-difference verification of the renderer loss gradient on small,
// fully specified problem instances.

#include <cstdint>
#include <string>
#include <vector>

#include "tri/gradient.hpp"

namespace tri {

struct GradcheckCase {
    std::string name;
    int resolution = 6;
    int channels = 4;
    double box_scale = 0.5;
    double init_stddev = 0.5;
    int hidden_width = 8;
    int feature_width = 3;
    int n_views = 2;
    SamplingConfig sampling;
    bool triplane_term = false;
    DistillLossConfig loss;
    int triplane_probes = 100;
    int decoder_probes = 100;
    double h = 1e-5;
    std::uint64_t seed = 1;
};

/// The configurations checked by `tri gradcheck` and the test suite.
std::vector<GradcheckCase> shipped_gradcheck_cases();

/// A loss instance with a frozen sample plan. Targets are the student's own
/// renders offset by +-U(0.05, 0.15) per value, so no L1 residual sits near
/// its kink; the triplane target (when enabled) is offset the same way.
struct GradcheckProblem {
    ParameterSet params;
    std::vector<SupervisionView> views;
    SamplePlan plan;
    DistillLossConfig loss;
    std::optional<std::vector<double>> target_triplane;

    double evaluate(std::span<const double> values, std::vector<double>* grad, int threads = 1) const;
};

GradcheckProblem make_gradcheck_problem(const GradcheckCase& c, int threads = 1);

struct GradcheckResult {
    std::string name;
    std::size_t n_parameters = 0;
    FiniteDiffReport triplane;
    FiniteDiffReport decoder;
    double max_rel_error = 0;
    std::string worst_parameter;
    double seconds = 0;

    std::size_t probes() const { return triplane.probes.size() + decoder.probes.size(); }
};

GradcheckResult run_gradcheck(const GradcheckCase& c, int threads = 1);

} // namespace tri
