#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bedrec/graph.hpp"
#include "bedrec/supervision.hpp"

namespace bedrec {

/// Dense row-major matrix of 64-bit floats.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const {
        return a[static_cast<std::size_t>(r) * cols + c];
    }
    double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
};

/// Weights of the three-layer graph convolutional regressor.
struct GcnParams {
    int feature_count = 0;
    int hidden = 0;
    Matrix w1;               // F x hidden
    Matrix w2;               // hidden x hidden
    Matrix w3;               // hidden x 1
    std::vector<double> b1;  // hidden
    std::vector<double> b2;  // hidden
    std::vector<double> b3;  // 1
};

/// Monte Carlo dropout configuration: inverted dropout applied to both
/// hidden activations, `passes` stochastic forward passes per input.
struct DropoutConfig {
    double rate = 0.2;
    int passes = 10;
    std::uint64_t seed = 0;
};

/// Glorot-uniform weights, zero biases, deterministic per seed.
GcnParams init_params(int feature_count, std::uint64_t seed, int hidden = 128);

/// Per-pass node predictions: `passes` entries when stochastic, else one
/// dropout-free pass.
std::vector<std::vector<double>> forward(const GcnParams& params, const GridGraph& graph,
                                         const Matrix& features,
                                         const DropoutConfig& dropout, bool stochastic);

/// Node-aligned supervision for one patch.
struct PatchSupervision {
    std::vector<double> radar_values;
    std::vector<double> confidences;
    std::vector<double> ref_values;
    std::vector<std::uint8_t> radar_mask;
    std::vector<std::uint8_t> valid_mask;
    std::vector<std::uint8_t> eval_mask;
    bool use_ref_loss = true;
};

/// Gradient container shaped like GcnParams plus the balancer log-sigmas.
struct ParamTensors {
    Matrix w1, w2, w3;
    std::vector<double> b1, b2, b3;
    std::array<double, 3> balancer{0.0, 0.0, 0.0};

    static ParamTensors zeros_like(const GcnParams& params);
    void accumulate(const ParamTensors& other);
    void scale(double factor);
};

struct LossGradients {
    LossTerms terms;
    double total = 0.0;
    std::vector<double> mean_prediction;
    ParamTensors grads;
};

/// Balanced total and its exact reverse-mode gradients through all
/// stochastic passes (shared dropout masks fore and aft; ReLU subgradient
/// at 0 taken as 0).
LossGradients loss_and_gradients(const GcnParams& params, const GridGraph& graph,
                                 const Matrix& features, const PatchSupervision& sup,
                                 const DropoutConfig& dropout,
                                 const BalancerState& balancer);

struct LossEvaluation {
    LossTerms terms;
    double total = 0.0;
    std::vector<double> mean_prediction;
};

/// Forward-only variant used for validation.
LossEvaluation evaluate_loss(const GcnParams& params, const GridGraph& graph,
                             const Matrix& features, const PatchSupervision& sup,
                             const DropoutConfig& dropout, const BalancerState& balancer);

/// Adam state over all parameters including the balancer log-sigmas.
struct AdamState {
    std::int64_t step = 0;
    ParamTensors m;
    ParamTensors v;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(const GcnParams& params, double lr = 1e-4);
};

/// Bias-corrected Adam update of the network weights and balancer.
void adam_step(GcnParams& params, BalancerState& balancer, const ParamTensors& grads,
               AdamState& state);

}  // namespace bedrec
