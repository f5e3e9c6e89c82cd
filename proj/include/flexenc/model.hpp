#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "flexenc/config.hpp"
#include "flexenc/matrix.hpp"
#include "flexenc/optim.hpp"
#include "flexenc/rng.hpp"

namespace flexenc {

// One fully connected layer. Weights are stored as 32-bit floats (the
// checkpoint precision); all arithmetic on them runs in double. A decoder
// layer with tied_to >= 0 stores no weight of its own: its weight is the
// transpose of encoder layer tied_to, materialized at every use, so the
// tied-weight identity holds exactly after any update.
struct LayerParams {
    int in = 0;
    int out = 0;
    std::vector<float> weight;  // out*in row-major; empty when tied
    std::vector<float> bias;    // out
    std::optional<ActivationKind> act;  // nullopt = linear
    int tied_to = -1;
};

// Dense rows ready for training: inputs, targets, and the 0/1 loss mask.
// x == y at construction; forward corrupts a copy of x, never the batch.
struct RowBatch {
    DenseMatrix x;
    DenseMatrix y;
    DenseMatrix mask;
    std::vector<int> row_ids;  // pivoted row index per batch row
};

struct LossReport {
    double mmse = 0.0;
    double observed_count = 0.0;
    double rmse = 0.0;
};

// Symmetric encoder/decoder stack. Encoder realizes n -> h1 -> ... -> hk,
// the decoder mirrors it back to n with a linear output layer.
struct FlexModel {
    int n = 0;
    std::vector<LayerParams> encoder;
    std::vector<LayerParams> decoder;
    double drop_p = 0.0;
    double noise_p = 0.0;

    int layer_count() const { return static_cast<int>(encoder.size() + decoder.size()); }
    const LayerParams& layer(int i) const {
        return i < static_cast<int>(encoder.size()) ? encoder[i]
                                                    : decoder[i - encoder.size()];
    }
    LayerParams& layer(int i) {
        return i < static_cast<int>(encoder.size()) ? encoder[i]
                                                    : decoder[i - encoder.size()];
    }
    // Index of the layer whose output is the bottleneck representation.
    int bottleneck() const { return static_cast<int>(encoder.size()) - 1; }

    // Free parameters in a fixed order: encoder weights, encoder biases,
    // decoder biases, then decoder weights when the decoder is untied. The
    // checkpoint arrays, gradient slots and optimizer state all follow it.
    std::vector<ParamUpdate<float>> param_refs(const std::vector<std::vector<double>>& grads);
    std::vector<std::size_t> param_sizes() const;
};

enum class ForwardMode { Train, Eval };

// Per-layer records kept for backpropagation.
struct ForwardTrace {
    DenseMatrix input;               // corrupted input actually fed to layer 0
    std::vector<DenseMatrix> pre;    // pre-activation per layer
    std::vector<DenseMatrix> post;   // post-activation (after bottleneck dropout)
    std::vector<double> drop_mask;   // batch*bottleneck_dim; empty if unused

    const DenseMatrix& output() const { return post.back(); }
};

// Gradient buffers aligned with FlexModel::param_refs order.
using Gradients = std::vector<std::vector<double>>;

// Fan-based uniform init U(+-sqrt(6/(in+out))) drawn from the config seed;
// biases start at zero. Layer dims come from config.hidden_layers, all hidden
// activations from config.activation, tie flags from decoder_constraint.
FlexModel build_model(const ModelConfig& config, int n);

// Architecture only, parameters zero-initialized (checkpoint loading).
FlexModel build_model_arch(const ModelConfig& config, int n);

// Train mode corrupts the input (each entry zeroed with probability noise_p,
// no rescale) and applies an inverted-dropout mask to the bottleneck output.
// Eval mode is deterministic and consumes no randomness.
ForwardTrace forward(const FlexModel& model, const RowBatch& batch, ForwardMode mode,
                     RngStream& rng);

// MMSE of Eq-style masked reconstruction: sum(mask*(y-q)^2) / sum(mask) over
// the whole batch. Throws EmptyMaskError when the mask sums to zero.
LossReport masked_mse(const DenseMatrix& y, const DenseMatrix& q, const DenseMatrix& mask);

// Exact gradients of masked_mse(batch.y, trace.output, batch.mask) w.r.t. all
// free parameters. Tied decoder layers accumulate into the encoder weight.
Gradients backward(const FlexModel& model, const ForwardTrace& trace, const RowBatch& batch);

// Re-feeding target: the previous output treated as a dense, fully observed
// sample, optionally snapped to the rating grid.
DenseMatrix make_refeed_target(const DenseMatrix& q, bool rounding);

// Runs k dense re-feeding passes after a primary update: each pass trains the
// model to reconstruct its own previous output under an all-ones mask, using
// train-mode corruption. Returns the loss of the final pass (nullopt if k=0).
std::optional<LossReport> dense_refeed(FlexModel& model, const ForwardTrace& trace, int k,
                                       bool rounding, OptimState& opt, double lr,
                                       double weight_decay, RngStream& rng);

// Nearest multiple of 0.5 (ties away from zero), clamped to [1, 5].
double round_to_grid(double v);

// Max relative error between analytic gradients and central finite
// differences of the training loss, over every free parameter. Run with
// noise/dropout probabilities at zero.
double grad_check(FlexModel& model, const RowBatch& batch, double eps);

}  // namespace flexenc
