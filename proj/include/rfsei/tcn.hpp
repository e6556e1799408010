#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfsei/signal.hpp"

namespace rfsei::tcn {

/// Row-major [rows x cols] matrix of doubles. For sequences rows are channels
/// and cols are time steps.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {v.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {v.data() + r * cols, cols}; }
    bool operator==(const Mat&) const = default;
};

enum class Activation { ReLU, Tanh, Identity };
std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Causal 1-D convolution: taps[o][i][j] with width `width` and dilation `dilation`.
struct ConvLayer {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t width = 1;
    std::size_t dilation = 1;
    std::vector<double> taps;  // [out][in][width]
    std::vector<double> bias;  // [out]

    static ConvLayer zeros(std::size_t in, std::size_t out, std::size_t width, std::size_t dilation);
    double& tap(std::size_t o, std::size_t i, std::size_t j) { return taps[(o * in_channels + i) * width + j]; }
    double tap(std::size_t o, std::size_t i, std::size_t j) const { return taps[(o * in_channels + i) * width + j]; }
    void validate() const;
    bool operator==(const ConvLayer&) const = default;
};

struct Linear {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;  // [out][in]
    std::vector<double> bias;    // [out]

    static Linear zeros(std::size_t in, std::size_t out);
    bool operator==(const Linear&) const = default;
};

struct ResidualBlock {
    ConvLayer first;
    ConvLayer second;
    bool operator==(const ResidualBlock&) const = default;
};

struct TcnStack {
    std::vector<ResidualBlock> blocks;
    ConvLayer merge;  // 1-wide, input = all block outputs stacked
    bool operator==(const TcnStack&) const = default;
};

struct Encoder {
    ConvLayer conv1;
    ConvLayer conv2;
    bool operator==(const Encoder&) const = default;
};

/// Attention branch: conv stack over the intentional-modulation input, one
/// score per segment.
struct Branch {
    ConvLayer conv1;
    ConvLayer conv2;
    Linear head;  // out = 1
    bool operator==(const Branch&) const = default;
};

struct ArchConfig {
    std::size_t frame = 4;            // samples folded into channels per time step
    std::size_t channels = 16;
    std::size_t branch_channels = 8;  // "fewer kernels" than the main path
    std::size_t encoder_width = 3;
    std::size_t tcn_width = 2;
    std::size_t tcn_blocks = 4;
    std::size_t dilation_base = 2;
    std::size_t segment_length = 100;  // samples per segment
    std::size_t logit_dim = 8;
    std::size_t n_classes = 2;
    Activation activation = Activation::ReLU;
    bool hard_decision = false;

    std::size_t input_channels() const { return 2 * frame; }
    std::size_t segment_frames() const { return segment_length / frame; }
    void validate() const;
    bool operator==(const ArchConfig&) const = default;
};

struct NetParams {
    ArchConfig arch;
    Encoder encoder;
    TcnStack tcn;
    Linear classifier1;
    std::optional<Branch> branch;
    Linear classifier2;

    bool operator==(const NetParams&) const = default;
};

/// Named view over one parameter array, used by the optimizer, grad-check and checkpoints.
struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<double> data;
};

std::vector<TensorRef> tensors(NetParams& p);
std::size_t parameter_count(const NetParams& p);
bool is_branch_tensor(std::string_view name);

/// Zero-valued parameters with the architecture's shapes.
NetParams make_zero_params(const ArchConfig& arch, bool with_branch = true);
/// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) initialization, seeded.
NetParams init_params(const ArchConfig& arch, std::uint64_t seed, bool with_branch = true);
void init_linear(Linear& layer, std::uint64_t seed);
void validate(const NetParams& p);

// --- primitives ---

Mat causal_dilated_conv(const Mat& x, const ConvLayer& layer);
std::size_t receptive_field(std::size_t width, std::span<const std::size_t> dilations);
Mat apply_activation(const Mat& x, Activation a);
Mat residual_block(const Mat& x, const ResidualBlock& block, Activation a);

std::vector<double> softmax(std::span<const double> scores);

/// Scaled dot-product attention: out_i = sum_j softmax_j(Q_i . K_j / sqrt(d)) V_j.
/// Q, K are [n x d], V is [n x v]. `weights`, when given, receives the [n x n] matrix.
Mat scaled_softmax_attention(const Mat& Q, const Mat& K, const Mat& V, Mat* weights = nullptr);

/// Folds complex samples into 2*frame real channels per time step.
Mat frame_input(std::span<const cplx> x, std::size_t frame);

// --- model ---

struct Example {
    std::vector<cplx> main;    // feature-part signal
    std::vector<cplx> branch;  // signal-part (intentional modulation) signal
    int label = 0;
};

/// Per-segment soft-decision logits from the main path, [segments x logit_dim].
Mat segment_logits(std::span<const cplx> main_input, const NetParams& p);
/// Softmax-normalized per-segment weights from the branch. Uniform when the model has no branch.
std::vector<double> spatial_attention_weights(std::span<const cplx> branch_input, const NetParams& p);
/// Attention-weighted sum of segment logits followed by classifier2.
std::vector<double> combine_segments(const Mat& seg_logits, std::span<const double> weights,
                                     const NetParams& p);

std::vector<double> model_forward(std::span<const cplx> main_input, std::span<const cplx> branch_input,
                                  const NetParams& p);
std::vector<std::vector<double>> model_forward_batch(std::span<const Example> batch, const NetParams& p);
int predict(const Example& ex, const NetParams& p);

/// Mean cross-entropy over `batch`; when `grads` is given it receives d(loss)/d(params)
/// (same layout as `p`, overwritten).
double loss_and_gradient(const NetParams& p, std::span<const Example> batch, NetParams* grads);

}  // namespace rfsei::tcn
