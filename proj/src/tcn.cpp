#include "rfsei/tcn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rfsei/errors.hpp"
#include "rfsei/parallel.hpp"

namespace rfsei::tcn {
namespace {

double activate(double v, Activation a) {
    switch (a) {
        case Activation::ReLU: return v > 0.0 ? v : 0.0;
        case Activation::Tanh: return std::tanh(v);
        case Activation::Identity: return v;
    }
    return v;
}

// Derivative expressed through the pre-activation value.
double activate_grad(double pre, Activation a) {
    switch (a) {
        case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

void init_uniform(std::span<double> values, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : values) v = u(rng);
}

void init_conv(ConvLayer& layer, std::mt19937_64& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.in_channels * layer.width));
    init_uniform(layer.taps, bound, rng);
    init_uniform(layer.bias, bound, rng);
}

void init_linear_rng(Linear& layer, std::mt19937_64& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.in));
    init_uniform(layer.weight, bound, rng);
    init_uniform(layer.bias, bound, rng);
}

// dy -> gradients of taps/bias (accumulated into g) and, optionally, dx.
void conv_backward(const Mat& x, const ConvLayer& layer, const Mat& dy, ConvLayer& g, Mat* dx) {
    const auto T = x.cols;
    const auto l = layer.width;
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        const auto dyo = dy.row(o);
        g.bias[o] += std::accumulate(dyo.begin(), dyo.end(), 0.0);
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            const auto xi = x.row(i);
            for (std::size_t j = 0; j < l; ++j) {
                const auto shift = (l - 1 - j) * layer.dilation;
                if (shift >= T) continue;
                double acc = 0.0;
                for (std::size_t t = shift; t < T; ++t) acc += dyo[t] * xi[t - shift];
                g.tap(o, i, j) += acc;
                if (dx != nullptr) {
                    const double w = layer.tap(o, i, j);
                    auto dxi = dx->row(i);
                    for (std::size_t t = shift; t < T; ++t) dxi[t - shift] += w * dyo[t];
                }
            }
        }
    }
}

Mat activation_backward(const Mat& pre, const Mat& dy, Activation a) {
    Mat out(pre.rows, pre.cols);
    for (std::size_t i = 0; i < pre.v.size(); ++i) out.v[i] = dy.v[i] * activate_grad(pre.v[i], a);
    return out;
}

// Mean over each segment's time steps: [C x T] -> [S x C].
Mat segment_pool(const Mat& x, std::size_t seg_frames) {
    const auto S = x.cols / seg_frames;
    Mat out(S, x.rows);
    const double inv = 1.0 / static_cast<double>(seg_frames);
    for (std::size_t c = 0; c < x.rows; ++c) {
        const auto xc = x.row(c);
        for (std::size_t s = 0; s < S; ++s) {
            double acc = 0.0;
            for (std::size_t t = s * seg_frames; t < (s + 1) * seg_frames; ++t) acc += xc[t];
            out(s, c) = acc * inv;
        }
    }
    return out;
}

Mat segment_pool_backward(const Mat& dpooled, std::size_t channels, std::size_t T, std::size_t seg_frames) {
    Mat dx(channels, T);
    const double inv = 1.0 / static_cast<double>(seg_frames);
    for (std::size_t s = 0; s < dpooled.rows; ++s)
        for (std::size_t c = 0; c < channels; ++c) {
            const double g = dpooled(s, c) * inv;
            for (std::size_t t = s * seg_frames; t < (s + 1) * seg_frames; ++t) dx(c, t) = g;
        }
    return dx;
}

std::vector<double> linear_apply(const Linear& layer, std::span<const double> x) {
    std::vector<double> y(layer.bias);
    for (std::size_t o = 0; o < layer.out; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < layer.in; ++i) acc += layer.weight[o * layer.in + i] * x[i];
        y[o] += acc;
    }
    return y;
}

// Accumulates dW, db; returns dx.
std::vector<double> linear_backward(const Linear& layer, std::span<const double> x,
                                    std::span<const double> dy, Linear& g) {
    std::vector<double> dx(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
        g.bias[o] += dy[o];
        for (std::size_t i = 0; i < layer.in; ++i) {
            g.weight[o * layer.in + i] += dy[o] * x[i];
            dx[i] += layer.weight[o * layer.in + i] * dy[o];
        }
    }
    return dx;
}

std::size_t checked_segments(std::size_t samples, const ArchConfig& arch) {
    if (samples == 0 || samples % arch.segment_length != 0)
        throw ParameterError("model input length must be a positive multiple of the segment length");
    return samples / arch.segment_length;
}

// Everything the backward pass needs from one forward evaluation.
struct Trace {
    Mat x0, e1_pre, e1, e2_pre, e2;
    std::vector<Mat> block_in, block_pre, block_mid;
    Mat stacked, merge_pre, merged, pooled, seg_logits;
    Mat b0, b1_pre, b1, b2_pre, b2, b_pooled;
    std::vector<double> weights, z, out;
};

Trace forward_trace(std::span<const cplx> main_input, std::span<const cplx> branch_input, const NetParams& p) {
    const auto& arch = p.arch;
    const auto S = checked_segments(main_input.size(), arch);
    const auto act = arch.activation;
    Trace tr;
    tr.x0 = frame_input(main_input, arch.frame);
    tr.e1_pre = causal_dilated_conv(tr.x0, p.encoder.conv1);
    tr.e1 = apply_activation(tr.e1_pre, act);
    tr.e2_pre = causal_dilated_conv(tr.e1, p.encoder.conv2);
    tr.e2 = apply_activation(tr.e2_pre, act);

    const auto T = tr.x0.cols;
    const auto C = arch.channels;
    const auto B = p.tcn.blocks.size();
    tr.stacked = Mat(B * C, T);
    Mat h = tr.e2;
    for (std::size_t b = 0; b < B; ++b) {
        const auto& block = p.tcn.blocks[b];
        tr.block_in.push_back(h);
        tr.block_pre.push_back(causal_dilated_conv(h, block.first));
        tr.block_mid.push_back(apply_activation(tr.block_pre.back(), act));
        const Mat f = causal_dilated_conv(tr.block_mid.back(), block.second);
        for (std::size_t i = 0; i < h.v.size(); ++i) h.v[i] += f.v[i];
        std::copy(h.v.begin(), h.v.end(), tr.stacked.v.begin() + static_cast<std::ptrdiff_t>(b * C * T));
    }
    tr.merge_pre = causal_dilated_conv(tr.stacked, p.tcn.merge);
    tr.merged = apply_activation(tr.merge_pre, act);
    tr.pooled = segment_pool(tr.merged, arch.segment_frames());
    tr.seg_logits = Mat(S, arch.logit_dim);
    for (std::size_t s = 0; s < S; ++s) {
        const auto l = linear_apply(p.classifier1, tr.pooled.row(s));
        std::copy(l.begin(), l.end(), tr.seg_logits.row(s).begin());
    }

    if (p.branch) {
        if (branch_input.size() != main_input.size())
            throw ParameterError("model_forward: branch and main inputs differ in segment grid");
        const auto& br = *p.branch;
        tr.b0 = frame_input(branch_input, arch.frame);
        tr.b1_pre = causal_dilated_conv(tr.b0, br.conv1);
        tr.b1 = apply_activation(tr.b1_pre, act);
        tr.b2_pre = causal_dilated_conv(tr.b1, br.conv2);
        tr.b2 = apply_activation(tr.b2_pre, act);
        tr.b_pooled = segment_pool(tr.b2, arch.segment_frames());
        std::vector<double> scores(S);
        for (std::size_t s = 0; s < S; ++s) scores[s] = linear_apply(br.head, tr.b_pooled.row(s))[0];
        tr.weights = softmax(scores);
    } else {
        tr.weights.assign(S, 1.0 / static_cast<double>(S));
    }

    tr.z.assign(arch.logit_dim, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t d = 0; d < arch.logit_dim; ++d) tr.z[d] += tr.weights[s] * tr.seg_logits(s, d);
    tr.out = linear_apply(p.classifier2, tr.z);
    return tr;
}

// Adds d(loss)/d(params) for one example, given d(loss)/d(out).
void backward(const Trace& tr, const NetParams& p, std::span<const double> dout, NetParams& g) {
    const auto& arch = p.arch;
    const auto act = arch.activation;
    const auto S = tr.seg_logits.rows;
    const auto T = tr.x0.cols;
    const auto C = arch.channels;

    const auto dz = linear_backward(p.classifier2, tr.z, dout, g.classifier2);

    // z = sum_s w_s L_s
    Mat dseg(S, arch.logit_dim);
    std::vector<double> dw(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t d = 0; d < arch.logit_dim; ++d) {
            dseg(s, d) = tr.weights[s] * dz[d];
            dw[s] += dz[d] * tr.seg_logits(s, d);
        }

    if (p.branch) {
        const auto& br = *p.branch;
        auto& gb = *g.branch;
        double dot = 0.0;
        for (std::size_t s = 0; s < S; ++s) dot += tr.weights[s] * dw[s];
        Mat dbp(S, br.head.in);
        for (std::size_t s = 0; s < S; ++s) {
            const double de = tr.weights[s] * (dw[s] - dot);
            const std::vector<double> dscore = {de};
            const auto dx = linear_backward(br.head, tr.b_pooled.row(s), dscore, gb.head);
            std::copy(dx.begin(), dx.end(), dbp.row(s).begin());
        }
        const Mat db2 = segment_pool_backward(dbp, tr.b2.rows, T, arch.segment_frames());
        const Mat db2_pre = activation_backward(tr.b2_pre, db2, act);
        Mat db1(tr.b1.rows, T);
        conv_backward(tr.b1, br.conv2, db2_pre, gb.conv2, &db1);
        const Mat db1_pre = activation_backward(tr.b1_pre, db1, act);
        conv_backward(tr.b0, br.conv1, db1_pre, gb.conv1, nullptr);
    }

    Mat dpooled(S, C);
    for (std::size_t s = 0; s < S; ++s) {
        const auto dx = linear_backward(p.classifier1, tr.pooled.row(s), dseg.row(s), g.classifier1);
        std::copy(dx.begin(), dx.end(), dpooled.row(s).begin());
    }
    const Mat dmerged = segment_pool_backward(dpooled, C, T, arch.segment_frames());
    const Mat dmerge_pre = activation_backward(tr.merge_pre, dmerged, act);
    Mat dstacked(tr.stacked.rows, T);
    conv_backward(tr.stacked, p.tcn.merge, dmerge_pre, g.tcn.merge, &dstacked);

    // h_{b+1} = h_b + F_b(h_b); block outputs feed both the stack and the next block.
    Mat carry(C, T);
    for (std::size_t bi = p.tcn.blocks.size(); bi-- > 0;) {
        const auto& block = p.tcn.blocks[bi];
        auto& gblock = g.tcn.blocks[bi];
        Mat dh = carry;
        for (std::size_t i = 0; i < dh.v.size(); ++i) dh.v[i] += dstacked.v[bi * C * T + i];
        Mat dmid(C, T);
        conv_backward(tr.block_mid[bi], block.second, dh, gblock.second, &dmid);
        const Mat dpre = activation_backward(tr.block_pre[bi], dmid, act);
        Mat din(C, T);
        conv_backward(tr.block_in[bi], block.first, dpre, gblock.first, &din);
        for (std::size_t i = 0; i < din.v.size(); ++i) din.v[i] += dh.v[i];
        carry = std::move(din);
    }

    const Mat de2_pre = activation_backward(tr.e2_pre, carry, act);
    Mat de1(tr.e1.rows, T);
    conv_backward(tr.e1, p.encoder.conv2, de2_pre, g.encoder.conv2, &de1);
    const Mat de1_pre = activation_backward(tr.e1_pre, de1, act);
    conv_backward(tr.x0, p.encoder.conv1, de1_pre, g.encoder.conv1, nullptr);
}

void add_into(NetParams& acc, NetParams& term) {
    auto a = tensors(acc);
    auto b = tensors(term);
    for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t i = 0; i < a[t].data.size(); ++i) a[t].data[i] += b[t].data[i];
}

}  // namespace

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
    }
    return "?";
}

Activation activation_from_string(std::string_view name) {
    for (auto a : {Activation::ReLU, Activation::Tanh, Activation::Identity})
        if (to_string(a) == name) return a;
    throw ParameterError("unknown activation '" + std::string(name) + "'");
}

ConvLayer ConvLayer::zeros(std::size_t in, std::size_t out, std::size_t width, std::size_t dilation) {
    ConvLayer c;
    c.in_channels = in;
    c.out_channels = out;
    c.width = width;
    c.dilation = dilation;
    c.taps.assign(in * out * width, 0.0);
    c.bias.assign(out, 0.0);
    return c;
}

void ConvLayer::validate() const {
    if (width < 1 || dilation < 1) throw ParameterError("ConvLayer: width and dilation must be >= 1");
    if (taps.size() != in_channels * out_channels * width || bias.size() != out_channels)
        throw ParameterError("ConvLayer: weight shape mismatch");
    for (double v : taps)
        if (!std::isfinite(v)) throw ParameterError("ConvLayer: non-finite tap");
    for (double v : bias)
        if (!std::isfinite(v)) throw ParameterError("ConvLayer: non-finite bias");
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
    return Linear{in, out, std::vector<double>(in * out, 0.0), std::vector<double>(out, 0.0)};
}

void ArchConfig::validate() const {
    if (frame < 1 || channels < 1 || branch_channels < 1 || encoder_width < 1 || tcn_width < 1 ||
        tcn_blocks < 1 || dilation_base < 2 || logit_dim < 1)
        throw ParameterError("ArchConfig: sizes must be positive (dilation_base >= 2)");
    if (segment_length % frame != 0)
        throw ParameterError("ArchConfig: segment_length must be a multiple of frame");
    if (n_classes < 2) throw ParameterError("ArchConfig: need at least 2 classes");
}

std::vector<TensorRef> tensors(NetParams& p) {
    std::vector<TensorRef> out;
    auto conv = [&](const std::string& name, ConvLayer& c) {
        out.push_back({name + ".taps", {c.out_channels, c.in_channels, c.width}, c.taps});
        out.push_back({name + ".bias", {c.out_channels}, c.bias});
    };
    auto lin = [&](const std::string& name, Linear& l) {
        out.push_back({name + ".weight", {l.out, l.in}, l.weight});
        out.push_back({name + ".bias", {l.out}, l.bias});
    };
    conv("encoder.conv1", p.encoder.conv1);
    conv("encoder.conv2", p.encoder.conv2);
    for (std::size_t b = 0; b < p.tcn.blocks.size(); ++b) {
        conv("tcn.block" + std::to_string(b) + ".first", p.tcn.blocks[b].first);
        conv("tcn.block" + std::to_string(b) + ".second", p.tcn.blocks[b].second);
    }
    conv("tcn.merge", p.tcn.merge);
    lin("classifier1", p.classifier1);
    if (p.branch) {
        conv("branch.conv1", p.branch->conv1);
        conv("branch.conv2", p.branch->conv2);
        lin("branch.head", p.branch->head);
    }
    lin("classifier2", p.classifier2);
    return out;
}

std::size_t parameter_count(const NetParams& p) {
    auto copy = p;
    std::size_t n = 0;
    for (const auto& t : tensors(copy)) n += t.data.size();
    return n;
}

bool is_branch_tensor(std::string_view name) { return name.starts_with("branch."); }

NetParams make_zero_params(const ArchConfig& arch, bool with_branch) {
    arch.validate();
    NetParams p;
    p.arch = arch;
    const auto C = arch.channels;
    p.encoder.conv1 = ConvLayer::zeros(arch.input_channels(), C, arch.encoder_width, 1);
    p.encoder.conv2 = ConvLayer::zeros(C, C, arch.encoder_width, 1);
    std::size_t d = 1;
    for (std::size_t b = 0; b < arch.tcn_blocks; ++b) {
        p.tcn.blocks.push_back({ConvLayer::zeros(C, C, arch.tcn_width, d), ConvLayer::zeros(C, C, arch.tcn_width, d)});
        d *= arch.dilation_base;
    }
    p.tcn.merge = ConvLayer::zeros(arch.tcn_blocks * C, C, 1, 1);
    p.classifier1 = Linear::zeros(C, arch.logit_dim);
    if (with_branch) {
        const auto Cb = arch.branch_channels;
        p.branch = Branch{ConvLayer::zeros(arch.input_channels(), Cb, arch.encoder_width, 1),
                          ConvLayer::zeros(Cb, Cb, arch.encoder_width, 1), Linear::zeros(Cb, 1)};
    }
    p.classifier2 = Linear::zeros(arch.logit_dim, arch.n_classes);
    return p;
}

NetParams init_params(const ArchConfig& arch, std::uint64_t seed, bool with_branch) {
    NetParams p = make_zero_params(arch, with_branch);
    std::mt19937_64 rng(seed);
    init_conv(p.encoder.conv1, rng);
    init_conv(p.encoder.conv2, rng);
    for (auto& block : p.tcn.blocks) {
        init_conv(block.first, rng);
        init_conv(block.second, rng);
    }
    init_conv(p.tcn.merge, rng);
    init_linear_rng(p.classifier1, rng);
    if (p.branch) {
        init_conv(p.branch->conv1, rng);
        init_conv(p.branch->conv2, rng);
        init_linear_rng(p.branch->head, rng);
    }
    init_linear_rng(p.classifier2, rng);
    return p;
}

void init_linear(Linear& layer, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    init_linear_rng(layer, rng);
}

void validate(const NetParams& p) {
    p.arch.validate();
    const auto reference = make_zero_params(p.arch, p.branch.has_value());
    auto a = p;
    auto b = reference;
    auto ta = tensors(a);
    auto tb = tensors(b);
    if (ta.size() != tb.size()) throw ParameterError("NetParams: layer layout does not match architecture");
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i].shape != tb[i].shape)
            throw ParameterError("NetParams: shape mismatch in " + ta[i].name);
        for (double v : ta[i].data)
            if (!std::isfinite(v)) throw ParameterError("NetParams: non-finite value in " + ta[i].name);
    }
    for (std::size_t b = 1; b < p.tcn.blocks.size(); ++b)
        if (p.tcn.blocks[b].first.dilation <= p.tcn.blocks[b - 1].first.dilation)
            throw ParameterError("TcnStack: dilations must be strictly increasing");
}

Mat causal_dilated_conv(const Mat& x, const ConvLayer& layer) {
    if (x.rows != layer.in_channels) throw ParameterError("causal_dilated_conv: channel mismatch");
    const auto T = x.cols;
    const auto l = layer.width;
    Mat y(layer.out_channels, T);
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        auto yo = y.row(o);
        std::fill(yo.begin(), yo.end(), layer.bias[o]);
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            const auto xi = x.row(i);
            for (std::size_t j = 0; j < l; ++j) {
                // Tap j reads (l-1-j)*d steps into the past; earlier positions are zero padding.
                const auto shift = (l - 1 - j) * layer.dilation;
                const double w = layer.tap(o, i, j);
                if (w == 0.0 || shift >= T) continue;
                for (std::size_t t = shift; t < T; ++t) yo[t] += w * xi[t - shift];
            }
        }
    }
    return y;
}

std::size_t receptive_field(std::size_t width, std::span<const std::size_t> dilations) {
    if (dilations.empty()) throw ParameterError("receptive_field: empty dilation list");
    return 1 + (width - 1) * std::accumulate(dilations.begin(), dilations.end(), std::size_t{0});
}

Mat apply_activation(const Mat& x, Activation a) {
    Mat y = x;
    for (auto& v : y.v) v = activate(v, a);
    return y;
}

Mat residual_block(const Mat& x, const ResidualBlock& block, Activation a) {
    if (block.first.in_channels != x.rows || block.second.out_channels != x.rows)
        throw ParameterError("residual_block: block width differs from input channels");
    const Mat f = causal_dilated_conv(apply_activation(causal_dilated_conv(x, block.first), a), block.second);
    Mat y = x;
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += f.v[i];
    return y;
}

std::vector<double> softmax(std::span<const double> scores) {
    if (scores.empty()) throw ParameterError("softmax: empty input");
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - top);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

Mat scaled_softmax_attention(const Mat& Q, const Mat& K, const Mat& V, Mat* weights) {
    if (Q.cols == 0 || Q.cols != K.cols || K.rows != V.rows || Q.rows == 0 || K.rows == 0)
        throw ParameterError("scaled_softmax_attention: shape mismatch");
    const auto n = Q.rows;
    const auto m = K.rows;
    const double scale = 1.0 / std::sqrt(static_cast<double>(Q.cols));
    Mat out(n, V.cols);
    if (weights != nullptr) *weights = Mat(n, m);
    std::vector<double> scores(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double dot = 0.0;
            for (std::size_t d = 0; d < Q.cols; ++d) dot += Q(i, d) * K(j, d);
            scores[j] = dot * scale;
        }
        const auto a = softmax(scores);
        for (std::size_t j = 0; j < m; ++j) {
            if (weights != nullptr) (*weights)(i, j) = a[j];
            for (std::size_t c = 0; c < V.cols; ++c) out(i, c) += a[j] * V(j, c);
        }
    }
    return out;
}

Mat frame_input(std::span<const cplx> x, std::size_t frame) {
    const auto T = x.size() / frame;
    Mat out(2 * frame, T);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < frame; ++f) {
            out(2 * f, t) = x[t * frame + f].real();
            out(2 * f + 1, t) = x[t * frame + f].imag();
        }
    return out;
}

Mat segment_logits(std::span<const cplx> main_input, const NetParams& p) {
    auto without_branch = p;
    without_branch.branch.reset();
    return forward_trace(main_input, {}, without_branch).seg_logits;
}

std::vector<double> spatial_attention_weights(std::span<const cplx> branch_input, const NetParams& p) {
    const auto S = checked_segments(branch_input.size(), p.arch);
    if (!p.branch) return std::vector<double>(S, 1.0 / static_cast<double>(S));
    const auto& br = *p.branch;
    const auto act = p.arch.activation;
    const Mat b0 = frame_input(branch_input, p.arch.frame);
    const Mat b1 = apply_activation(causal_dilated_conv(b0, br.conv1), act);
    const Mat b2 = apply_activation(causal_dilated_conv(b1, br.conv2), act);
    const Mat pooled = segment_pool(b2, p.arch.segment_frames());
    std::vector<double> scores(S);
    for (std::size_t s = 0; s < S; ++s) scores[s] = linear_apply(br.head, pooled.row(s))[0];
    return softmax(scores);
}

std::vector<double> combine_segments(const Mat& seg_logits, std::span<const double> weights, const NetParams& p) {
    if (seg_logits.rows != weights.size() || seg_logits.cols != p.classifier2.in)
        throw ParameterError("combine_segments: segment grid mismatch");
    std::vector<double> z(seg_logits.cols, 0.0);
    for (std::size_t s = 0; s < seg_logits.rows; ++s) {
        if (p.arch.hard_decision) {
            const auto row = seg_logits.row(s);
            const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
            z[best] += weights[s];
        } else {
            for (std::size_t d = 0; d < z.size(); ++d) z[d] += weights[s] * seg_logits(s, d);
        }
    }
    return linear_apply(p.classifier2, z);
}

std::vector<double> model_forward(std::span<const cplx> main_input, std::span<const cplx> branch_input,
                                  const NetParams& p) {
    if (p.branch && branch_input.size() != main_input.size())
        throw ParameterError("model_forward: branch and main inputs differ in segment grid");
    if (p.arch.hard_decision)
        return combine_segments(segment_logits(main_input, p), spatial_attention_weights(branch_input, p), p);
    return forward_trace(main_input, branch_input, p).out;
}

std::vector<std::vector<double>> model_forward_batch(std::span<const Example> batch, const NetParams& p) {
    std::vector<std::vector<double>> out(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) { out[i] = model_forward(batch[i].main, batch[i].branch, p); });
    return out;
}

int predict(const Example& ex, const NetParams& p) {
    const auto logits = model_forward(ex.main, ex.branch, p);
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double loss_and_gradient(const NetParams& p, std::span<const Example> batch, NetParams* grads) {
    if (batch.empty()) throw ParameterError("loss_and_gradient: empty batch");
    const auto n = batch.size();
    std::vector<double> losses(n, 0.0);
    std::vector<NetParams> per_example(grads != nullptr ? n : 0);
    const double inv_n = 1.0 / static_cast<double>(n);
    parallel_for(n, [&](std::size_t i) {
        const auto& ex = batch[i];
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= p.arch.n_classes)
            throw ParameterError("loss_and_gradient: label outside class range");
        const Trace tr = forward_trace(ex.main, ex.branch, p);
        const auto prob = softmax(tr.out);
        losses[i] = -std::log(std::max(prob[static_cast<std::size_t>(ex.label)], 1e-300));
        if (grads != nullptr) {
            std::vector<double> dout(prob);
            dout[static_cast<std::size_t>(ex.label)] -= 1.0;
            for (auto& v : dout) v *= inv_n;
            per_example[i] = make_zero_params(p.arch, p.branch.has_value());
            backward(tr, p, dout, per_example[i]);
        }
    });
    if (grads != nullptr) {
        *grads = make_zero_params(p.arch, p.branch.has_value());
        for (auto& g : per_example) add_into(*grads, g);
    }
    double loss = 0.0;
    for (double l : losses) loss += l;
    return loss * inv_n;
}

}  // namespace rfsei::tcn
