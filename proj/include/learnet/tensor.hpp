#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "learnet/errors.hpp"

namespace learnet {

// Dense rank-N array of 32-bit floats, row-major, with layout
// [batch, channels, height, width] for image data. All reductions inside the
// operations below accumulate in 64-bit and store results as 32-bit.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> v;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<float> values);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, float value);

    size_t numel() const;
    int dim(size_t i) const { return shape.at(i); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    float* data() { return v.data(); }
    const float* data() const { return v.data(); }

    bool all_finite() const;
};

std::string shape_str(const std::vector<int>& shape);
size_t shape_numel(const std::vector<int>& shape);

// Convolution filter bank: weights [out_channels, in_channels, k, k] plus one
// bias per output channel. Only square kernels are supported.
struct ConvParams {
    Tensor weights;
    Tensor bias;
    int stride = 1;
    int pad = 0;
};

struct AffineParams {
    Tensor weights;  // [out_features, in_features]
    Tensor bias;     // [out_features]
};

struct ConvGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

struct AffineGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

struct LossResult {
    double loss = 0.0;
    Tensor grad_logits;
};

// Output spatial extent of a strided convolution: floor((n + 2p - k)/s) + 1.
int conv_out_extent(int n, int kernel, int stride, int pad);

// Cross-correlation (no kernel flip) of a [N, C, H, W] input with a filter
// bank, plus bias. Output is [N, out_channels, H', W'].
Tensor conv2d_forward(const Tensor& input, const ConvParams& params);
ConvGrads conv2d_backward(const Tensor& input, const ConvParams& params,
                          const Tensor& grad_out);

Tensor relu(const Tensor& input);
// Subgradient at exactly zero is zero.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

Tensor elementwise_add(const Tensor& a, const Tensor& b);

// Stacks inputs along the channel axis; all must share batch, height, width.
Tensor channel_concat(std::span<const Tensor> inputs);
// Extracts channels [c_begin, c_end) of a [N, C, H, W] tensor.
Tensor channel_slice(const Tensor& t, int c_begin, int c_end);

// output = input * W^T + bias over [batch, in_features].
Tensor affine_forward(const Tensor& input, const AffineParams& params);
AffineGrads affine_backward(const Tensor& input, const AffineParams& params,
                            const Tensor& grad_out);

// Row-wise softmax of [batch, classes] logits.
Tensor softmax(const Tensor& logits);
// Mean negative log likelihood over the batch; grad = (softmax - onehot)/batch.
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace learnet
