#pragma once

// Test-only reference implementations. These stay independent of the library
// code paths they check: the convolution oracle is a plain nested loop (no
// im2col), and the gradient checker drives the public forward ops through
// central finite differences.

#include <cmath>
#include <functional>
#include <vector>

#include "learnet/rng.hpp"
#include "learnet/tensor.hpp"

namespace oracle {

// Brute-force cross-correlation, nested loops only.
inline learnet::Tensor conv2d_naive(const learnet::Tensor& input,
                                    const learnet::ConvParams& p) {
    using learnet::Tensor;
    const int N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int O = p.weights.dim(0), k = p.weights.dim(2);
    const int Ho = (H + 2 * p.pad - k) / p.stride + 1;
    const int Wo = (W + 2 * p.pad - k) / p.stride + 1;
    Tensor out = Tensor::zeros({N, O, Ho, Wo});
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
            for (int oy = 0; oy < Ho; ++oy)
                for (int ox = 0; ox < Wo; ++ox) {
                    double acc = p.bias.v[o];
                    for (int c = 0; c < C; ++c)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = oy * p.stride - p.pad + ky;
                                const int ix = ox * p.stride - p.pad + kx;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                const double xv =
                                    input.v[((static_cast<size_t>(n) * C + c) * H + iy) * W + ix];
                                const double wv =
                                    p.weights.v[((static_cast<size_t>(o) * C + c) * k + ky) * k + kx];
                                acc += xv * wv;
                            }
                    out.v[((static_cast<size_t>(n) * O + o) * Ho + oy) * Wo + ox] =
                        static_cast<float>(acc);
                }
    return out;
}

// Central finite differences of a scalar-valued function over a parameter
// tensor, step h, evaluated in 64-bit.
inline learnet::Tensor finite_diff(const std::function<double()>& loss,
                                   learnet::Tensor& param, double h = 1e-3) {
    learnet::Tensor grad = learnet::Tensor::zeros(param.shape);
    for (size_t i = 0; i < param.v.size(); ++i) {
        const float orig = param.v[i];
        param.v[i] = static_cast<float>(orig + h);
        const double up = loss();
        param.v[i] = static_cast<float>(orig - h);
        const double down = loss();
        param.v[i] = orig;
        grad.v[i] = static_cast<float>((up - down) / (2.0 * h));
    }
    return grad;
}

struct GradCheck {
    double max_rel_err = 0.0;     // per-component, floored by scale
    double vector_rel_err = 0.0;  // ||a - g|| / max(||a||, ||g||)
    size_t worst_index = 0;
};

// Compares an analytic gradient with a finite-difference one. The
// per-component error is |a - g| / max(|a|, |g|, floor) where floor is a
// small fraction of the gradient's largest magnitude, so negligible
// components do not blow up the ratio.
inline GradCheck compare_grads(const learnet::Tensor& analytic,
                               const learnet::Tensor& fd) {
    GradCheck r;
    double scale = 0.0;
    for (size_t i = 0; i < analytic.v.size(); ++i)
        scale = std::max({scale, std::abs(static_cast<double>(analytic.v[i])),
                          std::abs(static_cast<double>(fd.v[i]))});
    const double floor = std::max(1e-3 * scale, 1e-8);
    double na = 0.0, nf = 0.0, nd = 0.0;
    for (size_t i = 0; i < analytic.v.size(); ++i) {
        const double a = analytic.v[i], g = fd.v[i];
        const double err = std::abs(a - g) / std::max({std::abs(a), std::abs(g), floor});
        if (err > r.max_rel_err) {
            r.max_rel_err = err;
            r.worst_index = i;
        }
        na += a * a;
        nf += g * g;
        nd += (a - g) * (a - g);
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nf), 1e-12});
    r.vector_rel_err = std::sqrt(nd) / denom;
    return r;
}

inline learnet::Tensor random_tensor(std::vector<int> shape, learnet::Rng& rng,
                                     float lo = -1.0f, float hi = 1.0f) {
    learnet::Tensor t = learnet::Tensor::zeros(std::move(shape));
    for (float& x : t.v) x = rng.uniform_f(lo, hi);
    return t;
}

// Random tensor with no value inside (-margin, margin); keeps finite
// differences away from the ReLU kink.
inline learnet::Tensor random_tensor_away_from_zero(std::vector<int> shape,
                                                    learnet::Rng& rng, float margin) {
    learnet::Tensor t = learnet::Tensor::zeros(std::move(shape));
    for (float& x : t.v) {
        const float mag = rng.uniform_f(margin, 1.0f);
        x = rng.uniform01() < 0.5 ? -mag : mag;
    }
    return t;
}

}  // namespace oracle
