#include "learnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace learnet {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

// C[M x N] += A[M x K] * B[K x N]; A is f32, B and C are f64. Register-tiled
// 4x8 microkernel so the k loop runs out of registers; order inside a tile is
// fixed, results are identical for any M, N, K.
void gemm_acc(int M, int N, int K, const float* A, int lda, const double* B,
              int ldb, double* C, int ldc) {
    constexpr int MR = 4, JR = 8;
    int m = 0;
    for (; m + MR <= M; m += MR) {
        const float* a0 = A + (m + 0) * lda;
        const float* a1 = A + (m + 1) * lda;
        const float* a2 = A + (m + 2) * lda;
        const float* a3 = A + (m + 3) * lda;
        int j = 0;
        for (; j + JR <= N; j += JR) {
            double acc[MR * JR] = {};
            for (int k = 0; k < K; ++k) {
                const double* b = B + static_cast<size_t>(k) * ldb + j;
                const double w0 = a0[k], w1 = a1[k], w2 = a2[k], w3 = a3[k];
                for (int jj = 0; jj < JR; ++jj) {
                    const double bj = b[jj];
                    acc[0 * JR + jj] += w0 * bj;
                    acc[1 * JR + jj] += w1 * bj;
                    acc[2 * JR + jj] += w2 * bj;
                    acc[3 * JR + jj] += w3 * bj;
                }
            }
            for (int r = 0; r < MR; ++r) {
                double* c = C + static_cast<size_t>(m + r) * ldc + j;
                for (int jj = 0; jj < JR; ++jj) c[jj] += acc[r * JR + jj];
            }
        }
        for (; j < N; ++j) {
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (int k = 0; k < K; ++k) {
                const double bj = B[static_cast<size_t>(k) * ldb + j];
                s0 += a0[k] * bj;
                s1 += a1[k] * bj;
                s2 += a2[k] * bj;
                s3 += a3[k] * bj;
            }
            C[static_cast<size_t>(m + 0) * ldc + j] += s0;
            C[static_cast<size_t>(m + 1) * ldc + j] += s1;
            C[static_cast<size_t>(m + 2) * ldc + j] += s2;
            C[static_cast<size_t>(m + 3) * ldc + j] += s3;
        }
    }
    for (; m < M; ++m) {
        const float* a = A + m * lda;
        double* c = C + static_cast<size_t>(m) * ldc;
        for (int k = 0; k < K; ++k) {
            const double* b = B + static_cast<size_t>(k) * ldb;
            const double w = a[k];
            for (int j = 0; j < N; ++j) c[j] += w * b[j];
        }
    }
}

// C[m*crs + n*ccs] += dot(A[m,:], B[n,:]) over length P; A is f32, B is f64.
// 2x2 blocking amortizes the loads across four running dot products.
void gemm_dot_acc(int M, int N, int P, const float* A, int lda, const double* B,
                  int ldb, double* C, int crs, int ccs) {
    auto dot1 = [&](const float* a, const double* b) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        int p = 0;
        for (; p + 4 <= P; p += 4) {
            s0 += static_cast<double>(a[p + 0]) * b[p + 0];
            s1 += static_cast<double>(a[p + 1]) * b[p + 1];
            s2 += static_cast<double>(a[p + 2]) * b[p + 2];
            s3 += static_cast<double>(a[p + 3]) * b[p + 3];
        }
        double s = (s0 + s1) + (s2 + s3);
        for (; p < P; ++p) s += static_cast<double>(a[p]) * b[p];
        return s;
    };
    int m = 0;
    for (; m + 2 <= M; m += 2) {
        const float* am0 = A + static_cast<size_t>(m) * lda;
        const float* am1 = A + static_cast<size_t>(m + 1) * lda;
        int n = 0;
        for (; n + 2 <= N; n += 2) {
            const double* bn0 = B + static_cast<size_t>(n) * ldb;
            const double* bn1 = B + static_cast<size_t>(n + 1) * ldb;
            double s00 = 0.0, s01 = 0.0, s10 = 0.0, s11 = 0.0;
            for (int p = 0; p < P; ++p) {
                const double x0 = am0[p], x1 = am1[p];
                const double y0 = bn0[p], y1 = bn1[p];
                s00 += x0 * y0;
                s01 += x0 * y1;
                s10 += x1 * y0;
                s11 += x1 * y1;
            }
            C[static_cast<size_t>(m) * crs + static_cast<size_t>(n) * ccs] += s00;
            C[static_cast<size_t>(m) * crs + static_cast<size_t>(n + 1) * ccs] += s01;
            C[static_cast<size_t>(m + 1) * crs + static_cast<size_t>(n) * ccs] += s10;
            C[static_cast<size_t>(m + 1) * crs + static_cast<size_t>(n + 1) * ccs] += s11;
        }
        for (; n < N; ++n) {
            const double* b = B + static_cast<size_t>(n) * ldb;
            C[static_cast<size_t>(m) * crs + static_cast<size_t>(n) * ccs] += dot1(am0, b);
            C[static_cast<size_t>(m + 1) * crs + static_cast<size_t>(n) * ccs] += dot1(am1, b);
        }
    }
    for (; m < M; ++m)
        for (int n = 0; n < N; ++n)
            C[static_cast<size_t>(m) * crs + static_cast<size_t>(n) * ccs] +=
                dot1(A + static_cast<size_t>(m) * lda, B + static_cast<size_t>(n) * ldb);
}

// Unrolls one [C, H, W] image into columns of receptive-field patches:
// cols[(c*k + ky)*k + kx][oy*Wo + ox], zero-padded outside the image.
void im2col(const float* in, int C, int H, int W, int k, int stride, int pad,
            int Ho, int Wo, double* cols) {
    const size_t plane = static_cast<size_t>(Ho) * Wo;
    for (int c = 0; c < C; ++c) {
        const float* img = in + static_cast<size_t>(c) * H * W;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                double* row = cols + (((static_cast<size_t>(c) * k + ky) * k) + kx) * plane;
                for (int oy = 0; oy < Ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    double* dst = row + static_cast<size_t>(oy) * Wo;
                    if (iy < 0 || iy >= H) {
                        std::fill(dst, dst + Wo, 0.0);
                        continue;
                    }
                    const float* src = img + static_cast<size_t>(iy) * W;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[ox] = (ix < 0 || ix >= W) ? 0.0 : static_cast<double>(src[ix]);
                    }
                }
            }
        }
    }
}

// Scatter-adds column gradients back onto the padded image grid.
void col2im_acc(const double* cols, int C, int H, int W, int k, int stride,
                int pad, int Ho, int Wo, double* img_acc) {
    const size_t plane = static_cast<size_t>(Ho) * Wo;
    for (int c = 0; c < C; ++c) {
        double* img = img_acc + static_cast<size_t>(c) * H * W;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const double* row = cols + (((static_cast<size_t>(c) * k + ky) * k) + kx) * plane;
                for (int oy = 0; oy < Ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    const double* src = row + static_cast<size_t>(oy) * Wo;
                    double* dst = img + static_cast<size_t>(iy) * W;
                    for (int ox = 0; ox < Wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < W) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

struct ConvDims {
    int N, C, H, W, O, k, Ho, Wo;
};

ConvDims check_conv(const Tensor& input, const ConvParams& params) {
    require(input.shape.size() == 4,
            "conv input must be rank 4 [batch, channels, height, width], got " +
                shape_str(input.shape));
    require(params.weights.shape.size() == 4,
            "conv weights must be rank 4 [out, in, k, k], got " +
                shape_str(params.weights.shape));
    const int kh = params.weights.dim(2), kw = params.weights.dim(3);
    if (kh != kw)
        throw ValueError("conv kernel must be square, got " + std::to_string(kh) + "x" +
                         std::to_string(kw));
    if (params.stride < 1) throw ValueError("conv stride must be >= 1, got " +
                                            std::to_string(params.stride));
    if (params.pad < 0) throw ValueError("conv pad must be >= 0, got " +
                                         std::to_string(params.pad));
    require(input.dim(1) == params.weights.dim(1),
            "conv input has " + std::to_string(input.dim(1)) +
                " channels but weights expect " + std::to_string(params.weights.dim(1)));
    require(params.bias.shape == std::vector<int>{params.weights.dim(0)},
            "conv bias shape " + shape_str(params.bias.shape) + " must be [" +
                std::to_string(params.weights.dim(0)) + "]");
    ConvDims d;
    d.N = input.dim(0);
    d.C = input.dim(1);
    d.H = input.dim(2);
    d.W = input.dim(3);
    d.O = params.weights.dim(0);
    d.k = kh;
    if (d.H + 2 * params.pad < d.k || d.W + 2 * params.pad < d.k)
        throw ValueError("conv kernel " + std::to_string(d.k) +
                         " exceeds padded input " + shape_str(input.shape));
    d.Ho = conv_out_extent(d.H, d.k, params.stride, params.pad);
    d.Wo = conv_out_extent(d.W, d.k, params.stride, params.pad);
    return d;
}

}  // namespace

Tensor::Tensor(std::vector<int> s, std::vector<float> values)
    : shape(std::move(s)), v(std::move(values)) {
    if (v.size() != shape_numel(shape))
        throw ShapeError("tensor value count " + std::to_string(v.size()) +
                         " does not match shape " + shape_str(shape));
}

Tensor Tensor::zeros(std::vector<int> shape) {
    Tensor t;
    t.v.assign(shape_numel(shape), 0.0f);
    t.shape = std::move(shape);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t;
    t.v.assign(shape_numel(shape), value);
    t.shape = std::move(shape);
    return t;
}

size_t Tensor::numel() const { return v.size(); }

bool Tensor::all_finite() const {
    for (float x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape));
        n *= static_cast<size_t>(d);
    }
    return n;
}

int conv_out_extent(int n, int kernel, int stride, int pad) {
    return (n + 2 * pad - kernel) / stride + 1;
}

Tensor conv2d_forward(const Tensor& input, const ConvParams& params) {
    const ConvDims d = check_conv(input, params);
    const size_t plane = static_cast<size_t>(d.Ho) * d.Wo;
    const int K = d.C * d.k * d.k;

    Tensor out = Tensor::zeros({d.N, d.O, d.Ho, d.Wo});
    std::vector<double> cols(static_cast<size_t>(K) * plane);
    std::vector<double> acc(static_cast<size_t>(d.O) * plane);
    const size_t in_stride = static_cast<size_t>(d.C) * d.H * d.W;

    for (int n = 0; n < d.N; ++n) {
        im2col(input.data() + n * in_stride, d.C, d.H, d.W, d.k, params.stride,
               params.pad, d.Ho, d.Wo, cols.data());
        std::fill(acc.begin(), acc.end(), 0.0);
        gemm_acc(d.O, static_cast<int>(plane), K, params.weights.data(), K,
                 cols.data(), static_cast<int>(plane), acc.data(),
                 static_cast<int>(plane));
        float* dst = out.data() + static_cast<size_t>(n) * d.O * plane;
        for (int o = 0; o < d.O; ++o) {
            const double b = params.bias.v[o];
            const double* src = acc.data() + static_cast<size_t>(o) * plane;
            for (size_t p = 0; p < plane; ++p)
                dst[static_cast<size_t>(o) * plane + p] = static_cast<float>(src[p] + b);
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& input, const ConvParams& params,
                          const Tensor& grad_out) {
    const ConvDims d = check_conv(input, params);
    const std::vector<int> want{d.N, d.O, d.Ho, d.Wo};
    require(grad_out.shape == want, "conv grad_out shape " + shape_str(grad_out.shape) +
                                        " does not match forward output " + shape_str(want));

    const size_t plane = static_cast<size_t>(d.Ho) * d.Wo;
    const int K = d.C * d.k * d.k;
    const size_t in_stride = static_cast<size_t>(d.C) * d.H * d.W;

    ConvGrads g;
    g.input = Tensor::zeros(input.shape);
    g.weights = Tensor::zeros(params.weights.shape);
    g.bias = Tensor::zeros(params.bias.shape);

    // Transposed weights [K, O] for the input-gradient pass.
    std::vector<float> wt(static_cast<size_t>(K) * d.O);
    for (int o = 0; o < d.O; ++o)
        for (int kk = 0; kk < K; ++kk)
            wt[static_cast<size_t>(kk) * d.O + o] = params.weights.v[static_cast<size_t>(o) * K + kk];

    std::vector<double> cols(static_cast<size_t>(K) * plane);
    std::vector<double> gout_d(static_cast<size_t>(d.O) * plane);
    std::vector<double> gcols(static_cast<size_t>(K) * plane);
    std::vector<double> gin(in_stride);
    std::vector<double> gw(static_cast<size_t>(d.O) * K, 0.0);
    std::vector<double> gb(static_cast<size_t>(d.O), 0.0);

    for (int n = 0; n < d.N; ++n) {
        const float* go = grad_out.data() + static_cast<size_t>(n) * d.O * plane;
        for (size_t i = 0; i < gout_d.size(); ++i) gout_d[i] = static_cast<double>(go[i]);

        for (int o = 0; o < d.O; ++o) {
            double s = 0.0;
            const double* row = gout_d.data() + static_cast<size_t>(o) * plane;
            for (size_t p = 0; p < plane; ++p) s += row[p];
            gb[o] += s;
        }

        im2col(input.data() + n * in_stride, d.C, d.H, d.W, d.k, params.stride,
               params.pad, d.Ho, d.Wo, cols.data());
        gemm_dot_acc(d.O, K, static_cast<int>(plane), go, static_cast<int>(plane),
                     cols.data(), static_cast<int>(plane), gw.data(), K, 1);

        std::fill(gcols.begin(), gcols.end(), 0.0);
        gemm_acc(K, static_cast<int>(plane), d.O, wt.data(), d.O, gout_d.data(),
                 static_cast<int>(plane), gcols.data(), static_cast<int>(plane));
        std::fill(gin.begin(), gin.end(), 0.0);
        col2im_acc(gcols.data(), d.C, d.H, d.W, d.k, params.stride, params.pad,
                   d.Ho, d.Wo, gin.data());
        float* gi = g.input.data() + n * in_stride;
        for (size_t i = 0; i < in_stride; ++i) gi[i] = static_cast<float>(gin[i]);
    }
    for (size_t i = 0; i < gw.size(); ++i) g.weights.v[i] = static_cast<float>(gw[i]);
    for (int o = 0; o < d.O; ++o) g.bias.v[o] = static_cast<float>(gb[o]);
    return g;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (float& x : out.v) x = x > 0.0f ? x : 0.0f;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    require(input.same_shape(grad_out),
            "relu grad shape " + shape_str(grad_out.shape) + " does not match input " +
                shape_str(input.shape));
    Tensor g = grad_out;
    for (size_t i = 0; i < g.v.size(); ++i)
        if (input.v[i] <= 0.0f) g.v[i] = 0.0f;
    return g;
}

Tensor elementwise_add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "add requires equal shapes, got " + shape_str(a.shape) +
                                 " and " + shape_str(b.shape));
    Tensor out = a;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += b.v[i];
    return out;
}

Tensor channel_concat(std::span<const Tensor> inputs) {
    if (inputs.empty()) throw ValueError("concat needs at least one input");
    const Tensor& first = inputs[0];
    require(first.shape.size() == 4,
            "concat inputs must be rank 4, got " + shape_str(first.shape));
    int channels = 0;
    for (const Tensor& t : inputs) {
        require(t.shape.size() == 4 && t.dim(0) == first.dim(0) && t.dim(2) == first.dim(2) &&
                    t.dim(3) == first.dim(3),
                "concat input " + shape_str(t.shape) + " does not match batch/spatial dims of " +
                    shape_str(first.shape));
        channels += t.dim(1);
    }
    const int N = first.dim(0), H = first.dim(2), W = first.dim(3);
    const size_t hw = static_cast<size_t>(H) * W;
    Tensor out = Tensor::zeros({N, channels, H, W});
    for (int n = 0; n < N; ++n) {
        size_t c_off = 0;
        for (const Tensor& t : inputs) {
            const size_t count = static_cast<size_t>(t.dim(1)) * hw;
            std::memcpy(out.data() + (static_cast<size_t>(n) * channels) * hw + c_off * hw,
                        t.data() + static_cast<size_t>(n) * count, count * sizeof(float));
            c_off += static_cast<size_t>(t.dim(1));
        }
    }
    return out;
}

Tensor channel_slice(const Tensor& t, int c_begin, int c_end) {
    require(t.shape.size() == 4, "slice input must be rank 4, got " + shape_str(t.shape));
    if (c_begin < 0 || c_end > t.dim(1) || c_begin >= c_end)
        throw ValueError("bad channel range [" + std::to_string(c_begin) + ", " +
                         std::to_string(c_end) + ") for " + shape_str(t.shape));
    const int N = t.dim(0), C = t.dim(1), H = t.dim(2), W = t.dim(3);
    const size_t hw = static_cast<size_t>(H) * W;
    const int c = c_end - c_begin;
    Tensor out = Tensor::zeros({N, c, H, W});
    for (int n = 0; n < N; ++n)
        std::memcpy(out.data() + static_cast<size_t>(n) * c * hw,
                    t.data() + (static_cast<size_t>(n) * C + c_begin) * hw,
                    static_cast<size_t>(c) * hw * sizeof(float));
    return out;
}

namespace {

void check_affine(const Tensor& input, const AffineParams& params) {
    require(input.shape.size() == 2,
            "affine input must be rank 2 [batch, features], got " + shape_str(input.shape));
    require(params.weights.shape.size() == 2,
            "affine weights must be rank 2 [out, in], got " + shape_str(params.weights.shape));
    require(input.dim(1) == params.weights.dim(1),
            "affine input has " + std::to_string(input.dim(1)) +
                " features but weights expect " + std::to_string(params.weights.dim(1)));
    require(params.bias.shape == std::vector<int>{params.weights.dim(0)},
            "affine bias shape " + shape_str(params.bias.shape) + " must be [" +
                std::to_string(params.weights.dim(0)) + "]");
}

}  // namespace

Tensor affine_forward(const Tensor& input, const AffineParams& params) {
    check_affine(input, params);
    const int N = input.dim(0), K = input.dim(1), O = params.weights.dim(0);
    Tensor out = Tensor::zeros({N, O});
    std::vector<double> xd(static_cast<size_t>(N) * K);
    for (size_t i = 0; i < xd.size(); ++i) xd[i] = static_cast<double>(input.v[i]);
    std::vector<double> acc(static_cast<size_t>(N) * O, 0.0);
    // acc[n*O + o] = dot(W[o,:], x[n,:])
    gemm_dot_acc(O, N, K, params.weights.data(), K, xd.data(), K, acc.data(), 1, O);
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
            out.v[static_cast<size_t>(n) * O + o] = static_cast<float>(
                acc[static_cast<size_t>(n) * O + o] + static_cast<double>(params.bias.v[o]));
    return out;
}

AffineGrads affine_backward(const Tensor& input, const AffineParams& params,
                            const Tensor& grad_out) {
    check_affine(input, params);
    const int N = input.dim(0), K = input.dim(1), O = params.weights.dim(0);
    require(grad_out.shape == (std::vector<int>{N, O}),
            "affine grad_out shape " + shape_str(grad_out.shape) + " must be " +
                shape_str({N, O}));

    AffineGrads g;
    g.input = Tensor::zeros(input.shape);
    g.weights = Tensor::zeros(params.weights.shape);
    g.bias = Tensor::zeros(params.bias.shape);

    std::vector<double> gw(static_cast<size_t>(O) * K, 0.0);
    std::vector<double> gb(static_cast<size_t>(O), 0.0);
    std::vector<double> row(static_cast<size_t>(K));
    for (int n = 0; n < N; ++n) {
        const float* go = grad_out.data() + static_cast<size_t>(n) * O;
        const float* x = input.data() + static_cast<size_t>(n) * K;
        std::fill(row.begin(), row.end(), 0.0);
        for (int o = 0; o < O; ++o) {
            const double s = go[o];
            gb[o] += s;
            const float* w = params.weights.data() + static_cast<size_t>(o) * K;
            double* gwo = gw.data() + static_cast<size_t>(o) * K;
            for (int k = 0; k < K; ++k) {
                gwo[k] += s * static_cast<double>(x[k]);
                row[k] += s * static_cast<double>(w[k]);
            }
        }
        float* gi = g.input.data() + static_cast<size_t>(n) * K;
        for (int k = 0; k < K; ++k) gi[k] = static_cast<float>(row[k]);
    }
    for (size_t i = 0; i < gw.size(); ++i) g.weights.v[i] = static_cast<float>(gw[i]);
    for (int o = 0; o < O; ++o) g.bias.v[o] = static_cast<float>(gb[o]);
    return g;
}

Tensor softmax(const Tensor& logits) {
    require(logits.shape.size() == 2,
            "softmax input must be rank 2 [batch, classes], got " + shape_str(logits.shape));
    const int N = logits.dim(0), C = logits.dim(1);
    Tensor out = Tensor::zeros(logits.shape);
    for (int n = 0; n < N; ++n) {
        const float* x = logits.data() + static_cast<size_t>(n) * C;
        float* y = out.data() + static_cast<size_t>(n) * C;
        double m = x[0];
        for (int c = 1; c < C; ++c) m = std::max(m, static_cast<double>(x[c]));
        double sum = 0.0;
        for (int c = 0; c < C; ++c) sum += std::exp(static_cast<double>(x[c]) - m);
        for (int c = 0; c < C; ++c)
            y[c] = static_cast<float>(std::exp(static_cast<double>(x[c]) - m) / sum);
    }
    return out;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    require(logits.shape.size() == 2,
            "loss input must be rank 2 [batch, classes], got " + shape_str(logits.shape));
    const int N = logits.dim(0), C = logits.dim(1);
    require(static_cast<int>(labels.size()) == N,
            "got " + std::to_string(labels.size()) + " labels for a batch of " +
                std::to_string(N));
    for (int n = 0; n < N; ++n)
        if (labels[n] < 0 || labels[n] >= C)
            throw ValueError("label " + std::to_string(labels[n]) + " at row " +
                             std::to_string(n) + " is outside [0, " + std::to_string(C) + ")");

    LossResult r;
    r.grad_logits = Tensor::zeros(logits.shape);
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        const float* x = logits.data() + static_cast<size_t>(n) * C;
        float* g = r.grad_logits.data() + static_cast<size_t>(n) * C;
        double m = x[0];
        for (int c = 1; c < C; ++c) m = std::max(m, static_cast<double>(x[c]));
        double sum = 0.0;
        for (int c = 0; c < C; ++c) sum += std::exp(static_cast<double>(x[c]) - m);
        const double lse = m + std::log(sum);
        total += lse - static_cast<double>(x[labels[n]]);
        for (int c = 0; c < C; ++c) {
            const double p = std::exp(static_cast<double>(x[c]) - m) / sum;
            const double onehot = (c == labels[n]) ? 1.0 : 0.0;
            g[c] = static_cast<float>((p - onehot) / N);
        }
    }
    r.loss = total / N;
    return r;
}

}  // namespace learnet
