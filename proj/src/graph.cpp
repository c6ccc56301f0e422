#include "learnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "learnet/rng.hpp"

namespace learnet {

using json = nlohmann::json;

std::string op_kind_name(OpKind op) {
    switch (op) {
        case OpKind::Input: return "input";
        case OpKind::Conv: return "conv";
        case OpKind::Relu: return "relu";
        case OpKind::Add: return "add";
        case OpKind::Concat: return "concat";
        case OpKind::Norm: return "norm";
        case OpKind::Dropout: return "dropout";
        case OpKind::Affine: return "affine";
        case OpKind::Head: return "head";
    }
    return "?";
}

OpKind op_kind_from_name(const std::string& name) {
    for (OpKind op : {OpKind::Input, OpKind::Conv, OpKind::Relu, OpKind::Add, OpKind::Concat,
                      OpKind::Norm, OpKind::Dropout, OpKind::Affine, OpKind::Head})
        if (op_kind_name(op) == name) return op;
    throw GraphError("unknown op kind \"" + name + "\"");
}

const NodeSpec* GraphSpec::find(const std::string& name) const {
    for (const auto& n : nodes)
        if (n.name == name) return &n;
    return nullptr;
}

const NodeSpec& GraphSpec::input_node() const {
    for (const auto& n : nodes)
        if (n.op == OpKind::Input) return n;
    throw GraphError("graph has no input node");
}

const NodeSpec& GraphSpec::head_node() const {
    for (const auto& n : nodes)
        if (n.op == OpKind::Head) return n;
    throw GraphError("graph has no head node");
}

const std::vector<int>& ShapeReport::shape_of(const std::string& name) const {
    for (const auto& s : shapes)
        if (s.name == name) return s.shape;
    throw GraphError("no shape recorded for node \"" + name + "\"");
}

GraphSpec build_learnet(int num_classes, LearnetVariant variant) {
    if (num_classes < 2)
        throw ValueError("num_classes must be at least 2, got " + std::to_string(num_classes));

    GraphSpec g;
    auto add_node = [&](NodeSpec n) { g.nodes.push_back(std::move(n)); };
    auto conv = [&](const std::string& name, const std::string& in, int filters, int kernel,
                    int pad) {
        NodeSpec n;
        n.name = name;
        n.op = OpKind::Conv;
        n.inputs = {in};
        n.filters = filters;
        n.kernel = kernel;
        n.stride = 2;
        n.pad = pad;
        add_node(n);
        NodeSpec r;
        r.name = name + "_relu";
        r.op = OpKind::Relu;
        r.inputs = {name};
        add_node(r);
    };
    auto accrete = [&](const std::string& name, const std::string& a, const std::string& b) {
        NodeSpec n;
        n.name = name;
        n.op = OpKind::Add;
        n.inputs = {a, b};
        add_node(n);
    };

    NodeSpec in;
    in.name = "input";
    in.op = OpKind::Input;
    in.channels = 3;
    in.height = 112;
    in.width = 112;
    add_node(in);

    conv("conv1", "input", 16, 3, 1);
    for (int p = 1; p <= 4; ++p)
        conv("conv2_" + std::to_string(p), "conv1_relu", 16, 1, 0);

    // Pathways 1 and 2 stay sequential; accretion links feed pathways 3 and 4
    // with hybrid maps from the neighbouring branches.
    accrete("add1_1", "conv2_1_relu", "conv2_2_relu");
    accrete("add1_2", "conv2_3_relu", "conv2_4_relu");
    conv("conv3_1", "conv2_1_relu", 32, 3, 1);
    conv("conv3_2", "conv2_2_relu", 32, 3, 1);
    conv("conv3_3", "add1_1", 32, 3, 1);
    conv("conv3_4", "add1_2", 32, 3, 1);

    accrete("add2_1", "conv3_1_relu", "conv3_2_relu");
    accrete("add2_2", "conv3_3_relu", "conv3_4_relu");
    conv("conv4_1", "conv3_1_relu", 64, 5, 2);
    conv("conv4_2", "conv3_2_relu", 64, 5, 2);
    conv("conv4_3", "add2_1", 64, 5, 2);
    conv("conv4_4", "add2_2", 64, 5, 2);

    NodeSpec cat;
    cat.name = "concat";
    cat.op = OpKind::Concat;
    cat.inputs = {"conv4_1_relu", "conv4_2_relu", "conv4_3_relu", "conv4_4_relu"};
    add_node(cat);

    NodeSpec norm;
    norm.name = "norm";
    norm.op = OpKind::Norm;
    norm.inputs = {"concat"};
    norm.eps = 1e-5f;
    add_node(norm);

    conv("conv5", "norm", 256, 3, variant == LearnetVariant::TableV ? 0 : 1);

    NodeSpec fc;
    fc.name = "fc";
    fc.op = OpKind::Affine;
    fc.inputs = {"conv5_relu"};
    fc.features = 256;
    add_node(fc);

    NodeSpec drop;
    drop.name = "dropout";
    drop.op = OpKind::Dropout;
    drop.inputs = {"fc"};
    drop.drop_rate = 0.5f;
    add_node(drop);

    NodeSpec head;
    head.name = "head";
    head.op = OpKind::Head;
    head.inputs = {"dropout"};
    head.features = num_classes;
    add_node(head);

    return g;
}

namespace {

size_t flat_features(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
}

}  // namespace

ShapeReport validate_graph(const GraphSpec& spec) {
    if (spec.nodes.empty()) throw GraphError("graph has no nodes");

    std::set<std::string> seen;
    std::map<std::string, std::vector<int>> shapes;
    std::map<std::string, int> consumers;
    int inputs_seen = 0, heads_seen = 0;
    ShapeReport report;

    for (const auto& n : spec.nodes) {
        if (n.name.empty()) throw GraphError("a node has an empty name");
        if (!seen.insert(n.name).second)
            throw GraphError("duplicate node name \"" + n.name + "\"");

        for (const auto& ref : n.inputs) {
            if (!shapes.count(ref))
                throw GraphError("node \"" + n.name + "\" references \"" + ref +
                                 "\" which is not defined earlier (unknown node or back edge)");
            const NodeSpec* producer = spec.find(ref);
            if (producer && producer->op == OpKind::Head)
                throw GraphError("node \"" + n.name + "\" consumes the head node \"" + ref + "\"");
            ++consumers[ref];
        }

        const size_t arity = n.inputs.size();
        std::vector<int> out;
        switch (n.op) {
            case OpKind::Input: {
                if (arity != 0)
                    throw GraphError("input node \"" + n.name + "\" must have no inputs");
                if (++inputs_seen > 1) throw GraphError("graph has more than one input node");
                if (n.channels < 1 || n.height < 1 || n.width < 1)
                    throw GraphError("input node \"" + n.name + "\" needs positive dimensions");
                out = {n.channels, n.height, n.width};
                break;
            }
            case OpKind::Conv: {
                if (arity != 1)
                    throw GraphError("conv node \"" + n.name + "\" needs exactly one input");
                const auto& s = shapes.at(n.inputs[0]);
                if (s.size() != 3)
                    throw GraphError("conv node \"" + n.name + "\" needs a [C, H, W] input, got " +
                                     shape_str(s));
                if (n.filters < 1 || n.kernel < 1 || n.stride < 1 || n.pad < 0)
                    throw GraphError("conv node \"" + n.name + "\" has invalid hyperparameters");
                if (s[1] + 2 * n.pad < n.kernel || s[2] + 2 * n.pad < n.kernel)
                    throw GraphError("conv node \"" + n.name + "\" kernel " +
                                     std::to_string(n.kernel) + " exceeds padded input " +
                                     shape_str(s));
                out = {n.filters, conv_out_extent(s[1], n.kernel, n.stride, n.pad),
                       conv_out_extent(s[2], n.kernel, n.stride, n.pad)};
                ++report.conv_layers;
                break;
            }
            case OpKind::Relu:
            case OpKind::Dropout: {
                if (arity != 1)
                    throw GraphError("node \"" + n.name + "\" needs exactly one input");
                if (n.op == OpKind::Dropout && (n.drop_rate < 0.0f || n.drop_rate >= 1.0f))
                    throw GraphError("dropout node \"" + n.name + "\" rate must be in [0, 1)");
                out = shapes.at(n.inputs[0]);
                break;
            }
            case OpKind::Add: {
                if (arity != 2)
                    throw GraphError("add node \"" + n.name + "\" needs exactly two inputs");
                const auto& a = shapes.at(n.inputs[0]);
                const auto& b = shapes.at(n.inputs[1]);
                if (a != b)
                    throw GraphError("add node \"" + n.name + "\" has mismatched inputs: \"" +
                                     n.inputs[0] + "\" is " + shape_str(a) + " but \"" +
                                     n.inputs[1] + "\" is " + shape_str(b));
                out = a;
                break;
            }
            case OpKind::Concat: {
                if (arity < 1)
                    throw GraphError("concat node \"" + n.name + "\" needs at least one input");
                const auto& first = shapes.at(n.inputs[0]);
                if (first.size() != 3)
                    throw GraphError("concat node \"" + n.name + "\" needs [C, H, W] inputs");
                int channels = 0;
                for (const auto& ref : n.inputs) {
                    const auto& s = shapes.at(ref);
                    if (s.size() != 3 || s[1] != first[1] || s[2] != first[2])
                        throw GraphError("concat node \"" + n.name + "\" input \"" + ref +
                                         "\" is " + shape_str(s) +
                                         ", spatial dims must match " + shape_str(first));
                    channels += s[0];
                }
                out = {channels, first[1], first[2]};
                break;
            }
            case OpKind::Norm: {
                if (arity != 1)
                    throw GraphError("norm node \"" + n.name + "\" needs exactly one input");
                const auto& s = shapes.at(n.inputs[0]);
                if (s.size() != 3)
                    throw GraphError("norm node \"" + n.name + "\" needs a [C, H, W] input, got " +
                                     shape_str(s));
                if (n.eps <= 0.0f)
                    throw GraphError("norm node \"" + n.name + "\" eps must be positive");
                out = s;
                break;
            }
            case OpKind::Affine:
            case OpKind::Head: {
                if (arity != 1)
                    throw GraphError("node \"" + n.name + "\" needs exactly one input");
                if (n.features < 1)
                    throw GraphError("node \"" + n.name + "\" needs a positive feature count");
                if (n.op == OpKind::Head && ++heads_seen > 1)
                    throw GraphError("graph has more than one head node");
                out = {n.features};
                break;
            }
        }
        shapes[n.name] = out;
        report.shapes.push_back({n.name, n.op, out});
    }

    if (inputs_seen != 1) throw GraphError("graph must have exactly one input node");
    return report;
}

ParamReport param_count(const GraphSpec& spec) {
    const ShapeReport shapes = validate_graph(spec);
    ParamReport r;
    for (const auto& n : spec.nodes) {
        NodeCount c;
        c.name = n.name;
        switch (n.op) {
            case OpKind::Conv: {
                const auto& in = shapes.shape_of(n.inputs[0]);
                c.weights = static_cast<size_t>(n.filters) * in[0] * n.kernel * n.kernel;
                c.biases = static_cast<size_t>(n.filters);
                break;
            }
            case OpKind::Norm: {
                const auto& in = shapes.shape_of(n.inputs[0]);
                c.weights = static_cast<size_t>(in[0]);  // scale
                c.biases = static_cast<size_t>(in[0]);   // shift
                break;
            }
            case OpKind::Affine:
            case OpKind::Head: {
                const auto& in = shapes.shape_of(n.inputs[0]);
                c.weights = static_cast<size_t>(n.features) * flat_features(in);
                c.biases = static_cast<size_t>(n.features);
                break;
            }
            default:
                continue;
        }
        r.total += c.weights + c.biases;
        if (n.op != OpKind::Head) r.core_total += c.weights + c.biases;
        r.nodes.push_back(std::move(c));
    }
    return r;
}

ModelParams init_params(const GraphSpec& spec, uint64_t seed) {
    const ShapeReport shapes = validate_graph(spec);
    ModelParams params;
    Rng rng(mix_seed(seed, 0x696e6974));  // "init"
    auto uniform_tensor = [&](std::vector<int> shape, float bound) {
        Tensor t = Tensor::zeros(std::move(shape));
        for (float& x : t.v) x = rng.uniform_f(-bound, bound);
        return t;
    };
    for (const auto& n : spec.nodes) {
        switch (n.op) {
            case OpKind::Conv: {
                const auto& in = shapes.shape_of(n.inputs[0]);
                const float bound =
                    std::sqrt(2.0f / static_cast<float>(in[0] * n.kernel * n.kernel));
                params[n.name + "/weights"] =
                    uniform_tensor({n.filters, in[0], n.kernel, n.kernel}, bound);
                params[n.name + "/bias"] = Tensor::zeros({n.filters});
                break;
            }
            case OpKind::Norm: {
                const auto& in = shapes.shape_of(n.inputs[0]);
                params[n.name + "/scale"] = Tensor::full({in[0]}, 1.0f);
                params[n.name + "/shift"] = Tensor::zeros({in[0]});
                params[n.name + "/running_mean"] = Tensor::zeros({in[0]});
                params[n.name + "/running_var"] = Tensor::full({in[0]}, 1.0f);
                break;
            }
            case OpKind::Affine:
            case OpKind::Head: {
                const int in_features =
                    static_cast<int>(flat_features(shapes.shape_of(n.inputs[0])));
                const float bound = std::sqrt(2.0f / static_cast<float>(in_features));
                params[n.name + "/weights"] = uniform_tensor({n.features, in_features}, bound);
                params[n.name + "/bias"] = Tensor::zeros({n.features});
                break;
            }
            default:
                break;
        }
    }
    return params;
}

namespace {

const Tensor& param(const ModelParams& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) throw GraphError("missing parameter tensor \"" + key + "\"");
    return it->second;
}

Tensor flatten_batch(const Tensor& t) {
    const int n = t.dim(0);
    const int f = static_cast<int>(t.numel() / static_cast<size_t>(n));
    Tensor out = t;
    out.shape = {n, f};
    return out;
}

Tensor reshape_like(const Tensor& t, const std::vector<int>& shape) {
    Tensor out = t;
    if (shape_numel(shape) != t.numel())
        throw ShapeError("cannot reshape " + shape_str(t.shape) + " to " + shape_str(shape));
    out.shape = shape;
    return out;
}

struct ChannelView {
    int channels = 0;
    size_t spatial = 0;  // H * W
    int batch = 0;
};

ChannelView channel_view(const Tensor& t) {
    if (t.shape.size() != 4)
        throw ShapeError("normalization expects [N, C, H, W], got " + shape_str(t.shape));
    return {t.dim(1), static_cast<size_t>(t.dim(2)) * t.dim(3), t.dim(0)};
}

}  // namespace

NormForwardResult norm_forward(const Tensor& input, const Tensor& scale, const Tensor& shift,
                               float eps) {
    if (eps <= 0.0f) throw ValueError("norm eps must be positive, got " + std::to_string(eps));
    const ChannelView v = channel_view(input);
    if (scale.numel() != static_cast<size_t>(v.channels) ||
        shift.numel() != static_cast<size_t>(v.channels))
        throw ShapeError("norm scale/shift must have one entry per channel");

    NormForwardResult r;
    r.output = Tensor::zeros(input.shape);
    r.mean.resize(v.channels);
    r.var.resize(v.channels);
    const size_t stride = static_cast<size_t>(v.channels) * v.spatial;
    const double count = static_cast<double>(v.batch) * static_cast<double>(v.spatial);

    for (int c = 0; c < v.channels; ++c) {
        double sum = 0.0;
        for (int n = 0; n < v.batch; ++n) {
            const float* x = input.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            for (size_t i = 0; i < v.spatial; ++i) sum += static_cast<double>(x[i]);
        }
        const double mean = sum / count;
        double sq = 0.0;
        for (int n = 0; n < v.batch; ++n) {
            const float* x = input.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            for (size_t i = 0; i < v.spatial; ++i) {
                const double d = static_cast<double>(x[i]) - mean;
                sq += d * d;
            }
        }
        const double var = sq / count;
        const double istd = 1.0 / std::sqrt(var + static_cast<double>(eps));
        const double g = scale.v[c], b = shift.v[c];
        for (int n = 0; n < v.batch; ++n) {
            const float* x = input.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            float* y = r.output.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            for (size_t i = 0; i < v.spatial; ++i)
                y[i] = static_cast<float>(g * (static_cast<double>(x[i]) - mean) * istd + b);
        }
        r.mean[c] = static_cast<float>(mean);
        r.var[c] = static_cast<float>(var);
    }
    return r;
}

Tensor norm_forward_eval(const Tensor& input, const Tensor& scale, const Tensor& shift,
                         float eps, const Tensor& running_mean, const Tensor& running_var) {
    if (eps <= 0.0f) throw ValueError("norm eps must be positive, got " + std::to_string(eps));
    const ChannelView v = channel_view(input);
    Tensor out = Tensor::zeros(input.shape);
    const size_t stride = static_cast<size_t>(v.channels) * v.spatial;
    for (int c = 0; c < v.channels; ++c) {
        const double mean = running_mean.v[c];
        const double istd = 1.0 / std::sqrt(static_cast<double>(running_var.v[c]) +
                                            static_cast<double>(eps));
        const double g = scale.v[c], b = shift.v[c];
        for (int n = 0; n < v.batch; ++n) {
            const float* x = input.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            float* y = out.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            for (size_t i = 0; i < v.spatial; ++i)
                y[i] = static_cast<float>(g * (static_cast<double>(x[i]) - mean) * istd + b);
        }
    }
    return out;
}

namespace {

struct NormGrads {
    Tensor input;
    Tensor scale;
    Tensor shift;
};

NormGrads norm_backward(const Tensor& input, const Tensor& scale, const NormStats& stats,
                        float eps, const Tensor& grad_out) {
    const ChannelView v = channel_view(input);
    NormGrads g;
    g.input = Tensor::zeros(input.shape);
    g.scale = Tensor::zeros({v.channels});
    g.shift = Tensor::zeros({v.channels});
    const size_t stride = static_cast<size_t>(v.channels) * v.spatial;
    const double count = static_cast<double>(v.batch) * static_cast<double>(v.spatial);

    for (int c = 0; c < v.channels; ++c) {
        const double mean = stats.mean[c];
        const double var = stats.var[c];
        const double istd = 1.0 / std::sqrt(var + static_cast<double>(eps));
        const double gamma = scale.v[c];

        double dshift = 0.0, dscale = 0.0, dvar = 0.0, dmean = 0.0;
        for (int n = 0; n < v.batch; ++n) {
            const float* x = input.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            const float* dy = grad_out.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            for (size_t i = 0; i < v.spatial; ++i) {
                const double xc = static_cast<double>(x[i]) - mean;
                const double d = static_cast<double>(dy[i]);
                dshift += d;
                dscale += d * xc * istd;
                dvar += d * gamma * xc;
                dmean += d * gamma;
            }
        }
        dvar *= -0.5 * istd * istd * istd;
        dmean *= -istd;

        for (int n = 0; n < v.batch; ++n) {
            const float* x = input.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            const float* dy = grad_out.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            float* dx = g.input.data() + n * stride + static_cast<size_t>(c) * v.spatial;
            for (size_t i = 0; i < v.spatial; ++i) {
                const double xc = static_cast<double>(x[i]) - mean;
                dx[i] = static_cast<float>(static_cast<double>(dy[i]) * gamma * istd +
                                           dvar * 2.0 * xc / count + dmean / count);
            }
        }
        g.scale.v[c] = static_cast<float>(dscale);
        g.shift.v[c] = static_cast<float>(dshift);
    }
    return g;
}

}  // namespace

DropoutResult dropout_forward(const Tensor& input, float rate, Mode mode, uint64_t seed) {
    if (rate < 0.0f || rate >= 1.0f)
        throw ValueError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    DropoutResult r;
    if (mode == Mode::Eval || rate == 0.0f) {
        r.output = input;
        r.mask = Tensor::full(input.shape, 1.0f);
        return r;
    }
    const float keep = 1.0f - rate;
    const float inv_keep = 1.0f / keep;
    Rng rng(mix_seed(seed, 0x64726f70));  // "drop"
    r.mask = Tensor::zeros(input.shape);
    r.output = Tensor::zeros(input.shape);
    for (size_t i = 0; i < input.numel(); ++i) {
        const float m = rng.uniform01() < static_cast<double>(keep) ? inv_keep : 0.0f;
        r.mask.v[i] = m;
        r.output.v[i] = input.v[i] * m;
    }
    return r;
}

ForwardResult forward(const GraphSpec& spec, const ModelParams& params, const Tensor& batch,
                      Mode mode, uint64_t seed) {
    validate_graph(spec);
    const NodeSpec& in = spec.input_node();
    const std::vector<int> want{in.channels, in.height, in.width};
    if (batch.shape.size() != 4 || batch.dim(1) != in.channels || batch.dim(2) != in.height ||
        batch.dim(3) != in.width)
        throw ShapeError("batch shape " + shape_str(batch.shape) +
                         " does not match the graph input [N, " + std::to_string(in.channels) +
                         ", " + std::to_string(in.height) + ", " + std::to_string(in.width) + "]");

    ForwardResult r;
    r.trace.mode = mode;
    auto& outs = r.trace.outputs;

    for (size_t idx = 0; idx < spec.nodes.size(); ++idx) {
        const NodeSpec& n = spec.nodes[idx];
        switch (n.op) {
            case OpKind::Input:
                outs[n.name] = batch;
                break;
            case OpKind::Conv: {
                ConvParams p;
                p.weights = param(params, n.name + "/weights");
                p.bias = param(params, n.name + "/bias");
                p.stride = n.stride;
                p.pad = n.pad;
                outs[n.name] = conv2d_forward(outs.at(n.inputs[0]), p);
                break;
            }
            case OpKind::Relu:
                outs[n.name] = relu(outs.at(n.inputs[0]));
                break;
            case OpKind::Add:
                outs[n.name] = elementwise_add(outs.at(n.inputs[0]), outs.at(n.inputs[1]));
                break;
            case OpKind::Concat: {
                std::vector<Tensor> parts;
                parts.reserve(n.inputs.size());
                for (const auto& ref : n.inputs) parts.push_back(outs.at(ref));
                outs[n.name] = channel_concat(parts);
                break;
            }
            case OpKind::Norm: {
                const Tensor& x = outs.at(n.inputs[0]);
                const Tensor& scale = param(params, n.name + "/scale");
                const Tensor& shift = param(params, n.name + "/shift");
                if (mode == Mode::Train) {
                    NormForwardResult nr = norm_forward(x, scale, shift, n.eps);
                    outs[n.name] = std::move(nr.output);
                    r.trace.norm_stats[n.name] = {std::move(nr.mean), std::move(nr.var)};
                } else {
                    outs[n.name] = norm_forward_eval(x, scale, shift, n.eps,
                                                     param(params, n.name + "/running_mean"),
                                                     param(params, n.name + "/running_var"));
                }
                break;
            }
            case OpKind::Dropout: {
                DropoutResult dr = dropout_forward(outs.at(n.inputs[0]), n.drop_rate, mode,
                                                   mix_seed(seed, idx));
                outs[n.name] = std::move(dr.output);
                if (mode == Mode::Train) r.trace.dropout_masks[n.name] = std::move(dr.mask);
                break;
            }
            case OpKind::Affine:
            case OpKind::Head: {
                AffineParams p;
                p.weights = param(params, n.name + "/weights");
                p.bias = param(params, n.name + "/bias");
                outs[n.name] = affine_forward(flatten_batch(outs.at(n.inputs[0])), p);
                break;
            }
        }
    }
    r.logits = outs.at(spec.head_node().name);
    return r;
}

BackwardResult backward(const GraphSpec& spec, const ModelParams& params,
                        const ForwardTrace& trace, const Tensor& grad_logits) {
    if (trace.mode != Mode::Train)
        throw ValueError(
            "backward needs a train-mode trace; eval traces carry no dropout masks or "
            "batch statistics");

    BackwardResult r;
    auto& grads = r.activation_grads;
    const std::string head_name = spec.head_node().name;
    if (!trace.outputs.count(head_name))
        throw GraphError("trace does not cover node \"" + head_name + "\"");
    if (grad_logits.shape != trace.outputs.at(head_name).shape)
        throw ShapeError("grad_logits shape " + shape_str(grad_logits.shape) +
                         " does not match the head output " +
                         shape_str(trace.outputs.at(head_name).shape));
    grads[head_name] = grad_logits;

    auto accumulate = [&](const std::string& name, Tensor&& g) {
        auto it = grads.find(name);
        if (it == grads.end())
            grads.emplace(name, std::move(g));
        else
            it->second = elementwise_add(it->second, g);
    };

    for (auto it = spec.nodes.rbegin(); it != spec.nodes.rend(); ++it) {
        const NodeSpec& n = *it;
        if (n.op == OpKind::Input) continue;
        auto git = grads.find(n.name);
        if (git == grads.end()) continue;  // node feeds nothing on the loss path
        const Tensor& g = git->second;

        switch (n.op) {
            case OpKind::Conv: {
                ConvParams p;
                p.weights = param(params, n.name + "/weights");
                p.bias = param(params, n.name + "/bias");
                p.stride = n.stride;
                p.pad = n.pad;
                ConvGrads cg = conv2d_backward(trace.outputs.at(n.inputs[0]), p, g);
                r.param_grads[n.name + "/weights"] = std::move(cg.weights);
                r.param_grads[n.name + "/bias"] = std::move(cg.bias);
                accumulate(n.inputs[0], std::move(cg.input));
                break;
            }
            case OpKind::Relu:
                accumulate(n.inputs[0], relu_backward(trace.outputs.at(n.inputs[0]), g));
                break;
            case OpKind::Add: {
                // Accretion: the upstream gradient reaches both parents unchanged.
                Tensor copy_a = g;
                Tensor copy_b = g;
                accumulate(n.inputs[0], std::move(copy_a));
                accumulate(n.inputs[1], std::move(copy_b));
                break;
            }
            case OpKind::Concat: {
                int c0 = 0;
                for (const auto& ref : n.inputs) {
                    const int c = trace.outputs.at(ref).dim(1);
                    accumulate(ref, channel_slice(g, c0, c0 + c));
                    c0 += c;
                }
                break;
            }
            case OpKind::Norm: {
                auto sit = trace.norm_stats.find(n.name);
                if (sit == trace.norm_stats.end())
                    throw ValueError("trace has no batch statistics for norm node \"" + n.name +
                                     "\"");
                NormGrads ng = norm_backward(trace.outputs.at(n.inputs[0]),
                                             param(params, n.name + "/scale"), sit->second,
                                             n.eps, g);
                r.param_grads[n.name + "/scale"] = std::move(ng.scale);
                r.param_grads[n.name + "/shift"] = std::move(ng.shift);
                accumulate(n.inputs[0], std::move(ng.input));
                break;
            }
            case OpKind::Dropout: {
                auto mit = trace.dropout_masks.find(n.name);
                if (mit == trace.dropout_masks.end())
                    throw ValueError("trace has no mask for dropout node \"" + n.name + "\"");
                Tensor gx = g;
                for (size_t i = 0; i < gx.numel(); ++i) gx.v[i] *= mit->second.v[i];
                accumulate(n.inputs[0], std::move(gx));
                break;
            }
            case OpKind::Affine:
            case OpKind::Head: {
                AffineParams p;
                p.weights = param(params, n.name + "/weights");
                p.bias = param(params, n.name + "/bias");
                const Tensor& x = trace.outputs.at(n.inputs[0]);
                AffineGrads ag = affine_backward(flatten_batch(x), p, g);
                r.param_grads[n.name + "/weights"] = std::move(ag.weights);
                r.param_grads[n.name + "/bias"] = std::move(ag.bias);
                accumulate(n.inputs[0], reshape_like(ag.input, x.shape));
                break;
            }
            case OpKind::Input:
                break;
        }
    }
    return r;
}

void update_running_stats(ModelParams& params, const GraphSpec& spec,
                          const ForwardTrace& trace, float decay) {
    for (const auto& n : spec.nodes) {
        if (n.op != OpKind::Norm) continue;
        auto sit = trace.norm_stats.find(n.name);
        if (sit == trace.norm_stats.end()) continue;
        Tensor& rm = params.at(n.name + "/running_mean");
        Tensor& rv = params.at(n.name + "/running_var");
        for (size_t c = 0; c < rm.numel(); ++c) {
            rm.v[c] = decay * rm.v[c] + (1.0f - decay) * sit->second.mean[c];
            rv.v[c] = decay * rv.v[c] + (1.0f - decay) * sit->second.var[c];
        }
    }
}

namespace {

json node_to_json(const NodeSpec& n) {
    json j;
    j["name"] = n.name;
    j["op"] = op_kind_name(n.op);
    if (!n.inputs.empty()) j["inputs"] = n.inputs;
    switch (n.op) {
        case OpKind::Input:
            j["channels"] = n.channels;
            j["height"] = n.height;
            j["width"] = n.width;
            break;
        case OpKind::Conv:
            j["filters"] = n.filters;
            j["kernel"] = n.kernel;
            j["stride"] = n.stride;
            j["pad"] = n.pad;
            break;
        case OpKind::Norm:
            j["eps"] = n.eps;
            break;
        case OpKind::Dropout:
            j["rate"] = n.drop_rate;
            break;
        case OpKind::Affine:
        case OpKind::Head:
            j["features"] = n.features;
            break;
        default:
            break;
    }
    return j;
}

NodeSpec node_from_json(const json& j) {
    NodeSpec n;
    if (!j.contains("name") || !j.contains("op"))
        throw GraphError("every graph node needs \"name\" and \"op\" fields");
    n.name = j.at("name").get<std::string>();
    n.op = op_kind_from_name(j.at("op").get<std::string>());
    if (j.contains("inputs")) n.inputs = j.at("inputs").get<std::vector<std::string>>();
    auto want = [&](const char* key) {
        if (!j.contains(key))
            throw GraphError("node \"" + n.name + "\" is missing the \"" + key + "\" field");
        return j.at(key);
    };
    switch (n.op) {
        case OpKind::Input:
            n.channels = want("channels").get<int>();
            n.height = want("height").get<int>();
            n.width = want("width").get<int>();
            break;
        case OpKind::Conv:
            n.filters = want("filters").get<int>();
            n.kernel = want("kernel").get<int>();
            n.stride = want("stride").get<int>();
            n.pad = want("pad").get<int>();
            break;
        case OpKind::Norm:
            if (j.contains("eps")) n.eps = j.at("eps").get<float>();
            break;
        case OpKind::Dropout:
            n.drop_rate = want("rate").get<float>();
            break;
        case OpKind::Affine:
        case OpKind::Head:
            n.features = want("features").get<int>();
            break;
        default:
            break;
    }
    return n;
}

json graph_to_json(const GraphSpec& spec) {
    json j;
    j["nodes"] = json::array();
    for (const auto& n : spec.nodes) j["nodes"].push_back(node_to_json(n));
    return j;
}

}  // namespace

std::string serialize_graph(const GraphSpec& spec) { return graph_to_json(spec).dump(2) + "\n"; }

GraphSpec parse_graph(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw GraphError(std::string("cannot parse graph config: ") + e.what());
    }
    if (!j.contains("nodes") || !j.at("nodes").is_array())
        throw GraphError("graph config needs a top-level \"nodes\" array");
    GraphSpec spec;
    for (const auto& nj : j.at("nodes")) spec.nodes.push_back(node_from_json(nj));
    return spec;
}

GraphSpec load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_graph(ss.str());
}

void save_graph_file(const GraphSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write graph config " + path);
    out << serialize_graph(spec);
}

uint64_t graph_digest(const GraphSpec& spec) {
    const std::string canonical = graph_to_json(spec).dump();
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : canonical) {
        h ^= static_cast<uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace learnet
