#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "learnet/tensor.hpp"

namespace learnet {

enum class OpKind { Input, Conv, Relu, Add, Concat, Norm, Dropout, Affine, Head };

std::string op_kind_name(OpKind op);
OpKind op_kind_from_name(const std::string& name);

// One node of the declarative layer graph. Wiring is data: alternate
// topologies are expressed in config files without code changes.
struct NodeSpec {
    std::string name;
    OpKind op = OpKind::Input;
    std::vector<std::string> inputs;

    // conv
    int filters = 0;
    int kernel = 0;
    int stride = 1;
    int pad = 0;
    // affine / head
    int features = 0;
    // dropout
    float drop_rate = 0.0f;
    // norm
    float eps = 1e-5f;
    // input
    int channels = 0;
    int height = 0;
    int width = 0;
};

struct GraphSpec {
    std::vector<NodeSpec> nodes;

    const NodeSpec* find(const std::string& name) const;
    const NodeSpec& input_node() const;
    const NodeSpec& head_node() const;
};

// Named tensors of a model, keyed "<node>/<role>" with roles weights, bias,
// scale, shift, running_mean, running_var. Gradient maps use the same keys
// (learnable roles only).
using ModelParams = std::map<std::string, Tensor>;

enum class Mode { Train, Eval };

struct NormStats {
    std::vector<float> mean;
    std::vector<float> var;
};

// Everything backward needs from one forward pass.
struct ForwardTrace {
    Mode mode = Mode::Eval;
    std::map<std::string, Tensor> outputs;
    std::map<std::string, Tensor> dropout_masks;
    std::map<std::string, NormStats> norm_stats;
};

struct ForwardResult {
    Tensor logits;
    ForwardTrace trace;
};

struct BackwardResult {
    ModelParams param_grads;
    std::map<std::string, Tensor> activation_grads;
};

struct NodeShape {
    std::string name;
    OpKind op = OpKind::Input;
    std::vector<int> shape;  // per-sample shape, batch dim excluded
};

struct ShapeReport {
    std::vector<NodeShape> shapes;
    int conv_layers = 0;

    const std::vector<int>& shape_of(const std::string& name) const;
};

struct NodeCount {
    std::string name;
    size_t weights = 0;
    size_t biases = 0;
};

struct ParamReport {
    std::vector<NodeCount> nodes;
    size_t total = 0;       // every parameter, classifier head included
    size_t core_total = 0;  // architecture only, head excluded
};

enum class LearnetVariant {
    Default,  // same-style padding everywhere, 4x4x256 before the first affine
    TableV    // valid padding at the last conv, 3x3x256 before the first affine
};

// The stock four-pathway topology: a 3x3/16 stem at stride 2, four lateral
// conv ladders (1x1/16, 3x3/32, 5x5/64, all stride 2) with accretion
// cross-links feeding pathways 3 and 4, channel concat, normalization, a
// 3x3/256 conv, a 256-feature affine, dropout 0.5 and the classifier head.
GraphSpec build_learnet(int num_classes, LearnetVariant variant = LearnetVariant::Default);

// Structural and shape validation: exactly one input node, backward
// references only, at most one head and nothing may consume it, consistent
// shapes at every node. Returns per-node output shapes.
ShapeReport validate_graph(const GraphSpec& spec);

ParamReport param_count(const GraphSpec& spec);

// Seeded deterministic initialization: weights uniform in
// [-sqrt(2/fan_in), sqrt(2/fan_in)], biases and norm shifts 0, norm scales 1.
ModelParams init_params(const GraphSpec& spec, uint64_t seed);

ForwardResult forward(const GraphSpec& spec, const ModelParams& params,
                      const Tensor& batch, Mode mode, uint64_t seed);

// Walks the trace in reverse. Requires a train-mode trace (dropout masks and
// batch statistics are needed); accretion nodes copy the incoming gradient to
// both parents, concat splits it by channel range.
BackwardResult backward(const GraphSpec& spec, const ModelParams& params,
                        const ForwardTrace& trace, const Tensor& grad_logits);

struct NormForwardResult {
    Tensor output;
    std::vector<float> mean;  // per-channel batch mean
    std::vector<float> var;   // per-channel mean squared deviation
};

// Train-mode normalization over [N, C, H, W]: per channel, subtract the batch
// mean, divide by sqrt(var + eps), then scale and shift.
NormForwardResult norm_forward(const Tensor& input, const Tensor& scale,
                               const Tensor& shift, float eps);
// Eval-mode normalization using running statistics.
Tensor norm_forward_eval(const Tensor& input, const Tensor& scale, const Tensor& shift,
                         float eps, const Tensor& running_mean, const Tensor& running_var);

struct DropoutResult {
    Tensor output;
    Tensor mask;  // per-element multiplier: 0 or 1/(1 - rate)
};

// Inverted dropout; eval mode is the identity. The mask depends only on the
// seed and the shape, never on the values.
DropoutResult dropout_forward(const Tensor& input, float rate, Mode mode, uint64_t seed);

// Fold one batch's statistics into the running averages (decay 0.9).
void update_running_stats(ModelParams& params, const GraphSpec& spec,
                          const ForwardTrace& trace, float decay = 0.9f);

// Config file serialization (JSON; one object per node).
std::string serialize_graph(const GraphSpec& spec);
GraphSpec parse_graph(const std::string& text);
GraphSpec load_graph_file(const std::string& path);
void save_graph_file(const GraphSpec& spec, const std::string& path);

// FNV-1a digest of the canonical (minified, key-sorted) config text; ties
// checkpoints to the graph they were trained with.
uint64_t graph_digest(const GraphSpec& spec);

}  // namespace learnet
