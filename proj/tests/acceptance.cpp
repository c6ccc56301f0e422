// Acceptance suite: one function per criterion, a pass/fail line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "learnet/checkpoint.hpp"
#include "learnet/cli.hpp"
#include "learnet/dataset.hpp"
#include "learnet/train.hpp"
#include "netcheck.hpp"
#include "oracles.hpp"

using namespace learnet;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

struct Checker {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

fs::path work_dir() {
    auto d = fs::temp_directory_path() / "learnet_acceptance";
    fs::create_directories(d);
    return d;
}

const std::string kConfigDir = LEARNET_CONFIG_DIR;

// ---------------------------------------------------------------- criterion 1

void parameter_audit(Checker& c) {
    GraphSpec def = load_graph_file(kConfigDir + "/default.graph");
    GraphSpec tv = load_graph_file(kConfigDir + "/tablev.graph");
    c.require(graph_digest(def) == graph_digest(build_learnet(3)),
              "checked-in default config drifted from the builder");
    c.require(graph_digest(tv) == graph_digest(build_learnet(3, LearnetVariant::TableV)),
              "checked-in table-v config drifted from the builder");

    ParamReport r = param_count(def);
    auto count_of = [&](const ParamReport& rep, const std::string& name) -> long {
        for (const auto& n : rep.nodes)
            if (n.name == name) return static_cast<long>(n.weights + n.biases);
        return -1;
    };
    c.require(count_of(r, "conv1") == 448, "conv1 parameter count");
    for (int p = 1; p <= 4; ++p) {
        c.require(count_of(r, "conv2_" + std::to_string(p)) == 272, "conv2 parameter count");
        c.require(count_of(r, "conv3_" + std::to_string(p)) == 4640, "conv3 parameter count");
        c.require(count_of(r, "conv4_" + std::to_string(p)) == 51264, "conv4 parameter count");
    }
    c.require(count_of(r, "norm") == 512, "norm parameter count");
    c.require(count_of(r, "conv5") == 590080, "conv5 parameter count");

    ParamReport rt = param_count(tv);
    c.require(count_of(rt, "fc") == 590080, "table-v fc parameter count");
    c.require(rt.core_total == 1405824,
              "table-v core total is " + std::to_string(rt.core_total) + ", want 1405824");
}

// ---------------------------------------------------------------- criterion 2

void shape_walk(Checker& c) {
    GraphSpec g = build_learnet(8);
    ModelParams params = init_params(g, 1);
    Tensor batch = Tensor::zeros({1, 3, 112, 112});
    ForwardResult r = forward(g, params, batch, Mode::Eval, 0);

    auto shape_of = [&](const std::string& node) { return r.trace.outputs.at(node).shape; };
    auto want = [&](const std::string& node, std::vector<int> s) {
        c.require(shape_of(node) == s, "node " + node + " produced " +
                                           shape_str(shape_of(node)) + ", want " + shape_str(s));
    };
    want("conv1", {1, 16, 56, 56});
    for (int p = 1; p <= 4; ++p) {
        want("conv2_" + std::to_string(p), {1, 16, 28, 28});
        want("conv3_" + std::to_string(p), {1, 32, 14, 14});
        want("conv4_" + std::to_string(p), {1, 64, 7, 7});
    }
    want("add1_1", {1, 16, 28, 28});
    want("add2_1", {1, 32, 14, 14});
    want("concat", {1, 256, 7, 7});
    want("norm", {1, 256, 7, 7});
    want("conv5", {1, 256, 4, 4});
    want("fc", {1, 256});
    want("head", {1, 8});

    GraphSpec tv = build_learnet(8, LearnetVariant::TableV);
    ForwardResult rt = forward(tv, init_params(tv, 1), batch, Mode::Eval, 0);
    c.require(rt.trace.outputs.at("conv5").shape == (std::vector<int>{1, 256, 3, 3}),
              "table-v conv5 output shape");
}

// ---------------------------------------------------------------- criterion 3

void gradient_suite(Checker& c) {
    Rng seeder(20260810);

    // Convolution, 20 random instances.
    for (int it = 0; it < 20; ++it) {
        Rng rng(seeder.next_u64());
        const int C = 1 + static_cast<int>(rng.below(3));
        const int O = 1 + static_cast<int>(rng.below(4));
        const int k = std::vector<int>{1, 3, 5}[rng.below(3)];
        const int H = k + 2 + static_cast<int>(rng.below(4));
        Tensor in = oracle::random_tensor({2, C, H, H}, rng);
        ConvParams p;
        p.weights = oracle::random_tensor({O, C, k, k}, rng);
        p.bias = oracle::random_tensor({O}, rng);
        p.stride = 1 + static_cast<int>(rng.below(2));
        p.pad = static_cast<int>(rng.below(2));
        Tensor probe = oracle::random_tensor(conv2d_forward(in, p).shape, rng);
        auto loss = [&]() {
            Tensor out = conv2d_forward(in, p);
            double s = 0.0;
            for (size_t i = 0; i < out.v.size(); ++i)
                s += static_cast<double>(out.v[i]) * probe.v[i];
            return s;
        };
        ConvGrads g = conv2d_backward(in, p, probe);
        c.require(oracle::compare_grads(g.input, oracle::finite_diff(loss, in)).vector_rel_err <=
                      1e-2,
                  "conv grad_input, instance " + std::to_string(it));
        c.require(oracle::compare_grads(g.weights, oracle::finite_diff(loss, p.weights))
                          .vector_rel_err <= 1e-2,
                  "conv grad_weights, instance " + std::to_string(it));
        c.require(oracle::compare_grads(g.bias, oracle::finite_diff(loss, p.bias))
                          .vector_rel_err <= 1e-2,
                  "conv grad_bias, instance " + std::to_string(it));
    }

    // ReLU away from the kink, 20 instances.
    for (int it = 0; it < 20; ++it) {
        Rng rng(seeder.next_u64());
        Tensor in = oracle::random_tensor_away_from_zero({4, 9}, rng, 0.05f);
        Tensor probe = oracle::random_tensor({4, 9}, rng);
        auto loss = [&]() {
            Tensor out = relu(in);
            double s = 0.0;
            for (size_t i = 0; i < out.v.size(); ++i)
                s += static_cast<double>(out.v[i]) * probe.v[i];
            return s;
        };
        c.require(oracle::compare_grads(relu_backward(in, probe), oracle::finite_diff(loss, in))
                          .vector_rel_err <= 1e-2,
                  "relu gradient, instance " + std::to_string(it));
    }

    // Affine, 20 instances.
    for (int it = 0; it < 20; ++it) {
        Rng rng(seeder.next_u64());
        const int N = 1 + static_cast<int>(rng.below(4));
        const int I = 1 + static_cast<int>(rng.below(8));
        const int O = 1 + static_cast<int>(rng.below(6));
        Tensor in = oracle::random_tensor({N, I}, rng);
        AffineParams p;
        p.weights = oracle::random_tensor({O, I}, rng);
        p.bias = oracle::random_tensor({O}, rng);
        Tensor probe = oracle::random_tensor({N, O}, rng);
        auto loss = [&]() {
            Tensor out = affine_forward(in, p);
            double s = 0.0;
            for (size_t i = 0; i < out.v.size(); ++i)
                s += static_cast<double>(out.v[i]) * probe.v[i];
            return s;
        };
        AffineGrads g = affine_backward(in, p, probe);
        c.require(oracle::compare_grads(g.input, oracle::finite_diff(loss, in)).vector_rel_err <=
                      1e-2,
                  "affine grad_input, instance " + std::to_string(it));
        c.require(oracle::compare_grads(g.weights, oracle::finite_diff(loss, p.weights))
                          .vector_rel_err <= 1e-2,
                  "affine grad_weights, instance " + std::to_string(it));
        c.require(oracle::compare_grads(g.bias, oracle::finite_diff(loss, p.bias))
                          .vector_rel_err <= 1e-2,
                  "affine grad_bias, instance " + std::to_string(it));
    }

    // Softmax cross entropy, 20 instances.
    for (int it = 0; it < 20; ++it) {
        Rng rng(seeder.next_u64());
        const int N = 1 + static_cast<int>(rng.below(5));
        const int C = 2 + static_cast<int>(rng.below(7));
        Tensor logits = oracle::random_tensor({N, C}, rng, -2.0f, 2.0f);
        std::vector<int> labels;
        for (int n = 0; n < N; ++n) labels.push_back(static_cast<int>(rng.below(C)));
        auto loss = [&]() { return softmax_cross_entropy(logits, labels).loss; };
        Tensor analytic = softmax_cross_entropy(logits, labels).grad_logits;
        c.require(oracle::compare_grads(analytic, oracle::finite_diff(loss, logits))
                          .vector_rel_err <= 1e-2,
                  "cross-entropy gradient, instance " + std::to_string(it));
    }

    // Normalization through a one-node graph, 20 instances.
    for (int it = 0; it < 20; ++it) {
        Rng rng(seeder.next_u64());
        GraphSpec g;
        NodeSpec in;
        in.name = "input";
        in.op = OpKind::Input;
        in.channels = 2;
        in.height = 4;
        in.width = 4;
        NodeSpec nm;
        nm.name = "norm";
        nm.op = OpKind::Norm;
        nm.inputs = {"input"};
        nm.eps = 1e-2f;
        NodeSpec hd;
        hd.name = "head";
        hd.op = OpKind::Head;
        hd.inputs = {"norm"};
        hd.features = 2;
        g.nodes = {in, nm, hd};
        ModelParams params = init_params(g, rng.next_u64());
        Tensor batch = oracle::random_tensor({3, 2, 4, 4}, rng, -2.0f, 2.0f);
        std::vector<int> labels{0, 1, 0};
        auto loss = [&]() {
            return softmax_cross_entropy(forward(g, params, batch, Mode::Train, 0).logits,
                                         labels)
                .loss;
        };
        ForwardResult fr = forward(g, params, batch, Mode::Train, 0);
        auto lr = softmax_cross_entropy(fr.logits, labels);
        BackwardResult b = backward(g, params, fr.trace, lr.grad_logits);
        for (const char* key : {"norm/scale", "norm/shift"})
            c.require(oracle::compare_grads(b.param_grads.at(key),
                                            oracle::finite_diff(loss, params.at(key)))
                              .vector_rel_err <= 1e-2,
                      std::string(key) + " gradient, instance " + std::to_string(it));
    }

    // Whole shrunken network, 20 instances, kink-excluded vector comparison.
    GraphSpec g = netcheck::shrunken_learnet(3);
    for (int it = 0; it < 20; ++it) {
        auto r = netcheck::check_whole_net(g, 500 + it);
        c.require(r.vector_rel_err <= 2e-2, "whole-net instance " + std::to_string(it) +
                                                " vector error " +
                                                std::to_string(r.vector_rel_err));
        c.require(r.excluded_fraction <= 0.05,
                  "whole-net instance " + std::to_string(it) + " excluded fraction " +
                      std::to_string(r.excluded_fraction));
    }
}

// ---------------------------------------------------------------- criterion 4

void rankpool_oracle(Checker& c) {
    FeatureSequence ramp;
    ramp.dim = 1;
    ramp.frames = {{0.0f}, {1.0f}, {2.0f}};

    RankPoolConfig cfg;
    cfg.mode = PoolMode::Exact;
    DynamicMap m = solve_exact(ramp, cfg);

    // Independent oracle: dense grid over [-5, 5] step 1e-4 on a test-local
    // evaluation of the objective.
    auto objective = [](double d) {
        const double phi[3] = {0.0, 0.5, 1.0};
        double hinge = 0.0;
        for (int t = 0; t < 3; ++t)
            for (int l = t + 1; l < 3; ++l)
                hinge += std::max(0.0, 1.0 - d * phi[l] + d * phi[t]);
        return 0.5 * d * d + hinge / 3.0;
    };
    double best_d = 0.0, best_e = 1e300;
    for (int i = -50000; i <= 50000; ++i) {
        const double d = i * 1e-4;
        const double e = objective(d);
        if (e < best_e) {
            best_e = e;
            best_d = d;
        }
    }
    c.require(std::abs(best_d - 0.6667) <= 2e-4, "grid oracle optimum location");
    c.require(std::abs(m.weights[0] - best_d) <= 1e-3,
              "solver " + std::to_string(m.weights[0]) + " vs oracle " + std::to_string(best_d));
    c.require(m.objective.has_value() && *m.objective <= 1.0, "objective above the value at zero");

    Rng rng(99);
    for (int it = 0; it < 20; ++it) {
        FeatureSequence s;
        s.dim = 1 + rng.below(6);
        const size_t T = 2 + rng.below(5);
        for (size_t t = 0; t < T; ++t) {
            std::vector<float> f(s.dim);
            for (float& x : f) x = rng.uniform_f(0.0f, 1.0f);
            s.frames.push_back(std::move(f));
        }
        DynamicMap r = solve_exact(s, cfg);
        c.require(*r.objective <= 1.0 + 1e-12, "descent from zero on a random sequence");
    }

    FeatureSequence constant;
    constant.dim = 4;
    for (int t = 0; t < 5; ++t) constant.frames.push_back({0.1f, 0.5f, 0.9f, 0.3f});
    DynamicMap mc = solve_exact(constant, cfg);
    double norm = 0.0;
    for (float w : mc.weights) norm += static_cast<double>(w) * w;
    c.require(std::sqrt(norm) <= 1e-6, "constant clip direction norm");
}

// ---------------------------------------------------------------- criterion 5

void approx_coefficients_check(Checker& c) {
    auto a2 = approx_coefficients(2);
    c.require(a2[0] == -0.5 && a2[1] == 0.5, "two-frame coefficients");

    for (size_t T = 1; T <= 100; ++T) {
        auto a = approx_coefficients(T);
        double sum = 0.0;
        for (double x : a) sum += x;
        c.require(std::abs(sum) <= 1e-9, "coefficient sum at T = " + std::to_string(T));
    }

    FeatureSequence constant;
    constant.dim = 6;
    for (int t = 0; t < 7; ++t)
        constant.frames.push_back({0.2f, 0.4f, 0.6f, 0.8f, 1.0f, 0.5f});
    DynamicMap m = solve_approximate(constant);
    for (float w : m.weights) c.require(w == 0.0f, "constant clip raw map not exactly zero");
}

// ---------------------------------------------------------------- criterion 6

void normalization_check(Checker& c) {
    Tensor x({3, 1, 1, 1}, {1.0f, 2.0f, 3.0f});
    NormForwardResult r = norm_forward(x, Tensor::full({1}, 1.0f), Tensor::zeros({1}), 1e-5f);
    c.require(r.mean[0] == 2.0f, "batch mean of [1, 2, 3]");
    c.require(r.var[0] == static_cast<float>(2.0 / 3.0), "batch variance of [1, 2, 3]");

    Tensor constant = Tensor::full({2, 3, 4, 4}, 0.7f);
    Tensor shift({3}, {0.5f, -0.25f, 3.0f});
    NormForwardResult rc =
        norm_forward(constant, Tensor::full({3}, 1.9f), shift, 1e-5f);
    const size_t plane = 16;
    for (int n = 0; n < 2; ++n)
        for (int ch = 0; ch < 3; ++ch)
            for (size_t i = 0; i < plane; ++i)
                c.require(rc.output.v[(static_cast<size_t>(n) * 3 + ch) * plane + i] ==
                              shift.v[ch],
                          "constant channel must map to the shift bit-exactly");
}

// ---------------------------------------------------------------- criterion 7

void synthetic_overfit(Checker& c) {
    const auto t0 = clk::now();
    auto dir = work_dir() / "overfit_corpus";
    fs::remove_all(dir);
    SyntheticConfig scfg;  // 3 classes x 20 clips, 8 frames, 112x112
    scfg.seed = 42;
    Manifest m = generate_synthetic_dataset(dir.string(), scfg);
    c.require(m.entries.size() == 60, "synthetic corpus size");

    std::vector<Image> images = pool_dynamic_images(m, 112, 1);
    std::vector<int> labels;
    for (size_t i = 0; i < m.entries.size(); ++i) labels.push_back(m.label_of(i));
    std::vector<Tensor> tensors;
    for (const auto& img : images) tensors.push_back(image_to_tensor(img));

    GraphSpec g = build_learnet(3);
    TrainConfig cfg;  // lr 1e-3, batch 25, single thread
    cfg.seed = 1;
    cfg.augmentation = false;
    ModelParams params = init_params(g, cfg.seed);

    Tensor batch = Tensor::zeros({static_cast<int>(images.size()), 3, 112, 112});
    for (size_t i = 0; i < tensors.size(); ++i)
        std::copy(tensors[i].v.begin(), tensors[i].v.end(),
                  batch.v.begin() + i * tensors[i].numel());
    const double untrained =
        softmax_cross_entropy(forward(g, params, batch, Mode::Eval, 0).logits, labels).loss;
    c.require(std::abs(untrained - std::log(3.0)) <= 0.1 * std::log(3.0),
              "untrained loss " + std::to_string(untrained) + " vs ln 3");

    int reached = -1;
    train_sgd(g, params, images, labels, {}, {}, cfg, 200,
              [&](int epoch, const EpochStats& s) {
                  // Eval-mode confirmation once the as-trained accuracy looks
                  // high (and periodically regardless).
                  if (s.train_accuracy >= 95.0 || epoch % 10 == 9) {
                      const double acc =
                          evaluate(g, params, tensors, labels, 3, cfg.batch_size).accuracy;
                      if (acc >= 95.0) {
                          reached = epoch;
                          return false;
                      }
                  }
                  return true;
              });
    const double elapsed = std::chrono::duration<double>(clk::now() - t0).count();
    c.require(reached >= 0, "did not reach 95% training accuracy within 200 epochs");
    c.require(elapsed <= 600.0, "took " + std::to_string(elapsed) + " s, budget is 600");
    if (c.ok)
        c.detail = "reached 95% at epoch " + std::to_string(reached) + " in " +
                   std::to_string(elapsed).substr(0, 5) + " s";
}

// ---------------------------------------------------------------- criterion 8

void protocol_check(Checker& c) {
    Rng rng(2024);
    for (int it = 0; it < 100; ++it) {
        const size_t n = 5 + rng.below(250);
        SplitPlan plan;
        plan.repeats = 2;
        plan.seed = rng.next_u64();
        for (const Split& s : split_dataset(n, plan)) {
            const long pool = std::lround(0.8 * static_cast<double>(n));
            c.require(s.test.size() == n - static_cast<size_t>(pool), "test size at n = " +
                                                                          std::to_string(n));
            c.require(s.val.size() ==
                          static_cast<size_t>(std::lround(0.3 * static_cast<double>(pool))),
                      "val size at n = " + std::to_string(n));
            std::set<int> train(s.train.begin(), s.train.end());
            std::set<int> seen = train;
            for (int i : s.val) c.require(seen.insert(i).second, "val overlaps train");
            for (int i : s.test) c.require(seen.insert(i).second, "test overlaps train or val");
            c.require(seen.size() == n, "split does not cover the index set");
            for (int i : s.test) c.require(train.count(i) == 0, "train/test overlap");
        }
    }

    // Fixture predictions: an identity readout over 3-channel pixels.
    GraphSpec g;
    NodeSpec in;
    in.name = "input";
    in.op = OpKind::Input;
    in.channels = 3;
    in.height = 1;
    in.width = 1;
    NodeSpec hd;
    hd.name = "head";
    hd.op = OpKind::Head;
    hd.inputs = {"input"};
    hd.features = 3;
    g.nodes = {in, hd};
    ModelParams p;
    p["head/weights"] = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    p["head/bias"] = Tensor::zeros({3});

    std::vector<Tensor> samples;
    std::vector<int> labels;
    std::vector<int> predictions;
    Rng fix(7);
    int correct = 0;
    for (int i = 0; i < 60; ++i) {
        const int pred = static_cast<int>(fix.below(3));
        const int label = static_cast<int>(fix.below(3));
        Tensor s = Tensor::zeros({3, 1, 1});
        s.v[pred] = 1.0f;
        samples.push_back(s);
        labels.push_back(label);
        predictions.push_back(pred);
        if (pred == label) ++correct;
    }
    Metrics m = evaluate(g, p, samples, labels, 3);
    c.require(std::abs(m.accuracy - 100.0 * correct / 60.0) <= 1e-9,
              "accuracy does not match the hand count");
    for (int pr = 0; pr < 3; ++pr) {
        double row = 0.0;
        int64_t count = 0;
        for (int t = 0; t < 3; ++t) {
            row += m.confusion[pr][t];
            count += m.confusion_counts[pr][t];
        }
        if (count > 0)
            c.require(std::abs(row - 1.0) <= 1e-6, "confusion row does not sum to one");
    }
}

// ---------------------------------------------------------------- criterion 9

void determinism_and_persistence(Checker& c) {
    auto dir = work_dir() / "determinism";
    fs::remove_all(dir);
    SyntheticConfig scfg;
    scfg.clips_per_class = 2;
    scfg.frames = 4;
    scfg.size = 112;
    scfg.seed = 11;
    Manifest m = generate_synthetic_dataset(dir.string(), scfg);
    std::vector<Image> images = pool_dynamic_images(m, 112, 1);
    std::vector<int> labels;
    for (size_t i = 0; i < m.entries.size(); ++i) labels.push_back(m.label_of(i));

    GraphSpec g = build_learnet(3);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 77;
    cfg.augmentation = false;
    cfg.threads = 1;
    SplitPlan plan;
    plan.repeats = 1;

    const uint64_t digest = graph_digest(g);
    const std::string path_a = (dir / "a.ckpt").string();
    const std::string path_b = (dir / "b.ckpt").string();
    TrainResult ra = train_model(g, images, labels, 3, cfg, plan);
    save_checkpoint(ra.params, digest, path_a);
    TrainResult rb = train_model(g, images, labels, 3, cfg, plan);
    save_checkpoint(rb.params, digest, path_b);

    std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
    std::vector<char> bytes_a((std::istreambuf_iterator<char>(fa)),
                              std::istreambuf_iterator<char>());
    std::vector<char> bytes_b((std::istreambuf_iterator<char>(fb)),
                              std::istreambuf_iterator<char>());
    c.require(!bytes_a.empty() && bytes_a == bytes_b,
              "two seeded runs produced different checkpoints");

    ModelParams loaded = load_checkpoint(path_a, digest);
    c.require(loaded.size() == ra.params.size(), "record count after reload");
    for (const auto& [key, t] : ra.params)
        c.require(loaded.at(key).v == t.v && loaded.at(key).shape == t.shape,
                  "tensor " + key + " not bit-identical after reload");

    // Distinct failure kinds.
    {
        std::ofstream out(dir / "short.ckpt", std::ios::binary);
        out.write(bytes_a.data(), static_cast<std::streamsize>(bytes_a.size() / 3));
    }
    bool truncated = false;
    try {
        load_checkpoint((dir / "short.ckpt").string(), digest);
    } catch (const TruncatedError&) {
        truncated = true;
    } catch (...) {
    }
    c.require(truncated, "truncation must raise the truncation error");

    {
        auto corrupt = bytes_a;
        corrupt[0] = 'X';
        std::ofstream out(dir / "magic.ckpt", std::ios::binary);
        out.write(corrupt.data(), static_cast<std::streamsize>(corrupt.size()));
    }
    bool bad_magic = false;
    try {
        load_checkpoint((dir / "magic.ckpt").string(), digest);
    } catch (const BadMagicError&) {
        bad_magic = true;
    } catch (...) {
    }
    c.require(bad_magic, "corrupted magic must raise the magic error");

    bool digest_mismatch = false;
    try {
        load_checkpoint(path_a, graph_digest(build_learnet(3, LearnetVariant::TableV)));
    } catch (const DigestMismatchError&) {
        digest_mismatch = true;
    } catch (...) {
    }
    c.require(digest_mismatch, "wrong graph must raise the digest error");
}

// --------------------------------------------------------------- criterion 10

void augmentation_check(Checker& c) {
    Rng rng(31);
    Image img(48, 48);
    for (auto& b : img.rgb) b = static_cast<uint8_t>(rng.below(256));

    auto variants = augment_expand(img);
    c.require(variants.size() == 28,
              "expected 28 variants, got " + std::to_string(variants.size()));
    c.require(variants[0].rgb == img.rgb, "variant 0 must be the input bit-exactly");
    c.require(hflip(hflip(img)).rgb == img.rgb, "double flip must be the identity");
}

struct Criterion {
    int number;
    const char* name;
    std::function<void(Checker&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    const std::vector<Criterion> criteria = {
        {1, "parameter audit", parameter_audit},
        {2, "shape walk", shape_walk},
        {3, "gradient suite", gradient_suite},
        {4, "rank-pooling oracle", rankpool_oracle},
        {5, "approximate coefficients", approx_coefficients_check},
        {6, "normalization", normalization_check},
        {7, "synthetic overfit", synthetic_overfit},
        {8, "protocol", protocol_check},
        {9, "determinism and persistence", determinism_and_persistence},
        {10, "augmentation", augmentation_check},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (only != 0 && criterion.number != only) continue;
        Checker c;
        const auto t0 = clk::now();
        try {
            criterion.fn(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(clk::now() - t0).count();
        std::printf("[%s] criterion %2d: %s (%.2f s)%s%s\n", c.ok ? "PASS" : "FAIL",
                    criterion.number, criterion.name, secs, c.detail.empty() ? "" : " — ",
                    c.detail.c_str());
        std::fflush(stdout);
        if (!c.ok) ++failures;
    }
    return failures;
}
