#include "learnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "learnet/parallel.hpp"
#include "learnet/rng.hpp"

namespace learnet {

std::vector<Image> augment_expand(const Image& image) {
    // Identity rotation first so variant 0 is the input itself.
    static const double kAngles[7] = {0.0, -45.0, -30.0, -15.0, 15.0, 30.0, 45.0};
    std::vector<Image> out;
    out.reserve(28);
    for (double angle : kAngles) {
        const Image rotated = rotate_bilinear(image, angle);
        const Image equalized = hist_equalize(rotated);
        out.push_back(rotated);
        out.push_back(hflip(rotated));
        out.push_back(equalized);
        out.push_back(hflip(equalized));
    }
    return out;
}

std::vector<Split> split_dataset(size_t sample_count, const SplitPlan& plan) {
    if (sample_count == 0) throw ValueError("cannot split an empty manifest");
    if (plan.repeats < 1) throw ValueError("repeats must be positive");
    if (plan.test_fraction <= 0.0 || plan.test_fraction >= 1.0 ||
        plan.val_fraction_of_train <= 0.0 || plan.val_fraction_of_train >= 1.0)
        throw ValueError("split fractions must lie in (0, 1)");

    std::vector<uint64_t> seeds = plan.seeds;
    if (seeds.empty())
        for (int r = 0; r < plan.repeats; ++r)
            seeds.push_back(mix_seed(plan.seed, 0x73706c69, static_cast<uint64_t>(r)));
    if (static_cast<int>(seeds.size()) < plan.repeats)
        throw ValueError("plan needs one seed per repeat");

    const auto n = static_cast<long>(sample_count);
    const long pool = std::lround((1.0 - plan.test_fraction) * static_cast<double>(n));
    const long n_test = n - pool;  // test takes the rounding remainder
    const long n_val = std::lround(plan.val_fraction_of_train * static_cast<double>(pool));
    const long n_train = pool - n_val;
    if (n_train < 1 || n_test < 1)
        throw ValueError("sample count " + std::to_string(n) +
                         " is too small for the requested split");

    std::vector<Split> splits;
    for (int r = 0; r < plan.repeats; ++r) {
        std::vector<int> order(sample_count);
        for (size_t i = 0; i < sample_count; ++i) order[i] = static_cast<int>(i);
        Rng rng(seeds[r]);
        deterministic_shuffle(order, rng);
        Split s;
        s.test.assign(order.begin(), order.begin() + n_test);
        s.val.assign(order.begin() + n_test, order.begin() + n_test + n_val);
        s.train.assign(order.begin() + n_test + n_val, order.end());
        splits.push_back(std::move(s));
    }
    return splits;
}

void sgd_step(ModelParams& params, const ModelParams& grads, ModelParams& velocity,
              const TrainConfig& cfg) {
    for (const auto& [key, g] : grads) {
        auto pit = params.find(key);
        if (pit == params.end())
            throw ShapeError("gradient for unknown parameter \"" + key + "\"");
        Tensor& p = pit->second;
        if (!p.same_shape(g))
            throw ShapeError("gradient shape " + shape_str(g.shape) + " for \"" + key +
                             "\" does not match parameter shape " + shape_str(p.shape));
        auto [vit, inserted] = velocity.try_emplace(key, Tensor::zeros(g.shape));
        Tensor& v = vit->second;
        const float mu = static_cast<float>(cfg.momentum);
        const float lr = static_cast<float>(cfg.learning_rate);
        for (size_t i = 0; i < p.v.size(); ++i) {
            v.v[i] = mu * v.v[i] + g.v[i];
            p.v[i] -= lr * v.v[i];
        }
    }
}

namespace {

Tensor assemble_batch(const std::vector<Image>& images, const std::vector<int>& indices,
                      size_t begin, size_t end) {
    const Image& first = images[indices[begin]];
    const int n = static_cast<int>(end - begin);
    Tensor batch = Tensor::zeros({n, 3, first.height, first.width});
    const size_t stride = static_cast<size_t>(3) * first.height * first.width;
    for (size_t i = begin; i < end; ++i) {
        Tensor t = image_to_tensor(images[indices[i]]);
        std::copy(t.v.begin(), t.v.end(), batch.v.begin() + (i - begin) * stride);
    }
    return batch;
}

int argmax_row(const Tensor& logits, int row) {
    const int C = logits.dim(1);
    int best = 0;
    for (int c = 1; c < C; ++c)
        if (logits.v[static_cast<size_t>(row) * C + c] >
            logits.v[static_cast<size_t>(row) * C + best])
            best = c;
    return best;
}

}  // namespace

Metrics evaluate(const GraphSpec& spec, const ModelParams& params,
                 const std::vector<Tensor>& samples, const std::vector<int>& labels,
                 int num_classes, int batch_size) {
    if (samples.empty()) throw ValueError("evaluate needs at least one sample");
    if (samples.size() != labels.size())
        throw ValueError("got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(samples.size()) + " samples");

    Metrics m;
    m.confusion_counts.assign(num_classes, std::vector<int64_t>(num_classes, 0));
    int64_t correct = 0;
    for (size_t begin = 0; begin < samples.size(); begin += batch_size) {
        const size_t end = std::min(samples.size(), begin + batch_size);
        const Tensor& first = samples[begin];
        Tensor batch = Tensor::zeros({static_cast<int>(end - begin), first.dim(0),
                                      first.dim(1), first.dim(2)});
        const size_t stride = first.numel();
        for (size_t i = begin; i < end; ++i)
            std::copy(samples[i].v.begin(), samples[i].v.end(),
                      batch.v.begin() + (i - begin) * stride);
        Tensor logits = forward(spec, params, batch, Mode::Eval, 0).logits;
        for (size_t i = begin; i < end; ++i) {
            const int pred = argmax_row(logits, static_cast<int>(i - begin));
            ++m.confusion_counts[pred][labels[i]];
            if (pred == labels[i]) ++correct;
        }
    }
    m.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
    m.mean_accuracy = m.accuracy;
    m.repeat_accuracies = {m.accuracy};
    m.confusion.assign(num_classes, std::vector<double>(num_classes, 0.0));
    for (int p = 0; p < num_classes; ++p) {
        int64_t row = 0;
        for (int t = 0; t < num_classes; ++t) row += m.confusion_counts[p][t];
        if (row == 0) continue;
        for (int t = 0; t < num_classes; ++t)
            m.confusion[p][t] =
                static_cast<double>(m.confusion_counts[p][t]) / static_cast<double>(row);
    }
    return m;
}

namespace {

std::vector<Tensor> to_tensors(const std::vector<Image>& images) {
    std::vector<Tensor> out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(image_to_tensor(img));
    return out;
}

}  // namespace

TrainingSet build_training_set(const std::vector<Image>& images, const std::vector<int>& labels,
                               const std::vector<int>& train_indices, bool augmentation,
                               unsigned threads) {
    TrainingSet set;
    if (!augmentation) {
        for (int idx : train_indices) {
            set.images.push_back(images[idx]);
            set.labels.push_back(labels[idx]);
            set.sources.push_back(idx);
        }
        return set;
    }
    const size_t per = 28;
    set.images.resize(train_indices.size() * per);
    set.labels.resize(train_indices.size() * per);
    set.sources.resize(train_indices.size() * per);
    parallel_for(train_indices.size(), threads, [&](size_t i) {
        const int src = train_indices[i];
        auto variants = augment_expand(images[src]);
        for (size_t v = 0; v < per; ++v) {
            set.images[i * per + v] = std::move(variants[v]);
            set.labels[i * per + v] = labels[src];
            set.sources[i * per + v] = src;
        }
    });
    return set;
}

void train_sgd(const GraphSpec& spec, ModelParams& params, const std::vector<Image>& train_images,
               const std::vector<int>& train_labels, const std::vector<Image>& val_images,
               const std::vector<int>& val_labels, const TrainConfig& cfg, int epochs,
               const std::function<bool(int, const EpochStats&)>& on_epoch) {
    if (train_images.empty()) throw ValueError("training set is empty");
    if (cfg.learning_rate <= 0.0) throw ValueError("learning rate must be positive");
    if (cfg.batch_size < 1) throw ValueError("batch size must be positive");

    const int num_classes = spec.head_node().features;
    std::vector<Tensor> val_tensors = to_tensors(val_images);

    ModelParams velocity;
    std::vector<int> order(train_images.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    uint64_t step_counter = 0;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x73687566, static_cast<uint64_t>(epoch)));
        deterministic_shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        size_t seen = 0, train_correct = 0;
        for (size_t begin = 0; begin < order.size();
             begin += static_cast<size_t>(cfg.batch_size)) {
            const size_t end =
                std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
            Tensor batch = assemble_batch(train_images, order, begin, end);
            std::vector<int> batch_labels;
            for (size_t i = begin; i < end; ++i) batch_labels.push_back(train_labels[order[i]]);

            const uint64_t step_seed = mix_seed(cfg.seed, 0x73746570, step_counter++);
            ForwardResult fr = forward(spec, params, batch, Mode::Train, step_seed);
            auto lr = softmax_cross_entropy(fr.logits, batch_labels);
            BackwardResult br = backward(spec, params, fr.trace, lr.grad_logits);
            update_running_stats(params, spec, fr.trace);
            sgd_step(params, br.param_grads, velocity, cfg);

            for (size_t i = begin; i < end; ++i)
                if (argmax_row(fr.logits, static_cast<int>(i - begin)) == batch_labels[i - begin])
                    ++train_correct;
            loss_sum += lr.loss * static_cast<double>(end - begin);
            seen += end - begin;
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(seen);
        stats.train_accuracy = 100.0 * static_cast<double>(train_correct) /
                               static_cast<double>(seen);
        if (!val_tensors.empty())
            stats.val_accuracy =
                evaluate(spec, params, val_tensors, val_labels, num_classes, cfg.batch_size)
                    .accuracy;
        if (on_epoch && !on_epoch(epoch, stats)) return;
    }
}

TrainResult train_model(const GraphSpec& spec, const std::vector<Image>& images,
                        const std::vector<int>& labels, int num_classes,
                        const TrainConfig& cfg, const SplitPlan& plan, std::ostream* log) {
    if (images.size() != labels.size())
        throw ValueError("got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(images.size()) + " images");
    SplitPlan effective = plan;
    if (effective.seeds.empty()) effective.seed = cfg.seed;
    const std::vector<Split> splits = split_dataset(images.size(), effective);

    TrainResult result;
    result.metrics.confusion_counts.assign(num_classes,
                                           std::vector<int64_t>(num_classes, 0));
    double best_overall_val = -1.0;

    for (int repeat = 0; repeat < effective.repeats; ++repeat) {
        const Split& split = splits[repeat];

        for (int c = 0; c < num_classes; ++c) {
            bool present = false;
            for (int idx : split.train)
                if (labels[idx] == c) present = true;
            if (!present) {
                result.warnings.push_back("repeat " + std::to_string(repeat) + ": class " +
                                          std::to_string(c) + " is absent from the train split");
                if (log) *log << "warning: " << result.warnings.back() << "\n";
            }
        }

        TrainingSet train_set =
            build_training_set(images, labels, split.train, cfg.augmentation, cfg.threads);

        std::vector<Image> val_images;
        std::vector<int> val_labels;
        for (int idx : split.val) {
            val_images.push_back(images[idx]);
            val_labels.push_back(labels[idx]);
        }

        TrainConfig repeat_cfg = cfg;
        repeat_cfg.seed = mix_seed(cfg.seed, 0x72657065, static_cast<uint64_t>(repeat));
        ModelParams params = init_params(spec, repeat_cfg.seed);

        ModelParams best_params = params;
        double best_val = -1.0;
        train_sgd(spec, params, train_set.images, train_set.labels, val_images, val_labels,
                  repeat_cfg,
                  cfg.epochs, [&](int epoch, const EpochStats& stats) {
                      result.curve.push_back({repeat, epoch, stats.train_loss,
                                              stats.val_accuracy});
                      if (stats.val_accuracy > best_val) {
                          best_val = stats.val_accuracy;
                          best_params = params;
                      }
                      if (log)
                          *log << "repeat " << repeat << " epoch " << epoch << " loss "
                               << stats.train_loss << " val_acc " << stats.val_accuracy << "\n";
                      return true;
                  });

        std::vector<Tensor> test_tensors;
        std::vector<int> test_labels;
        for (int idx : split.test) {
            test_tensors.push_back(image_to_tensor(images[idx]));
            test_labels.push_back(labels[idx]);
        }
        Metrics test = evaluate(spec, best_params, test_tensors, test_labels, num_classes,
                                cfg.batch_size);
        result.metrics.repeat_accuracies.push_back(test.accuracy);
        for (int p = 0; p < num_classes; ++p)
            for (int t = 0; t < num_classes; ++t)
                result.metrics.confusion_counts[p][t] += test.confusion_counts[p][t];
        if (log) *log << "repeat " << repeat << " test accuracy " << test.accuracy << "\n";

        if (best_val > best_overall_val) {
            best_overall_val = best_val;
            result.params = best_params;
        }
    }

    double mean = 0.0;
    for (double a : result.metrics.repeat_accuracies) mean += a;
    mean /= static_cast<double>(result.metrics.repeat_accuracies.size());
    result.metrics.mean_accuracy = mean;
    result.metrics.accuracy = mean;
    result.metrics.confusion.assign(num_classes, std::vector<double>(num_classes, 0.0));
    for (int p = 0; p < num_classes; ++p) {
        int64_t row = 0;
        for (int t = 0; t < num_classes; ++t) row += result.metrics.confusion_counts[p][t];
        if (row == 0) continue;
        for (int t = 0; t < num_classes; ++t)
            result.metrics.confusion[p][t] =
                static_cast<double>(result.metrics.confusion_counts[p][t]) /
                static_cast<double>(row);
    }
    return result;
}

void write_curve_csv(const std::vector<EpochPoint>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curve " + path);
    out << "repeat,epoch,train_loss,val_accuracy\n";
    for (const auto& p : curve)
        out << p.repeat << "," << p.epoch << "," << p.train_loss << "," << p.val_accuracy
            << "\n";
}

void write_metrics_report(const Metrics& metrics, const std::vector<std::string>& class_names,
                          std::ostream& out) {
    out << "accuracy: " << metrics.mean_accuracy << "\n";
    if (metrics.repeat_accuracies.size() > 1) {
        out << "repeats:";
        for (double a : metrics.repeat_accuracies) out << " " << a;
        out << "\n";
    }
    out << "confusion matrix (rows = predicted, columns = true)\n";
    out << "pred\\true";
    for (const auto& c : class_names) out << "\t" << c;
    out << "\n";
    for (size_t p = 0; p < metrics.confusion.size(); ++p) {
        out << class_names[p];
        for (double v : metrics.confusion[p]) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%.4f", v);
            out << "\t" << buf;
        }
        out << "\n";
    }
}

void write_confusion_csv(const Metrics& metrics, const std::vector<std::string>& class_names,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write confusion matrix " + path);
    out << "predicted";
    for (const auto& c : class_names) out << "," << c;
    out << "\n";
    for (size_t p = 0; p < metrics.confusion.size(); ++p) {
        out << class_names[p];
        for (double v : metrics.confusion[p]) out << "," << v;
        out << "\n";
    }
}

}  // namespace learnet
