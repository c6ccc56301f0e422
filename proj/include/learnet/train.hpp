#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "learnet/graph.hpp"
#include "learnet/image.hpp"

namespace learnet {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 25;
    int epochs = 100;
    double momentum = 0.0;
    uint64_t seed = 0;
    bool augmentation = true;
    unsigned threads = 1;  // preprocessing only; the optimizer path is single-threaded
};

struct SplitPlan {
    int repeats = 5;
    double test_fraction = 0.20;
    double val_fraction_of_train = 0.30;
    std::vector<uint64_t> seeds;  // one per repeat; derived from `seed` when empty
    uint64_t seed = 0;
};

struct Split {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

struct Metrics {
    double accuracy = 0.0;                         // percent
    std::vector<std::vector<double>> confusion;    // [predicted][true], row-normalized
    std::vector<std::vector<int64_t>> confusion_counts;
    std::vector<double> repeat_accuracies;
    double mean_accuracy = 0.0;
};

struct EpochPoint {
    int repeat = 0;
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    ModelParams params;  // checkpoint with the best validation accuracy
    std::vector<EpochPoint> curve;
    Metrics metrics;
    std::vector<std::string> warnings;
};

// 28 variants per image: rotations 0, -45..45 step 15 (identity first), each
// raw and histogram-equalized, each unflipped and mirrored. Variant 0 is the
// input itself.
std::vector<Image> augment_expand(const Image& image);

// Disjoint, exhaustive per-repeat train/val/test index sets. The test set
// takes what the 80% train-pool rounding leaves behind; the validation set is
// rounded off the pool. Deterministic in the plan seeds.
std::vector<Split> split_dataset(size_t sample_count, const SplitPlan& plan);

struct TrainingSet {
    std::vector<Image> images;
    std::vector<int> labels;
    std::vector<int> sources;  // manifest index each image came from
};

// Materializes the training portion of a split, optionally expanded 28x by
// augment_expand. Augmentation happens after splitting and only here, so
// every produced image carries the index of the training sample it came from.
TrainingSet build_training_set(const std::vector<Image>& images, const std::vector<int>& labels,
                               const std::vector<int>& train_indices, bool augmentation,
                               unsigned threads);

// v <- momentum * v + g; p <- p - lr * v. Updates exactly the keys present in
// grads, so running statistics pass through untouched.
void sgd_step(ModelParams& params, const ModelParams& grads, ModelParams& velocity,
              const TrainConfig& cfg);

// Argmax classification of each sample (ties break toward the lower class
// index), accuracy in percent, and the row-normalized confusion matrix with
// rows indexed by prediction.
Metrics evaluate(const GraphSpec& spec, const ModelParams& params,
                 const std::vector<Tensor>& samples, const std::vector<int>& labels,
                 int num_classes, int batch_size = 25);

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;  // argmax accuracy of the train-mode logits, measured as trained
    double val_accuracy = 0.0;
};

// Plain SGD over one training set. Shuffles per epoch, updates running
// statistics after every step, evaluates the validation set per epoch when
// one is given. on_epoch may stop training early by returning false.
void train_sgd(const GraphSpec& spec, ModelParams& params, const std::vector<Image>& train_images,
               const std::vector<int>& train_labels, const std::vector<Image>& val_images,
               const std::vector<int>& val_labels, const TrainConfig& cfg, int epochs,
               const std::function<bool(int, const EpochStats&)>& on_epoch);

// Full protocol: per repeat, split, augment the training portion, train, keep
// the epoch with the best validation accuracy, score the test set; metrics
// aggregate the per-repeat confusion counts and average the accuracies.
TrainResult train_model(const GraphSpec& spec, const std::vector<Image>& images,
                        const std::vector<int>& labels, int num_classes,
                        const TrainConfig& cfg, const SplitPlan& plan,
                        std::ostream* log = nullptr);

void write_curve_csv(const std::vector<EpochPoint>& curve, const std::string& path);
void write_metrics_report(const Metrics& metrics, const std::vector<std::string>& class_names,
                          std::ostream& out);
void write_confusion_csv(const Metrics& metrics, const std::vector<std::string>& class_names,
                         const std::string& path);

}  // namespace learnet
