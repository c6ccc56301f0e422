#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "learnet/graph.hpp"
#include "learnet/image.hpp"
#include "learnet/rankpool.hpp"

namespace learnet {

struct ManifestEntry {
    std::string id;
    std::string frames_path;  // relative paths resolve against the manifest's directory
    std::string label;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> class_names;

    int class_index(const std::string& label) const;
    int label_of(size_t entry) const { return class_index(entries[entry].label); }
};

// CSV with header "id,frames_path,label" plus a class-list file (one class
// name per line, fixing the label -> index order).
Manifest load_manifest(const std::string& csv_path, const std::string& classes_path);
void save_manifest(const Manifest& manifest, const std::string& csv_path,
                   const std::string& classes_path);

struct LoadedClip {
    FeatureSequence seq;
    int width = 0;
    int height = 0;
};

// Decodes every file in the directory as PPM, ordered by filename. Frames of
// differing sizes are resized to the first frame's size.
LoadedClip load_frame_sequence(const std::string& dir);

// One dynamic image per manifest entry: frames resized to size x size,
// approximate rank pooling, min-max quantization. Clips are processed
// concurrently when threads > 1; results do not depend on the thread count.
std::vector<Image> pool_dynamic_images(const Manifest& manifest, int size, unsigned threads);

struct SyntheticConfig {
    int classes = 3;
    int clips_per_class = 20;
    int frames = 8;
    int size = 112;
    uint64_t seed = 0;
};

// Seeded synthetic corpus: a bright blob moving over a dark face-like oval,
// one motion pattern per class (0 drifts upward, 1 oscillates horizontally,
// 2 expands radially). Writes PPM frames, manifest.csv and classes.txt under
// out_dir and returns the manifest.
Manifest generate_synthetic_dataset(const std::string& out_dir, const SyntheticConfig& cfg);

// Writes one grayscale tile grid per sample for the named node's activations:
// each channel is min-max normalized to 8-bit (constant channels map to 128)
// and tiled into a ceil(sqrt(C)) column grid.
std::vector<std::string> dump_feature_maps(const ForwardTrace& trace,
                                           const std::string& node_name,
                                           const std::string& out_dir);

}  // namespace learnet
