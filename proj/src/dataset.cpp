#include "learnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "learnet/parallel.hpp"
#include "learnet/rng.hpp"

namespace fs = std::filesystem;

namespace learnet {

int Manifest::class_index(const std::string& label) const {
    for (size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == label) return static_cast<int>(i);
    throw ValueError("label \"" + label + "\" is not in the class list");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

Manifest load_manifest(const std::string& csv_path, const std::string& classes_path) {
    Manifest m;
    std::ifstream cls(classes_path);
    if (!cls) throw IoError("cannot open class list " + classes_path);
    std::string line;
    while (std::getline(cls, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) m.class_names.push_back(line);
    }
    if (m.class_names.empty()) throw ValueError("class list " + classes_path + " is empty");

    std::ifstream csv(csv_path);
    if (!csv) throw IoError("cannot open manifest " + csv_path);
    const fs::path base = fs::path(csv_path).parent_path();
    bool header = true;
    while (std::getline(csv, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            if (line != "id,frames_path,label")
                throw IoError("manifest " + csv_path +
                              " must start with the header \"id,frames_path,label\"");
            header = false;
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw IoError("malformed manifest row \"" + line + "\" in " + csv_path);
        ManifestEntry e;
        e.id = fields[0];
        fs::path p(fields[1]);
        e.frames_path = p.is_absolute() ? p.string() : (base / p).string();
        e.label = fields[2];
        m.class_index(e.label);  // validates the label
        for (const auto& other : m.entries)
            if (other.id == e.id)
                throw ValueError("duplicate clip id \"" + e.id + "\" in " + csv_path);
        m.entries.push_back(std::move(e));
    }
    if (m.entries.empty()) throw ValueError("manifest " + csv_path + " has no entries");
    return m;
}

void save_manifest(const Manifest& manifest, const std::string& csv_path,
                   const std::string& classes_path) {
    std::ofstream cls(classes_path);
    if (!cls) throw IoError("cannot write class list " + classes_path);
    for (const auto& c : manifest.class_names) cls << c << "\n";

    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write manifest " + csv_path);
    csv << "id,frames_path,label\n";
    for (const auto& e : manifest.entries)
        csv << e.id << "," << e.frames_path << "," << e.label << "\n";
}

LoadedClip load_frame_sequence(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    if (names.empty()) throw IoError("no frames found in " + dir);
    std::sort(names.begin(), names.end());

    LoadedClip clip;
    for (const auto& name : names) {
        Image frame = read_ppm((fs::path(dir) / name).string());
        if (clip.width == 0) {
            clip.width = frame.width;
            clip.height = frame.height;
            clip.seq.dim = static_cast<size_t>(frame.width) * frame.height * 3;
        } else if (frame.width != clip.width || frame.height != clip.height) {
            frame = resize_bilinear(frame, clip.width, clip.height);
        }
        clip.seq.frames.push_back(image_features(frame));
    }
    return clip;
}

std::vector<Image> pool_dynamic_images(const Manifest& manifest, int size, unsigned threads) {
    std::vector<Image> out(manifest.entries.size());
    parallel_for(manifest.entries.size(), threads, [&](size_t i) {
        LoadedClip clip = load_frame_sequence(manifest.entries[i].frames_path);
        if (clip.width != size || clip.height != size) {
            FeatureSequence resized;
            resized.dim = static_cast<size_t>(size) * size * 3;
            for (auto& f : clip.seq.frames) {
                Tensor t({3, clip.height, clip.width}, std::move(f));
                Image img(clip.width, clip.height);
                const size_t plane = static_cast<size_t>(clip.width) * clip.height;
                for (size_t p = 0; p < plane; ++p)
                    for (int c = 0; c < 3; ++c)
                        img.rgb[p * 3 + c] = static_cast<uint8_t>(
                            std::lround(std::clamp(t.v[c * plane + p], 0.0f, 1.0f) * 255.0f));
                resized.frames.push_back(image_features(resize_bilinear(img, size, size)));
            }
            clip.seq = std::move(resized);
        }
        out[i] = compose_dynamic_image(solve_approximate(clip.seq), size, size);
    });
    return out;
}

namespace {

// Renders one synthetic frame: dark background, brighter oval, one bright
// Gaussian blob whose position or size encodes the motion pattern.
Image render_frame(int size, double blob_x, double blob_y, double sigma, double jx, double jy) {
    Image img(size, size);
    const double cx = size / 2.0, cy = size / 2.0;
    const double ax = 0.36 * size, ay = 0.45 * size;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double ex = (x - cx) / ax, ey = (y - cy) / ay;
            double base = (ex * ex + ey * ey <= 1.0) ? 70.0 : 20.0;
            const double dx = x - (blob_x + jx), dy = y - (blob_y + jy);
            const double blob = 185.0 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            const double value = std::min(255.0, base + blob);
            // A mild per-channel tint keeps the three planes distinct.
            img.at(x, y, 0) = static_cast<uint8_t>(std::lround(std::min(255.0, value * 1.00)));
            img.at(x, y, 1) = static_cast<uint8_t>(std::lround(std::min(255.0, value * 0.92)));
            img.at(x, y, 2) = static_cast<uint8_t>(std::lround(std::min(255.0, value * 0.84)));
        }
    }
    return img;
}

}  // namespace

Manifest generate_synthetic_dataset(const std::string& out_dir, const SyntheticConfig& cfg) {
    if (cfg.classes < 2 || cfg.classes > 3)
        throw ValueError("synthetic generator supports 2 or 3 classes, got " +
                         std::to_string(cfg.classes));
    if (cfg.clips_per_class < 1 || cfg.frames < 1)
        throw ValueError("clips_per_class and frames must be positive");

    fs::create_directories(fs::path(out_dir) / "clips");
    Manifest m;
    const char* names[3] = {"updrift", "oscillate", "expand"};
    for (int c = 0; c < cfg.classes; ++c) m.class_names.push_back(names[c]);

    const double s = cfg.size / 112.0;  // patterns scale with the frame size
    for (int c = 0; c < cfg.classes; ++c) {
        for (int k = 0; k < cfg.clips_per_class; ++k) {
            Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(c), static_cast<uint64_t>(k)));
            const double ox = rng.uniform(-6.0, 6.0) * s;
            const double oy = rng.uniform(-6.0, 6.0) * s;
            char id[32];
            std::snprintf(id, sizeof(id), "%s_%03d", names[c], k);
            const fs::path clip_dir = fs::path(out_dir) / "clips" / id;
            fs::create_directories(clip_dir);

            for (int t = 0; t < cfg.frames; ++t) {
                const double phase = cfg.frames > 1
                                         ? static_cast<double>(t) / (cfg.frames - 1)
                                         : 0.0;
                double bx = 56.0 * s + ox, by = 56.0 * s + oy, sigma = 9.0 * s;
                switch (c) {
                    case 0:  // upward drift
                        by = (78.0 - 44.0 * phase) * s + oy;
                        break;
                    case 1:  // horizontal oscillation
                        bx = (56.0 + 22.0 * std::sin(2.0 * M_PI * phase)) * s + ox;
                        by = (60.0) * s + oy;
                        break;
                    case 2:  // radial expansion
                        sigma = (4.0 + 14.0 * phase) * s;
                        break;
                }
                const double jx = rng.uniform(-1.5, 1.5) * s;
                const double jy = rng.uniform(-1.5, 1.5) * s;
                char frame_name[32];
                std::snprintf(frame_name, sizeof(frame_name), "frame_%03d.ppm", t);
                write_ppm(render_frame(cfg.size, bx, by, sigma, jx, jy),
                          (clip_dir / frame_name).string());
            }
            ManifestEntry e;
            e.id = id;
            e.frames_path = (fs::path("clips") / id).string();
            e.label = names[c];
            m.entries.push_back(std::move(e));
        }
    }
    save_manifest(m, (fs::path(out_dir) / "manifest.csv").string(),
                  (fs::path(out_dir) / "classes.txt").string());
    // Reload so frames_path entries are resolved against the manifest location.
    return load_manifest((fs::path(out_dir) / "manifest.csv").string(),
                         (fs::path(out_dir) / "classes.txt").string());
}

std::vector<std::string> dump_feature_maps(const ForwardTrace& trace,
                                           const std::string& node_name,
                                           const std::string& out_dir) {
    auto it = trace.outputs.find(node_name);
    if (it == trace.outputs.end())
        throw ValueError("node \"" + node_name + "\" is not present in the forward trace");
    const Tensor& t = it->second;
    if (t.shape.size() != 4)
        throw ValueError("node \"" + node_name + "\" output is not a [N, C, H, W] feature map");
    fs::create_directories(out_dir);

    const int N = t.dim(0), C = t.dim(1), H = t.dim(2), W = t.dim(3);
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(C))));
    const int rows = (C + cols - 1) / cols;
    std::vector<std::string> files;
    for (int n = 0; n < N; ++n) {
        Image grid(cols * W, rows * H);
        for (int c = 0; c < C; ++c) {
            const float* ch = t.data() + (static_cast<size_t>(n) * C + c) * H * W;
            float lo = ch[0], hi = ch[0];
            for (int i = 1; i < H * W; ++i) {
                lo = std::min(lo, ch[i]);
                hi = std::max(hi, ch[i]);
            }
            const int gx = (c % cols) * W, gy = (c / cols) * H;
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const float v = ch[y * W + x];
                    const uint8_t q =
                        (hi == lo) ? 128
                                   : static_cast<uint8_t>(std::lround(
                                         255.0 * (static_cast<double>(v) - lo) / (hi - lo)));
                    for (int ci = 0; ci < 3; ++ci) grid.at(gx + x, gy + y, ci) = q;
                }
        }
        char name[64];
        std::snprintf(name, sizeof(name), "%s_sample%d.ppm", node_name.c_str(), n);
        const std::string path = (fs::path(out_dir) / name).string();
        write_ppm(grid, path);
        files.push_back(path);
    }
    return files;
}

}  // namespace learnet
