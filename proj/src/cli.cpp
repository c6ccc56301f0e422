#include "learnet/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

#include <CLI11.hpp>

#include "learnet/checkpoint.hpp"
#include "learnet/dataset.hpp"
#include "learnet/train.hpp"

namespace fs = std::filesystem;

namespace learnet::cli {

namespace {

struct DynimgArgs {
    std::string frames, mode, out, raw;
    double delta = 1.0;
    int iters = 2000;
};

struct TrainArgs {
    std::string manifest, classes, config, out, curve;
    TrainConfig cfg;
    int repeats = 5;
    bool no_augment = false;
};

struct EvalArgs {
    std::string model, config, manifest, classes, confusion;
    unsigned threads = 1;
};

struct InspectArgs {
    std::string model, config, input, node, out;
};

struct SynthArgs {
    std::string out;
    SyntheticConfig cfg;
};

void run_dynimg(const DynimgArgs& a, std::ostream& out, std::ostream& err) {
    LoadedClip clip = load_frame_sequence(a.frames);
    err << "loaded " << clip.seq.frame_count() << " frames of " << clip.width << "x"
        << clip.height << "\n";
    DynamicMap map;
    if (a.mode == "exact") {
        RankPoolConfig cfg;
        cfg.mode = PoolMode::Exact;
        cfg.delta = a.delta;
        cfg.max_iters = a.iters;
        map = solve_exact(clip.seq, cfg);
        err << "objective " << *map.objective << "\n";
    } else if (a.mode == "approx") {
        map = solve_approximate(clip.seq);
    } else {
        throw ValueError("--mode must be exact or approx, got \"" + a.mode + "\"");
    }
    write_ppm(compose_dynamic_image(map, clip.width, clip.height), a.out);
    out << a.out << "\n";
    if (!a.raw.empty()) {
        std::ofstream rf(a.raw, std::ios::binary);
        if (!rf) throw IoError("cannot write " + a.raw);
        rf.write(reinterpret_cast<const char*>(map.weights.data()),
                 static_cast<std::streamsize>(map.weights.size() * sizeof(float)));
        out << a.raw << "\n";
    }
}

void run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    GraphSpec spec = load_graph_file(a.config);
    validate_graph(spec);
    Manifest manifest = load_manifest(a.manifest, a.classes);
    const int num_classes = static_cast<int>(manifest.class_names.size());
    if (spec.head_node().features != num_classes)
        throw ValueError("graph head has " + std::to_string(spec.head_node().features) +
                         " outputs but the class list names " + std::to_string(num_classes) +
                         " classes");

    const NodeSpec& in = spec.input_node();
    err << "pooling " << manifest.entries.size() << " clips into dynamic images\n";
    std::vector<Image> images = pool_dynamic_images(manifest, in.height, a.cfg.threads);
    std::vector<int> labels;
    for (size_t i = 0; i < manifest.entries.size(); ++i) labels.push_back(manifest.label_of(i));

    TrainConfig cfg = a.cfg;
    cfg.augmentation = !a.no_augment;
    SplitPlan plan;
    plan.repeats = a.repeats;
    plan.seed = cfg.seed;

    TrainResult r = train_model(spec, images, labels, num_classes, cfg, plan, &err);
    save_checkpoint(r.params, graph_digest(spec), a.out);
    err << "checkpoint written to " << a.out << "\n";
    if (!a.curve.empty()) write_curve_csv(r.curve, a.curve);
    write_metrics_report(r.metrics, manifest.class_names, out);
}

void run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    GraphSpec spec = load_graph_file(a.config);
    validate_graph(spec);
    ModelParams params = load_checkpoint(a.model, graph_digest(spec));
    Manifest manifest = load_manifest(a.manifest, a.classes);
    const int num_classes = static_cast<int>(manifest.class_names.size());

    const NodeSpec& in = spec.input_node();
    err << "pooling " << manifest.entries.size() << " clips into dynamic images\n";
    std::vector<Image> images = pool_dynamic_images(manifest, in.height, a.threads);
    std::vector<Tensor> tensors;
    std::vector<int> labels;
    for (size_t i = 0; i < images.size(); ++i) {
        tensors.push_back(image_to_tensor(images[i]));
        labels.push_back(manifest.label_of(i));
    }
    Metrics m = evaluate(spec, params, tensors, labels, num_classes);
    write_metrics_report(m, manifest.class_names, out);
    if (!a.confusion.empty()) write_confusion_csv(m, manifest.class_names, a.confusion);
}

void run_params(const std::string& config, std::ostream& out) {
    GraphSpec spec = load_graph_file(config);
    ShapeReport shapes = validate_graph(spec);
    ParamReport report = param_count(spec);

    out << std::left << std::setw(14) << "node" << std::setw(9) << "op" << std::setw(16)
        << "output" << std::right << std::setw(10) << "weights" << std::setw(9) << "biases"
        << "\n";
    for (const auto& s : shapes.shapes) {
        std::string shape_text;
        for (size_t i = 0; i < s.shape.size(); ++i)
            shape_text += (i ? "x" : "") + std::to_string(s.shape[i]);
        const NodeCount* c = nullptr;
        for (const auto& nc : report.nodes)
            if (nc.name == s.name) c = &nc;
        out << std::left << std::setw(14) << s.name << std::setw(9) << op_kind_name(s.op)
            << std::setw(16) << shape_text << std::right << std::setw(10)
            << (c ? std::to_string(c->weights) : "-") << std::setw(9)
            << (c ? std::to_string(c->biases) : "-") << "\n";
    }
    out << "conv layers: " << shapes.conv_layers << "\n";
    out << "core parameters (head excluded): " << report.core_total << "\n";
    out << "total parameters: " << report.total << "\n";
}

void run_inspect(const InspectArgs& a, std::ostream& out, std::ostream& err) {
    GraphSpec spec = load_graph_file(a.config);
    validate_graph(spec);
    ModelParams params = load_checkpoint(a.model, graph_digest(spec));
    const NodeSpec& in = spec.input_node();
    Image img = read_ppm(a.input);
    if (img.width != in.width || img.height != in.height) {
        err << "resizing " << img.width << "x" << img.height << " input to " << in.width << "x"
            << in.height << "\n";
        img = resize_bilinear(img, in.width, in.height);
    }
    Tensor t = image_to_tensor(img);
    Tensor batch = Tensor::zeros({1, in.channels, in.height, in.width});
    batch.v = t.v;
    ForwardResult r = forward(spec, params, batch, Mode::Eval, 0);
    for (const auto& file : dump_feature_maps(r.trace, a.node, a.out)) out << file << "\n";
}

void run_synth(const SynthArgs& a, std::ostream& out) {
    Manifest m = generate_synthetic_dataset(a.out, a.cfg);
    out << (fs::path(a.out) / "manifest.csv").string() << "\n";
    out << (fs::path(a.out) / "classes.txt").string() << "\n";
    out << m.entries.size() << " clips\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"rank-pooling dynamic images and the LEARNet classifier"};
    app.require_subcommand(1);

    DynimgArgs dyn;
    auto* dynimg = app.add_subcommand("dynimg", "pool a frame directory into a dynamic image");
    dynimg->add_option("--frames", dyn.frames, "directory of PPM frames")->required();
    dynimg->add_option("--mode", dyn.mode, "exact | approx")->required();
    dynimg->add_option("--delta", dyn.delta, "regularizer weight (exact mode)")
        ->capture_default_str();
    dynimg->add_option("--iters", dyn.iters, "iteration cap (exact mode)")
        ->capture_default_str();
    dynimg->add_option("--out", dyn.out, "output PPM path")->required();
    dynimg->add_option("--raw", dyn.raw, "also dump the raw float map (little-endian f32)");

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "train a model on a clip manifest");
    train->add_option("--manifest", tr.manifest, "manifest CSV")->required();
    train->add_option("--classes", tr.classes, "class list file")->required();
    train->add_option("--config", tr.config, "graph config file")->required();
    train->add_option("--out", tr.out, "checkpoint output path")->required();
    train->add_option("--epochs", tr.cfg.epochs, "training epochs")->capture_default_str();
    train->add_option("--batch", tr.cfg.batch_size, "mini-batch size")->capture_default_str();
    train->add_option("--lr", tr.cfg.learning_rate, "learning rate")->capture_default_str();
    train->add_option("--momentum", tr.cfg.momentum, "SGD momentum")->capture_default_str();
    train->add_option("--seed", tr.cfg.seed, "seed for init/shuffle/dropout/splits")
        ->capture_default_str();
    train->add_option("--repeats", tr.repeats, "random split repeats")->capture_default_str();
    train->add_flag("--no-augment", tr.no_augment, "train on raw dynamic images only");
    train->add_option("--curve", tr.curve, "write the per-epoch loss curve CSV here");
    train->add_option("--threads", tr.cfg.threads, "worker threads for preprocessing")
        ->capture_default_str();

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    eval->add_option("--model", ev.model, "checkpoint path")->required();
    eval->add_option("--config", ev.config, "graph config file")->required();
    eval->add_option("--manifest", ev.manifest, "manifest CSV")->required();
    eval->add_option("--classes", ev.classes, "class list file")->required();
    eval->add_option("--confusion", ev.confusion, "write the confusion matrix CSV here");
    eval->add_option("--threads", ev.threads, "worker threads for preprocessing")
        ->capture_default_str();

    std::string params_config;
    auto* params = app.add_subcommand("params", "audit per-node shapes and parameter counts");
    params->add_option("--config", params_config, "graph config file")->required();

    InspectArgs ins;
    auto* inspect = app.add_subcommand("inspect", "dump feature-map grids for one input");
    inspect->add_option("--model", ins.model, "checkpoint path")->required();
    inspect->add_option("--config", ins.config, "graph config file")->required();
    inspect->add_option("--input", ins.input, "input PPM image")->required();
    inspect->add_option("--node", ins.node, "graph node to visualize")->required();
    inspect->add_option("--out", ins.out, "output directory")->required();

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "generate the synthetic motion corpus");
    synth->add_option("--out", sy.out, "output directory")->required();
    synth->add_option("--classes", sy.cfg.classes, "number of classes")->capture_default_str();
    synth->add_option("--per-class", sy.cfg.clips_per_class, "clips per class")
        ->capture_default_str();
    synth->add_option("--frames", sy.cfg.frames, "frames per clip")->capture_default_str();
    synth->add_option("--size", sy.cfg.size, "frame size in pixels")->capture_default_str();
    synth->add_option("--seed", sy.cfg.seed, "corpus seed")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (dynimg->parsed()) run_dynimg(dyn, out, err);
        if (train->parsed()) run_train(tr, out, err);
        if (eval->parsed()) run_eval(ev, out, err);
        if (params->parsed()) run_params(params_config, out);
        if (inspect->parsed()) run_inspect(ins, out, err);
        if (synth->parsed()) run_synth(sy, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace learnet::cli
