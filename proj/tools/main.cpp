// eyolo command-line interface: synth, train, detect, eval, bench, export.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eyolo/bench.hpp"
#include "eyolo/checkpoint.hpp"
#include "eyolo/dataset.hpp"
#include "eyolo/errors.hpp"
#include "eyolo/evaluator.hpp"
#include "eyolo/network.hpp"
#include "eyolo/ply.hpp"
#include "eyolo/trainer.hpp"

namespace fs = std::filesystem;
using namespace eyolo;

namespace {

std::string default_data_dir() {
    const char* env = std::getenv("EYOLO_DATA_DIR");
    return env ? env : "";
}

struct ModelArgs {
    std::string preset = "tiny";
    std::string config_path;

    NetConfig resolve() const {
        if (!config_path.empty()) return NetConfig::load(config_path);
        return NetConfig::from_preset(preset);
    }
};

void add_model_flags(CLI::App* cmd, ModelArgs& args) {
    cmd->add_option("--preset", args.preset, "Network preset: tiny or full")
        ->default_val("tiny");
    cmd->add_option("--config", args.config_path,
                    "Network config file (overrides --preset)");
}

void add_nms_flags(CLI::App* cmd, NmsConfig& nms) {
    cmd->add_option("--nms", nms.iou_threshold_3d,
                    "3D IoU suppression threshold (volume ratio)")
        ->default_val(0.35);
    cmd->add_option("--nms-2d", nms.iou_threshold_2d,
                    "2D IoU threshold for the two-pass comparison variant")
        ->default_val(0.5);
    cmd->add_option("--conf", nms.confidence_floor, "Confidence floor before NMS")
        ->default_val(0.5);
    cmd->add_flag("--per-class", "Suppress only within the same class (default: class-agnostic)");
}

void apply_nms_flags(const CLI::App* cmd, NmsConfig& nms) {
    if (cmd->count("--per-class") > 0) nms.class_agnostic = false;
}

Network load_model(const ModelArgs& model, const std::string& ckpt_path) {
    const NetConfig cfg = model.resolve();
    Network net = build_network(cfg, 0);
    if (!ckpt_path.empty()) load_network_weights(net, load_checkpoint(ckpt_path));
    return net;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"RGB-D 3D object detector: grid head over a two-scale "
                 "convolutional backbone, 3D-IoU NMS"};
    app.require_subcommand(1);

    // ---- synth ----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cuboid dataset");
    SceneSpec scene;
    std::string synth_out;
    synth->add_option("--out", synth_out, "Output dataset directory")->required();
    synth->add_option("--seed", scene.seed, "Generator seed")->default_val(0);
    synth->add_option("--scenes", scene.scene_count, "Number of scenes")->default_val(16);
    synth->add_option("--objects", scene.object_count, "Cuboids per scene (1..5)")
        ->default_val(3);
    synth->add_option("--size", scene.image_size, "Image size in pixels")->default_val(128);
    synth->add_option("--person-fraction", scene.person_fraction,
                      "Share of class-0 (person) objects")
        ->default_val(0.5);
    synth->callback([&]() {
        const auto records = generate_synthetic(scene, synth_out);
        std::cout << "wrote " << records.size() << " scenes to " << synth_out << "\n";
    });

    // ---- train ----------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train on a dataset directory");
    ModelArgs train_model;
    TrainConfig train_cfg;
    std::string train_data = default_data_dir();
    std::string train_out = "runs/latest";
    double val_fraction = 0.0;
    train->add_option("--data", train_data, "Dataset directory (or $EYOLO_DATA_DIR)");
    add_model_flags(train, train_model);
    train->add_option("--epochs", train_cfg.epochs, "Training epochs")->default_val(100);
    train->add_option("--batch", train_cfg.batch_size, "Batch size")->default_val(4);
    train->add_option("--lr", train_cfg.adam.lr, "Adam learning rate")->default_val(0.001);
    train->add_option("--lambda-coord", train_cfg.loss.lambda_coord,
                      "Coordinate/size/objectness term weight")
        ->default_val(1.0);
    train->add_option("--lambda-noobj", train_cfg.loss.lambda_noobj,
                      "No-object confidence term weight")
        ->default_val(10.0);
    train->add_option("--seed", train_cfg.seed, "Shuffle/init seed")->default_val(0);
    train->add_option("--conf-bias", train_cfg.conf_bias_init,
                      "Starting bias for confidence logits; around -4 keeps the "
                      "confidence channels trainable (0 = neutral start)")
        ->default_val(0.0);
    train->add_option("--val-fraction", val_fraction,
                      "Fraction of samples held out for validation")
        ->default_val(0.0);
    train->add_option("--out", train_out, "Output directory for CSVs and checkpoints")
        ->default_val("runs/latest");
    train->add_flag("--resume", train_cfg.resume, "Continue from <out>/last.ckpt");
    train->callback([&]() {
        if (train_data.empty())
            throw UsageError("train: no dataset (pass --data or set EYOLO_DATA_DIR)");
        const NetConfig cfg = train_model.resolve();
        auto samples = load_dataset(train_data, cfg.input_size);
        const auto val_count =
            static_cast<std::size_t>(val_fraction * static_cast<double>(samples.size()));
        const std::span<const Sample> all(samples);
        const auto train_split = all.subspan(0, samples.size() - val_count);
        const auto val_split = all.subspan(samples.size() - val_count);

        Network net = build_network(cfg, train_cfg.seed);
        train_cfg.out_dir = train_out;
        fs::create_directories(train_cfg.out_dir);
        cfg.save(train_cfg.out_dir / "model.cfg");
        const FitResult result = fit(net, train_split, val_split, train_cfg);
        std::cout << "initial loss " << result.initial_loss << ", final loss "
                  << result.final_loss << " after " << result.steps << " steps\n";
        std::cout << "checkpoints: " << result.best_checkpoint << " (best), "
                  << result.last_checkpoint << " (last)\n";
    });

    // ---- detect ---------------------------------------------------------
    auto* detect = app.add_subcommand("detect", "Run detection on one sample directory");
    ModelArgs detect_model;
    NmsConfig detect_nms;
    std::string detect_image, detect_ckpt, detect_out = "detections.txt", detect_ply;
    std::uint64_t detect_seed = 0;
    detect->add_option("--image", detect_image, "Sample directory (color/depth/labels)")
        ->required();
    detect->add_option("--ckpt", detect_ckpt, "Checkpoint file")->required();
    add_model_flags(detect, detect_model);
    add_nms_flags(detect, detect_nms);
    detect->add_option("--out", detect_out, "Detection list output path")
        ->default_val("detections.txt");
    detect->add_option("--ply", detect_ply, "Also export a point-cloud PLY here");
    detect->add_option("--seed", detect_seed, "Unused; accepted for uniformity")
        ->default_val(0);
    detect->callback([&]() {
        apply_nms_flags(detect, detect_nms);
        const NetConfig cfg = detect_model.resolve();
        Network net = load_model(detect_model, detect_ckpt);
        const Sample sample = load_sample(detect_image, cfg.input_size);
        const auto boxes = detect_boxes(net, sample, detect_nms);
        write_detections(fs::path(detect_out), boxes);
        std::cout << boxes.size() << " detections -> " << detect_out << "\n";
        for (const Box3D& b : boxes) std::cout << format_detection_line(b) << "\n";
        if (!detect_ply.empty()) {
            export_ply(sample, boxes, CameraIntrinsics::default_for(cfg.input_size),
                       detect_ply);
            std::cout << "point cloud -> " << detect_ply << "\n";
        }
    });

    // ---- eval -----------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "IoU evaluation over a dataset");
    ModelArgs eval_model;
    NmsConfig eval_nms;
    std::string eval_data = default_data_dir(), eval_ckpt;
    bool oracle = false;
    std::uint64_t eval_seed = 0;
    eval->add_option("--data", eval_data, "Dataset directory (or $EYOLO_DATA_DIR)");
    eval->add_option("--ckpt", eval_ckpt, "Checkpoint file");
    add_model_flags(eval, eval_model);
    add_nms_flags(eval, eval_nms);
    eval->add_flag("--oracle", oracle,
                   "Feed ground truth through the metric pipeline (self-test)");
    eval->add_option("--seed", eval_seed, "Unused; accepted for uniformity")->default_val(0);
    eval->callback([&]() {
        apply_nms_flags(eval, eval_nms);
        if (eval_data.empty())
            throw UsageError("eval: no dataset (pass --data or set EYOLO_DATA_DIR)");
        const NetConfig cfg = eval_model.resolve();
        const auto samples = load_dataset(eval_data, cfg.input_size);
        EvalReport report;
        if (oracle) {
            report = evaluate_oracle(samples);
        } else {
            if (eval_ckpt.empty()) throw UsageError("eval: pass --ckpt or --oracle");
            Network net = load_model(eval_model, eval_ckpt);
            report = evaluate_network(net, samples, eval_nms);
        }
        std::cout << report.render();
    });

    // ---- bench ----------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "Speed harness (fps + NMS comparison)");
    ModelArgs bench_model;
    BenchConfig bench_cfg;
    std::string bench_ckpt;
    bench->add_option("--ckpt", bench_ckpt, "Optional checkpoint (random weights otherwise)");
    add_model_flags(bench, bench_model);
    add_nms_flags(bench, bench_cfg.nms);
    bench->add_option("--iterations", bench_cfg.iterations, "Timed iterations (median)")
        ->default_val(20);
    bench->add_option("--candidates", bench_cfg.nms_candidates,
                      "Candidate boxes for the NMS comparison")
        ->default_val(512);
    bench->add_option("--seed", bench_cfg.seed, "Input seed")->default_val(7);
    bench->callback([&]() {
        apply_nms_flags(bench, bench_cfg.nms);
        Network net = load_model(bench_model, bench_ckpt);
        std::cout << bench_speed(net, bench_cfg).render();
    });

    // ---- export ---------------------------------------------------------
    auto* exp = app.add_subcommand("export", "Export a sample (plus detections) as PLY");
    ModelArgs export_model;
    NmsConfig export_nms;
    std::string export_image, export_out, export_ckpt, export_detections;
    double fx = 0.0, fy = 0.0, cx0 = -1.0, cy0 = -1.0;
    std::uint64_t export_seed = 0;
    exp->add_option("--image", export_image, "Sample directory")->required();
    exp->add_option("--out", export_out, "Output PLY path")->required();
    exp->add_option("--ckpt", export_ckpt, "Detect with this checkpoint and draw results");
    exp->add_option("--detections", export_detections,
                    "Draw boxes from a detection-list file instead of running the model");
    add_model_flags(exp, export_model);
    add_nms_flags(exp, export_nms);
    exp->add_option("--fx", fx, "Focal length x (default: image size)");
    exp->add_option("--fy", fy, "Focal length y (default: image size)");
    exp->add_option("--cx", cx0, "Principal point x (default: image center)");
    exp->add_option("--cy", cy0, "Principal point y (default: image center)");
    exp->add_option("--seed", export_seed, "Unused; accepted for uniformity")->default_val(0);
    exp->callback([&]() {
        apply_nms_flags(exp, export_nms);
        const NetConfig cfg = export_model.resolve();
        const Sample sample = load_sample(export_image, cfg.input_size);
        std::vector<Box3D> boxes;
        if (!export_detections.empty())
            boxes = read_detections(export_detections);
        else if (!export_ckpt.empty()) {
            Network net = load_model(export_model, export_ckpt);
            boxes = detect_boxes(net, sample, export_nms);
        }
        CameraIntrinsics in = CameraIntrinsics::default_for(cfg.input_size);
        if (fx > 0.0) in.fx = fx;
        if (fy > 0.0) in.fy = fy;
        if (cx0 >= 0.0) in.cx0 = cx0;
        if (cy0 >= 0.0) in.cy0 = cy0;
        export_ply(sample, boxes, in, export_out);
        std::cout << "wrote " << export_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // usage errors
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
