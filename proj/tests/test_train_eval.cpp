#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "eyolo/bench.hpp"
#include "eyolo/checkpoint.hpp"
#include "eyolo/dataset.hpp"
#include "eyolo/errors.hpp"
#include "eyolo/evaluator.hpp"
#include "eyolo/ops.hpp"
#include "eyolo/optimizer.hpp"
#include "eyolo/rng.hpp"
#include "eyolo/trainer.hpp"
#include "support/temp_dir.hpp"

using namespace eyolo;
using eyolo::testing::TempDir;

namespace {

std::vector<NamedParam> single_param(double value) {
    return {{"w", Tensor::full(Shape4{1, 1, 1, 1}, value, /*requires_grad=*/true)}};
}

void set_grad(Tensor& t, double g) {
    // build a trivial graph so backward populates the gradient
    backward(sum(scale(t, g)));
}

} // namespace

TEST(Adam, ZeroGradientIsFixedPoint) {
    auto params = single_param(0.7);
    AdamOptimizer adam(params);
    set_grad(params[0].tensor, 0.0);
    adam.step(params);
    EXPECT_DOUBLE_EQ(params[0].tensor.values()[0], 0.7);
    EXPECT_EQ(adam.step_count(), 1);
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
    for (const double g : {0.5, -2.0, 10.0}) {
        auto params = single_param(1.0);
        AdamConfig cfg;
        AdamOptimizer adam(params, cfg);
        set_grad(params[0].tensor, g);
        adam.step(params);
        const double update = params[0].tensor.values()[0] - 1.0;
        // bias correction makes m_hat/sqrt(v_hat) ~= sign(g)
        EXPECT_NEAR(update, -cfg.lr * (g > 0 ? 1.0 : -1.0), cfg.lr * 1e-6);
    }
}

TEST(Adam, FiveStepScalarReferenceSequence) {
    auto params = single_param(0.5);
    AdamConfig cfg;
    AdamOptimizer adam(params, cfg);

    // independent scalar recurrence
    double w = 0.5, m = 0.0, v = 0.0;
    const double grads[5] = {0.3, -0.1, 0.25, 0.9, -0.4};
    for (int t = 1; t <= 5; ++t) {
        const double g = grads[t - 1];
        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
        const double m_hat = m / (1 - std::pow(cfg.beta1, t));
        const double v_hat = v / (1 - std::pow(cfg.beta2, t));
        w -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);

        params[0].tensor.zero_grad();
        set_grad(params[0].tensor, g);
        adam.step(params);
        EXPECT_NEAR(params[0].tensor.values()[0], w, 1e-12) << "step " << t;
    }
}

TEST(Adam, ParametersUpdateIndependently) {
    std::vector<NamedParam> params = {
        {"a", Tensor::full(Shape4{1, 1, 1, 1}, 1.0, true)},
        {"b", Tensor::full(Shape4{1, 1, 1, 1}, 1.0, true)},
    };
    AdamOptimizer adam(params);
    set_grad(params[0].tensor, 1.0); // only a gets a gradient
    adam.step(params);
    EXPECT_NE(params[0].tensor.values()[0], 1.0);
    EXPECT_DOUBLE_EQ(params[1].tensor.values()[0], 1.0);
}

TEST(Adam, NanGradientNamesParameter) {
    auto params = single_param(1.0);
    AdamOptimizer adam(params);
    set_grad(params[0].tensor, 1.0);
    // poison the gradient in place
    backward(sum(scale(params[0].tensor, 1.0)));
    auto g = params[0].tensor.grad();
    const_cast<double&>(g[0]) = NAN;
    try {
        adam.step(params);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("\"w\""), std::string::npos);
    }
}

TEST(Checkpoint, RoundTripIsBitExact) {
    TempDir tmp("ckpt");
    Network net = build_network(NetConfig::tiny(), 77);
    const auto path = tmp.path() / "weights.ckpt";
    save_checkpoint(path, checkpoint_from_network(net));

    Network loaded = build_network(NetConfig::tiny(), 12345); // different init
    load_network_weights(loaded, load_checkpoint(path));

    Rng rng(70);
    const Shape4 in{1, 4, 128, 128};
    std::vector<double> values(in.count());
    for (double& v : values) v = rng.next_f64();
    const Tensor input = Tensor::from_values(in, std::move(values));
    NoGradGuard guard;
    const Tensor a = net.forward(input);
    const Tensor b = loaded.forward(input);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.values()[i], b.values()[i]);
}

TEST(Checkpoint, ConfigHashMismatchRejected) {
    TempDir tmp("ckpt_hash");
    Network tiny = build_network(NetConfig::tiny(), 1);
    const auto path = tmp.path() / "weights.ckpt";
    save_checkpoint(path, checkpoint_from_network(tiny));
    NetConfig other = NetConfig::tiny();
    other.head_width = 16;
    Network different = build_network(other, 1);
    EXPECT_THROW(load_network_weights(different, load_checkpoint(path)), StateError);
}

TEST(Checkpoint, CorruptMagicRejected) {
    TempDir tmp("ckpt_magic");
    const auto path = tmp.path() / "bogus.ckpt";
    std::ofstream(path) << "not a checkpoint";
    EXPECT_THROW(load_checkpoint(path), FormatError);
}

TEST(Evaluate, OracleModeIsAllOnes) {
    TempDir tmp("eval_oracle");
    SceneSpec spec;
    spec.seed = 5;
    spec.scene_count = 3;
    spec.image_size = 64;
    generate_synthetic(spec, tmp.path());
    const auto samples = load_dataset(tmp.path(), 64);
    const EvalReport report = evaluate_oracle(samples);
    EXPECT_DOUBLE_EQ(report.mean_iou2d, 1.0);
    EXPECT_DOUBLE_EQ(report.max_iou2d, 1.0);
    EXPECT_DOUBLE_EQ(report.mean_iou3d, 1.0);
    EXPECT_DOUBLE_EQ(report.max_iou3d, 1.0);
    EXPECT_DOUBLE_EQ(report.mean_iou3d_23, 1.0);
    EXPECT_DOUBLE_EQ(report.max_iou3d_23, 1.0);
    EXPECT_EQ(report.unmatched_ground_truths, 0);
}

TEST(Evaluate, TwoThirdsPowerColumn) {
    // single match with 3D IoU 64/125 = 0.512 -> column reads 0.64
    Sample sample;
    sample.input = Tensor::zeros(Shape4{1, 4, 8, 8});
    sample.id = "fixture";
    const double side = 0.189, shift = 0.061;
    sample.boxes = {Box3D::with_class(0, 2, 0.4, 0.5, 0.5, side, side, side)};
    Box3D det = Box3D::with_class(0, 2, 0.4 + shift, 0.5, 0.5, side, side, side, 0.9);

    const EvalReport report = evaluate_dataset(
        std::vector<Sample>{sample}, [&](const Sample&) { return std::vector<Box3D>{det}; });
    EXPECT_NEAR(report.mean_iou3d, 0.512, 1e-9);
    EXPECT_NEAR(report.mean_iou3d_23, 0.64, 1e-9);
    EXPECT_NEAR(report.mean_iou3d_23, std::pow(report.mean_iou3d, 2.0 / 3.0), 1e-12);
}

TEST(Evaluate, UnmatchedGroundTruthCountsAsZero) {
    Sample sample;
    sample.input = Tensor::zeros(Shape4{1, 4, 8, 8});
    sample.boxes = {Box3D::with_class(0, 2, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1),
                    Box3D::with_class(0, 2, 0.8, 0.8, 0.8, 0.1, 0.1, 0.1)};
    // only one detection, matching the first box exactly
    const Box3D det = Box3D::with_class(0, 2, 0.2, 0.2, 0.2, 0.1, 0.1, 0.1, 0.9);
    const EvalReport report = evaluate_dataset(
        std::vector<Sample>{sample}, [&](const Sample&) { return std::vector<Box3D>{det}; });
    EXPECT_EQ(report.unmatched_ground_truths, 1);
    EXPECT_DOUBLE_EQ(report.mean_iou3d, 0.5); // (1.0 + 0.0) / 2
    EXPECT_DOUBLE_EQ(report.max_iou3d, 1.0);
}

TEST(Evaluate, MatchingIsInjective) {
    Sample sample;
    sample.input = Tensor::zeros(Shape4{1, 4, 8, 8});
    // two identical ground truths, one detection: only one may match
    sample.boxes = {Box3D::with_class(0, 2, 0.5, 0.5, 0.5, 0.2, 0.2, 0.2),
                    Box3D::with_class(0, 2, 0.5, 0.5, 0.5, 0.2, 0.2, 0.2)};
    const Box3D det = Box3D::with_class(0, 2, 0.5, 0.5, 0.5, 0.2, 0.2, 0.2, 0.9);
    const EvalReport report = evaluate_dataset(
        std::vector<Sample>{sample}, [&](const Sample&) { return std::vector<Box3D>{det}; });
    EXPECT_EQ(report.unmatched_ground_truths, 1);
    EXPECT_DOUBLE_EQ(report.mean_iou3d, 0.5);
}

TEST(Evaluate, EmptyDatasetIsUsageError) {
    EXPECT_THROW(evaluate_oracle({}), UsageError);
}

TEST(Evaluate, RenderMirrorsTableLayout) {
    Sample sample;
    sample.input = Tensor::zeros(Shape4{1, 4, 8, 8});
    sample.boxes = {Box3D::with_class(0, 2, 0.5, 0.5, 0.5, 0.2, 0.2, 0.2)};
    const EvalReport report = evaluate_oracle(std::vector<Sample>{sample});
    const std::string table = report.render();
    EXPECT_NE(table.find("2D IoU"), std::string::npos);
    EXPECT_NE(table.find("3D IoU^(2/3)"), std::string::npos);
    EXPECT_NE(table.find("Mean"), std::string::npos);
    EXPECT_NE(table.find("Max"), std::string::npos);
}

TEST(Fit, LossDecreasesOnTinyRun) {
    TempDir data("fit_data"), out("fit_out");
    SceneSpec scene;
    scene.seed = 11;
    scene.scene_count = 2;
    scene.object_count = 2;
    scene.image_size = 128;
    generate_synthetic(scene, data.path());
    const auto samples = load_dataset(data.path(), 128);

    Network net = build_network(NetConfig::tiny(), 2);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 2;
    cfg.seed = 3;
    cfg.out_dir = out.path();
    const FitResult result = fit(net, samples, {}, cfg);

    EXPECT_LT(result.final_loss, result.initial_loss);
    EXPECT_EQ(result.train_loss.size(), 6u);
    EXPECT_TRUE(std::filesystem::exists(out.path() / "loss.csv"));
    EXPECT_TRUE(std::filesystem::exists(out.path() / "loss_breakdown.csv"));
    EXPECT_TRUE(std::filesystem::exists(result.best_checkpoint));
    EXPECT_TRUE(std::filesystem::exists(result.last_checkpoint));

    // loss.csv carries the header and one row per epoch
    std::ifstream csv(out.path() / "loss.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "epoch,train_loss,val_loss");
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    EXPECT_EQ(rows, 6);
}

TEST(Fit, DeterministicLossCurve) {
    TempDir data("fit_det"), out_a("fit_det_a"), out_b("fit_det_b");
    SceneSpec scene;
    scene.seed = 19;
    scene.scene_count = 2;
    scene.image_size = 128;
    generate_synthetic(scene, data.path());
    const auto samples = load_dataset(data.path(), 128);

    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.seed = 21;

    Network a = build_network(NetConfig::tiny(), 9);
    cfg.out_dir = out_a.path();
    const FitResult ra = fit(a, samples, {}, cfg);
    Network b = build_network(NetConfig::tiny(), 9);
    cfg.out_dir = out_b.path();
    const FitResult rb = fit(b, samples, {}, cfg);

    ASSERT_EQ(ra.train_loss.size(), rb.train_loss.size());
    for (std::size_t i = 0; i < ra.train_loss.size(); ++i)
        EXPECT_EQ(ra.train_loss[i], rb.train_loss[i]);
}

TEST(Fit, ResumeContinuesCloseToUninterrupted) {
    TempDir data("fit_resume"), out_full("fit_full"), out_half("fit_half");
    SceneSpec scene;
    scene.seed = 23;
    scene.scene_count = 2;
    scene.image_size = 128;
    generate_synthetic(scene, data.path());
    const auto samples = load_dataset(data.path(), 128);

    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.seed = 31;

    Network uninterrupted = build_network(NetConfig::tiny(), 13);
    cfg.epochs = 4;
    cfg.out_dir = out_full.path();
    const FitResult full = fit(uninterrupted, samples, {}, cfg);

    Network resumed = build_network(NetConfig::tiny(), 13);
    cfg.epochs = 2;
    cfg.out_dir = out_half.path();
    fit(resumed, samples, {}, cfg);
    cfg.epochs = 2;
    cfg.resume = true;
    const FitResult second = fit(resumed, samples, {}, cfg);

    // same total work; final losses agree within noise (shuffle order differs)
    EXPECT_LT(std::abs(second.final_loss - full.final_loss),
              0.25 * std::abs(full.initial_loss - full.final_loss) + 5.0);
}

TEST(Fit, ColdConfidenceStartKeepsConfidenceTrainable) {
    TempDir data("fit_cold"), out("fit_cold_out");
    SceneSpec scene;
    scene.seed = 29;
    scene.scene_count = 1;
    scene.object_count = 1;
    scene.image_size = 64;
    generate_synthetic(scene, data.path());
    const auto samples = load_dataset(data.path(), 64);

    NetConfig small = NetConfig::tiny();
    small.preset = "custom";
    small.input_size = 64;
    small.grid_s = 4;
    small.stage_widths = {4, 8, 8, 16, 16};
    small.stage_blocks = {1, 1, 1, 1, 1};
    small.head_width = 8;
    Network net = build_network(small, 17);
    TrainConfig cfg;
    cfg.epochs = 250;
    cfg.batch_size = 1;
    cfg.seed = 17;
    cfg.conf_bias_init = -6.0;
    cfg.out_dir = out.path();
    const FitResult result = fit(net, samples, {}, cfg);

    // the pessimistic start removes the no-object collapse ...
    EXPECT_LT(result.initial_loss, 25.0);
    EXPECT_LT(result.final_loss, result.initial_loss);

    // ... and the confidence logits on occupied cells climb instead of
    // sinking into saturation
    const GridSpec spec = net.config().grid_spec();
    NoGradGuard guard;
    double max_obj_logit = -1e9;
    for (const Sample& sample : samples) {
        const RawGrid grid = split_to_depth(net.forward(sample.input), spec);
        const TargetGrid targets = encode_targets(sample.boxes, spec);
        for (int k = 0; k < spec.S; ++k)
            for (int j = 0; j < spec.S; ++j)
                for (int i = 0; i < spec.S; ++i)
                    if (targets.occupied(i, j, k))
                        max_obj_logit = std::max(max_obj_logit, grid.cell(i, j, k)[0]);
    }
    EXPECT_GT(max_obj_logit, -5.0); // started near -6
}

TEST(Fit, EmptyDatasetRejected) {
    Network net = build_network(NetConfig::tiny(), 1);
    TrainConfig cfg;
    cfg.out_dir = std::filesystem::temp_directory_path() / "eyolo_unused";
    EXPECT_THROW(fit(net, {}, {}, cfg), UsageError);
}

TEST(Bench, TinyFasterThanFullOnSameMachine) {
    BenchConfig cfg;
    cfg.iterations = 1;
    cfg.warmup = 0;
    cfg.nms_candidates = 16;
    Network tiny = build_network(NetConfig::tiny(), 1);
    const BenchReport tiny_report = bench_speed(tiny, cfg);
    Network full = build_network(NetConfig::full(), 1);
    const BenchReport full_report = bench_speed(full, cfg);
    EXPECT_GT(tiny_report.fps, full_report.fps);
}

TEST(Bench, ReportsFinitePositiveFps) {
    Network net = build_network(NetConfig::tiny(), 4);
    BenchConfig cfg;
    cfg.iterations = 3;
    cfg.warmup = 1;
    cfg.nms_candidates = 64;
    const BenchReport report = bench_speed(net, cfg);
    EXPECT_GT(report.fps, 0.0);
    EXPECT_TRUE(std::isfinite(report.fps));
    EXPECT_GT(report.nms3d_single_pass_ms, 0.0);
    EXPECT_GT(report.nms2d_two_pass_ms, 0.0);
    const std::string table = report.render();
    EXPECT_NE(table.find("SPEED [fps]"), std::string::npos);
    EXPECT_NE(table.find("3d-iou single-pass"), std::string::npos);
    EXPECT_NE(table.find("2d-iou two-pass"), std::string::npos);
}
