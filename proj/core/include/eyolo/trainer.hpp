#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "eyolo/dataset.hpp"
#include "eyolo/loss.hpp"
#include "eyolo/network.hpp"
#include "eyolo/optimizer.hpp"

namespace eyolo {

struct TrainConfig {
    int epochs = 100;
    int batch_size = 4;
    std::uint64_t seed = 0;
    AdamConfig adam;
    LossConfig loss;
    std::filesystem::path out_dir; // loss.csv, loss_breakdown.csv, checkpoints
    bool resume = false;           // continue from out_dir/last.ckpt

    // Pre-training bias for the confidence logits (0 = leave the built
    // weights alone). The neutral default start makes the heavily
    // weighted no-object term enormous, and its collapse drags every
    // confidence logit into deep saturation that Adam's second-moment
    // memory then holds shut for thousands of steps. Starting around -4
    // removes that phase, so the confidence channels actually learn;
    // see README, "Training quality".
    double conf_bias_init = 0.0;
};

struct FitResult {
    std::vector<double> train_loss; // per-epoch means
    std::vector<double> val_loss;
    double initial_loss = 0.0; // dataset mean before the first update
    double final_loss = 0.0;   // dataset mean after the last epoch
    long steps = 0;
    std::filesystem::path best_checkpoint;
    std::filesystem::path last_checkpoint;
};

/// Stacks samples into one (batch, 4, N, N) tensor plus per-sample
/// target grids.
struct Batch {
    Tensor input;
    std::vector<TargetGrid> targets;
};
Batch make_batch(std::span<const Sample* const> samples, const GridSpec& spec);

/// Mean loss over a dataset without touching weights.
double dataset_loss(Network& net, std::span<const Sample> samples, const LossConfig& cfg,
                    int batch_size);

/// End-to-end training. Writes `loss.csv` (epoch,train_loss,val_loss) and
/// `loss_breakdown.csv` (step,total and the five terms) under out_dir,
/// keeps the best-validation checkpoint as best.ckpt and the rolling
/// state (weights + optimizer) as last.ckpt. Deterministic per seed.
/// Aborts with TrainingError on divergence, leaving last.ckpt intact.
FitResult fit(Network& net, std::span<const Sample> train, std::span<const Sample> val,
              const TrainConfig& cfg);

} // namespace eyolo
