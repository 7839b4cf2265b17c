#include "eyolo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "eyolo/errors.hpp"
#include "eyolo/rng.hpp"

namespace eyolo {

namespace fs = std::filesystem;

Batch make_batch(std::span<const Sample* const> samples, const GridSpec& spec) {
    if (samples.empty()) throw UsageError("make_batch: empty batch");
    const Shape4 one = samples.front()->input.shape();
    const Shape4 shape{static_cast<int>(samples.size()), one.c, one.h, one.w};
    std::vector<double> values(shape.count());
    const std::size_t stride = one.count();
    Batch batch;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = *samples[i];
        if (!(s.input.shape() == one))
            throw DimensionError("make_batch: sample " + s.id + " has shape " +
                                 to_string(s.input.shape()) + ", expected " + to_string(one));
        const auto v = s.input.values();
        std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(i * stride));
        batch.targets.push_back(encode_targets(s.boxes, spec));
    }
    batch.input = Tensor::from_values(shape, std::move(values));
    return batch;
}

double dataset_loss(Network& net, std::span<const Sample> samples, const LossConfig& cfg,
                    int batch_size) {
    if (samples.empty()) throw UsageError("dataset_loss: empty dataset");
    const GridSpec spec = net.config().grid_spec();
    NoGradGuard no_grad;
    double total = 0.0;
    for (std::size_t start = 0; start < samples.size();
         start += static_cast<std::size_t>(batch_size)) {
        std::vector<const Sample*> ptrs;
        for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i)
            ptrs.push_back(&samples[i]);
        Batch batch = make_batch(ptrs, spec);
        const Tensor decoded = decode_raw_tensor(net.forward(batch.input), spec);
        const LossBreakdown lb = compute_loss(decoded, batch.targets, cfg, spec);
        total += lb.total * static_cast<double>(ptrs.size());
    }
    return total / static_cast<double>(samples.size());
}

FitResult fit(Network& net, std::span<const Sample> train, std::span<const Sample> val,
              const TrainConfig& cfg) {
    if (train.empty()) throw UsageError("fit: training dataset is empty");
    if (cfg.epochs < 1) throw ConfigError("fit: epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("fit: batch_size must be >= 1");
    cfg.loss.validate();

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());

    const GridSpec spec = net.config().grid_spec();
    auto params = net.parameters();
    AdamOptimizer adam(params, cfg.adam);

    if (cfg.conf_bias_init != 0.0 && !cfg.resume) {
        const int ch = spec.channels_per_cell();
        for (NamedParam& p : params) {
            if (p.name == "project.bias") {
                auto bias = p.tensor.values_mut();
                for (std::size_t c = 0; c < bias.size(); ++c)
                    if (c % static_cast<std::size_t>(ch) == 0) bias[c] = cfg.conf_bias_init;
            } else if (p.name == "project.weight") {
                // damp the confidence rows so the logits actually start at
                // the bias instead of bias +- the random-row spread
                const Shape4 s = p.tensor.shape();
                auto w = p.tensor.values_mut();
                const std::size_t row = static_cast<std::size_t>(s.c) * s.h * s.w;
                for (int c = 0; c < s.n; ++c)
                    if (c % ch == 0)
                        for (std::size_t i = 0; i < row; ++i) w[c * row + i] *= 0.1;
            }
        }
    }

    FitResult result;
    result.best_checkpoint = cfg.out_dir / "best.ckpt";
    result.last_checkpoint = cfg.out_dir / "last.ckpt";

    if (cfg.resume) {
        const Checkpoint last = load_checkpoint(result.last_checkpoint);
        load_network_weights(net, last);
        adam.load_state(params, last);
    }

    std::ofstream loss_csv(cfg.out_dir / "loss.csv", cfg.resume ? std::ios::app : std::ios::out);
    std::ofstream step_csv(cfg.out_dir / "loss_breakdown.csv",
                           cfg.resume ? std::ios::app : std::ios::out);
    if (!loss_csv || !step_csv) throw IoError("cannot open loss CSVs under " + cfg.out_dir.string());
    if (!cfg.resume) {
        loss_csv << "epoch,train_loss,val_loss\n";
        step_csv << "step,total,center,size,conf_obj,conf_noobj,class\n";
    }

    result.initial_loss = dataset_loss(net, train, cfg.loss, cfg.batch_size);

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_val = std::numeric_limits<double>::infinity();
    long step = adam.step_count();

    const auto save_with_optim = [&](const fs::path& path) {
        Checkpoint ckpt = checkpoint_from_network(net);
        for (NamedArray& a : adam.state_arrays(params)) ckpt.arrays.push_back(std::move(a));
        save_checkpoint(path, ckpt);
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Fisher-Yates over the sample order, deterministic per seed.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(i) - 1))]);

        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            std::vector<const Sample*> ptrs;
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
                ptrs.push_back(&train[order[i]]);
            Batch batch = make_batch(ptrs, spec);

            net.zero_grad();
            const Tensor raw = net.forward(batch.input);
            const Tensor decoded = decode_raw_tensor(raw, spec);
            LossBreakdown lb;
            try {
                lb = compute_loss(decoded, batch.targets, cfg.loss, spec);
            } catch (const NumericError& e) {
                throw TrainingError(std::string("training diverged (") + e.what() +
                                    "); last good checkpoint: " + result.last_checkpoint.string());
            }
            if (!std::isfinite(lb.total))
                throw TrainingError("training diverged (loss is not finite); last good "
                                    "checkpoint: " +
                                    result.last_checkpoint.string());
            backward(lb.total_tensor);
            adam.step(params);
            ++step;
            epoch_sum += lb.total * static_cast<double>(ptrs.size());
            step_csv << step << ',' << lb.total << ',' << lb.center_term << ',' << lb.size_term
                     << ',' << lb.conf_obj_term << ',' << lb.conf_noobj_term << ','
                     << lb.class_term << '\n';
        }

        const double train_mean = epoch_sum / static_cast<double>(train.size());
        const double val_mean =
            val.empty() ? train_mean : dataset_loss(net, val, cfg.loss, cfg.batch_size);
        result.train_loss.push_back(train_mean);
        result.val_loss.push_back(val_mean);
        loss_csv << epoch << ',' << train_mean << ',' << val_mean << '\n';
        loss_csv.flush();

        // rolling state for resume/abort; every epoch would be all I/O on
        // desk-scale runs
        if (epoch == cfg.epochs || epoch % 10 == 0) save_with_optim(result.last_checkpoint);
        if (val_mean < best_val) {
            best_val = val_mean;
            save_checkpoint(result.best_checkpoint, checkpoint_from_network(net));
        }
    }

    result.steps = step;
    result.final_loss = dataset_loss(net, train, cfg.loss, cfg.batch_size);
    return result;
}

} // namespace eyolo
