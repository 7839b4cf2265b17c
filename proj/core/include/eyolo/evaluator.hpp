#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eyolo/dataset.hpp"
#include "eyolo/geometry.hpp"
#include "eyolo/network.hpp"

namespace eyolo {

/// IoU statistics over greedy GT-to-detection matches. Unmatched ground
/// truths are recorded as zeros, so mean is over all ground truths.
struct EvalReport {
    double mean_iou2d = 0.0, max_iou2d = 0.0;
    double mean_iou3d = 0.0, max_iou3d = 0.0;
    double mean_iou3d_23 = 0.0, max_iou3d_23 = 0.0;
    int ground_truth_count = 0;
    int unmatched_ground_truths = 0;
    int detection_count = 0;

    std::string render() const;
};

using DetectFn = std::function<std::vector<Box3D>(const Sample&)>;

/// Runs detections over every sample, greedily matches each ground truth
/// to the highest-3D-IoU unused detection and aggregates the three
/// metric columns (2D IoU, 3D IoU, 3D IoU^(2/3)).
EvalReport evaluate_dataset(std::span<const Sample> samples, const DetectFn& detect);

/// Network mode: forward, decode, NMS per sample.
EvalReport evaluate_network(Network& net, std::span<const Sample> samples, const NmsConfig& nms);

/// Oracle mode: feeds each sample's ground truth through the metric
/// pipeline; a healthy pipeline reports 1.0 everywhere.
EvalReport evaluate_oracle(std::span<const Sample> samples);

/// The full detection pipeline for one sample.
std::vector<Box3D> detect_boxes(Network& net, const Sample& sample, const NmsConfig& nms);

} // namespace eyolo
