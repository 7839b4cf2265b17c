#include "eyolo/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "eyolo/errors.hpp"
#include "eyolo/grid_codec.hpp"

namespace eyolo {

std::vector<Box3D> detect_boxes(Network& net, const Sample& sample, const NmsConfig& nms) {
    NoGradGuard no_grad;
    const GridSpec spec = net.config().grid_spec();
    const Tensor raw = net.forward(sample.input);
    const RawGrid grid = split_to_depth(raw, spec);
    const std::vector<Box3D> candidates = decode_grid(grid, spec, nms.confidence_floor);
    return nms3d(candidates, nms);
}

EvalReport evaluate_dataset(std::span<const Sample> samples, const DetectFn& detect) {
    if (samples.empty()) throw UsageError("evaluate: dataset is empty");

    std::vector<double> col2d, col3d;
    EvalReport report;
    for (const Sample& sample : samples) {
        const std::vector<Box3D> detections = detect(sample);
        report.detection_count += static_cast<int>(detections.size());
        report.ground_truth_count += static_cast<int>(sample.boxes.size());

        // All positive-overlap pairs, best first; greedy injective match.
        struct Pair {
            double iou;
            std::size_t gt, det;
        };
        std::vector<Pair> pairs;
        for (std::size_t g = 0; g < sample.boxes.size(); ++g)
            for (std::size_t d = 0; d < detections.size(); ++d) {
                const double iou = iou3d(sample.boxes[g], detections[d]);
                if (iou > 0.0) pairs.push_back({iou, g, d});
            }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.iou != b.iou) return a.iou > b.iou;
            if (a.gt != b.gt) return a.gt < b.gt;
            return a.det < b.det;
        });

        std::vector<char> gt_used(sample.boxes.size(), 0);
        std::vector<char> det_used(detections.size(), 0);
        std::vector<double> gt_iou3d(sample.boxes.size(), 0.0);
        std::vector<double> gt_iou2d(sample.boxes.size(), 0.0);
        for (const Pair& p : pairs) {
            if (gt_used[p.gt] || det_used[p.det]) continue;
            gt_used[p.gt] = det_used[p.det] = 1;
            gt_iou3d[p.gt] = p.iou;
            gt_iou2d[p.gt] = iou2d(sample.boxes[p.gt], detections[p.det]);
        }
        for (std::size_t g = 0; g < sample.boxes.size(); ++g) {
            if (!gt_used[g]) ++report.unmatched_ground_truths;
            col3d.push_back(gt_iou3d[g]);
            col2d.push_back(gt_iou2d[g]);
        }
    }

    if (!col3d.empty()) {
        double s2 = 0.0, s3 = 0.0, s23 = 0.0;
        for (std::size_t i = 0; i < col3d.size(); ++i) {
            const double v23 = std::pow(col3d[i], 2.0 / 3.0);
            s2 += col2d[i];
            s3 += col3d[i];
            s23 += v23;
            report.max_iou2d = std::max(report.max_iou2d, col2d[i]);
            report.max_iou3d = std::max(report.max_iou3d, col3d[i]);
            report.max_iou3d_23 = std::max(report.max_iou3d_23, v23);
        }
        const double n = static_cast<double>(col3d.size());
        report.mean_iou2d = s2 / n;
        report.mean_iou3d = s3 / n;
        report.mean_iou3d_23 = s23 / n;
    }
    return report;
}

EvalReport evaluate_network(Network& net, std::span<const Sample> samples, const NmsConfig& nms) {
    return evaluate_dataset(samples,
                            [&](const Sample& s) { return detect_boxes(net, s, nms); });
}

EvalReport evaluate_oracle(std::span<const Sample> samples) {
    return evaluate_dataset(samples, [](const Sample& s) {
        std::vector<Box3D> boxes = s.boxes;
        for (Box3D& b : boxes) b.confidence = 1.0;
        return boxes;
    });
}

std::string EvalReport::render() const {
    char buf[256];
    std::ostringstream os;
    os << "      2D IoU   3D IoU   3D IoU^(2/3)\n";
    std::snprintf(buf, sizeof(buf), "Mean  %.4f   %.4f   %.4f\n", mean_iou2d, mean_iou3d,
                  mean_iou3d_23);
    os << buf;
    std::snprintf(buf, sizeof(buf), "Max   %.4f   %.4f   %.4f\n", max_iou2d, max_iou3d,
                  max_iou3d_23);
    os << buf;
    os << "ground truths: " << ground_truth_count << " (unmatched: " << unmatched_ground_truths
       << "), detections: " << detection_count << "\n";
    return os.str();
}

} // namespace eyolo
