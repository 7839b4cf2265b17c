#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace eyolo {

/// Axis-aligned 3D box in normalized scene coordinates. x/y are image
/// fractions, z is a fraction of the working depth range; extents may
/// clip the frustum, so faces can fall outside [0,1].
struct Box3D {
    double cx = 0.0, cy = 0.0, cz = 0.0;
    double w = 0.0, h = 0.0, d = 0.0;
    double confidence = 0.0;
    std::vector<double> class_scores;

    double volume() const { return w * h * d; }
    int class_id() const;

    static Box3D with_class(int class_id, int class_count, double cx, double cy, double cz,
                            double w, double h, double d, double confidence = 1.0);
};

struct NmsConfig {
    double iou_threshold_3d = 0.35;
    double iou_threshold_2d = 0.5;
    double confidence_floor = 0.5;
    bool class_agnostic = true;

    /// Thresholds must lie in (0, 1]; throws ConfigError otherwise.
    void validate() const;
};

/// Volume intersection over union. Total function: disjoint or degenerate
/// pairs score 0, including the coincident zero-volume case.
double iou3d(const Box3D& a, const Box3D& b);

/// Image-plane intersection over union; ignores z and d.
double iou2d(const Box3D& a, const Box3D& b);

/// Greedy non-maximum suppression on 3D IoU. Drops candidates below the
/// confidence floor, sorts by confidence descending (ties broken by input
/// index), keeps a box iff its overlap with every kept box stays at or
/// below the 3D threshold.
std::vector<Box3D> nms3d(std::span<const Box3D> boxes, const NmsConfig& cfg);

/// Comparison variant for the speed harness: suppression requires both
/// front-view (x/y) and top-view (x/z) 2D IoU to exceed the 2D threshold,
/// i.e. two IoU evaluations per pair instead of one.
std::vector<Box3D> nms_two_pass_2d(std::span<const Box3D> boxes, const NmsConfig& cfg);

/// Detection list line format: `class_id confidence cx cy cz w h d`,
/// space-separated, six decimals.
std::string format_detection_line(const Box3D& box);
void write_detections(std::ostream& out, std::span<const Box3D> boxes);
void write_detections(const std::filesystem::path& path, std::span<const Box3D> boxes);
std::vector<Box3D> parse_detections(std::istream& in, int class_count = 2);
std::vector<Box3D> read_detections(const std::filesystem::path& path, int class_count = 2);

} // namespace eyolo
