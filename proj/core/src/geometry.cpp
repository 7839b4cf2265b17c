#include "eyolo/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "eyolo/errors.hpp"

namespace eyolo {

namespace {

struct Interval {
    double lo, hi;
    double length() const { return hi - lo; }
};

Interval axis_interval(double center, double extent) {
    return {center - extent / 2.0, center + extent / 2.0};
}

double overlap(const Interval& a, const Interval& b) {
    return std::max(0.0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
}

using SuppressFn = bool (*)(const Box3D&, const Box3D&, const NmsConfig&);

std::vector<Box3D> greedy_nms(std::span<const Box3D> boxes, const NmsConfig& cfg,
                              SuppressFn overlaps) {
    cfg.validate();
    std::vector<std::size_t> order;
    order.reserve(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i)
        if (boxes[i].confidence >= cfg.confidence_floor) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return boxes[a].confidence > boxes[b].confidence;
    });

    std::vector<Box3D> kept;
    for (std::size_t idx : order) {
        const Box3D& candidate = boxes[idx];
        bool suppressed = false;
        for (const Box3D& k : kept) {
            if (!cfg.class_agnostic && k.class_id() != candidate.class_id()) continue;
            if (overlaps(k, candidate, cfg)) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(candidate);
    }
    return kept;
}

} // namespace

int Box3D::class_id() const {
    if (class_scores.empty()) return 0;
    return static_cast<int>(std::max_element(class_scores.begin(), class_scores.end()) -
                            class_scores.begin());
}

Box3D Box3D::with_class(int class_id, int class_count, double cx, double cy, double cz, double w,
                        double h, double d, double confidence) {
    if (class_id < 0 || class_id >= class_count)
        throw RangeError("Box3D: class id " + std::to_string(class_id) + " outside 0.." +
                         std::to_string(class_count - 1));
    Box3D b;
    b.cx = cx;
    b.cy = cy;
    b.cz = cz;
    b.w = w;
    b.h = h;
    b.d = d;
    b.confidence = confidence;
    b.class_scores.assign(class_count, 0.0);
    b.class_scores[class_id] = 1.0;
    return b;
}

void NmsConfig::validate() const {
    if (!(iou_threshold_3d > 0.0 && iou_threshold_3d <= 1.0))
        throw ConfigError("NmsConfig: iou_threshold_3d must be in (0, 1], got " +
                          std::to_string(iou_threshold_3d));
    if (!(iou_threshold_2d > 0.0 && iou_threshold_2d <= 1.0))
        throw ConfigError("NmsConfig: iou_threshold_2d must be in (0, 1], got " +
                          std::to_string(iou_threshold_2d));
}

// Volumes and overlaps are all derived from the same face coordinates, so
// iou(a, a) is exactly 1 and the ratio never leaves [0, 1].
double iou3d(const Box3D& a, const Box3D& b) {
    const Interval ax = axis_interval(a.cx, a.w), bx = axis_interval(b.cx, b.w);
    const Interval ay = axis_interval(a.cy, a.h), by = axis_interval(b.cy, b.h);
    const Interval az = axis_interval(a.cz, a.d), bz = axis_interval(b.cz, b.d);
    const double inter = overlap(ax, bx) * overlap(ay, by) * overlap(az, bz);
    const double va = ax.length() * ay.length() * az.length();
    const double vb = bx.length() * by.length() * bz.length();
    const double uni = va + vb - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

double iou2d(const Box3D& a, const Box3D& b) {
    const Interval ax = axis_interval(a.cx, a.w), bx = axis_interval(b.cx, b.w);
    const Interval ay = axis_interval(a.cy, a.h), by = axis_interval(b.cy, b.h);
    const double inter = overlap(ax, bx) * overlap(ay, by);
    const double uni = ax.length() * ay.length() + bx.length() * by.length() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

std::vector<Box3D> nms3d(std::span<const Box3D> boxes, const NmsConfig& cfg) {
    return greedy_nms(boxes, cfg, [](const Box3D& kept, const Box3D& cand, const NmsConfig& c) {
        return iou3d(kept, cand) > c.iou_threshold_3d;
    });
}

std::vector<Box3D> nms_two_pass_2d(std::span<const Box3D> boxes, const NmsConfig& cfg) {
    return greedy_nms(boxes, cfg, [](const Box3D& kept, const Box3D& cand, const NmsConfig& c) {
        // front view (x/y) plus top view (x/z), each its own IoU pass
        const double front = iou2d(kept, cand);
        Box3D kt = kept, ct = cand;
        kt.cy = kept.cz;
        kt.h = kept.d;
        ct.cy = cand.cz;
        ct.h = cand.d;
        const double top = iou2d(kt, ct);
        return front > c.iou_threshold_2d && top > c.iou_threshold_2d;
    });
}

std::string format_detection_line(const Box3D& box) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f %.6f %.6f %.6f %.6f", box.class_id(),
                  box.confidence, box.cx, box.cy, box.cz, box.w, box.h, box.d);
    return std::string(buf);
}

void write_detections(std::ostream& out, std::span<const Box3D> boxes) {
    for (const Box3D& b : boxes) out << format_detection_line(b) << "\n";
}

void write_detections(const std::filesystem::path& path, std::span<const Box3D> boxes) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    write_detections(out, boxes);
    if (!out.good()) throw IoError("write failed: " + path.string());
}

std::vector<Box3D> parse_detections(std::istream& in, int class_count) {
    std::vector<Box3D> boxes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int class_id = 0;
        double conf = 0, cx = 0, cy = 0, cz = 0, w = 0, h = 0, d = 0;
        if (!(ls >> class_id >> conf >> cx >> cy >> cz >> w >> h >> d))
            throw ParseError("detection list line " + std::to_string(line_no) +
                             ": expected `class_id confidence cx cy cz w h d`, got \"" + line +
                             "\"");
        boxes.push_back(Box3D::with_class(class_id, std::max(class_count, class_id + 1), cx, cy,
                                          cz, w, h, d, conf));
    }
    return boxes;
}

std::vector<Box3D> read_detections(const std::filesystem::path& path, int class_count) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    return parse_detections(in, class_count);
}

} // namespace eyolo
