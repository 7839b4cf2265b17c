#include "eyolo/ply.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "eyolo/errors.hpp"

namespace eyolo {

namespace {

struct PlyPoint {
    double x, y, z;
    std::uint8_t r, g, b;
};

constexpr int kEdgeSamples = 24;

// Box corners in (image-fraction u/v, depth-fraction) space, deprojected
// individually; edges are straight segments between deprojected corners.
void append_box_wireframe(std::vector<PlyPoint>& points, const Box3D& box,
                          const CameraIntrinsics& in, int image_size, double depth_range_m,
                          std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::array<std::array<double, 3>, 8> corners;
    int idx = 0;
    for (int zi = 0; zi < 2; ++zi)
        for (int yi = 0; yi < 2; ++yi)
            for (int xi = 0; xi < 2; ++xi) {
                const double u = (box.cx + (xi ? box.w : -box.w) / 2.0) * image_size;
                const double v = (box.cy + (yi ? box.h : -box.h) / 2.0) * image_size;
                const double z = (box.cz + (zi ? box.d : -box.d) / 2.0) * depth_range_m;
                corners[idx++] = {(u - in.cx0) * z / in.fx, (v - in.cy0) * z / in.fy, z};
            }
    static constexpr int kEdges[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3},
                                          {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
    for (const auto& e : kEdges) {
        const auto& a = corners[e[0]];
        const auto& c = corners[e[1]];
        for (int s = 0; s <= kEdgeSamples; ++s) {
            const double t = static_cast<double>(s) / kEdgeSamples;
            points.push_back({a[0] + (c[0] - a[0]) * t, a[1] + (c[1] - a[1]) * t,
                              a[2] + (c[2] - a[2]) * t, r, g, b});
        }
    }
}

} // namespace

CameraIntrinsics CameraIntrinsics::default_for(int image_size) {
    CameraIntrinsics in;
    in.fx = in.fy = static_cast<double>(image_size);
    in.cx0 = in.cy0 = image_size / 2.0;
    return in;
}

void export_ply(const Sample& sample, std::span<const Box3D> detections,
                const CameraIntrinsics& intrinsics, const std::filesystem::path& out_path) {
    if (!sample.input.defined()) throw StateError("export_ply: sample has no input tensor");
    const Shape4 s = sample.input.shape();
    const int n = s.w;
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    const auto values = sample.input.values();
    const double depth_range_m = kDepthRangeMm / 1000.0;

    std::vector<PlyPoint> points;
    points.reserve(plane / 2);
    for (int v = 0; v < s.h; ++v)
        for (int u = 0; u < s.w; ++u) {
            const std::size_t at = static_cast<std::size_t>(v) * s.w + u;
            const double depth_norm = values[3 * plane + at];
            if (depth_norm <= 0.0) continue;
            const double z = depth_norm * depth_range_m;
            points.push_back({(u - intrinsics.cx0) * z / intrinsics.fx,
                              (v - intrinsics.cy0) * z / intrinsics.fy, z,
                              static_cast<std::uint8_t>(values[0 * plane + at] * 255.0 + 0.5),
                              static_cast<std::uint8_t>(values[1 * plane + at] * 255.0 + 0.5),
                              static_cast<std::uint8_t>(values[2 * plane + at] * 255.0 + 0.5)});
        }

    for (const Box3D& box : sample.boxes)
        append_box_wireframe(points, box, intrinsics, n, depth_range_m, 255, 0, 0);
    for (const Box3D& box : detections)
        append_box_wireframe(points, box, intrinsics, n, depth_range_m, 255, 255, 0);

    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open for writing: " + out_path.string());
    out << "ply\n";
    out << "format ascii 1.0\n";
    out << "element vertex " << points.size() << "\n";
    out << "property float x\n";
    out << "property float y\n";
    out << "property float z\n";
    out << "property uchar red\n";
    out << "property uchar green\n";
    out << "property uchar blue\n";
    out << "end_header\n";
    char buf[128];
    for (const PlyPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d %d %d", p.x, p.y, p.z, p.r, p.g, p.b);
        out << buf << "\n";
    }
    if (!out.good()) throw IoError("write failed: " + out_path.string());
}

} // namespace eyolo
