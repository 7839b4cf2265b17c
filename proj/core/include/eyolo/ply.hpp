#pragma once

#include <filesystem>
#include <span>

#include "eyolo/dataset.hpp"
#include "eyolo/geometry.hpp"

namespace eyolo {

/// Pinhole intrinsics for deprojection: X = (u - cx0) * Z / fx,
/// Y = (v - cy0) * Z / fy, Z = depth in meters.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx0 = 0.0;
    double cy0 = 0.0;

    /// fx = fy = image size, principal point at the image center.
    static CameraIntrinsics default_for(int image_size);
};

/// Writes an ASCII PLY with the deprojected colored point cloud (pixels
/// with depth > 0), the sample's ground-truth boxes as red wireframes and
/// the detections as yellow wireframes (12 edges each, sampled to points).
void export_ply(const Sample& sample, std::span<const Box3D> detections,
                const CameraIntrinsics& intrinsics, const std::filesystem::path& out_path);

} // namespace eyolo
