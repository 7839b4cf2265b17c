#pragma once

#include <string>

#include "eyolo/geometry.hpp"
#include "eyolo/network.hpp"

namespace eyolo {

struct BenchConfig {
    int iterations = 20;
    int warmup = 2;
    int nms_candidates = 512;
    std::uint64_t seed = 7;
    NmsConfig nms;
};

struct BenchReport {
    std::string method;
    double fps = 0.0;                 // end-to-end: forward + decode + NMS
    double forward_ms = 0.0;          // median
    double decode_nms_ms = 0.0;       // median
    double nms3d_single_pass_ms = 0.0;
    double nms2d_two_pass_ms = 0.0;
    int iterations = 0;
    int nms_candidates = 0;

    std::string render() const;
};

/// Wall-clock speed harness: medians over `iterations` runs of the full
/// pipeline on a fixed random input, plus a comparison of single-pass
/// 3D-IoU NMS against two-pass 2D-IoU NMS over one identical candidate
/// set. Reported, never asserted.
BenchReport bench_speed(Network& net, const BenchConfig& cfg);

} // namespace eyolo
