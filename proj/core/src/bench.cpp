#include "eyolo/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <vector>

#include "eyolo/grid_codec.hpp"
#include "eyolo/rng.hpp"

namespace eyolo {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return 0.0;
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<Box3D> random_candidates(Rng& rng, int count, int classes) {
    // Clustered boxes so NMS has real suppression work to do.
    std::vector<Box3D> boxes;
    boxes.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double cx = rng.uniform(0.1, 0.9);
        const double cy = rng.uniform(0.1, 0.9);
        const double cz = rng.uniform(0.1, 0.9);
        for (int j = 0; j < 4 && static_cast<int>(boxes.size()) < count; ++j) {
            Box3D b = Box3D::with_class(static_cast<int>(rng.uniform_int(0, classes - 1)), classes,
                                        cx + rng.uniform(-0.05, 0.05),
                                        cy + rng.uniform(-0.05, 0.05),
                                        cz + rng.uniform(-0.05, 0.05), rng.uniform(0.1, 0.3),
                                        rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3));
            b.confidence = rng.uniform(0.0, 1.0);
            boxes.push_back(std::move(b));
        }
    }
    return boxes;
}

} // namespace

BenchReport bench_speed(Network& net, const BenchConfig& cfg) {
    NoGradGuard no_grad;
    const NetConfig& nc = net.config();
    const GridSpec spec = nc.grid_spec();
    Rng rng(cfg.seed);

    const Shape4 in{1, nc.in_channels, nc.input_size, nc.input_size};
    std::vector<double> values(in.count());
    for (double& v : values) v = rng.next_f64();
    const Tensor input = Tensor::from_values(in, std::move(values));

    for (int i = 0; i < cfg.warmup; ++i) net.forward(input);

    std::vector<double> forward_ms, pipeline_ms, decode_ms;
    for (int i = 0; i < cfg.iterations; ++i) {
        const auto t0 = Clock::now();
        const Tensor raw = net.forward(input);
        const double fwd = ms_since(t0);
        const auto t1 = Clock::now();
        const RawGrid grid = split_to_depth(raw, spec);
        const std::vector<Box3D> candidates = decode_grid(grid, spec, cfg.nms.confidence_floor);
        const std::vector<Box3D> kept = nms3d(candidates, cfg.nms);
        (void)kept;
        const double dec = ms_since(t1);
        forward_ms.push_back(fwd);
        decode_ms.push_back(dec);
        pipeline_ms.push_back(fwd + dec);
    }

    const std::vector<Box3D> candidates = random_candidates(rng, cfg.nms_candidates, nc.classes);
    NmsConfig open = cfg.nms;
    open.confidence_floor = 0.0; // keep the full candidate set in play
    std::vector<double> nms3d_ms, nms2d_ms;
    for (int i = 0; i < cfg.iterations; ++i) {
        auto t0 = Clock::now();
        const auto kept3d = nms3d(candidates, open);
        nms3d_ms.push_back(ms_since(t0));
        t0 = Clock::now();
        const auto kept2d = nms_two_pass_2d(candidates, open);
        nms2d_ms.push_back(ms_since(t0));
        (void)kept3d;
        (void)kept2d;
    }

    BenchReport report;
    report.method = "eyolo-" + nc.preset + " (cpu)";
    report.forward_ms = median(forward_ms);
    report.decode_nms_ms = median(decode_ms);
    const double total = median(pipeline_ms);
    report.fps = total > 0.0 ? 1000.0 / total : 0.0;
    report.nms3d_single_pass_ms = median(nms3d_ms);
    report.nms2d_two_pass_ms = median(nms2d_ms);
    report.iterations = cfg.iterations;
    report.nms_candidates = static_cast<int>(candidates.size());
    return report;
}

std::string BenchReport::render() const {
    char buf[256];
    std::ostringstream os;
    os << "Method                   SPEED [fps]\n";
    std::snprintf(buf, sizeof(buf), "%-24s %.2f\n", method.c_str(), fps);
    os << buf;
    std::snprintf(buf, sizeof(buf), "  forward %.2f ms, decode+nms %.2f ms (median of %d)\n",
                  forward_ms, decode_nms_ms, iterations);
    os << buf;
    os << "\nNMS variant              TIME [ms]  (" << nms_candidates << " candidates)\n";
    std::snprintf(buf, sizeof(buf), "%-24s %.4f\n", "3d-iou single-pass", nms3d_single_pass_ms);
    os << buf;
    std::snprintf(buf, sizeof(buf), "%-24s %.4f\n", "2d-iou two-pass", nms2d_two_pass_ms);
    os << buf;
    return os.str();
}

} // namespace eyolo
