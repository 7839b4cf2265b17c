#include "eyolo/grid_codec.hpp"

#include <algorithm>
#include <cmath>

#include "eyolo/errors.hpp"
#include "eyolo/ops.hpp"

namespace eyolo {

void GridSpec::validate() const {
    if (S <= 0) throw ConfigError("GridSpec: S must be positive, got " + std::to_string(S));
    if (B != 1) throw ConfigError("GridSpec: B is fixed to 1, got " + std::to_string(B));
    if (K < 1) throw ConfigError("GridSpec: K must be at least 1, got " + std::to_string(K));
}

RawGrid RawGrid::zeros(const GridSpec& spec) {
    RawGrid g;
    g.spec = spec;
    g.data.assign(spec.cell_count() * spec.channels_per_cell(), 0.0);
    return g;
}

CellIndex cell_of(double x, double y, double z, const GridSpec& spec) {
    spec.validate();
    const auto one = [&](double v, const char* axis) {
        if (!(v >= 0.0 && v <= 1.0))
            throw RangeError(std::string("cell_of: ") + axis + " = " + std::to_string(v) +
                             " outside [0, 1]");
        return std::min(static_cast<int>(std::floor(v * spec.S)), spec.S - 1);
    };
    return {one(x, "x"), one(y, "y"), one(z, "z")};
}

TargetGrid encode_targets(std::span<const Box3D> boxes, const GridSpec& spec) {
    spec.validate();
    TargetGrid grid;
    grid.spec = spec;
    grid.obj.assign(spec.cell_count(), 0);
    grid.cells.assign(spec.cell_count(), {});

    for (const Box3D& box : boxes) {
        const CellIndex c = cell_of(box.cx, box.cy, box.cz, spec);
        const std::size_t idx = spec.cell_index(c.i, c.j, c.k);
        if (grid.obj[idx]) {
            ++grid.collision_count;
            const TargetGrid::Cell& held = grid.cells[idx];
            if (box.volume() <= held.w * held.h * held.d) continue;
        }
        grid.obj[idx] = 1;
        grid.cells[idx] = {box.cx, box.cy, box.cz, box.w, box.h, box.d, box.class_id()};
    }
    return grid;
}

CellPrediction map_raw_to_cell(std::span<const double> raw, CellIndex cell, const GridSpec& spec) {
    const int ch = spec.channels_per_cell();
    if (static_cast<int>(raw.size()) != ch)
        throw DimensionError("map_raw_to_cell: expected " + std::to_string(ch) + " values, got " +
                             std::to_string(raw.size()));
    CellPrediction p;
    p.confidence = sigmoid_scalar(raw[0]);
    p.unreliable = sigmoid_scalar(raw[1]);
    p.x = (sigmoid_scalar(raw[2]) + cell.i) / spec.S;
    p.y = (sigmoid_scalar(raw[3]) + cell.j) / spec.S;
    p.z = (sigmoid_scalar(raw[4]) + cell.k) / spec.S;
    p.w = sigmoid_scalar(raw[5]);
    p.h = sigmoid_scalar(raw[6]);
    p.d = sigmoid_scalar(raw[7]);
    p.class_probs.resize(spec.K);
    for (int k = 0; k < spec.K; ++k) p.class_probs[k] = sigmoid_scalar(raw[8 + k]);
    return p;
}

std::vector<Box3D> decode_grid(const RawGrid& raw, const GridSpec& spec, double confidence_floor) {
    spec.validate();
    if (!(raw.spec.S == spec.S && raw.spec.K == spec.K) ||
        raw.data.size() != spec.cell_count() * spec.channels_per_cell())
        throw DimensionError("decode_grid: raw grid spec (S=" + std::to_string(raw.spec.S) +
                             ", K=" + std::to_string(raw.spec.K) + ") does not match (S=" +
                             std::to_string(spec.S) + ", K=" + std::to_string(spec.K) + ")");

    std::vector<Box3D> boxes;
    for (int k = 0; k < spec.S; ++k)
        for (int j = 0; j < spec.S; ++j)
            for (int i = 0; i < spec.S; ++i) {
                const CellPrediction p = map_raw_to_cell(raw.cell(i, j, k), {i, j, k}, spec);
                if (p.confidence < confidence_floor) continue;
                Box3D b;
                b.cx = p.x;
                b.cy = p.y;
                b.cz = p.z;
                b.w = p.w;
                b.h = p.h;
                b.d = p.d;
                b.confidence = p.confidence;
                b.class_scores = p.class_probs;
                boxes.push_back(std::move(b));
            }
    return boxes;
}

RawGrid logits_from_targets(const TargetGrid& targets) {
    const GridSpec& spec = targets.spec;
    RawGrid raw = RawGrid::zeros(spec);
    constexpr double kOff = -30.0; // sigmoid(-30) ~= 9e-14, safely below any floor

    for (int k = 0; k < spec.S; ++k)
        for (int j = 0; j < spec.S; ++j)
            for (int i = 0; i < spec.S; ++i) {
                auto cell = raw.cell_mut(i, j, k);
                if (!targets.occupied(i, j, k)) {
                    cell[0] = kOff;
                    continue;
                }
                const TargetGrid::Cell& t = targets.cells[spec.cell_index(i, j, k)];
                cell[0] = logit_scalar(1.0);
                cell[1] = kOff;
                cell[2] = logit_scalar(t.x * spec.S - i);
                cell[3] = logit_scalar(t.y * spec.S - j);
                cell[4] = logit_scalar(t.z * spec.S - k);
                cell[5] = logit_scalar(t.w);
                cell[6] = logit_scalar(t.h);
                cell[7] = logit_scalar(t.d);
                for (int c = 0; c < spec.K; ++c)
                    cell[8 + c] = (c == t.class_id) ? logit_scalar(1.0) : logit_scalar(0.0);
            }
    return raw;
}

Tensor decode_raw_tensor(const Tensor& raw, const GridSpec& spec) {
    spec.validate();
    const Shape4 s = raw.shape();
    const int ch = spec.channels_per_cell();
    if (s.c != spec.S * ch || s.h != spec.S || s.w != spec.S)
        throw DimensionError("decode_raw_tensor: raw shape " + to_string(s) + " does not match " +
                             std::to_string(spec.S * ch) + " channels at " + std::to_string(spec.S) +
                             "x" + std::to_string(spec.S));

    // Constant offset/scale tensors implementing the per-cell decode:
    // slot 2 -> (+i)/S, slot 3 -> (+j)/S, slot 4 -> (+k)/S, rest identity.
    std::vector<double> offsets(s.count(), 0.0);
    std::vector<double> scales(s.count(), 1.0);
    const double inv_s = 1.0 / spec.S;
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const int slot = c % ch;
            const int g = c / ch;
            if (slot < 2 || slot > 4) continue;
            double* off = offsets.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
            double* scl = scales.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
            for (int j = 0; j < s.h; ++j)
                for (int i = 0; i < s.w; ++i) {
                    const std::size_t at = static_cast<std::size_t>(j) * s.w + i;
                    off[at] = slot == 2 ? i : (slot == 3 ? j : g);
                    scl[at] = inv_s;
                }
        }

    const Tensor offset_t = Tensor::from_values(s, std::move(offsets));
    const Tensor scale_t = Tensor::from_values(s, std::move(scales));
    return mul(add(sigmoid(raw), offset_t), scale_t);
}

} // namespace eyolo
