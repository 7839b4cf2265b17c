#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eyolo/geometry.hpp"
#include "eyolo/tensor.hpp"

namespace eyolo {

/// Detection grid geometry: S cells per axis, one box per cell, K classes,
/// 8 + K channels per cell.
struct GridSpec {
    int S = 26;
    int B = 1;
    int K = 2;

    int channels_per_cell() const { return 8 + K; }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(S) * static_cast<std::size_t>(S) *
               static_cast<std::size_t>(S);
    }
    std::size_t cell_index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * S + j) * S + i;
    }
    void validate() const;
};

struct CellIndex {
    int i = 0; // x
    int j = 0; // y
    int k = 0; // depth
    bool operator==(const CellIndex&) const = default;
};

/// Decoded per-cell prediction; every field is sigmoid-bounded, anchor
/// coordinates are global normalized values after cell-offset decoding.
struct CellPrediction {
    double confidence = 0.0;
    double unreliable = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;
    double w = 0.0, h = 0.0, d = 0.0;
    std::vector<double> class_probs;
};

/// Supervision grid: per-cell objectness plus target box values.
struct TargetGrid {
    struct Cell {
        double x = 0.0, y = 0.0, z = 0.0;
        double w = 0.0, h = 0.0, d = 0.0;
        int class_id = 0;
    };

    GridSpec spec;
    std::vector<std::uint8_t> obj; // S^3 flags, cell_index order
    std::vector<Cell> cells;       // valid where obj is set
    int collision_count = 0;

    bool occupied(int i, int j, int k) const { return obj[spec.cell_index(i, j, k)] != 0; }
};

/// Raw network output reorganized as S^3 cells x (8+K) values, cell-major
/// in cell_index order.
struct RawGrid {
    GridSpec spec;
    std::vector<double> data;

    std::span<const double> cell(int i, int j, int k) const {
        const int ch = spec.channels_per_cell();
        return {data.data() + spec.cell_index(i, j, k) * ch, static_cast<std::size_t>(ch)};
    }
    std::span<double> cell_mut(int i, int j, int k) {
        const int ch = spec.channels_per_cell();
        return {data.data() + spec.cell_index(i, j, k) * ch, static_cast<std::size_t>(ch)};
    }
    static RawGrid zeros(const GridSpec& spec);
};

/// Cell owning a normalized center; throws RangeError outside [0,1]^3.
CellIndex cell_of(double x, double y, double z, const GridSpec& spec);

/// Builds supervision from ground-truth boxes. When two boxes land in the
/// same cell the larger volume wins and the collision counter increments.
TargetGrid encode_targets(std::span<const Box3D> boxes, const GridSpec& spec);

/// Decodes one cell's raw values: sigmoids everywhere, anchor offsets
/// shifted by the cell index and divided by S.
CellPrediction map_raw_to_cell(std::span<const double> raw, CellIndex cell, const GridSpec& spec);

/// Decodes a whole grid and emits a box per cell at or above the floor.
std::vector<Box3D> decode_grid(const RawGrid& raw, const GridSpec& spec, double confidence_floor);

/// Inverse-sigmoid construction: a raw grid whose decode reproduces the
/// targets (occupied-cell confidence saturated high, empty cells low).
RawGrid logits_from_targets(const TargetGrid& targets);

/// Differentiable decode over the packed network output
/// (batch, S*(8+K), S, S): sigmoid, then the same per-cell offset/scale
/// applied through constant tensors. Matches map_raw_to_cell exactly.
Tensor decode_raw_tensor(const Tensor& raw, const GridSpec& spec);

} // namespace eyolo
