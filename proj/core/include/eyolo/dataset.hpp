#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eyolo/geometry.hpp"
#include "eyolo/tensor.hpp"

namespace eyolo {

/// One RGB-D training example. The input tensor is (1, 4, N, N) with
/// R, G, B scaled to [0,1] and depth normalized by the 10 m range.
struct Sample {
    Tensor input;
    std::vector<Box3D> boxes;
    std::string id;
};

/// Synthetic scene generation parameters.
struct SceneSpec {
    std::uint64_t seed = 0;
    int scene_count = 16;
    int object_count = 3; // cuboids per scene, valid range 1..5
    double depth_range_m = 10.0;
    int image_size = 128;
    double person_fraction = 0.5; // share of class-0 (person) objects
    int class_count = 2;

    void validate() const;
};

/// Geometry record a generated scene was rendered from; ground truth for
/// the rendering oracles.
struct SceneRecord {
    std::string id;
    std::vector<Box3D> boxes;
};

constexpr double kDepthRangeMm = 10000.0;

/// Normalized depth from millimeters: clamp(mm / 10000, 0, 1).
double normalize_depth_mm(double depth_mm);

/// Loads `<dir>/color.png`, `<dir>/depth.png` and `<dir>/labels.txt`,
/// resizing bilinearly to input_size. The sample id is the directory name.
Sample load_sample(const std::filesystem::path& dir, int input_size);

/// Reads `manifest.txt` under root and loads every listed sample.
std::vector<Sample> load_dataset(const std::filesystem::path& root, int input_size);
std::vector<std::string> read_manifest(const std::filesystem::path& root);

/// Writes a deterministic synthetic cuboid dataset: per scene a color
/// image (flat per-object color plus pixel noise, painter's order far to
/// near), a 16-bit depth image holding front-face depths in millimeters,
/// and exact labels. Returns the generation record.
std::vector<SceneRecord> generate_synthetic(const SceneSpec& spec,
                                            const std::filesystem::path& out_dir);

} // namespace eyolo
