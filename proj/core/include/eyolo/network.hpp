#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eyolo/conv.hpp"
#include "eyolo/grid_codec.hpp"
#include "eyolo/tensor.hpp"

namespace eyolo {

/// Network topology description. The backbone is a stem (optional) plus a
/// chain of stride-2 stages, each followed by residual blocks; the head
/// merges the stride-16 and stride-32 scales by nearest upsampling and
/// channel concat, runs alternating 1x1/3x3 convs and projects to
/// grid_S * (8 + classes) logit channels.
struct NetConfig {
    std::string preset = "tiny";
    int input_size = 128;
    int grid_s = 8;
    int in_channels = 4;
    int classes = 2;
    int stem_width = 0; // 0 = no stride-1 stem conv
    std::vector<int> stage_widths;
    std::vector<int> stage_blocks;
    int head_width = 32;
    bool batchnorm = false; // reserved; building with it set is an error

    static NetConfig tiny();
    static NetConfig full();
    static NetConfig from_preset(const std::string& name);

    GridSpec grid_spec() const { return GridSpec{grid_s, 1, classes}; }
    int head_channels() const { return grid_s * (8 + classes); }

    /// Throws ConfigError naming the violated invariant.
    void validate() const;

    /// Canonical key/value text form; identical configs serialize
    /// identically, and the checkpoint hash is taken over this text.
    std::string to_text() const;
    static NetConfig from_text(const std::string& text);
    static NetConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::uint64_t hash() const;
};

struct NamedParam {
    std::string name;
    Tensor tensor;
};

/// The detection network. Owns its weights; forward() records the
/// autodiff graph onto them unless recording is disabled.
class Network {
public:
    Network() = default;

    const NetConfig& config() const { return cfg_; }
    std::size_t parameter_count() const;

    /// Weight handles in a stable order (shared with the underlying
    /// storage, so optimizer updates are visible to the network).
    std::vector<NamedParam> parameters();
    std::vector<NamedParam> parameters() const;

    void zero_grad();

    /// Input must be (batch, 4, input_size, input_size) with the channel
    /// order R, G, B, depth. Returns head logits
    /// (batch, grid_S*(8+classes), grid_S, grid_S).
    Tensor forward(const Tensor& input);

    /// Deep copy with detached weight storage.
    Network clone() const;

    friend Network build_network(const NetConfig& cfg, std::uint64_t seed);

private:
    struct Layer {
        std::string name;
        ConvParams params;
        bool activate = true;
    };
    struct ResidualBlock {
        Layer reduce; // 1x1 to half width
        Layer expand; // 3x3 back to full width
    };
    struct Stage {
        Layer down; // 3x3 stride 2
        std::vector<ResidualBlock> blocks;
    };

    Tensor apply(const Layer& layer, const Tensor& x) const;

    NetConfig cfg_;
    std::optional<Layer> stem_;
    std::vector<Stage> stages_;
    std::vector<Layer> head_;
    Layer project_;
};

/// Deterministic construction: the same (config, seed) yields bit-identical
/// initial weights.
Network build_network(const NetConfig& cfg, std::uint64_t seed);

/// Reinterprets a (1-batch slice of a) packed head output as a 3D grid:
/// channel block g*(8+K)..+(8+K) of spatial cell (j, i) becomes cell
/// (i, j, k=g). Pure reindexing.
RawGrid split_to_depth(const Tensor& features, const GridSpec& spec, int batch_index = 0);

/// Exact inverse of split_to_depth for a single batch element.
Tensor merge_from_depth(const RawGrid& grid);

} // namespace eyolo
