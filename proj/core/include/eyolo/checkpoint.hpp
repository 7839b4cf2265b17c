#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eyolo/network.hpp"

namespace eyolo {

/// One named float64 array inside a checkpoint container.
struct NamedArray {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> data;
};

/// Versioned binary container: magic, format version, network config
/// hash, then per-array (name length, name, rank, dims, little-endian
/// float64 payload). Round trips are bit-exact.
struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::vector<NamedArray> arrays;

    const NamedArray* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Packs the network weights (names from Network::parameters()).
Checkpoint checkpoint_from_network(const Network& net);

/// Loads matching arrays back into the network. Verifies the config hash
/// and every shape; throws StateError/DimensionError on mismatch.
void load_network_weights(Network& net, const Checkpoint& ckpt);

} // namespace eyolo
