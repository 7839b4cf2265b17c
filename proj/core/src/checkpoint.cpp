#include "eyolo/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <type_traits>

#include "eyolo/errors.hpp"

namespace eyolo {

namespace {

constexpr char kMagic[8] = {'E', 'Y', 'C', 'K', 'P', 'T', '0', '\n'};
constexpr std::uint32_t kVersion = 1;

// All integers and floats are stored little-endian.
template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(std::begin(bytes), std::end(bytes));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
        throw FormatError("checkpoint truncated: " + path.string());
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(std::begin(bytes), std::end(bytes));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
    for (const NamedArray& a : arrays)
        if (a.name == name) return &a;
    return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put(out, kVersion);
    put(out, ckpt.config_hash);
    put(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const NamedArray& a : ckpt.arrays) {
        put(out, static_cast<std::uint32_t>(a.name.size()));
        out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
        put(out, static_cast<std::uint32_t>(a.dims.size()));
        std::uint64_t count = 1;
        for (std::uint64_t d : a.dims) {
            put(out, d);
            count *= d;
        }
        if (count != a.data.size())
            throw StateError("checkpoint array " + a.name + ": dims product " +
                             std::to_string(count) + " != payload " +
                             std::to_string(a.data.size()));
        for (double v : a.data) put(out, v);
    }
    if (!out.good()) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char magic[sizeof(kMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("not a checkpoint file: " + path.string());
    const auto version = get<std::uint32_t>(in, path);
    if (version != kVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + ": " +
                          path.string());

    Checkpoint ckpt;
    ckpt.config_hash = get<std::uint64_t>(in, path);
    const auto array_count = get<std::uint32_t>(in, path);
    ckpt.arrays.reserve(array_count);
    for (std::uint32_t i = 0; i < array_count; ++i) {
        NamedArray a;
        const auto name_len = get<std::uint32_t>(in, path);
        a.name.resize(name_len);
        if (!in.read(a.name.data(), name_len))
            throw FormatError("checkpoint truncated: " + path.string());
        const auto rank = get<std::uint32_t>(in, path);
        std::uint64_t count = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            a.dims.push_back(get<std::uint64_t>(in, path));
            count *= a.dims.back();
        }
        a.data.resize(count);
        for (std::uint64_t j = 0; j < count; ++j) a.data[j] = get<double>(in, path);
        ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
}

Checkpoint checkpoint_from_network(const Network& net) {
    Checkpoint ckpt;
    ckpt.config_hash = net.config().hash();
    for (const NamedParam& p : net.parameters()) {
        const Shape4 s = p.tensor.shape();
        NamedArray a;
        a.name = p.name;
        a.dims = {static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.c),
                  static_cast<std::uint64_t>(s.h), static_cast<std::uint64_t>(s.w)};
        const auto v = p.tensor.values();
        a.data.assign(v.begin(), v.end());
        ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
}

void load_network_weights(Network& net, const Checkpoint& ckpt) {
    if (ckpt.config_hash != net.config().hash())
        throw StateError("checkpoint config hash " + std::to_string(ckpt.config_hash) +
                         " does not match network config hash " +
                         std::to_string(net.config().hash()));
    for (NamedParam& p : net.parameters()) {
        const NamedArray* a = ckpt.find(p.name);
        if (!a) throw StateError("checkpoint is missing array \"" + p.name + "\"");
        if (a->data.size() != p.tensor.size())
            throw DimensionError("checkpoint array \"" + p.name + "\" has " +
                                 std::to_string(a->data.size()) + " values, network expects " +
                                 std::to_string(p.tensor.size()));
        auto dst = p.tensor.values_mut();
        std::copy(a->data.begin(), a->data.end(), dst.begin());
    }
}

} // namespace eyolo
