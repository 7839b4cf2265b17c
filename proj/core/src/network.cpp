#include "eyolo/network.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "eyolo/errors.hpp"
#include "eyolo/ops.hpp"
#include "eyolo/rng.hpp"

namespace eyolo {

namespace {

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

std::string join_int_list(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(values[i]);
    }
    return out;
}

// Kaiming-style uniform init for leaky-relu fan-in.
Tensor init_kernel(Rng& rng, int out_ch, int in_ch, int k) {
    const double fan_in = static_cast<double>(in_ch) * k * k;
    const double bound = std::sqrt(2.0 / (1.01 * fan_in)) * std::sqrt(3.0);
    const Shape4 shape{out_ch, in_ch, k, k};
    std::vector<double> values(shape.count());
    for (double& v : values) v = rng.uniform(-bound, bound);
    return Tensor::from_values(shape, std::move(values), /*requires_grad=*/true);
}

Tensor init_bias(int out_ch) {
    return Tensor::zeros(Shape4{1, out_ch, 1, 1}, /*requires_grad=*/true);
}

} // namespace

NetConfig NetConfig::tiny() {
    NetConfig cfg;
    cfg.preset = "tiny";
    cfg.input_size = 128;
    cfg.grid_s = 8;
    cfg.stem_width = 0;
    cfg.stage_widths = {8, 16, 32, 64, 128};
    cfg.stage_blocks = {1, 1, 1, 1, 1};
    cfg.head_width = 32;
    return cfg;
}

NetConfig NetConfig::full() {
    NetConfig cfg;
    cfg.preset = "full";
    cfg.input_size = 416;
    cfg.grid_s = 26;
    cfg.stem_width = 32;
    cfg.stage_widths = {64, 128, 256, 512, 1024};
    cfg.stage_blocks = {1, 2, 8, 8, 4};
    cfg.head_width = 256;
    return cfg;
}

NetConfig NetConfig::from_preset(const std::string& name) {
    if (name == "tiny") return tiny();
    if (name == "full") return full();
    throw ConfigError("unknown preset \"" + name + "\" (expected tiny or full)");
}

void NetConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("NetConfig: " + what); };
    if (in_channels != 4) fail("in_channels must be 4 (R, G, B, depth), got " +
                               std::to_string(in_channels));
    if (classes < 1) fail("classes must be >= 1, got " + std::to_string(classes));
    if (input_size <= 0 || grid_s <= 0) fail("input_size and grid_s must be positive");
    if (input_size / 16 != grid_s || input_size % 16 != 0)
        fail("input_size / 16 == grid_s violated: " + std::to_string(input_size) + " / 16 != " +
             std::to_string(grid_s));
    if (grid_s % 2 != 0 || input_size / 32 != grid_s / 2)
        fail("input_size / 32 == grid_s / 2 violated for input_size " +
             std::to_string(input_size));
    if (stage_widths.size() != 5)
        fail("exactly 5 stride-2 stages required to reach stride 32, got " +
             std::to_string(stage_widths.size()));
    if (stage_blocks.size() != stage_widths.size())
        fail("stage_blocks size " + std::to_string(stage_blocks.size()) +
             " != stage_widths size " + std::to_string(stage_widths.size()));
    for (int w : stage_widths)
        if (w < 2) fail("stage widths must be >= 2 (residual blocks halve them)");
    for (int b : stage_blocks)
        if (b < 0) fail("stage block counts must be >= 0");
    if (stem_width < 0) fail("stem_width must be >= 0");
    if (head_width < 1) fail("head_width must be >= 1");
    if (batchnorm) fail("batchnorm is reserved and not implemented; set batchnorm 0");
}

std::string NetConfig::to_text() const {
    std::ostringstream os;
    os << "preset " << preset << "\n";
    os << "input_size " << input_size << "\n";
    os << "grid_s " << grid_s << "\n";
    os << "in_channels " << in_channels << "\n";
    os << "classes " << classes << "\n";
    os << "stem_width " << stem_width << "\n";
    os << "stage_widths " << join_int_list(stage_widths) << "\n";
    os << "stage_blocks " << join_int_list(stage_blocks) << "\n";
    os << "head_width " << head_width << "\n";
    os << "batchnorm " << (batchnorm ? 1 : 0) << "\n";
    return os.str();
}

NetConfig NetConfig::from_text(const std::string& text) {
    NetConfig cfg;
    cfg.stage_widths.clear();
    cfg.stage_blocks.clear();
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key, value;
        if (!(ls >> key >> value))
            throw ParseError("network config line " + std::to_string(line_no) +
                             ": expected `key value`, got \"" + line + "\"");
        try {
            if (key == "preset") cfg.preset = value;
            else if (key == "input_size") cfg.input_size = std::stoi(value);
            else if (key == "grid_s") cfg.grid_s = std::stoi(value);
            else if (key == "in_channels") cfg.in_channels = std::stoi(value);
            else if (key == "classes") cfg.classes = std::stoi(value);
            else if (key == "stem_width") cfg.stem_width = std::stoi(value);
            else if (key == "stage_widths") cfg.stage_widths = parse_int_list(value);
            else if (key == "stage_blocks") cfg.stage_blocks = parse_int_list(value);
            else if (key == "head_width") cfg.head_width = std::stoi(value);
            else if (key == "batchnorm") cfg.batchnorm = std::stoi(value) != 0;
            else
                throw ParseError("network config line " + std::to_string(line_no) +
                                 ": unknown key \"" + key + "\"");
        } catch (const std::invalid_argument&) {
            throw ParseError("network config line " + std::to_string(line_no) +
                             ": invalid number \"" + value + "\"");
        }
    }
    return cfg;
}

NetConfig NetConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open network config: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_text(buffer.str());
}

void NetConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << to_text();
    if (!out.good()) throw IoError("write failed: " + path.string());
}

std::uint64_t NetConfig::hash() const { return fnv1a64(to_text()); }

Network build_network(const NetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Network net;
    net.cfg_ = cfg;
    Rng rng(seed);

    const auto conv = [&](const std::string& name, int in_ch, int out_ch, int k, int stride,
                          bool activate) {
        Network::Layer layer;
        layer.name = name;
        layer.params = ConvParams::same(init_kernel(rng, out_ch, in_ch, k), init_bias(out_ch),
                                        stride);
        layer.activate = activate;
        return layer;
    };

    int ch = cfg.in_channels;
    if (cfg.stem_width > 0) {
        net.stem_ = conv("stem", ch, cfg.stem_width, 3, 1, true);
        ch = cfg.stem_width;
    }

    for (std::size_t s = 0; s < cfg.stage_widths.size(); ++s) {
        Network::Stage stage;
        const int width = cfg.stage_widths[s];
        const std::string base = "stage" + std::to_string(s);
        stage.down = conv(base + ".down", ch, width, 3, 2, true);
        ch = width;
        for (int b = 0; b < cfg.stage_blocks[s]; ++b) {
            const std::string block = base + ".block" + std::to_string(b);
            Network::ResidualBlock rb;
            rb.reduce = conv(block + ".reduce", width, width / 2, 1, 1, true);
            rb.expand = conv(block + ".expand", width / 2, width, 3, 1, true);
            stage.blocks.push_back(std::move(rb));
        }
        net.stages_.push_back(std::move(stage));
    }

    // Head over the concatenated stride-16 and upsampled stride-32 scales.
    const int c16 = cfg.stage_widths[cfg.stage_widths.size() - 2];
    const int c32 = cfg.stage_widths.back();
    int head_ch = c16 + c32;
    const int hw = cfg.head_width;
    for (int pair = 0; pair < 3; ++pair) {
        const std::string base = "head" + std::to_string(pair);
        net.head_.push_back(conv(base + ".squeeze", head_ch, hw, 1, 1, true));
        net.head_.push_back(conv(base + ".extend", hw, 2 * hw, 3, 1, true));
        head_ch = 2 * hw;
    }
    net.project_ = conv("project", head_ch, cfg.head_channels(), 1, 1, /*activate=*/false);
    return net;
}

Tensor Network::apply(const Layer& layer, const Tensor& x) const {
    Tensor y = conv2d(x, layer.params);
    return layer.activate ? leaky_relu(y) : y;
}

Tensor Network::forward(const Tensor& input) {
    if (stages_.empty()) throw StateError("Network::forward: network not built");
    const Shape4 in = input.shape();
    if (in.c != cfg_.in_channels)
        throw DimensionError("Network::forward: expected 4 channels: R,G,B,depth; got input " +
                             to_string(in));
    if (in.h != cfg_.input_size || in.w != cfg_.input_size)
        throw DimensionError("Network::forward: expected " + std::to_string(cfg_.input_size) +
                             "x" + std::to_string(cfg_.input_size) + " input, got " +
                             to_string(in));

    Tensor x = input;
    if (stem_) x = apply(*stem_, x);

    Tensor scale16; // output of the second-to-last stage (stride 16)
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        const Stage& stage = stages_[s];
        x = apply(stage.down, x);
        for (const ResidualBlock& block : stage.blocks)
            x = add(x, apply(block.expand, apply(block.reduce, x)));
        if (s + 2 == stages_.size()) scale16 = x;
    }

    Tensor merged = concat_channels(scale16, upsample_nearest_2x(x));
    for (const Layer& layer : head_) merged = apply(layer, merged);
    return apply(project_, merged);
}

std::vector<NamedParam> Network::parameters() {
    std::vector<NamedParam> out;
    const auto push = [&out](const Layer& layer) {
        out.push_back({layer.name + ".weight", layer.params.kernel});
        out.push_back({layer.name + ".bias", layer.params.bias});
    };
    if (stem_) push(*stem_);
    for (const Stage& stage : stages_) {
        push(stage.down);
        for (const ResidualBlock& block : stage.blocks) {
            push(block.reduce);
            push(block.expand);
        }
    }
    for (const Layer& layer : head_) push(layer);
    push(project_);
    return out;
}

std::vector<NamedParam> Network::parameters() const {
    return const_cast<Network*>(this)->parameters();
}

std::size_t Network::parameter_count() const {
    std::size_t count = 0;
    for (const NamedParam& p : parameters()) count += p.tensor.size();
    return count;
}

void Network::zero_grad() {
    for (NamedParam& p : parameters()) p.tensor.zero_grad();
}

Network Network::clone() const {
    Network copy = build_network(cfg_, 0);
    auto src = parameters();
    auto dst = copy.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
        auto from = src[i].tensor.values();
        auto to = dst[i].tensor.values_mut();
        std::copy(from.begin(), from.end(), to.begin());
    }
    return copy;
}

RawGrid split_to_depth(const Tensor& features, const GridSpec& spec, int batch_index) {
    spec.validate();
    const Shape4 s = features.shape();
    const int ch = spec.channels_per_cell();
    if (s.c != spec.S * ch || s.h != spec.S || s.w != spec.S)
        throw DimensionError("split_to_depth: features " + to_string(s) + " do not match " +
                             std::to_string(spec.S * ch) + " channels at " +
                             std::to_string(spec.S) + "x" + std::to_string(spec.S));
    if (batch_index < 0 || batch_index >= s.n)
        throw RangeError("split_to_depth: batch index " + std::to_string(batch_index) +
                         " outside batch " + std::to_string(s.n));

    RawGrid grid = RawGrid::zeros(spec);
    const auto v = features.values();
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    const std::size_t base = static_cast<std::size_t>(batch_index) * s.c * plane;
    for (int k = 0; k < spec.S; ++k)
        for (int slot = 0; slot < ch; ++slot) {
            const std::size_t src = base + (static_cast<std::size_t>(k) * ch + slot) * plane;
            for (int j = 0; j < spec.S; ++j)
                for (int i = 0; i < spec.S; ++i)
                    grid.cell_mut(i, j, k)[slot] = v[src + static_cast<std::size_t>(j) * s.w + i];
        }
    return grid;
}

Tensor merge_from_depth(const RawGrid& grid) {
    const GridSpec& spec = grid.spec;
    spec.validate();
    const int ch = spec.channels_per_cell();
    const Shape4 s{1, spec.S * ch, spec.S, spec.S};
    if (grid.data.size() != s.count())
        throw DimensionError("merge_from_depth: grid payload " + std::to_string(grid.data.size()) +
                             " does not match spec S=" + std::to_string(spec.S));
    std::vector<double> out(s.count());
    const std::size_t plane = static_cast<std::size_t>(spec.S) * spec.S;
    for (int k = 0; k < spec.S; ++k)
        for (int slot = 0; slot < ch; ++slot) {
            const std::size_t dst = (static_cast<std::size_t>(k) * ch + slot) * plane;
            for (int j = 0; j < spec.S; ++j)
                for (int i = 0; i < spec.S; ++i)
                    out[dst + static_cast<std::size_t>(j) * spec.S + i] =
                        grid.cell(i, j, k)[slot];
        }
    return Tensor::from_values(s, std::move(out));
}

} // namespace eyolo
