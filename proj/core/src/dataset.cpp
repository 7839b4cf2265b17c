#include "eyolo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "eyolo/errors.hpp"
#include "eyolo/png_io.hpp"
#include "eyolo/rng.hpp"

namespace eyolo {

namespace fs = std::filesystem;

double normalize_depth_mm(double depth_mm) {
    return std::clamp(depth_mm / kDepthRangeMm, 0.0, 1.0);
}

void SceneSpec::validate() const {
    if (scene_count < 1)
        throw ConfigError("SceneSpec: scene_count must be >= 1, got " +
                          std::to_string(scene_count));
    if (object_count < 1 || object_count > 5)
        throw ConfigError("SceneSpec: object_count must be in 1..5, got " +
                          std::to_string(object_count));
    if (depth_range_m <= 0.0)
        throw ConfigError("SceneSpec: depth_range_m must be positive");
    if (image_size < 16)
        throw ConfigError("SceneSpec: image_size must be >= 16, got " +
                          std::to_string(image_size));
    if (person_fraction < 0.0 || person_fraction > 1.0)
        throw ConfigError("SceneSpec: person_fraction must be in [0, 1]");
    if (class_count < 1) throw ConfigError("SceneSpec: class_count must be >= 1");
}

namespace {

std::vector<Box3D> parse_labels(const fs::path& path, int class_count) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<Box3D> boxes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int class_id = 0;
        double cx = 0, cy = 0, cz = 0, w = 0, h = 0, d = 0;
        if (!(ls >> class_id >> cx >> cy >> cz >> w >> h >> d))
            throw ParseError(path.string() + " line " + std::to_string(line_no) +
                             ": expected `class_id cx cy cz w h d`, got \"" + line + "\"");
        std::string extra;
        if (ls >> extra)
            throw ParseError(path.string() + " line " + std::to_string(line_no) +
                             ": trailing token \"" + extra + "\"");
        boxes.push_back(Box3D::with_class(class_id, std::max(class_count, class_id + 1), cx, cy,
                                          cz, w, h, d));
    }
    return boxes;
}

// Half-pixel-center bilinear resize of one channel plane.
void resize_bilinear(const double* src, int sw, int sh, double* dst, int dw, int dh) {
    if (sw == dw && sh == dh) {
        std::copy_n(src, static_cast<std::size_t>(sw) * sh, dst);
        return;
    }
    const double sx = static_cast<double>(sw) / dw;
    const double sy = static_cast<double>(sh) / dh;
    for (int y = 0; y < dh; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, sh - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double wy = fy - y0;
        for (int x = 0; x < dw; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, sw - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double wx = fx - x0;
            const double top = src[y0 * sw + x0] * (1.0 - wx) + src[y0 * sw + x1] * wx;
            const double bot = src[y1 * sw + x0] * (1.0 - wx) + src[y1 * sw + x1] * wx;
            dst[y * dw + x] = top * (1.0 - wy) + bot * wy;
        }
    }
}

void format_label_line(char* buf, std::size_t n, const Box3D& b) {
    std::snprintf(buf, n, "%d %.6f %.6f %.6f %.6f %.6f %.6f", b.class_id(), b.cx, b.cy, b.cz, b.w,
                  b.h, b.d);
}

} // namespace

Sample load_sample(const fs::path& dir, int input_size) {
    const fs::path color_path = dir / "color.png";
    const fs::path depth_path = dir / "depth.png";
    const fs::path label_path = dir / "labels.txt";
    for (const fs::path* p : {&color_path, &depth_path, &label_path})
        if (!fs::exists(*p)) throw IoError("missing file: " + p->string());

    const ImageU8 color = read_png_rgb8(color_path);
    const ImageU16 depth = read_png_gray16(depth_path);
    if (color.width != depth.width || color.height != depth.height)
        throw FormatError("color " + std::to_string(color.width) + "x" +
                          std::to_string(color.height) + " vs depth " +
                          std::to_string(depth.width) + "x" + std::to_string(depth.height) +
                          " size mismatch in " + dir.string());

    const int sw = color.width, sh = color.height;
    const std::size_t splane = static_cast<std::size_t>(sw) * sh;
    std::vector<double> channels(4 * splane);
    for (int y = 0; y < sh; ++y)
        for (int x = 0; x < sw; ++x) {
            const std::size_t at = static_cast<std::size_t>(y) * sw + x;
            for (int c = 0; c < 3; ++c) channels[c * splane + at] = color.at(x, y, c) / 255.0;
            channels[3 * splane + at] = normalize_depth_mm(depth.at(x, y));
        }

    const std::size_t dplane = static_cast<std::size_t>(input_size) * input_size;
    std::vector<double> values(4 * dplane);
    for (int c = 0; c < 4; ++c)
        resize_bilinear(channels.data() + c * splane, sw, sh, values.data() + c * dplane,
                        input_size, input_size);

    Sample sample;
    sample.input = Tensor::from_values(Shape4{1, 4, input_size, input_size}, std::move(values));
    sample.boxes = parse_labels(label_path, 2);
    sample.id = dir.filename().string();
    return sample;
}

std::vector<std::string> read_manifest(const fs::path& root) {
    const fs::path manifest = root / "manifest.txt";
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open: " + manifest.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ids.push_back(line);
    return ids;
}

std::vector<Sample> load_dataset(const fs::path& root, int input_size) {
    std::vector<Sample> samples;
    for (const std::string& id : read_manifest(root))
        samples.push_back(load_sample(root / id, input_size));
    return samples;
}

std::vector<SceneRecord> generate_synthetic(const SceneSpec& spec, const fs::path& out_dir) {
    spec.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    Rng rng(spec.seed);
    const int n = spec.image_size;
    std::vector<SceneRecord> records;
    std::ofstream manifest(out_dir / "manifest.txt");
    if (!manifest) throw IoError("cannot open for writing: " + (out_dir / "manifest.txt").string());

    for (int scene = 0; scene < spec.scene_count; ++scene) {
        char name[32];
        std::snprintf(name, sizeof(name), "scene%04d", scene);
        const fs::path dir = out_dir / name;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

        SceneRecord record;
        record.id = name;
        for (int obj = 0; obj < spec.object_count; ++obj) {
            const int class_id = rng.next_f64() < spec.person_fraction ? 0 : 1;
            const double w = rng.uniform(0.15, 0.4);
            const double h = rng.uniform(0.15, 0.4);
            const double d = rng.uniform(0.04, 0.18);
            const double cx = rng.uniform(w / 2.0 + 0.02, 0.98 - w / 2.0);
            const double cy = rng.uniform(h / 2.0 + 0.02, 0.98 - h / 2.0);
            const double cz = rng.uniform(d / 2.0 + 0.08, 0.92 - d / 2.0);
            record.boxes.push_back(
                Box3D::with_class(class_id, spec.class_count, cx, cy, cz, w, h, d));
        }

        // Flat per-object colors; persons warm, objects cool, so class is
        // recoverable from appearance.
        struct Paint {
            std::uint8_t r, g, b;
        };
        std::vector<Paint> paints;
        for (const Box3D& box : record.boxes) {
            if (box.class_id() == 0)
                paints.push_back({static_cast<std::uint8_t>(rng.uniform_int(170, 240)),
                                  static_cast<std::uint8_t>(rng.uniform_int(40, 110)),
                                  static_cast<std::uint8_t>(rng.uniform_int(30, 90))});
            else
                paints.push_back({static_cast<std::uint8_t>(rng.uniform_int(30, 90)),
                                  static_cast<std::uint8_t>(rng.uniform_int(60, 140)),
                                  static_cast<std::uint8_t>(rng.uniform_int(170, 240))});
        }

        ImageU8 color;
        color.width = color.height = n;
        color.pixels.assign(static_cast<std::size_t>(n) * n * 3, 0);
        ImageU16 depth;
        depth.width = depth.height = n;
        depth.pixels.assign(static_cast<std::size_t>(n) * n, 0);

        // Background: dark gray with mild noise, no depth return.
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const auto v = static_cast<std::uint8_t>(40 + rng.uniform_int(0, 14));
                color.at(x, y, 0) = v;
                color.at(x, y, 1) = v;
                color.at(x, y, 2) = v;
            }

        // Painter's order: far front face first, near last.
        std::vector<std::size_t> order(record.boxes.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return record.boxes[a].cz - record.boxes[a].d / 2.0 >
                   record.boxes[b].cz - record.boxes[b].d / 2.0;
        });

        for (std::size_t idx : order) {
            const Box3D& box = record.boxes[idx];
            const Paint paint = paints[idx];
            const double front_mm = (box.cz - box.d / 2.0) * spec.depth_range_m * 1000.0;
            const auto front =
                static_cast<std::uint16_t>(std::lround(std::clamp(front_mm, 1.0, 65535.0)));
            const int x0 = std::clamp(static_cast<int>(std::lround((box.cx - box.w / 2.0) * n)), 0, n);
            const int x1 = std::clamp(static_cast<int>(std::lround((box.cx + box.w / 2.0) * n)), 0, n);
            const int y0 = std::clamp(static_cast<int>(std::lround((box.cy - box.h / 2.0) * n)), 0, n);
            const int y1 = std::clamp(static_cast<int>(std::lround((box.cy + box.h / 2.0) * n)), 0, n);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const auto jitter = [&](int base) {
                        return static_cast<std::uint8_t>(
                            std::clamp<long long>(base + rng.uniform_int(-10, 10), 0, 255));
                    };
                    color.at(x, y, 0) = jitter(paint.r);
                    color.at(x, y, 1) = jitter(paint.g);
                    color.at(x, y, 2) = jitter(paint.b);
                    depth.at(x, y) = front;
                }
        }

        write_png_rgb8(dir / "color.png", color);
        write_png_gray16(dir / "depth.png", depth);

        std::ofstream labels(dir / "labels.txt");
        if (!labels) throw IoError("cannot open for writing: " + (dir / "labels.txt").string());
        char buf[160];
        for (const Box3D& box : record.boxes) {
            format_label_line(buf, sizeof(buf), box);
            labels << buf << "\n";
        }
        if (!labels.good()) throw IoError("write failed: " + (dir / "labels.txt").string());

        manifest << name << "\n";
        records.push_back(std::move(record));
    }
    if (!manifest.good()) throw IoError("write failed: " + (out_dir / "manifest.txt").string());

    std::ofstream info(out_dir / "generator.txt");
    if (!info) throw IoError("cannot open for writing: " + (out_dir / "generator.txt").string());
    info << "seed " << spec.seed << "\n";
    info << "scene_count " << spec.scene_count << "\n";
    info << "object_count " << spec.object_count << "\n";
    info << "depth_range_m " << spec.depth_range_m << "\n";
    info << "image_size " << spec.image_size << "\n";
    info << "person_fraction " << spec.person_fraction << "\n";
    info << "class_count " << spec.class_count << "\n";
    return records;
}

} // namespace eyolo
