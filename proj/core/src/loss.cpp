#include "eyolo/loss.hpp"

#include <vector>

#include "eyolo/errors.hpp"
#include "eyolo/ops.hpp"

namespace eyolo {

void LossConfig::validate() const {
    if (lambda_coord < 0.0)
        throw ConfigError("LossConfig: lambda_coord must be >= 0, got " +
                          std::to_string(lambda_coord));
    if (lambda_noobj < 0.0)
        throw ConfigError("LossConfig: lambda_noobj must be >= 0, got " +
                          std::to_string(lambda_noobj));
}

namespace {

// Flat index of (n, cell (i,j,k), slot) in the packed (batch, S*ch, S, S)
// layout: channel = k*ch + slot, row = j, col = i.
std::size_t packed_index(const Shape4& s, const GridSpec& spec, int n, int i, int j, int k,
                         int slot) {
    const int c = k * spec.channels_per_cell() + slot;
    return ((static_cast<std::size_t>(n) * s.c + c) * s.h + j) * s.w + i;
}

} // namespace

LossBreakdown compute_loss(const Tensor& decoded, std::span<const TargetGrid> targets,
                           const LossConfig& cfg, const GridSpec& spec) {
    cfg.validate();
    spec.validate();
    const Shape4 s = decoded.shape();
    const int ch = spec.channels_per_cell();
    if (s.c != spec.S * ch || s.h != spec.S || s.w != spec.S)
        throw DimensionError("compute_loss: decoded shape " + to_string(s) +
                             " does not match grid spec S=" + std::to_string(spec.S) +
                             ", K=" + std::to_string(spec.K));
    if (static_cast<std::size_t>(s.n) != targets.size())
        throw DimensionError("compute_loss: batch " + std::to_string(s.n) + " but " +
                             std::to_string(targets.size()) + " target grids");
    for (const TargetGrid& t : targets)
        if (t.spec.S != spec.S || t.spec.K != spec.K)
            throw DimensionError("compute_loss: target grid spec (S=" + std::to_string(t.spec.S) +
                                 ") does not match loss spec (S=" + std::to_string(spec.S) + ")");

    const std::size_t count = s.count();
    std::vector<double> target_vals(count, 0.0);
    std::vector<double> mask_center(count, 0.0);
    std::vector<double> mask_size(count, 0.0);
    std::vector<double> mask_conf_obj(count, 0.0);
    std::vector<double> mask_conf_noobj(count, 0.0);
    std::vector<double> mask_class(count, 0.0);

    for (int n = 0; n < s.n; ++n) {
        const TargetGrid& tg = targets[n];
        for (int k = 0; k < spec.S; ++k)
            for (int j = 0; j < spec.S; ++j)
                for (int i = 0; i < spec.S; ++i) {
                    const std::size_t conf_at = packed_index(s, spec, n, i, j, k, 0);
                    if (!tg.occupied(i, j, k)) {
                        mask_conf_noobj[conf_at] = cfg.lambda_noobj;
                        continue;
                    }
                    const TargetGrid::Cell& cell = tg.cells[spec.cell_index(i, j, k)];
                    target_vals[conf_at] = 1.0;
                    mask_conf_obj[conf_at] = cfg.lambda_coord;
                    const double coords[6] = {cell.x, cell.y, cell.z, cell.w, cell.h, cell.d};
                    for (int slot = 2; slot <= 7; ++slot) {
                        const std::size_t at = packed_index(s, spec, n, i, j, k, slot);
                        target_vals[at] = coords[slot - 2];
                        (slot <= 4 ? mask_center : mask_size)[at] = cfg.lambda_coord;
                    }
                    for (int c = 0; c < spec.K; ++c) {
                        const std::size_t at = packed_index(s, spec, n, i, j, k, 8 + c);
                        target_vals[at] = (c == cell.class_id) ? 1.0 : 0.0;
                        mask_class[at] = 1.0;
                    }
                }
    }

    const Tensor target_t = Tensor::from_values(s, std::move(target_vals));
    const Tensor diff = sub(decoded, target_t);
    const Tensor sq = mul(diff, diff);
    const double inv_batch = 1.0 / s.n;
    const auto term = [&](std::vector<double>&& mask) {
        return scale(sum(mul(sq, Tensor::from_values(s, std::move(mask)))), inv_batch);
    };

    const Tensor center = term(std::move(mask_center));
    const Tensor size = term(std::move(mask_size));
    const Tensor conf_obj = term(std::move(mask_conf_obj));
    const Tensor conf_noobj = term(std::move(mask_conf_noobj));
    const Tensor cls = term(std::move(mask_class));

    LossBreakdown out;
    out.center_term = center.values()[0];
    out.size_term = size.values()[0];
    out.conf_obj_term = conf_obj.values()[0];
    out.conf_noobj_term = conf_noobj.values()[0];
    out.class_term = cls.values()[0];
    out.total_tensor = add(add(add(add(center, size), conf_obj), conf_noobj), cls);
    out.total = out.total_tensor.values()[0];
    return out;
}

} // namespace eyolo
