#include "facedet/anchors.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace facedet {

void PyramidConfig::validate() const {
    if (levels.empty()) throw std::invalid_argument("pyramid: levels must be non-empty");
    int prev = 0;
    for (const auto& lvl : levels) {
        if (lvl.stride <= 0 || (lvl.stride & (lvl.stride - 1)) != 0)
            throw std::invalid_argument("pyramid: stride must be a positive power of two at level " + lvl.name);
        if (lvl.stride <= prev)
            throw std::invalid_argument("pyramid: strides must be strictly increasing at level " + lvl.name);
        prev = lvl.stride;
    }
    if (scale_multipliers.empty())
        throw std::invalid_argument("pyramid: scale_multipliers must be non-empty");
    for (double m : scale_multipliers)
        if (!(m > 0.0) || !std::isfinite(m))
            throw std::invalid_argument("pyramid: scale_multipliers must be positive and finite");
    if (!(aspect_ratio > 0.0) || !std::isfinite(aspect_ratio))
        throw std::invalid_argument("pyramid: aspect_ratio must be positive and finite");
    if (!(input_width > 0.0) || !(input_height > 0.0))
        throw std::invalid_argument("pyramid: input size must be positive");
    if (input_width < levels.back().stride || input_height < levels.back().stride)
        throw std::invalid_argument("pyramid: input smaller than the top stride leaves level " +
                                    levels.back().name + " empty");
}

void StepThresholds::validate() const {
    if (!(theta_n >= 0.0) || !(theta_n < 1.0))
        throw std::invalid_argument("thresholds: theta_n must lie in [0, 1)");
    if (!(theta_p > theta_n) || !(theta_p <= 1.0))
        throw std::invalid_argument("thresholds: theta_n < theta_p violated");
}

AnchorLattice build_lattice(const PyramidConfig& cfg) {
    cfg.validate();

    AnchorLattice lat;
    const std::size_t a_per_cell = cfg.anchors_per_cell();
    const double sqrt_ratio = std::sqrt(cfg.aspect_ratio);

    std::size_t total = 0;
    for (const auto& lvl : cfg.levels) {
        AnchorLattice::Level out;
        out.name = lvl.name;
        out.stride = lvl.stride;
        out.grid_w = static_cast<std::size_t>(std::ceil(cfg.input_width / lvl.stride));
        out.grid_h = static_cast<std::size_t>(std::ceil(cfg.input_height / lvl.stride));
        out.first = total;
        out.count = out.grid_w * out.grid_h * a_per_cell;
        total += out.count;
        lat.levels.push_back(std::move(out));
    }

    lat.anchors.reserve(total);
    lat.strides.reserve(total);
    lat.level_of.reserve(total);

    for (std::size_t li = 0; li < lat.levels.size(); ++li) {
        const auto& lvl = lat.levels[li];
        const double stride = static_cast<double>(lvl.stride);
        for (std::size_t j = 0; j < lvl.grid_h; ++j) {
            const double cy = (static_cast<double>(j) + 0.5) * stride;
            for (std::size_t i = 0; i < lvl.grid_w; ++i) {
                const double cx = (static_cast<double>(i) + 0.5) * stride;
                for (double m : cfg.scale_multipliers) {
                    const double scale = m * stride;  // geometric-mean side
                    const double w = scale / sqrt_ratio;
                    const double h = scale * sqrt_ratio;
                    lat.anchors.emplace_back(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
                    lat.strides.push_back(lvl.stride);
                    lat.level_of.push_back(li);
                }
            }
        }
    }
    return lat;
}

std::string dump_lattice(const AnchorLattice& lattice) {
    std::string out;
    out.reserve(lattice.size() * 48);
    char line[160];
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        const Box& b = lattice.anchors[i];
        const auto& lvl = lattice.levels[lattice.level_of[i]];
        std::snprintf(line, sizeof(line), "%s %zu %.4f %.4f %.4f %.4f\n", lvl.name.c_str(), i,
                      b.x1, b.y1, b.x2, b.y2);
        out += line;
    }
    return out;
}

Assignment::Assignment(std::vector<std::int32_t> labels) : labels_(std::move(labels)) {
    for (std::int32_t l : labels_) {
        if (l >= 0)
            ++n_pos_;
        else if (l == kNegative)
            ++n_neg_;
        else if (l == kIgnored)
            ++n_ign_;
        else
            throw std::invalid_argument("Assignment: invalid label encoding");
    }
}

Assignment assign(std::span<const Box> anchors, std::span<const Box> gts, const StepThresholds& th) {
    th.validate();

    std::vector<std::int32_t> labels(anchors.size(), Assignment::kNegative);
    if (gts.empty()) return Assignment(std::move(labels));

    for (std::size_t i = 0; i < anchors.size(); ++i) {
        double best = 0.0;
        std::int32_t best_gt = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            const double v = iou(anchors[i], gts[g]);
            if (v > best) {  // strict: ties keep the lowest GT index
                best = v;
                best_gt = static_cast<std::int32_t>(g);
            }
        }
        if (best >= th.theta_p)
            labels[i] = best_gt;
        else if (best >= th.theta_n)
            labels[i] = Assignment::kIgnored;
    }
    return Assignment(std::move(labels));
}

Box refine_one(const Box& anchor, std::span<const double> delta, double stride) {
    if (delta.size() != 4) throw std::invalid_argument("refine: delta must have 4 components");
    for (double d : delta)
        if (!std::isfinite(d)) throw std::invalid_argument("refine: non-finite delta");
    double x1 = anchor.x1 + delta[0] * stride;
    double y1 = anchor.y1 + delta[1] * stride;
    double x2 = anchor.x2 + delta[2] * stride;
    double y2 = anchor.y2 + delta[3] * stride;
    if (x2 - x1 < 1.0) {
        const double cx = 0.5 * (x1 + x2);
        x1 = cx - 0.5;
        x2 = cx + 0.5;
    }
    if (y2 - y1 < 1.0) {
        const double cy = 0.5 * (y1 + y2);
        y1 = cy - 0.5;
        y2 = cy + 0.5;
    }
    return Box(x1, y1, x2, y2);
}

std::vector<Box> refine_anchors(std::span<const Box> anchors, std::span<const double> deltas,
                                std::span<const int> strides) {
    if (deltas.size() != anchors.size() * 4)
        throw std::invalid_argument("refine_anchors: need 4 deltas per anchor");
    if (strides.size() != anchors.size())
        throw std::invalid_argument("refine_anchors: need one stride per anchor");

    std::vector<Box> out;
    out.reserve(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i)
        out.push_back(refine_one(anchors[i], deltas.subspan(i * 4, 4),
                                 static_cast<double>(strides[i])));
    return out;
}

std::pair<Assignment, Assignment> two_step_assign(const AnchorLattice& lattice,
                                                  std::span<const Box> gts,
                                                  std::span<const Box> refined,
                                                  const StepThresholds& th1,
                                                  const StepThresholds& th2) {
    if (refined.size() != lattice.size())
        throw std::invalid_argument("two_step_assign: refined box count must match the lattice");
    Assignment first = assign(lattice.anchors, gts, th1);
    Assignment second = assign(refined, gts, th2);
    return {std::move(first), std::move(second)};
}

}  // namespace facedet
