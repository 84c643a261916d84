#include "facedet/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "facedet/rng.hpp"

namespace facedet {

void ScorerConfig::validate() const {
    if (!std::isfinite(noise_sigma) || noise_sigma < 0.0)
        throw std::invalid_argument("scorer: noise sigma must be >= 0");
    if (!std::isfinite(regression_quality) || regression_quality < 0.0 ||
        regression_quality > 1.0)
        throw std::invalid_argument("scorer: regression quality must lie in [0, 1]");
}

ScoredAnchors score_anchors(const AnchorLattice& lattice, std::span<const Box> gts,
                            const ScorerConfig& cfg, const MaxOutConfig& maxout) {
    cfg.validate();
    maxout.validate();
    const auto quality = cfg.quality_fn ? cfg.quality_fn : [](double v) { return v; };

    ScoredAnchors out;
    out.count = lattice.size();
    out.c_p = maxout.c_p;
    out.c_n = maxout.c_n;
    out.face_probs.resize(out.count * static_cast<size_t>(maxout.c_p));
    out.bg_probs.resize(out.count * static_cast<size_t>(maxout.c_n));
    out.step1_deltas.assign(out.count * 4, 0.0);
    out.step2_deltas.assign(out.count * 4, 0.0);
    out.max_iou.assign(out.count, 0.0);
    out.best_gt.assign(out.count, -1);

    Rng rng(cfg.seed);
    const double rq = cfg.regression_quality;
    for (size_t i = 0; i < out.count; ++i) {
        const Box& a = lattice.anchors[i];
        double best = 0.0;
        int best_idx = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            const double v = iou(a, gts[g]);
            if (v > best) {
                best = v;
                best_idx = static_cast<int>(g);
            }
        }
        out.max_iou[i] = best;
        out.best_gt[i] = best_idx;

        const double q = std::clamp(quality(best), 0.0, 1.0);
        for (int c = 0; c < maxout.c_p; ++c) {
            double p = q;
            if (cfg.noise_sigma > 0.0) p += cfg.noise_sigma * rng.normal();
            out.face_probs[i * static_cast<size_t>(maxout.c_p) + c] =
                std::clamp(p, kProbEps, 1.0 - kProbEps);
        }
        for (int c = 0; c < maxout.c_n; ++c) {
            double p = 1.0 - q;
            if (cfg.noise_sigma > 0.0) p += cfg.noise_sigma * rng.normal();
            out.bg_probs[i * static_cast<size_t>(maxout.c_n) + c] =
                std::clamp(p, kProbEps, 1.0 - kProbEps);
        }

        if (best_idx < 0) continue;
        const Box& g = gts[static_cast<size_t>(best_idx)];
        const double s = lattice.strides[i];
        const double d1[4] = {rq * (g.x1 - a.x1) / s, rq * (g.y1 - a.y1) / s,
                              rq * (g.x2 - a.x2) / s, rq * (g.y2 - a.y2) / s};
        for (int k = 0; k < 4; ++k) out.step1_deltas[i * 4 + k] = d1[k];

        // The step-two regressor sees the refined anchor on refinement levels
        // and the untouched anchor on filtering levels.
        double base[4] = {a.x1, a.y1, a.x2, a.y2};
        if (lattice.is_str_level(lattice.level_of[i]))
            for (int k = 0; k < 4; ++k) base[k] += d1[k] * s;
        const double gcorner[4] = {g.x1, g.y1, g.x2, g.y2};
        for (int k = 0; k < 4; ++k) out.step2_deltas[i * 4 + k] = rq * (gcorner[k] - base[k]) / s;
    }
    return out;
}

}  // namespace facedet
