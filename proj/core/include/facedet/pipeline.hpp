#pragma once

#include <map>
#include <span>
#include <utility>

#include "facedet/config.hpp"
#include "facedet/evaluation.hpp"
#include "facedet/scorer.hpp"

namespace facedet {

/**
 * @brief End-to-end synthetic detector: score the lattice against hidden
 * ground truth, run the two-step machinery (background filtering on low
 * levels, anchor refinement on high levels), and fuse the per-scale runs.
 *
 * Images live in the configured pyramid input frame. Lattices are cached per
 * rescaled size, so repeated scales cost one construction.
 */
class Simulator {
public:
    Simulator(RunConfig cfg, double noise_sigma, double regression_quality);

    /// One run per configured scale (plus mirrored runs when flip is on).
    std::vector<ScaleRun> scale_runs(const GroundTruthImage& image, std::uint64_t image_seed);

    /// scale_runs fused by merge_scales.
    std::vector<Detection> detect(const GroundTruthImage& image, std::uint64_t image_seed);

    const RunConfig& config() const { return cfg_; }

private:
    const AnchorLattice& lattice_for(double width, double height);
    std::vector<Detection> run_one(std::span<const Box> gts, double scale, bool flipped,
                                   std::uint64_t seed);

    RunConfig cfg_;
    double sigma_;
    double rq_;
    std::map<std::pair<long, long>, AnchorLattice> cache_;
};

/// Per-image seeds derive from cfg.seed and the image's position in `images`.
DetectionMap simulate(std::span<const GroundTruthImage> images, const RunConfig& cfg,
                      double noise_sigma, double regression_quality);

}  // namespace facedet
