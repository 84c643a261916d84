#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "facedet/anchors.hpp"
#include "facedet/losses.hpp"

namespace facedet {

/**
 * @brief Deterministic stand-in for a trained network. Classification
 * quality is a function of each anchor's best IoU against the hidden ground
 * truth; regression emits the fraction regression_quality of the exact delta
 * that would land the anchor on its best-overlapping box.
 */
struct ScorerConfig {
    double noise_sigma = 0.0;
    double regression_quality = 1.0;
    std::uint64_t seed = 0;
    std::function<double(double)> quality_fn;  // default: identity on max IoU

    void validate() const;
};

struct ScoredAnchors {
    size_t count = 0;
    int c_p = 1;
    int c_n = 1;
    std::vector<double> face_probs;    // count x c_p
    std::vector<double> bg_probs;      // count x c_n
    std::vector<double> step1_deltas;  // count x 4
    std::vector<double> step2_deltas;  // count x 4
    std::vector<double> max_iou;       // best overlap per anchor
    std::vector<int> best_gt;          // -1 when no overlap

    std::span<const double> face_channels(size_t i) const {
        return {face_probs.data() + i * static_cast<size_t>(c_p), static_cast<size_t>(c_p)};
    }
    std::span<const double> bg_channels(size_t i) const {
        return {bg_probs.data() + i * static_cast<size_t>(c_n), static_cast<size_t>(c_n)};
    }
};

/**
 * @brief Score every lattice anchor against the ground truth. Face channels
 * carry clamp(quality(max IoU) + noise, eps, 1-eps); background channels the
 * complement with independent noise. Step-two deltas target the box left by
 * the step-one refinement on refinement levels and the original anchor on
 * filtering levels, so perfect regression puts step two exactly on target.
 */
ScoredAnchors score_anchors(const AnchorLattice& lattice, std::span<const Box> gts,
                            const ScorerConfig& cfg, const MaxOutConfig& maxout = {});

}  // namespace facedet
