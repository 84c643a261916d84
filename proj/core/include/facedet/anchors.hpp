#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facedet/box.hpp"

namespace facedet {

struct PyramidLevel {
    std::string name;
    int stride = 0;
};

/**
 * @brief Geometry of the detection pyramid.
 *
 * Each level places anchors_per_cell() anchors on a ceil(W/S) x ceil(H/S)
 * grid. An anchor for multiplier m at stride S has geometric-mean side m*S
 * and h/w equal to aspect_ratio.
 */
struct PyramidConfig {
    std::vector<PyramidLevel> levels = default_levels();
    std::vector<double> scale_multipliers = {2.0, 2.0 * std::numbers::sqrt2};
    double aspect_ratio = 1.25;  // h/w; faces are taller than wide
    double input_width = 1024.0;
    double input_height = 1024.0;

    static std::vector<PyramidLevel> default_levels() {
        return {{"P2", 4}, {"P3", 8}, {"P4", 16}, {"P5", 32}, {"P6", 64}, {"P7", 128}};
    }

    std::size_t anchors_per_cell() const { return scale_multipliers.size(); }

    /// Throws std::invalid_argument on any violated invariant.
    void validate() const;
};

/**
 * @brief The full anchor set, flat and level-major.
 *
 * Per level, anchors are laid out row-major over grid cells with the scale
 * multipliers innermost, so the global index of (level, row j, col i, mult a)
 * is level_offset + (j*grid_w + i)*A + a. Construction is deterministic.
 */
struct AnchorLattice {
    struct Level {
        std::string name;
        int stride = 0;
        std::size_t grid_w = 0, grid_h = 0;
        std::size_t first = 0;  // global index of the level's first anchor
        std::size_t count = 0;
    };

    std::vector<Level> levels;
    std::vector<Box> anchors;
    std::vector<int> strides;          // per anchor
    std::vector<std::size_t> level_of;  // per anchor

    std::size_t size() const { return anchors.size(); }

    /// Lowest half of the pyramid carries two-step classification.
    bool is_stc_level(std::size_t level) const { return level < levels.size() / 2; }
    /// Highest half carries two-step regression.
    bool is_str_level(std::size_t level) const { return level >= levels.size() / 2; }
};

AnchorLattice build_lattice(const PyramidConfig& cfg);

/// One line per anchor: "level index x1 y1 x2 y2", 4 decimals.
std::string dump_lattice(const AnchorLattice& lattice);

struct StepThresholds {
    double theta_n = 0.3;
    double theta_p = 0.7;

    void validate() const;
};

/**
 * @brief Per-anchor label for one assignment step.
 *
 * Encoding: gt index >= 0 for positives, kNegative, or kIgnored.
 */
class Assignment {
public:
    static constexpr std::int32_t kNegative = -1;
    static constexpr std::int32_t kIgnored = -2;

    Assignment() = default;
    explicit Assignment(std::vector<std::int32_t> labels);

    std::size_t size() const { return labels_.size(); }
    bool is_positive(std::size_t i) const { return labels_[i] >= 0; }
    bool is_negative(std::size_t i) const { return labels_[i] == kNegative; }
    bool is_ignored(std::size_t i) const { return labels_[i] == kIgnored; }
    /// GT index for positives, kNegative/kIgnored otherwise.
    std::int32_t label(std::size_t i) const { return labels_[i]; }

    std::size_t positives() const { return n_pos_; }
    std::size_t negatives() const { return n_neg_; }
    std::size_t ignored() const { return n_ign_; }

    const std::vector<std::int32_t>& labels() const { return labels_; }

private:
    std::vector<std::int32_t> labels_;
    std::size_t n_pos_ = 0, n_neg_ = 0, n_ign_ = 0;
};

/**
 * @brief IoU-threshold assignment of anchors to ground truth.
 *
 * Anchor i is Positive(argmax_g IoU) when max IoU >= theta_p, Negative below
 * theta_n, Ignored in between. Argmax ties break to the lowest GT index.
 * With no ground truth every anchor is Negative.
 */
Assignment assign(std::span<const Box> anchors, std::span<const Box> gts, const StepThresholds& th);

/**
 * @brief Apply additive corner offsets scaled by each anchor's stride.
 *
 * deltas holds 4 offsets per anchor (dx1, dy1, dx2, dy2). Results whose width
 * or height falls below 1 px are re-centered to a 1 px side.
 */
std::vector<Box> refine_anchors(std::span<const Box> anchors, std::span<const double> deltas,
                                std::span<const int> strides);

/// Single-anchor form of refine_anchors; delta is (dx1, dy1, dx2, dy2).
Box refine_one(const Box& anchor, std::span<const double> delta, double stride);

/**
 * @brief Two-step assignment: originals against th1, refined boxes against th2.
 *
 * refined must hold one box per lattice anchor (identity refinement allowed).
 */
std::pair<Assignment, Assignment> two_step_assign(const AnchorLattice& lattice,
                                                  std::span<const Box> gts,
                                                  std::span<const Box> refined,
                                                  const StepThresholds& th1,
                                                  const StepThresholds& th2);

}  // namespace facedet
