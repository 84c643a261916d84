#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "facedet/box.hpp"

namespace facedet {

/// Probabilities are clamped into [kProbEps, 1 - kProbEps] before any log.
inline constexpr double kProbEps = 1e-7;

/**
 * @brief Focusing/balance parameters for the focal loss.
 *
 * alpha weights the positive class and 1-alpha the negative class. With
 * weighted = false both classes get weight 1 (the plain reshaped cross
 * entropy used by the gamma = 0 identity checks).
 */
struct FocalParams {
    double alpha = 0.25;
    double gamma = 2.0;
    bool weighted = true;

    void validate() const;
    double alpha_t(int y) const { return weighted ? (y > 0 ? alpha : 1.0 - alpha) : 1.0; }
};

/// One classification sample: estimated probability and label in {+1, -1}.
struct ClassSample {
    double p;
    int y;

    ClassSample(double p_, int y_);
};

struct MaxOutConfig {
    int c_p = 3;
    int c_n = 3;

    void validate() const;
};

/// Scalar loss plus partial derivatives with respect to its continuous inputs.
struct LossResult {
    double value = 0.0;
    std::vector<double> gradient;
};

struct DisjointBoxesError : std::domain_error {
    DisjointBoxesError() : std::domain_error("iou_loss: boxes are disjoint, loss undefined") {}
};

/// Focal loss with d/dp. p_t = p for y=+1 and 1-p otherwise.
LossResult focal_loss(const ClassSample& s, const FocalParams& fp);

/**
 * @brief -ln(IoU) with the analytic gradient in the predicted corners.
 *
 * The gradient is piecewise in which corner bounds the intersection; at exact
 * corner coincidence the one-sided derivative from the overlap interior is
 * taken. Throws DisjointBoxesError when the intersection is empty.
 */
LossResult iou_loss(const Box& pred, const Box& gt);

/// Per-class maxima of the score channels: (face, background).
std::pair<double, double> maxout_select(std::span<const double> face_scores,
                                        std::span<const double> bg_scores);

/**
 * @brief Two-step classification loss: per-step focal sums, each normalized
 * by that step's positive-anchor count (clamped to 1 for pure-negative
 * batches).
 */
double stc_loss(std::span<const ClassSample> step1, std::span<const ClassSample> step2,
                long long n_pos1, long long n_pos2, const FocalParams& fp);

struct RegressionSample {
    Box pred;
    Box gt;
    bool positive = false;  // l* = 1
};

/**
 * @brief Two-step regression loss: per-step IoU-loss sums over positive
 * samples, normalized like stc_loss. Negative samples contribute zero.
 */
double str_loss(std::span<const RegressionSample> step1, std::span<const RegressionSample> step2,
                long long n_pos1, long long n_pos2);

/**
 * @brief Step-two survivor mask for two-step classification: an anchor drops
 * out once its first-step background probability exceeds the threshold.
 */
std::vector<char> stc_survivor_mask(std::span<const double> bg_probs, double threshold = 0.99);

/// Order-stable pairwise summation.
double pairwise_sum(std::span<const double> values);

}  // namespace facedet
