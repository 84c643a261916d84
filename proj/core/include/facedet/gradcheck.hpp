#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "facedet/losses.hpp"

namespace facedet {

/// Central-difference step used by the gradient checks.
inline constexpr double kFdStep = 1e-6;

/**
 * @brief One sampled comparison between an analytic partial derivative and
 * its central finite difference. For multi-input losses the record keeps the
 * component with the worst relative error.
 */
struct GradCheckRecord {
    std::string op;
    std::vector<double> point;
    double analytic = 0.0;
    double fd = 0.0;
    double rel_err = 0.0;
    int component = 0;
};

/// n random probability samples in [0.01, 0.99] with random labels.
std::vector<GradCheckRecord> grad_check_focal(int n, std::uint64_t seed,
                                              const FocalParams& fp = {});

/**
 * @brief n random overlapping box pairs. Pairs are rejection-sampled so every
 * corner pair differs by at least 1e-3 and the intersection sides stay above
 * 0.5 px, keeping both evaluation points of the central difference inside one
 * smooth regime of the loss.
 */
std::vector<GradCheckRecord> grad_check_iou(int n, std::uint64_t seed);

/// One line per record: "op p_or_coords analytic fd rel_err".
std::string format_records(std::span<const GradCheckRecord> records);

double max_rel_err(std::span<const GradCheckRecord> records);

}  // namespace facedet
