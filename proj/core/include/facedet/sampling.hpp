#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "facedet/anchors.hpp"
#include "facedet/box.hpp"
#include "facedet/rng.hpp"

namespace facedet {

/// Anchor side lengths searched by scale-aware crop sampling.
struct AnchorScaleSet {
    std::vector<double> scales;

    static AnchorScaleSet from_pyramid(const PyramidConfig& cfg = {});
    void validate() const;
};

/// Index and value of the scale closest to s_face; ties go to the smaller index.
std::pair<size_t, double> nearest_anchor_scale(double s_face, const AnchorScaleSet& set);

struct PhotometricPlan {
    double brightness_delta = 0.0;  // additive, [-32, 32]
    double contrast_factor = 1.0;   // multiplicative, [0.5, 1.5]
    double saturation_factor = 1.0; // multiplicative, [0.5, 1.5]
};

/**
 * @brief A fully resolved augmentation plan: rescale the image by s_star,
 * cut a train_size-sided crop containing the selected face, then optionally
 * flip and apply photometric deltas. Geometry only; no pixels are touched.
 */
struct SamplePlan {
    double s_face = 0.0;
    double s_anchor = 0.0;
    double s_random = 0.0;
    double s_star = 0.0;
    size_t target_index = 0;
    Box crop{0.0, 0.0, 1.0, 1.0};  // resized-image coordinates
    bool flip = false;
    bool padded = false;  // crop extends past the resized image (zero padding)
    PhotometricPlan photometric;
    std::uint64_t seed = 0;
    std::vector<double> rng_trace;

    std::string to_json_line() const;
};

/**
 * @brief Draw the random scale for a face whose nearest anchor scale sits at
 * index i_anchor: pick a target index uniformly from {0..min(i_anchor+1, N-1)},
 * then place s_random log-uniformly within half a pyramid step (factor
 * 2^(+-1/4)) of the target scale, so the midpoint draw u = 0.5 lands exactly
 * on the target.
 */
double random_scale_around(const AnchorScaleSet& set, size_t target_index, double u);

/// Draws: target index, scale position, crop x, crop y, flip, photometric.
SamplePlan data_anchor_sample(const Box& face, std::span<const Box> all_gts, double image_w,
                              double image_h, const AnchorScaleSet& set, double train_size,
                              Rng& rng);

/// Gate draw then value draw per component; each gate passes with probability 0.5.
PhotometricPlan photometric_plan(Rng& rng);

/**
 * @brief Map annotations into the crop frame: scale by s_star, translate by
 * the crop origin, mirror if flipped. Boxes keeping less than keep_fraction
 * of their scaled area inside the crop are dropped; survivors are clipped.
 */
std::vector<Box> transform_boxes(std::span<const Box> boxes, const SamplePlan& plan,
                                 double keep_fraction = 0.3);

/// Inverse of transform_boxes for boxes fully interior to the crop.
std::vector<Box> untransform_boxes(std::span<const Box> boxes, const SamplePlan& plan);

}  // namespace facedet
