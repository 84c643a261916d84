#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facedet/anchors.hpp"
#include "facedet/errors.hpp"
#include "facedet/losses.hpp"

namespace facedet {

struct AugmentationConfig {
    double train_size = 1024.0;
    double keep_area_fraction = 0.3;
};

struct PostprocessConfig {
    std::vector<double> scales = {0.5, 1.0, 1.5, 2.0};
    bool flip = false;
    double pre_nms_iou = 0.3;
    double vote_iou = 0.5;
    std::size_t max_dets = 750;
    double score_floor = 0.01;     // detections below this never enter NMS
    std::size_t pre_nms_topk = 5000;
};

struct EvalConfig {
    double match_iou = 0.5;
};

/**
 * @brief Aggregate run configuration. The zero-argument value carries the
 * reference defaults; JSON files override fields selectively and unknown
 * keys are rejected.
 */
struct RunConfig {
    PyramidConfig pyramid;
    StepThresholds step1{0.3, 0.7};
    StepThresholds step2{0.4, 0.5};
    FocalParams focal;
    MaxOutConfig maxout;
    double stc_filter_threshold = 0.99;
    AugmentationConfig augmentation;
    PostprocessConfig postprocess;
    EvalConfig eval;
    std::uint64_t seed = 1;

    /// Throws ConfigError naming the offending field path.
    void validate() const;
};

/// Parse and validate; ParseError carries line/column for malformed JSON.
RunConfig parse_config(const std::string& json_text);

RunConfig load_config(const std::string& path);

/// Effective values, one per line, each with a short note on where it comes from.
std::string explain_config(const RunConfig& cfg);

}  // namespace facedet
