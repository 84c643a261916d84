#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "facedet/postprocess.hpp"

namespace facedet {

enum class Difficulty { Easy, Medium, Hard, Ignore };

Difficulty difficulty_from_string(const std::string& s);
const char* to_string(Difficulty d);

struct GroundTruthImage {
    std::string image_id;
    std::vector<Box> boxes;
    std::vector<Difficulty> tags;

    void validate() const;
};

/**
 * @brief Difficulty subsets are cumulative: Medium contains Easy boxes and
 * Hard contains both. Boxes outside the active subset act as ignore regions.
 */
enum class Subset { Easy, Medium, Hard };

bool in_subset(Difficulty d, Subset s);

enum class MatchFlag { TP, FP, Skipped };

/**
 * @brief Greedy matching in descending score order: a detection claims the
 * unmatched in-subset GT of highest IoU >= match_iou (TP). Failing that, a
 * detection sitting on an ignore or out-of-subset box at IoU >= match_iou is
 * Skipped; anything else is a FP. Flags follow the input detection order.
 */
std::vector<MatchFlag> match_image(std::span<const Detection> dets, const GroundTruthImage& gt,
                                   Subset subset, double match_iou);

struct PRPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

struct PRCurve {
    std::vector<PRPoint> points;  // descending threshold
    double ap = 0.0;
    size_t n_gt = 0;
};

struct ScoredFlag {
    double score = 0.0;
    MatchFlag flag = MatchFlag::FP;
};

/**
 * @brief Sweep every distinct score as a threshold and integrate the
 * all-point interpolated precision envelope. Skipped detections drop out of
 * both precision and recall.
 */
PRCurve pr_curve(std::vector<ScoredFlag> flags, size_t n_gt);

using DetectionMap = std::map<std::string, std::vector<Detection>>;

struct EvalResult {
    PRCurve easy;
    PRCurve medium;
    PRCurve hard;
    size_t n_images = 0;
};

/// Every detection image_id must exist in gts; offenders are listed in the error.
EvalResult evaluate(const DetectionMap& dets, std::span<const GroundTruthImage> gts,
                    double match_iou = 0.5);

}  // namespace facedet
