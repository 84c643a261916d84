#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "facedet/box.hpp"

namespace facedet {

struct Detection {
    Box box{0.0, 0.0, 1.0, 1.0};
    double score = 0.0;
};

/// Detections produced from one rescaled (and possibly mirrored) input.
struct ScaleRun {
    double scale_factor = 1.0;
    bool flipped = false;
    std::vector<Detection> detections;
};

/**
 * @brief Greedy non-maximum suppression. Candidates are visited by score
 * descending (ties: larger area, then input order) and kept only when their
 * IoU with every previously kept detection stays below iou_thresh.
 */
std::vector<Detection> nms(std::span<const Detection> dets, double iou_thresh);

/**
 * @brief Greedy seed clustering used by bbox_vote: the best remaining
 * detection absorbs everything within vote_iou of it. Returns input indices
 * grouped per cluster, clusters ordered by seed score descending.
 */
std::vector<std::vector<size_t>> vote_clusters(std::span<const Detection> dets, double vote_iou);

/**
 * @brief Bounding box voting: each cluster collapses to the score-weighted
 * average of its member corners, carrying the cluster's maximum score.
 */
std::vector<Detection> bbox_vote(std::span<const Detection> dets, double vote_iou);

/**
 * @brief Multi-scale fusion: map every run back to original coordinates
 * (inverse scale, mirror undone against the rescaled width), concatenate,
 * suppress at pre_nms_iou, vote at vote_iou, keep the top max_dets.
 *
 * original_size is only consulted for flipped runs.
 */
std::vector<Detection> merge_scales(std::span<const ScaleRun> runs,
                                    std::pair<double, double> original_size, double vote_iou,
                                    double pre_nms_iou, size_t max_dets);

}  // namespace facedet
