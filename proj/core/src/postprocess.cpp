#include "facedet/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace facedet {

namespace {

void check_thresh(double t, const char* what) {
    if (!std::isfinite(t) || t <= 0.0 || t >= 1.0)
        throw std::invalid_argument(std::string(what) + ": IoU threshold must lie in (0, 1)");
}

// score desc, area desc, input index asc
std::vector<size_t> ranked_order(std::span<const Detection> dets) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        const double aa = area(dets[a].box), ab = area(dets[b].box);
        if (aa != ab) return aa > ab;
        return a < b;
    });
    return order;
}

}  // namespace

std::vector<Detection> nms(std::span<const Detection> dets, double iou_thresh) {
    check_thresh(iou_thresh, "nms");
    const auto order = ranked_order(dets);
    std::vector<Detection> kept;
    for (size_t idx : order) {
        bool suppressed = false;
        for (const auto& k : kept)
            if (iou(dets[idx].box, k.box) >= iou_thresh) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(dets[idx]);
    }
    return kept;
}

std::vector<std::vector<size_t>> vote_clusters(std::span<const Detection> dets, double vote_iou) {
    check_thresh(vote_iou, "bbox vote");
    const auto order = ranked_order(dets);
    std::vector<char> taken(dets.size(), 0);
    std::vector<std::vector<size_t>> clusters;
    for (size_t seed : order) {
        if (taken[seed]) continue;
        std::vector<size_t> members;
        for (size_t idx : order)
            if (!taken[idx] && iou(dets[idx].box, dets[seed].box) >= vote_iou)
                members.push_back(idx);
        for (size_t idx : members) taken[idx] = 1;
        clusters.push_back(std::move(members));
    }
    return clusters;
}

std::vector<Detection> bbox_vote(std::span<const Detection> dets, double vote_iou) {
    std::vector<Detection> out;
    for (const auto& cluster : vote_clusters(dets, vote_iou)) {
        if (cluster.size() == 1) {
            out.push_back(dets[cluster.front()]);
            continue;
        }
        double wsum = 0.0, best = 0.0;
        double corner[4] = {0.0, 0.0, 0.0, 0.0};
        for (size_t idx : cluster) {
            const auto& d = dets[idx];
            wsum += d.score;
            best = std::max(best, d.score);
            corner[0] += d.score * d.box.x1;
            corner[1] += d.score * d.box.y1;
            corner[2] += d.score * d.box.x2;
            corner[3] += d.score * d.box.y2;
        }
        if (wsum <= 0.0) {
            // all-zero scores: fall back to the plain mean
            wsum = static_cast<double>(cluster.size());
            corner[0] = corner[1] = corner[2] = corner[3] = 0.0;
            for (size_t idx : cluster) {
                corner[0] += dets[idx].box.x1;
                corner[1] += dets[idx].box.y1;
                corner[2] += dets[idx].box.x2;
                corner[3] += dets[idx].box.y2;
            }
        }
        out.push_back(
            {Box(corner[0] / wsum, corner[1] / wsum, corner[2] / wsum, corner[3] / wsum), best});
    }
    const auto order = ranked_order(out);
    std::vector<Detection> sorted;
    sorted.reserve(out.size());
    for (size_t idx : order) sorted.push_back(out[idx]);
    return sorted;
}

std::vector<Detection> merge_scales(std::span<const ScaleRun> runs,
                                    std::pair<double, double> original_size, double vote_iou,
                                    double pre_nms_iou, size_t max_dets) {
    if (runs.empty()) throw std::invalid_argument("merge: no scale runs given");
    if (max_dets < 1) throw std::invalid_argument("merge: max_dets must be >= 1");
    std::vector<Detection> pooled;
    for (const auto& run : runs) {
        if (!std::isfinite(run.scale_factor) || run.scale_factor <= 0.0)
            throw std::invalid_argument("merge: scale factor must be positive");
        if (run.flipped && original_size.first <= 0.0)
            throw std::invalid_argument("merge: flipped run needs a valid original width");
        for (const auto& d : run.detections) {
            Box b = d.box;
            if (run.flipped) b = mirror_x(b, original_size.first * run.scale_factor);
            pooled.push_back({scale_box(b, 1.0 / run.scale_factor), d.score});
        }
    }
    auto fused = bbox_vote(nms(pooled, pre_nms_iou), vote_iou);
    if (fused.size() > max_dets) fused.resize(max_dets);
    return fused;
}

}  // namespace facedet
