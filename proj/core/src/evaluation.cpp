#include "facedet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace facedet {

Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "medium") return Difficulty::Medium;
    if (s == "hard") return Difficulty::Hard;
    if (s == "ignore") return Difficulty::Ignore;
    throw std::invalid_argument("difficulty: unknown tag '" + s + "'");
}

const char* to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
        default: return "ignore";
    }
}

void GroundTruthImage::validate() const {
    if (boxes.size() != tags.size())
        throw std::invalid_argument("ground truth: boxes and tags misaligned for " + image_id);
}

bool in_subset(Difficulty d, Subset s) {
    switch (d) {
        case Difficulty::Easy: return true;
        case Difficulty::Medium: return s != Subset::Easy;
        case Difficulty::Hard: return s == Subset::Hard;
        default: return false;
    }
}

std::vector<MatchFlag> match_image(std::span<const Detection> dets, const GroundTruthImage& gt,
                                   Subset subset, double match_iou) {
    if (!std::isfinite(match_iou) || match_iou <= 0.0 || match_iou >= 1.0)
        throw std::invalid_argument("match: IoU threshold must lie in (0, 1)");
    gt.validate();

    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        const double aa = area(dets[a].box), ab = area(dets[b].box);
        if (aa != ab) return aa > ab;
        return a < b;
    });

    std::vector<char> claimed(gt.boxes.size(), 0);
    std::vector<MatchFlag> flags(dets.size(), MatchFlag::FP);
    for (size_t idx : order) {
        double best_in = 0.0, best_out = 0.0;
        size_t best_gt = gt.boxes.size();
        for (size_t g = 0; g < gt.boxes.size(); ++g) {
            const double v = iou(dets[idx].box, gt.boxes[g]);
            if (in_subset(gt.tags[g], subset)) {
                if (!claimed[g] && v > best_in) {
                    best_in = v;
                    best_gt = g;
                }
            } else if (v > best_out) {
                best_out = v;
            }
        }
        if (best_gt < gt.boxes.size() && best_in >= match_iou) {
            claimed[best_gt] = 1;
            flags[idx] = MatchFlag::TP;
        } else if (best_out >= match_iou) {
            flags[idx] = MatchFlag::Skipped;
        }
    }
    return flags;
}

PRCurve pr_curve(std::vector<ScoredFlag> flags, size_t n_gt) {
    if (n_gt < 1) throw std::invalid_argument("pr curve: subset has no positive ground truth");
    std::stable_sort(flags.begin(), flags.end(),
                     [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });

    PRCurve curve;
    curve.n_gt = n_gt;
    size_t tp = 0, fp = 0;
    for (size_t i = 0; i < flags.size(); ++i) {
        if (flags[i].flag == MatchFlag::TP) ++tp;
        if (flags[i].flag == MatchFlag::FP) ++fp;
        const bool boundary = i + 1 == flags.size() || flags[i + 1].score != flags[i].score;
        if (boundary && tp + fp > 0) {
            curve.points.push_back({flags[i].score, static_cast<double>(tp) / n_gt,
                                    static_cast<double>(tp) / (tp + fp)});
        }
    }

    // all-point interpolation: precision envelope integrated over recall
    double envelope = 0.0, prev_recall = 0.0, ap = 0.0;
    std::vector<double> env(curve.points.size());
    for (size_t i = curve.points.size(); i-- > 0;) {
        envelope = std::max(envelope, curve.points[i].precision);
        env[i] = envelope;
    }
    for (size_t i = 0; i < curve.points.size(); ++i) {
        ap += (curve.points[i].recall - prev_recall) * env[i];
        prev_recall = curve.points[i].recall;
    }
    curve.ap = ap;
    return curve;
}

EvalResult evaluate(const DetectionMap& dets, std::span<const GroundTruthImage> gts,
                    double match_iou) {
    std::set<std::string> known;
    for (const auto& gt : gts) {
        gt.validate();
        if (!known.insert(gt.image_id).second)
            throw std::invalid_argument("evaluation: duplicate ground-truth image " + gt.image_id);
    }
    std::string offenders;
    for (const auto& [id, _] : dets)
        if (!known.count(id)) offenders += offenders.empty() ? id : ", " + id;
    if (!offenders.empty())
        throw std::invalid_argument("evaluation: unknown image ids: " + offenders);

    EvalResult result;
    result.n_images = gts.size();
    static const std::vector<Detection> kNoDets;
    for (Subset subset : {Subset::Easy, Subset::Medium, Subset::Hard}) {
        size_t n_gt = 0;
        std::vector<ScoredFlag> pooled;
        for (const auto& gt : gts) {
            for (Difficulty d : gt.tags)
                if (in_subset(d, subset)) ++n_gt;
            auto it = dets.find(gt.image_id);
            const auto& image_dets = it == dets.end() ? kNoDets : it->second;
            const auto flags = match_image(image_dets, gt, subset, match_iou);
            for (size_t i = 0; i < flags.size(); ++i)
                pooled.push_back({image_dets[i].score, flags[i]});
        }
        auto curve = pr_curve(std::move(pooled), n_gt);
        switch (subset) {
            case Subset::Easy: result.easy = std::move(curve); break;
            case Subset::Medium: result.medium = std::move(curve); break;
            case Subset::Hard: result.hard = std::move(curve); break;
        }
    }
    return result;
}

}  // namespace facedet
