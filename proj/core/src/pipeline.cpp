#include "facedet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "facedet/losses.hpp"
#include "facedet/postprocess.hpp"
#include "facedet/rng.hpp"

namespace facedet {

Simulator::Simulator(RunConfig cfg, double noise_sigma, double regression_quality)
    : cfg_(std::move(cfg)), sigma_(noise_sigma), rq_(regression_quality) {
    cfg_.validate();
    ScorerConfig probe{sigma_, rq_, 0, nullptr};
    probe.validate();
}

const AnchorLattice& Simulator::lattice_for(double width, double height) {
    const auto key = std::make_pair(std::lround(width), std::lround(height));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    PyramidConfig pcfg = cfg_.pyramid;
    pcfg.input_width = static_cast<double>(key.first);
    pcfg.input_height = static_cast<double>(key.second);
    return cache_.emplace(key, build_lattice(pcfg)).first->second;
}

std::vector<Detection> Simulator::run_one(std::span<const Box> gts, double scale, bool flipped,
                                          std::uint64_t seed) {
    const double sw = cfg_.pyramid.input_width * scale;
    const double sh = cfg_.pyramid.input_height * scale;
    const AnchorLattice& lattice = lattice_for(sw, sh);

    std::vector<Box> scaled;
    scaled.reserve(gts.size());
    for (const Box& g : gts) {
        Box b = scale_box(g, scale);
        scaled.push_back(flipped ? mirror_x(b, sw) : b);
    }

    ScorerConfig scfg{sigma_, rq_, seed, nullptr};
    const ScoredAnchors scored = score_anchors(lattice, scaled, scfg, cfg_.maxout);

    std::vector<Detection> dets;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        const std::size_t level = lattice.level_of[i];
        const double stride = static_cast<double>(lattice.strides[i]);

        if (lattice.is_stc_level(level)) {
            const auto bg = scored.bg_channels(i);
            if (*std::max_element(bg.begin(), bg.end()) > cfg_.stc_filter_threshold) continue;
        }

        const auto face = scored.face_channels(i);
        const double score = *std::max_element(face.begin(), face.end());
        if (score < cfg_.postprocess.score_floor) continue;

        Box base = lattice.anchors[i];
        if (lattice.is_str_level(level))
            base = refine_one(base, std::span(scored.step1_deltas).subspan(i * 4, 4), stride);
        const Box final_box =
            refine_one(base, std::span(scored.step2_deltas).subspan(i * 4, 4), stride);
        const auto clipped = clip_box(final_box, sw, sh);
        if (!clipped) continue;
        dets.push_back({*clipped, score});
    }

    if (dets.size() > cfg_.postprocess.pre_nms_topk) {
        std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
            if (a.score != b.score) return a.score > b.score;
            return area(a.box) > area(b.box);
        });
        dets.resize(cfg_.postprocess.pre_nms_topk);
    }
    return dets;
}

std::vector<ScaleRun> Simulator::scale_runs(const GroundTruthImage& image,
                                            std::uint64_t image_seed) {
    image.validate();
    std::vector<ScaleRun> runs;
    std::uint64_t run_index = 0;
    for (double scale : cfg_.postprocess.scales) {
        runs.push_back({scale, false,
                        run_one(image.boxes, scale, false, mix_seed(image_seed, run_index++))});
        if (cfg_.postprocess.flip)
            runs.push_back({scale, true,
                            run_one(image.boxes, scale, true, mix_seed(image_seed, run_index++))});
    }
    return runs;
}

std::vector<Detection> Simulator::detect(const GroundTruthImage& image, std::uint64_t image_seed) {
    const auto runs = scale_runs(image, image_seed);
    return merge_scales(runs, {cfg_.pyramid.input_width, cfg_.pyramid.input_height},
                        cfg_.postprocess.vote_iou, cfg_.postprocess.pre_nms_iou,
                        cfg_.postprocess.max_dets);
}

DetectionMap simulate(std::span<const GroundTruthImage> images, const RunConfig& cfg,
                      double noise_sigma, double regression_quality) {
    Simulator sim(cfg, noise_sigma, regression_quality);
    DetectionMap out;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (out.count(images[i].image_id))
            throw std::invalid_argument("simulate: duplicate image id " + images[i].image_id);
        out[images[i].image_id] = sim.detect(images[i], mix_seed(cfg.seed, i));
    }
    return out;
}

}  // namespace facedet
