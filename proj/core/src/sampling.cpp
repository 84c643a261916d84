#include "facedet/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace facedet {

AnchorScaleSet AnchorScaleSet::from_pyramid(const PyramidConfig& cfg) {
    cfg.validate();
    AnchorScaleSet set;
    for (const auto& level : cfg.levels)
        for (double m : cfg.scale_multipliers) set.scales.push_back(m * level.stride);
    std::sort(set.scales.begin(), set.scales.end());
    set.scales.erase(std::unique(set.scales.begin(), set.scales.end()), set.scales.end());
    set.validate();
    return set;
}

void AnchorScaleSet::validate() const {
    if (scales.empty()) throw std::invalid_argument("scale set: empty");
    double prev = 0.0;
    for (double s : scales) {
        if (!std::isfinite(s) || s <= prev)
            throw std::invalid_argument("scale set: scales must be positive and strictly ascending");
        prev = s;
    }
}

std::pair<size_t, double> nearest_anchor_scale(double s_face, const AnchorScaleSet& set) {
    set.validate();
    if (!std::isfinite(s_face) || s_face <= 0.0)
        throw std::invalid_argument("nearest scale: face size must be positive");
    size_t best = 0;
    for (size_t i = 1; i < set.scales.size(); ++i)
        if (std::abs(set.scales[i] - s_face) < std::abs(set.scales[best] - s_face)) best = i;
    return {best, set.scales[best]};
}

double random_scale_around(const AnchorScaleSet& set, size_t target_index, double u) {
    set.validate();
    if (target_index >= set.scales.size())
        throw std::invalid_argument("random scale: target index out of range");
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("random scale: u outside [0, 1]");
    return set.scales[target_index] * std::exp2((2.0 * u - 1.0) / 4.0);
}

namespace {

PhotometricPlan photometric_plan_traced(Rng& rng, std::vector<double>& trace) {
    PhotometricPlan plan;
    auto component = [&](double lo, double hi, double identity) {
        const double gate = rng.uniform();
        trace.push_back(gate);
        if (gate >= 0.5) return identity;
        const double v = rng.uniform(lo, hi);
        trace.push_back(v);
        return v;
    };
    plan.brightness_delta = component(-32.0, 32.0, 0.0);
    plan.contrast_factor = component(0.5, 1.5, 1.0);
    plan.saturation_factor = component(0.5, 1.5, 1.0);
    return plan;
}

// Pick a crop origin along one axis: prefer fully in-bounds positions, fall
// back to any position containing the face (zero padding) near borders.
double draw_origin(double face_lo, double face_hi, double side, double image_extent, double u) {
    const double lo = face_hi - side;
    const double hi = face_lo;
    double use_lo = lo, use_hi = hi;
    if (image_extent >= side) {
        const double in_lo = std::max(lo, 0.0);
        const double in_hi = std::min(hi, image_extent - side);
        if (in_lo <= in_hi) {
            use_lo = in_lo;
            use_hi = in_hi;
        }
    }
    double origin = use_lo + u * (use_hi - use_lo);
    origin = std::clamp(origin, face_hi - side, face_lo);
    return origin;
}

}  // namespace

PhotometricPlan photometric_plan(Rng& rng) {
    std::vector<double> trace;
    return photometric_plan_traced(rng, trace);
}

SamplePlan data_anchor_sample(const Box& face, std::span<const Box> all_gts, double image_w,
                              double image_h, const AnchorScaleSet& set, double train_size,
                              Rng& rng) {
    set.validate();
    if (!std::isfinite(train_size) || train_size <= 0.0)
        throw std::invalid_argument("sample plan: train size must be positive");
    if (!std::isfinite(image_w) || !std::isfinite(image_h) || image_w <= 0.0 || image_h <= 0.0)
        throw std::invalid_argument("sample plan: image size must be positive");
    if (std::find(all_gts.begin(), all_gts.end(), face) == all_gts.end())
        throw std::invalid_argument("sample plan: face is not one of the ground-truth boxes");

    SamplePlan plan;
    plan.s_face = mean_side(face);
    const auto [i_anchor, s_anchor] = nearest_anchor_scale(plan.s_face, set);
    plan.s_anchor = s_anchor;

    const size_t hi_index = std::min(i_anchor + 1, set.scales.size() - 1);
    plan.target_index = rng.uniform_index(hi_index + 1);
    plan.rng_trace.push_back(static_cast<double>(plan.target_index));

    const double u_scale = rng.uniform();
    plan.rng_trace.push_back(u_scale);
    plan.s_random = random_scale_around(set, plan.target_index, u_scale);
    plan.s_star = plan.s_random / plan.s_face;

    const Box resized = scale_box(face, plan.s_star);
    if (resized.width() > train_size || resized.height() > train_size)
        throw std::invalid_argument("sample plan: resized face does not fit the crop");
    const double rw = image_w * plan.s_star;
    const double rh = image_h * plan.s_star;

    const double ux = rng.uniform();
    plan.rng_trace.push_back(ux);
    const double x0 = draw_origin(resized.x1, resized.x2, train_size, rw, ux);
    const double uy = rng.uniform();
    plan.rng_trace.push_back(uy);
    const double y0 = draw_origin(resized.y1, resized.y2, train_size, rh, uy);
    plan.crop = Box(x0, y0, x0 + train_size, y0 + train_size);
    plan.padded = x0 < 0.0 || y0 < 0.0 || x0 + train_size > rw || y0 + train_size > rh;

    const double u_flip = rng.uniform();
    plan.rng_trace.push_back(u_flip);
    plan.flip = u_flip < 0.5;

    plan.photometric = photometric_plan_traced(rng, plan.rng_trace);
    return plan;
}

std::string SamplePlan::to_json_line() const {
    nlohmann::ordered_json j;
    j["s_face"] = s_face;
    j["s_anchor"] = s_anchor;
    j["s_random"] = s_random;
    j["s_star"] = s_star;
    j["crop"] = {crop.x1, crop.y1, crop.x2, crop.y2};
    j["flip"] = flip;
    j["photometric"] = {{"brightness", photometric.brightness_delta},
                        {"contrast", photometric.contrast_factor},
                        {"saturation", photometric.saturation_factor}};
    j["seed"] = seed;
    return j.dump();
}

std::vector<Box> transform_boxes(std::span<const Box> boxes, const SamplePlan& plan,
                                 double keep_fraction) {
    if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("transform: keep fraction outside [0, 1]");
    const double side = plan.crop.width();
    const Box frame(0.0, 0.0, side, side);
    std::vector<Box> out;
    out.reserve(boxes.size());
    for (const Box& b : boxes) {
        const Box scaled = scale_box(b, plan.s_star);
        const Box local(scaled.x1 - plan.crop.x1, scaled.y1 - plan.crop.y1,
                        scaled.x2 - plan.crop.x1, scaled.y2 - plan.crop.y1);
        if (intersection_area(local, frame) < keep_fraction * area(local)) continue;
        const auto clipped = clip_box(local, side, side);
        if (!clipped) continue;
        out.push_back(plan.flip ? mirror_x(*clipped, side) : *clipped);
    }
    return out;
}

std::vector<Box> untransform_boxes(std::span<const Box> boxes, const SamplePlan& plan) {
    const double side = plan.crop.width();
    std::vector<Box> out;
    out.reserve(boxes.size());
    for (const Box& b : boxes) {
        const Box unflipped = plan.flip ? mirror_x(b, side) : b;
        const Box global(unflipped.x1 + plan.crop.x1, unflipped.y1 + plan.crop.y1,
                         unflipped.x2 + plan.crop.x1, unflipped.y2 + plan.crop.y1);
        out.push_back(scale_box(global, 1.0 / plan.s_star));
    }
    return out;
}

}  // namespace facedet
