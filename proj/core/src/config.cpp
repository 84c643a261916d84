#include "facedet/config.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace facedet {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, std::initializer_list<const char*> known,
                const std::string& path) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) fail("unknown key '" + key + "' at " + path);
    }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& path) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(std::string("expected a number at ") + path + "." + key);
    return v.get<double>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& path) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail(std::string("expected a boolean at ") + path + "." + key);
    return v.get<bool>();
}

std::vector<double> get_array(const json& obj, const char* key, std::vector<double> fallback,
                              const std::string& path) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_array()) fail(std::string("expected an array at ") + path + "." + key);
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) fail(std::string("expected numbers at ") + path + "." + key);
        out.push_back(e.get<double>());
    }
    return out;
}

void parse_pyramid(const json& obj, PyramidConfig& cfg) {
    check_keys(obj, {"strides", "scale_multipliers", "aspect_ratio", "input_size"}, "pyramid");
    if (obj.contains("strides")) {
        const auto strides = get_array(obj, "strides", {}, "pyramid");
        cfg.levels.clear();
        for (double s : strides) {
            const double r = std::round(s);
            if (r != s || r < 1.0) fail("pyramid.strides must be positive integers");
            const int stride = static_cast<int>(r);
            const int lg = std::bit_width(static_cast<unsigned>(stride)) - 1;
            cfg.levels.push_back({"P" + std::to_string(lg), stride});
        }
    }
    cfg.scale_multipliers =
        get_array(obj, "scale_multipliers", cfg.scale_multipliers, "pyramid");
    cfg.aspect_ratio = get_number(obj, "aspect_ratio", cfg.aspect_ratio, "pyramid");
    if (obj.contains("input_size")) {
        const auto size = get_array(obj, "input_size", {}, "pyramid");
        if (size.size() != 2) fail("pyramid.input_size must be [width, height]");
        cfg.input_width = size[0];
        cfg.input_height = size[1];
    }
}

void parse_thresholds(const json& obj, StepThresholds& th, const std::string& path) {
    check_keys(obj, {"theta_n", "theta_p"}, path);
    th.theta_n = get_number(obj, "theta_n", th.theta_n, path);
    th.theta_p = get_number(obj, "theta_p", th.theta_p, path);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fmt(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out + "]";
}

}  // namespace

void RunConfig::validate() const {
    try {
        pyramid.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string(e.what()) + " (at pyramid)");
    }
    if (!(step1.theta_n >= 0.0 && step1.theta_n < step1.theta_p && step1.theta_p <= 1.0))
        fail("theta_n < theta_p violated at step1");
    if (!(step2.theta_n >= 0.0 && step2.theta_n < step2.theta_p && step2.theta_p <= 1.0))
        fail("theta_n < theta_p violated at step2");
    try {
        focal.validate();
        maxout.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (!std::isfinite(stc_filter_threshold) || stc_filter_threshold <= 0.0 ||
        stc_filter_threshold >= 1.0)
        fail("stc_filter_threshold must lie in (0, 1)");
    if (!std::isfinite(augmentation.train_size) || augmentation.train_size <= 0.0)
        fail("train_size must be positive at augmentation");
    if (!(augmentation.keep_area_fraction >= 0.0 && augmentation.keep_area_fraction <= 1.0))
        fail("keep_area_fraction must lie in [0, 1] at augmentation");
    if (postprocess.scales.empty()) fail("scales must be non-empty at postprocess");
    for (double s : postprocess.scales)
        if (!std::isfinite(s) || s <= 0.0) fail("scales must be positive at postprocess");
    if (!(postprocess.pre_nms_iou > 0.0 && postprocess.pre_nms_iou < 1.0))
        fail("pre_nms_iou must lie in (0, 1) at postprocess");
    if (!(postprocess.vote_iou > 0.0 && postprocess.vote_iou < 1.0))
        fail("vote_iou must lie in (0, 1) at postprocess");
    if (postprocess.max_dets < 1) fail("max_dets must be >= 1 at postprocess");
    if (!(postprocess.score_floor >= 0.0 && postprocess.score_floor < 1.0))
        fail("score_floor must lie in [0, 1) at postprocess");
    if (postprocess.pre_nms_topk < 1) fail("pre_nms_topk must be >= 1 at postprocess");
    if (!(eval.match_iou > 0.0 && eval.match_iou < 1.0))
        fail("match_iou must lie in (0, 1) at eval");
}

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < json_text.size(); ++i) {
            if (json_text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("config parse error at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what());
    }
    if (!root.is_object()) throw ParseError("config: top level must be a JSON object");

    RunConfig cfg;
    check_keys(root,
               {"pyramid", "step1", "step2", "focal", "maxout", "stc_filter_threshold",
                "augmentation", "postprocess", "eval", "seed"},
               "top level");

    if (root.contains("pyramid")) parse_pyramid(root.at("pyramid"), cfg.pyramid);
    if (root.contains("step1")) parse_thresholds(root.at("step1"), cfg.step1, "step1");
    if (root.contains("step2")) parse_thresholds(root.at("step2"), cfg.step2, "step2");
    if (root.contains("focal")) {
        const auto& f = root.at("focal");
        check_keys(f, {"alpha", "gamma"}, "focal");
        cfg.focal.alpha = get_number(f, "alpha", cfg.focal.alpha, "focal");
        cfg.focal.gamma = get_number(f, "gamma", cfg.focal.gamma, "focal");
    }
    if (root.contains("maxout")) {
        const auto& m = root.at("maxout");
        check_keys(m, {"c_p", "c_n"}, "maxout");
        cfg.maxout.c_p = static_cast<int>(get_number(m, "c_p", cfg.maxout.c_p, "maxout"));
        cfg.maxout.c_n = static_cast<int>(get_number(m, "c_n", cfg.maxout.c_n, "maxout"));
    }
    cfg.stc_filter_threshold =
        get_number(root, "stc_filter_threshold", cfg.stc_filter_threshold, "top level");
    if (root.contains("augmentation")) {
        const auto& a = root.at("augmentation");
        check_keys(a, {"train_size", "keep_area_fraction"}, "augmentation");
        cfg.augmentation.train_size =
            get_number(a, "train_size", cfg.augmentation.train_size, "augmentation");
        cfg.augmentation.keep_area_fraction =
            get_number(a, "keep_area_fraction", cfg.augmentation.keep_area_fraction,
                       "augmentation");
    }
    if (root.contains("postprocess")) {
        const auto& p = root.at("postprocess");
        check_keys(p,
                   {"scales", "flip", "pre_nms_iou", "vote_iou", "max_dets", "score_floor",
                    "pre_nms_topk"},
                   "postprocess");
        cfg.postprocess.scales = get_array(p, "scales", cfg.postprocess.scales, "postprocess");
        cfg.postprocess.flip = get_bool(p, "flip", cfg.postprocess.flip, "postprocess");
        cfg.postprocess.pre_nms_iou =
            get_number(p, "pre_nms_iou", cfg.postprocess.pre_nms_iou, "postprocess");
        cfg.postprocess.vote_iou =
            get_number(p, "vote_iou", cfg.postprocess.vote_iou, "postprocess");
        cfg.postprocess.max_dets = static_cast<std::size_t>(get_number(
            p, "max_dets", static_cast<double>(cfg.postprocess.max_dets), "postprocess"));
        cfg.postprocess.score_floor =
            get_number(p, "score_floor", cfg.postprocess.score_floor, "postprocess");
        cfg.postprocess.pre_nms_topk = static_cast<std::size_t>(get_number(
            p, "pre_nms_topk", static_cast<double>(cfg.postprocess.pre_nms_topk), "postprocess"));
    }
    if (root.contains("eval")) {
        const auto& e = root.at("eval");
        check_keys(e, {"match_iou"}, "eval");
        cfg.eval.match_iou = get_number(e, "match_iou", cfg.eval.match_iou, "eval");
    }
    if (root.contains("seed")) {
        const auto& s = root.at("seed");
        if (!s.is_number_unsigned()) fail("seed must be a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string explain_config(const RunConfig& cfg) {
    std::string out;
    auto line = [&](const std::string& key, const std::string& value, const std::string& note) {
        out += key + " = " + value + "  (" + note + ")\n";
    };
    std::string strides, names;
    for (std::size_t i = 0; i < cfg.pyramid.levels.size(); ++i) {
        strides += (i ? ", " : "") + std::to_string(cfg.pyramid.levels[i].stride);
        names += (i ? ", " : "") + cfg.pyramid.levels[i].name;
    }
    line("pyramid.levels", names, "detection pyramid, one anchor grid per level");
    line("pyramid.strides", "[" + strides + "]", "grid spacing in input pixels");
    line("pyramid.scale_multipliers", fmt(cfg.pyramid.scale_multipliers),
         "anchor side = multiplier x stride; two scales per level half an octave apart");
    line("pyramid.aspect_ratio", fmt(cfg.pyramid.aspect_ratio),
         "anchor height/width, matched to typical face proportions");
    line("pyramid.input_size",
         "[" + fmt(cfg.pyramid.input_width) + ", " + fmt(cfg.pyramid.input_height) + "]",
         "frame the lattice tiles");
    line("step1.theta_n/theta_p", fmt(cfg.step1.theta_n) + " / " + fmt(cfg.step1.theta_p),
         "first-pass negative/positive IoU thresholds");
    line("step2.theta_n/theta_p", fmt(cfg.step2.theta_n) + " / " + fmt(cfg.step2.theta_p),
         "second-pass thresholds applied to refined anchors");
    line("focal.alpha", fmt(cfg.focal.alpha), "class-balance weight on the positive class");
    line("focal.gamma", fmt(cfg.focal.gamma), "focusing exponent down-weighting easy samples");
    line("maxout.c_p/c_n", std::to_string(cfg.maxout.c_p) + " / " + std::to_string(cfg.maxout.c_n),
         "score channels per class; the max wins");
    line("stc_filter_threshold", fmt(cfg.stc_filter_threshold),
         "first-pass background probability above which an anchor skips the second pass");
    line("augmentation.train_size", fmt(cfg.augmentation.train_size),
         "square crop side for scale-aware sampling");
    line("augmentation.keep_area_fraction", fmt(cfg.augmentation.keep_area_fraction),
         "minimum fraction of a box's area that must survive the crop");
    line("postprocess.scales", fmt(cfg.postprocess.scales), "test-time rescale factors");
    line("postprocess.flip", cfg.postprocess.flip ? "true" : "false",
         "add a mirrored run per scale");
    line("postprocess.pre_nms_iou", fmt(cfg.postprocess.pre_nms_iou),
         "suppression threshold before voting");
    line("postprocess.vote_iou", fmt(cfg.postprocess.vote_iou),
         "cluster threshold for box voting");
    line("postprocess.max_dets", std::to_string(cfg.postprocess.max_dets),
         "detections kept per image");
    line("postprocess.score_floor", fmt(cfg.postprocess.score_floor),
         "minimum score for a candidate to enter fusion");
    line("postprocess.pre_nms_topk", std::to_string(cfg.postprocess.pre_nms_topk),
         "candidate cap per scale run");
    line("eval.match_iou", fmt(cfg.eval.match_iou), "IoU for a detection to claim a GT box");
    line("seed", std::to_string(cfg.seed), "root of every derived random stream");
    return out;
}

}  // namespace facedet
