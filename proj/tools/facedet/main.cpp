#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "facedet/config.hpp"
#include "facedet/detection_io.hpp"
#include "facedet/gradcheck.hpp"
#include "facedet/pipeline.hpp"
#include "facedet/postprocess.hpp"
#include "facedet/rng.hpp"
#include "facedet/sampling.hpp"

namespace {

using namespace facedet;

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text_atomic(out_path, text);
}

RunConfig effective_config(const std::string& config_path) {
    if (config_path.empty()) {
        RunConfig cfg;
        cfg.validate();
        return cfg;
    }
    return load_config(config_path);
}

std::pair<double, double> parse_wh(const std::string& spec, const char* flag) {
    const auto x = spec.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= spec.size())
        throw std::invalid_argument(std::string(flag) + ": expected WxH, got '" + spec + "'");
    try {
        return {std::stod(spec.substr(0, x)), std::stod(spec.substr(x + 1))};
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(flag) + ": expected WxH, got '" + spec + "'");
    }
}

GroundTruthImage single_image(const std::string& gt_path, const char* cmd) {
    auto images = read_ground_truth(gt_path);
    if (images.size() != 1)
        throw std::invalid_argument(std::string(cmd) +
                                    ": the ground-truth file must contain exactly one image block");
    return std::move(images.front());
}

int cmd_anchors(const std::string& config_path, const std::string& out, bool explain) {
    const RunConfig cfg = effective_config(config_path);
    if (explain) {
        std::cout << explain_config(cfg);
        return 0;
    }
    emit(out, dump_lattice(build_lattice(cfg.pyramid)));
    return 0;
}

int cmd_assign(const std::string& config_path, const std::string& gt_path, const std::string& out,
               bool explain) {
    const RunConfig cfg = effective_config(config_path);
    if (explain) {
        std::cout << explain_config(cfg);
        return 0;
    }
    const GroundTruthImage image = single_image(gt_path, "assign");
    const AnchorLattice lattice = build_lattice(cfg.pyramid);
    // Identity refinement: labels reflect the raw lattice under both
    // threshold pairs.
    const auto [step1, step2] =
        two_step_assign(lattice, image.boxes, lattice.anchors, cfg.step1, cfg.step2);

    std::string text;
    text.reserve(lattice.size() * 32);
    char buf[128];
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        double best = 0.0;
        int best_gt = -1;
        for (std::size_t g = 0; g < image.boxes.size(); ++g) {
            const double v = iou(lattice.anchors[i], image.boxes[g]);
            if (v > best) {
                best = v;
                best_gt = static_cast<int>(g);
            }
        }
        std::snprintf(buf, sizeof buf, "%zu\t%d\t%d\t%d\t%.6f\n", i, step1.label(i),
                      step2.label(i), best_gt, best);
        text += buf;
    }
    emit(out, text);
    return 0;
}

int cmd_grad_check(const std::string& op, int n, std::uint64_t seed, const std::string& out,
                   bool explain) {
    if (explain) {
        RunConfig cfg;
        std::cout << explain_config(cfg);
        return 0;
    }
    const auto records = op == "focal" ? grad_check_focal(n, seed) : grad_check_iou(n, seed);
    emit(out, format_records(records));
    return max_rel_err(records) < 1e-5 ? 0 : 1;
}

int cmd_sample_plan(const std::string& config_path, const std::string& gt_path,
                    const std::string& size_spec, int n, std::uint64_t seed, double train_size,
                    const std::string& out, bool explain) {
    const RunConfig cfg = effective_config(config_path);
    if (explain) {
        std::cout << explain_config(cfg);
        return 0;
    }
    const auto [iw, ih] = parse_wh(size_spec, "--image-size");
    const GroundTruthImage image = single_image(gt_path, "sample-plan");

    std::vector<Box> faces;
    for (std::size_t i = 0; i < image.boxes.size(); ++i)
        if (image.tags[i] != Difficulty::Ignore) faces.push_back(image.boxes[i]);
    if (faces.empty()) throw std::invalid_argument("sample-plan: no usable faces in ground truth");

    const AnchorScaleSet set = AnchorScaleSet::from_pyramid(cfg.pyramid);
    const double side = train_size > 0.0 ? train_size : cfg.augmentation.train_size;

    std::string plans;
    std::vector<std::size_t> histogram(set.scales.size(), 0);
    for (int i = 0; i < n; ++i) {
        const std::uint64_t plan_seed = mix_seed(seed, static_cast<std::uint64_t>(i));
        Rng rng(plan_seed);
        const Box& face = faces[rng.uniform_index(faces.size())];
        SamplePlan plan = data_anchor_sample(face, faces, iw, ih, set, side, rng);
        plan.seed = plan_seed;
        plans += plan.to_json_line() + "\n";
        ++histogram[nearest_anchor_scale(plan.s_random, set).first];
    }

    std::string summary = "# resized face side histogram (nearest scale: plans)\n";
    char buf[64];
    for (std::size_t i = 0; i < histogram.size(); ++i) {
        std::snprintf(buf, sizeof buf, "# %.2f: %zu\n", set.scales[i], histogram[i]);
        summary += buf;
    }
    if (out.empty()) {
        std::cout << plans << summary;
    } else {
        write_text_atomic(out, plans);
        std::cout << summary;
    }
    return 0;
}

int cmd_merge_scales(const std::string& config_path, const std::vector<std::string>& run_specs,
                     const std::string& size_spec, const std::string& out, bool explain) {
    const RunConfig cfg = effective_config(config_path);
    if (explain) {
        std::cout << explain_config(cfg);
        return 0;
    }
    std::pair<double, double> size{0.0, 0.0};
    if (!size_spec.empty()) size = parse_wh(size_spec, "--size");

    std::vector<std::pair<DetectionMap, double>> runs;
    for (const auto& spec : run_specs) {
        const auto colon = spec.rfind(':');
        if (colon == std::string::npos || colon + 1 >= spec.size())
            throw std::invalid_argument("--runs: expected file:scale, got '" + spec + "'");
        double scale = 0.0;
        try {
            scale = std::stod(spec.substr(colon + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("--runs: bad scale in '" + spec + "'");
        }
        runs.emplace_back(read_detections(spec.substr(0, colon)), scale);
    }

    std::set<std::string> ids;
    for (const auto& [dets, _] : runs)
        for (const auto& [id, __] : dets) ids.insert(id);

    DetectionMap merged;
    for (const auto& id : ids) {
        std::vector<ScaleRun> image_runs;
        for (const auto& [dets, scale] : runs) {
            auto it = dets.find(id);
            image_runs.push_back(
                {scale, false, it == dets.end() ? std::vector<Detection>{} : it->second});
        }
        merged[id] = merge_scales(image_runs, size, cfg.postprocess.vote_iou,
                                  cfg.postprocess.pre_nms_iou, cfg.postprocess.max_dets);
    }
    emit(out, format_detections(merged));
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& gt_path, double noise,
                 double regression_quality, std::int64_t seed, const std::string& out,
                 bool explain) {
    RunConfig cfg = effective_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (explain) {
        std::cout << explain_config(cfg);
        return 0;
    }
    const auto images = read_ground_truth(gt_path);
    emit(out, format_detections(simulate(images, cfg, noise, regression_quality)));
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& det_path,
             const std::string& gt_path, const std::string& out, const std::string& curves_dir,
             double match_iou, bool explain) {
    RunConfig cfg = effective_config(config_path);
    if (match_iou > 0.0) cfg.eval.match_iou = match_iou;
    if (explain) {
        std::cout << explain_config(cfg);
        return 0;
    }
    const auto dets = read_detections(det_path);
    const auto gts = read_ground_truth(gt_path);
    const EvalResult result = evaluate(dets, gts, cfg.eval.match_iou);
    emit(out, format_report(result));
    if (!curves_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(curves_dir, ec);
        if (ec) throw IoError("cannot create curves directory: " + curves_dir);
        write_text_atomic(curves_dir + "/easy.tsv", format_curve_tsv(result.easy));
        write_text_atomic(curves_dir + "/medium.tsv", format_curve_tsv(result.medium));
        write_text_atomic(curves_dir + "/hard.tsv", format_curve_tsv(result.hard));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anchor-grid face detection toolkit: lattices, assignment, losses, "
                 "augmentation plans, detection fusion, and evaluation"};
    app.require_subcommand(1);

    std::function<int()> action;

    // anchors
    {
        auto* sub = app.add_subcommand("anchors", "dump the anchor lattice");
        auto config = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto explain = std::make_shared<bool>(false);
        sub->add_option("--config", *config, "JSON config file");
        sub->add_option("--out", *out, "output file (default stdout)");
        sub->add_flag("--explain", *explain, "print the effective config and exit");
        sub->callback([=, &action] {
            action = [=] { return cmd_anchors(*config, *out, *explain); };
        });
    }

    // assign
    {
        auto* sub = app.add_subcommand("assign", "label every anchor against one image's boxes");
        auto config = std::make_shared<std::string>();
        auto gt = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto explain = std::make_shared<bool>(false);
        sub->add_option("--config", *config, "JSON config file");
        sub->add_option("--gt", *gt, "ground-truth file with exactly one image block")
            ->required();
        sub->add_option("--out", *out, "output TSV (default stdout)");
        sub->add_flag("--explain", *explain, "print the effective config and exit");
        sub->callback([=, &action] {
            action = [=] { return cmd_assign(*config, *gt, *out, *explain); };
        });
    }

    // grad-check
    {
        auto* sub = app.add_subcommand("grad-check",
                                       "compare analytic loss gradients with finite differences");
        auto op = std::make_shared<std::string>();
        auto n = std::make_shared<int>(1000);
        auto seed = std::make_shared<std::uint64_t>(1);
        auto out = std::make_shared<std::string>();
        auto explain = std::make_shared<bool>(false);
        sub->add_option("--op", *op, "loss to check")
            ->required()
            ->check(CLI::IsMember({"focal", "iou"}));
        sub->add_option("--n", *n, "sample count")->check(CLI::PositiveNumber);
        sub->add_option("--seed", *seed, "generator seed");
        sub->add_option("--out", *out, "output file (default stdout)");
        sub->add_flag("--explain", *explain, "print the effective config and exit");
        sub->callback([=, &action] {
            action = [=] { return cmd_grad_check(*op, *n, *seed, *out, *explain); };
        });
    }

    // sample-plan
    {
        auto* sub = app.add_subcommand("sample-plan",
                                       "emit scale-aware crop plans for one image's faces");
        auto config = std::make_shared<std::string>();
        auto gt = std::make_shared<std::string>();
        auto size = std::make_shared<std::string>();
        auto n = std::make_shared<int>(100000);
        auto seed = std::make_shared<std::uint64_t>(1);
        auto train = std::make_shared<double>(0.0);
        auto out = std::make_shared<std::string>();
        auto explain = std::make_shared<bool>(false);
        sub->add_option("--config", *config, "JSON config file");
        sub->add_option("--gt", *gt, "ground-truth file with exactly one image block")
            ->required();
        sub->add_option("--image-size", *size, "image size as WxH")->required();
        sub->add_option("--n", *n, "number of plans")->check(CLI::PositiveNumber);
        sub->add_option("--seed", *seed, "generator seed");
        sub->add_option("--train-size", *train, "crop side (default from config)");
        sub->add_option("--out", *out, "plan file (default stdout); histogram goes to stdout");
        sub->add_flag("--explain", *explain, "print the effective config and exit");
        sub->callback([=, &action] {
            action = [=] {
                return cmd_sample_plan(*config, *gt, *size, *n, *seed, *train, *out, *explain);
            };
        });
    }

    // merge-scales
    {
        auto* sub = app.add_subcommand("merge-scales", "fuse detection files from rescaled runs");
        auto config = std::make_shared<std::string>();
        auto runs = std::make_shared<std::vector<std::string>>();
        auto size = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto explain = std::make_shared<bool>(false);
        sub->add_option("--config", *config, "JSON config file");
        sub->add_option("--runs", *runs, "detection files as file:scale")->required();
        sub->add_option("--size", *size, "original image size as WxH (needed only for flips)");
        sub->add_option("--out", *out, "output file (default stdout)");
        sub->add_flag("--explain", *explain, "print the effective config and exit");
        sub->callback([=, &action] {
            action = [=] { return cmd_merge_scales(*config, *runs, *size, *out, *explain); };
        });
    }

    // simulate
    {
        auto* sub = app.add_subcommand("simulate",
                                       "run the synthetic detector end to end over a scene");
        auto config = std::make_shared<std::string>();
        auto gt = std::make_shared<std::string>();
        auto noise = std::make_shared<double>(0.0);
        auto rq = std::make_shared<double>(1.0);
        auto seed = std::make_shared<std::int64_t>(-1);
        auto out = std::make_shared<std::string>();
        auto explain = std::make_shared<bool>(false);
        sub->add_option("--config", *config, "JSON config file");
        sub->add_option("--gt", *gt, "ground-truth scene file")->required();
        sub->add_option("--noise", *noise, "score noise sigma")->check(CLI::NonNegativeNumber);
        sub->add_option("--regression-quality", *rq, "fraction of the ideal delta applied")
            ->check(CLI::Range(0.0, 1.0));
        sub->add_option("--seed", *seed, "override the config seed");
        sub->add_option("--out", *out, "detection file (default stdout)");
        sub->add_flag("--explain", *explain, "print the effective config and exit");
        sub->callback([=, &action] {
            action = [=] {
                return cmd_simulate(*config, *gt, *noise, *rq, *seed, *out, *explain);
            };
        });
    }

    // eval
    {
        auto* sub = app.add_subcommand("eval", "score a detection file against ground truth");
        auto config = std::make_shared<std::string>();
        auto det = std::make_shared<std::string>();
        auto gt = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto curves = std::make_shared<std::string>();
        auto match = std::make_shared<double>(0.0);
        auto explain = std::make_shared<bool>(false);
        sub->add_option("--config", *config, "JSON config file");
        sub->add_option("--det", *det, "detection file")->required();
        sub->add_option("--gt", *gt, "ground-truth file")->required();
        sub->add_option("--out", *out, "report JSON (default stdout)");
        sub->add_option("--curves", *curves, "directory for per-subset PR curves (TSV)");
        sub->add_option("--match-iou", *match, "override the matching IoU");
        sub->add_flag("--explain", *explain, "print the effective config and exit");
        sub->callback([=, &action] {
            action = [=] {
                return cmd_eval(*config, *det, *gt, *out, *curves, *match, *explain);
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return action ? action() : 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
