#include "facedet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "facedet/rng.hpp"

namespace facedet {

namespace {

double rel_err(double a, double f) {
    return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-6});
}

Box random_box(Rng& rng) {
    const double x1 = rng.uniform(0.0, 60.0);
    const double y1 = rng.uniform(0.0, 60.0);
    return Box(x1, y1, x1 + rng.uniform(5.0, 40.0), y1 + rng.uniform(5.0, 40.0));
}

bool safe_pair(const Box& pred, const Box& gt) {
    const double iw = std::min(pred.x2, gt.x2) - std::max(pred.x1, gt.x1);
    const double ih = std::min(pred.y2, gt.y2) - std::max(pred.y1, gt.y1);
    if (iw < 0.5 || ih < 0.5) return false;
    const double margin =
        std::min({std::abs(pred.x1 - gt.x1), std::abs(pred.y1 - gt.y1),
                  std::abs(pred.x2 - gt.x2), std::abs(pred.y2 - gt.y2)});
    return margin >= 1e-3;
}

}  // namespace

std::vector<GradCheckRecord> grad_check_focal(int n, std::uint64_t seed, const FocalParams& fp) {
    if (n < 1) throw std::invalid_argument("grad check: sample count must be >= 1");
    fp.validate();
    Rng rng(mix_seed(seed, 1));
    std::vector<GradCheckRecord> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double p = rng.uniform(0.01, 0.99);
        const int y = rng.uniform_index(2) == 0 ? 1 : -1;
        const double analytic = focal_loss(ClassSample(p, y), fp).gradient[0];
        const double fd = (focal_loss(ClassSample(p + kFdStep, y), fp).value -
                           focal_loss(ClassSample(p - kFdStep, y), fp).value) /
                          (2.0 * kFdStep);
        out.push_back({"focal", {p, static_cast<double>(y)}, analytic, fd, rel_err(analytic, fd), 0});
    }
    return out;
}

std::vector<GradCheckRecord> grad_check_iou(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("grad check: sample count must be >= 1");
    Rng rng(mix_seed(seed, 2));
    std::vector<GradCheckRecord> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Box pred = random_box(rng);
        Box gt = random_box(rng);
        int attempts = 0;
        while (!safe_pair(pred, gt)) {
            if (++attempts > 10000) throw std::logic_error("grad check: box sampling stalled");
            pred = random_box(rng);
            gt = random_box(rng);
        }
        const auto analytic = iou_loss(pred, gt).gradient;

        GradCheckRecord rec{"iou",
                            {pred.x1, pred.y1, pred.x2, pred.y2, gt.x1, gt.y1, gt.x2, gt.y2},
                            0.0,
                            0.0,
                            -1.0,
                            0};
        double corners[4] = {pred.x1, pred.y1, pred.x2, pred.y2};
        for (int k = 0; k < 4; ++k) {
            const double keep = corners[k];
            corners[k] = keep + kFdStep;
            const double hi = iou_loss(Box(corners[0], corners[1], corners[2], corners[3]), gt).value;
            corners[k] = keep - kFdStep;
            const double lo = iou_loss(Box(corners[0], corners[1], corners[2], corners[3]), gt).value;
            corners[k] = keep;
            const double fd = (hi - lo) / (2.0 * kFdStep);
            const double e = rel_err(analytic[k], fd);
            if (e > rec.rel_err) {
                rec.analytic = analytic[k];
                rec.fd = fd;
                rec.rel_err = e;
                rec.component = k;
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::string format_records(std::span<const GradCheckRecord> records) {
    std::string out;
    out.reserve(records.size() * 96);
    char buf[256];
    for (const auto& r : records) {
        std::string point;
        for (size_t i = 0; i < r.point.size(); ++i) {
            std::snprintf(buf, sizeof buf, i ? ",%.6f" : "%.6f", r.point[i]);
            point += buf;
        }
        std::snprintf(buf, sizeof buf, "%s %s %.9e %.9e %.3e\n", r.op.c_str(), point.c_str(),
                      r.analytic, r.fd, r.rel_err);
        out += buf;
    }
    return out;
}

double max_rel_err(std::span<const GradCheckRecord> records) {
    double worst = 0.0;
    for (const auto& r : records) worst = std::max(worst, r.rel_err);
    return worst;
}

}  // namespace facedet
