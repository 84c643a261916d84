#include "facedet/losses.hpp"

#include <algorithm>
#include <cmath>

namespace facedet {

void FocalParams::validate() const {
    if (!std::isfinite(alpha) || alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("focal: alpha must lie in (0, 1)");
    if (!std::isfinite(gamma) || gamma < 0.0)
        throw std::invalid_argument("focal: gamma must be >= 0");
}

void MaxOutConfig::validate() const {
    if (c_p < 1 || c_n < 1) throw std::invalid_argument("maxout: channel counts must be >= 1");
}

ClassSample::ClassSample(double p_, int y_) : p(p_), y(y_) {
    if (!std::isfinite(p)) throw std::invalid_argument("class sample: probability is not finite");
    if (y != 1 && y != -1) throw std::invalid_argument("class sample: label must be +1 or -1");
    p = std::clamp(p, kProbEps, 1.0 - kProbEps);
}

LossResult focal_loss(const ClassSample& s, const FocalParams& fp) {
    fp.validate();
    const double a = fp.alpha_t(s.y);
    const double q = s.y > 0 ? s.p : 1.0 - s.p;
    const double one_minus = 1.0 - q;
    const double log_q = std::log(q);

    LossResult r;
    r.value = -a * std::pow(one_minus, fp.gamma) * log_q;

    // dFL/dq, then chain through dq/dp = +-1.
    double dq = -a * std::pow(one_minus, fp.gamma) / q;
    if (fp.gamma > 0.0) dq += a * fp.gamma * std::pow(one_minus, fp.gamma - 1.0) * log_q;
    r.gradient = {s.y > 0 ? dq : -dq};
    return r;
}

LossResult iou_loss(const Box& pred, const Box& gt) {
    const double ix1 = std::max(pred.x1, gt.x1);
    const double iy1 = std::max(pred.y1, gt.y1);
    const double ix2 = std::min(pred.x2, gt.x2);
    const double iy2 = std::min(pred.y2, gt.y2);
    const double iw = ix2 - ix1;
    const double ih = iy2 - iy1;
    if (iw <= 0.0 || ih <= 0.0) throw DisjointBoxesError{};

    const double inter = iw * ih;
    const double uni = area(pred) + area(gt) - inter;

    LossResult r;
    r.value = std::log(uni) - std::log(inter);
    r.gradient.assign(4, 0.0);

    const double wp = pred.width();
    const double hp = pred.height();
    // dA/d{x1,y1,x2,y2} of the predicted box.
    const double dA[4] = {-hp, -wp, hp, wp};
    // Each corner moves the intersection only while it is the binding edge.
    const double dI[4] = {pred.x1 >= gt.x1 ? -ih : 0.0, pred.y1 >= gt.y1 ? -iw : 0.0,
                          pred.x2 <= gt.x2 ? ih : 0.0, pred.y2 <= gt.y2 ? iw : 0.0};
    for (int k = 0; k < 4; ++k)
        r.gradient[k] = (dA[k] - dI[k]) / uni - dI[k] / inter;
    return r;
}

std::pair<double, double> maxout_select(std::span<const double> face_scores,
                                        std::span<const double> bg_scores) {
    if (face_scores.empty() || bg_scores.empty())
        throw std::invalid_argument("maxout: score channels must be non-empty");
    return {*std::max_element(face_scores.begin(), face_scores.end()),
            *std::max_element(bg_scores.begin(), bg_scores.end())};
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

double normalizer(long long n_pos, const char* step) {
    if (n_pos < 0)
        throw std::invalid_argument(std::string("two-step loss: negative positive count for ") +
                                    step);
    return static_cast<double>(std::max<long long>(n_pos, 1));
}

double focal_sum(std::span<const ClassSample> samples, const FocalParams& fp) {
    std::vector<double> terms;
    terms.reserve(samples.size());
    for (const auto& s : samples) terms.push_back(focal_loss(s, fp).value);
    return pairwise_sum(terms);
}

double iou_sum(std::span<const RegressionSample> samples) {
    std::vector<double> terms;
    terms.reserve(samples.size());
    for (const auto& s : samples) terms.push_back(s.positive ? iou_loss(s.pred, s.gt).value : 0.0);
    return pairwise_sum(terms);
}

}  // namespace

double stc_loss(std::span<const ClassSample> step1, std::span<const ClassSample> step2,
                long long n_pos1, long long n_pos2, const FocalParams& fp) {
    fp.validate();
    return focal_sum(step1, fp) / normalizer(n_pos1, "step one") +
           focal_sum(step2, fp) / normalizer(n_pos2, "step two");
}

double str_loss(std::span<const RegressionSample> step1, std::span<const RegressionSample> step2,
                long long n_pos1, long long n_pos2) {
    return iou_sum(step1) / normalizer(n_pos1, "step one") +
           iou_sum(step2) / normalizer(n_pos2, "step two");
}

std::vector<char> stc_survivor_mask(std::span<const double> bg_probs, double threshold) {
    if (!std::isfinite(threshold) || threshold <= 0.0 || threshold >= 1.0)
        throw std::invalid_argument("survivor mask: threshold must lie in (0, 1)");
    std::vector<char> keep(bg_probs.size(), 1);
    for (size_t i = 0; i < bg_probs.size(); ++i)
        if (bg_probs[i] > threshold) keep[i] = 0;
    return keep;
}

}  // namespace facedet
