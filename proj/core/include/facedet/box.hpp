#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace facedet {

/**
 * @brief Axis-aligned box in corner form, continuous pixel coordinates.
 *
 * Width is x2 - x1 with no "+1"; boxes with non-positive width/height or
 * non-finite coordinates are rejected at construction. File readers convert
 * from the external (x, y, w, h) layout via x2 = x + w.
 */
struct Box {
    double x1, y1, x2, y2;

    Box(double x1_, double y1_, double x2_, double y2_) : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
        if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2)))
            throw std::invalid_argument("Box: coordinates must be finite");
        if (!(x2 > x1) || !(y2 > y1))
            throw std::invalid_argument("Box: requires x2 > x1 and y2 > y1");
    }

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double center_x() const { return 0.5 * (x1 + x2); }
    double center_y() const { return 0.5 * (y1 + y2); }

    bool operator==(const Box&) const = default;
};

inline double area(const Box& b) { return b.width() * b.height(); }

/// Geometric-mean side length sqrt(w*h); the "size" of a face or anchor.
inline double mean_side(const Box& b) { return std::sqrt(area(b)); }

inline double intersection_area(const Box& a, const Box& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    return iw * ih;
}

inline double iou(const Box& a, const Box& b) {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    return inter / (area(a) + area(b) - inter);
}

inline Box scale_box(const Box& b, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor))
        throw std::invalid_argument("scale_box: factor must be positive and finite");
    return Box(b.x1 * factor, b.y1 * factor, b.x2 * factor, b.y2 * factor);
}

/// Mirror about the vertical midline of a frame of the given width.
inline Box mirror_x(const Box& b, double frame_width) {
    return Box(frame_width - b.x2, b.y1, frame_width - b.x1, b.y2);
}

/// Overlap rectangle of two boxes, or nullopt when they are disjoint.
inline std::optional<Box> intersect(const Box& a, const Box& b) {
    const double x1 = std::max(a.x1, b.x1);
    const double y1 = std::max(a.y1, b.y1);
    const double x2 = std::min(a.x2, b.x2);
    const double y2 = std::min(a.y2, b.y2);
    if (x2 <= x1 || y2 <= y1) return std::nullopt;
    return Box(x1, y1, x2, y2);
}

/// Clip to the window [0,w] x [0,h]; nullopt when nothing remains.
inline std::optional<Box> clip_box(const Box& b, double w, double h) {
    const double x1 = std::clamp(b.x1, 0.0, w);
    const double y1 = std::clamp(b.y1, 0.0, h);
    const double x2 = std::clamp(b.x2, 0.0, w);
    const double y2 = std::clamp(b.y2, 0.0, h);
    if (x2 <= x1 || y2 <= y1) return std::nullopt;
    return Box(x1, y1, x2, y2);
}

}  // namespace facedet
