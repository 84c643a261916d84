#pragma once

#include <span>
#include <string>
#include <vector>

#include "facedet/errors.hpp"
#include "facedet/evaluation.hpp"

namespace facedet {

/**
 * Detection and ground-truth files share one block layout:
 *   image_id
 *   n
 *   n lines of "x y w h score" (detections) or "x y w h tag" (ground truth)
 * Coordinates are emitted with 3 decimals, scores with 6; x2 = x + w.
 */

std::string read_text_file(const std::string& path);

/// Write via a sibling temp file and rename, so partial outputs never exist.
void write_text_atomic(const std::string& path, const std::string& content);

DetectionMap parse_detections(const std::string& text, const std::string& origin);
DetectionMap read_detections(const std::string& path);
std::string format_detections(const DetectionMap& dets);
void write_detections(const DetectionMap& dets, const std::string& path);

std::vector<GroundTruthImage> parse_ground_truth(const std::string& text,
                                                 const std::string& origin);
std::vector<GroundTruthImage> read_ground_truth(const std::string& path);
std::string format_ground_truth(std::span<const GroundTruthImage> images);
void write_ground_truth(std::span<const GroundTruthImage> images, const std::string& path);

/// {"easy": ap, "medium": ap, "hard": ap, "n_images": k}
std::string format_report(const EvalResult& result);

/// One "threshold recall precision" line per curve point, 6 decimals.
std::string format_curve_tsv(const PRCurve& curve);

}  // namespace facedet
