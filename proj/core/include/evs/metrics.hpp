#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evs/bbox.hpp"
#include "evs/geometry.hpp"

namespace evs {

/// Pose error triple. e_r is kept in radians internally; reports convert
/// to degrees when printing.
struct PoseErrors {
    double e_t = 0.0;  ///< |t_pred - t_gt| / |t_gt|
    double e_r = 0.0;  ///< 2 acos |<q_pred, q_gt>|, radians
    double e_p = 0.0;  ///< e_r (radians) + e_t
};

/// Relative translation error, geodesic rotation error, and their sum.
/// Throws when the ground-truth translation is zero (the relative error
/// is undefined there).
PoseErrors pose_errors(const Pose& pred, const Pose& gt);

struct Detection {
    BBox bbox;
    double score = 0.0;
};

/// AP/AR at IoU thresholds {0.5, 0.75} with COCO-style size buckets.
/// Bucket metrics average over both IoU thresholds.
struct DetEvalReport {
    double ap50 = 0.0;
    double ap75 = 0.0;
    double ap_s = 0.0;
    double ap_m = 0.0;
    double ap_l = 0.0;
    double ar = 0.0;
    double ar_s = 0.0;
    double ar_m = 0.0;
    double ar_l = 0.0;
    std::size_t total_images = 0;
    std::size_t total_gts = 0;
    std::size_t total_dets = 0;
    bool empty = false;  ///< no ground truth anywhere
};

/// Greedy per-image matching in descending score (stable on ties), each
/// ground truth matched at most once per IoU threshold; AP is the
/// 101-point interpolated area under the precision-recall curve. Size
/// buckets split ground truths at areas of 22,500 and 90,000 square
/// pixels (lower bucket inclusive); detections matched to a ground truth
/// of another size class are ignored in that bucket, unmatched detections
/// count as false positives everywhere.
DetEvalReport detection_eval(const std::vector<std::vector<Detection>>& detections_per_image,
                             const std::vector<std::vector<BBox>>& gts_per_image);

/// Per-frame inference outcome feeding the coverage statistic.
struct FrameOutcome {
    double det_score = 0.0;  ///< detector confidence, 0 when absent
    bool has_pose = false;   ///< keypoint stage produced enough points
    bool converged = false;  ///< pose refinement converged
};

/// Percentage of frames with a confident detection (score >= threshold)
/// and a converged pose. 0 for an empty sequence.
double data_percent(std::span<const FrameOutcome> outcomes, double det_threshold = 0.9);

}  // namespace evs
