#include "evs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evs {

namespace {

constexpr double kSmallMaxArea = 22500.0;   // 150 x 150
constexpr double kMediumMaxArea = 90000.0;  // 300 x 300
constexpr double kIouThresholds[] = {0.5, 0.75};

enum class Bucket { Small = 0, Medium = 1, Large = 2, All = 3 };

Bucket bucket_of(double area) {
    if (area <= kSmallMaxArea) return Bucket::Small;
    if (area <= kMediumMaxArea) return Bucket::Medium;
    return Bucket::Large;
}

struct RankedDet {
    std::size_t image = 0;
    std::size_t index = 0;  // within its image, original order
    double score = 0.0;
    int matched_gt = -1;  // per-threshold result, index within the image
};

/// Greedy matching for one image at one IoU threshold: detections in
/// descending score (stable), each taking the unmatched ground truth of
/// highest IoU at or above the threshold.
void match_image(const std::vector<Detection>& dets, const std::vector<BBox>& gts,
                 double threshold, std::vector<int>& match_out) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });

    match_out.assign(dets.size(), -1);
    std::vector<char> taken(gts.size(), 0);
    for (std::size_t d : order) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double overlap = iou(dets[d].bbox, gts[g]);
            if (overlap >= threshold && overlap > best_iou) {
                best_iou = overlap;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            taken[static_cast<std::size_t>(best)] = 1;
            match_out[d] = best;
        }
    }
}

struct PrResult {
    double ap = 0.0;
    double max_recall = 0.0;
};

/// Precision-recall sweep over the globally ranked detections restricted
/// to one size bucket; AP is the mean of 101 interpolated precision
/// samples on the recall grid.
PrResult pr_for_bucket(const std::vector<RankedDet>& ranked,
                       const std::vector<std::vector<Bucket>>& gt_buckets,
                       std::size_t bucket_gt_count, Bucket bucket) {
    if (bucket_gt_count == 0) return {};

    std::vector<double> precision, recall;
    std::size_t tp = 0, fp = 0;
    for (const RankedDet& det : ranked) {
        if (det.matched_gt >= 0) {
            const Bucket b = gt_buckets[det.image][static_cast<std::size_t>(det.matched_gt)];
            if (bucket != Bucket::All && b != bucket) continue;  // ignored, not a FP
            ++tp;
        } else {
            ++fp;
        }
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(bucket_gt_count));
    }

    PrResult out;
    if (precision.empty()) return out;
    out.max_recall = recall.back();

    // Running maximum of precision to the right of each rank.
    std::vector<double> best_right(precision.size());
    double running = 0.0;
    for (std::size_t i = precision.size(); i-- > 0;) {
        running = std::max(running, precision[i]);
        best_right[i] = running;
    }

    double sum = 0.0;
    for (int g = 0; g <= 100; ++g) {
        const double r = static_cast<double>(g) / 100.0;
        const auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end())
            sum += best_right[static_cast<std::size_t>(it - recall.begin())];
    }
    out.ap = sum / 101.0;
    return out;
}

}  // namespace

PoseErrors pose_errors(const Pose& pred, const Pose& gt) {
    const double gt_norm = gt.tvec.norm();
    if (gt_norm == 0.0)
        throw std::invalid_argument(
            "relative translation error is undefined for zero ground-truth translation");

    PoseErrors e;
    e.e_t = (pred.tvec - gt.tvec).norm() / gt_norm;
    const double dot = std::abs(pred.q.normalized().dot(gt.q.normalized()));
    e.e_r = 2.0 * std::acos(std::clamp(dot, 0.0, 1.0));
    e.e_p = e.e_r + e.e_t;
    return e;
}

DetEvalReport detection_eval(const std::vector<std::vector<Detection>>& detections_per_image,
                             const std::vector<std::vector<BBox>>& gts_per_image) {
    if (detections_per_image.size() != gts_per_image.size())
        throw std::invalid_argument("detections and ground truths disagree on image count");

    DetEvalReport report;
    report.total_images = gts_per_image.size();

    std::vector<std::vector<Bucket>> gt_buckets(gts_per_image.size());
    std::size_t bucket_counts[3] = {0, 0, 0};
    for (std::size_t i = 0; i < gts_per_image.size(); ++i) {
        gt_buckets[i].reserve(gts_per_image[i].size());
        for (const BBox& gt : gts_per_image[i]) {
            const Bucket b = bucket_of(gt.area());
            gt_buckets[i].push_back(b);
            ++bucket_counts[static_cast<int>(b)];
            ++report.total_gts;
        }
        report.total_dets += detections_per_image[i].size();
    }
    report.empty = report.total_gts == 0;
    if (report.empty) return report;

    // Global ranking by score, stable on image order then original index.
    std::vector<RankedDet> ranked;
    ranked.reserve(report.total_dets);
    for (std::size_t i = 0; i < detections_per_image.size(); ++i)
        for (std::size_t j = 0; j < detections_per_image[i].size(); ++j)
            ranked.push_back({i, j, detections_per_image[i][j].score, -1});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedDet& a, const RankedDet& b) { return a.score > b.score; });

    double ap_all[2], ar_all[2], ap_bucket[3][2], ar_bucket[3][2];
    std::vector<int> match;
    std::vector<std::vector<int>> matches(gts_per_image.size());
    for (int ti = 0; ti < 2; ++ti) {
        for (std::size_t i = 0; i < gts_per_image.size(); ++i) {
            match_image(detections_per_image[i], gts_per_image[i], kIouThresholds[ti], match);
            matches[i] = match;
        }
        for (RankedDet& det : ranked) det.matched_gt = matches[det.image][det.index];

        const PrResult all =
            pr_for_bucket(ranked, gt_buckets, report.total_gts, Bucket::All);
        ap_all[ti] = all.ap;
        ar_all[ti] = all.max_recall;
        for (int b = 0; b < 3; ++b) {
            const PrResult pr = pr_for_bucket(ranked, gt_buckets, bucket_counts[b],
                                              static_cast<Bucket>(b));
            ap_bucket[b][ti] = pr.ap;
            ar_bucket[b][ti] = pr.max_recall;
        }
    }

    report.ap50 = ap_all[0];
    report.ap75 = ap_all[1];
    report.ar = (ar_all[0] + ar_all[1]) / 2.0;
    report.ap_s = (ap_bucket[0][0] + ap_bucket[0][1]) / 2.0;
    report.ap_m = (ap_bucket[1][0] + ap_bucket[1][1]) / 2.0;
    report.ap_l = (ap_bucket[2][0] + ap_bucket[2][1]) / 2.0;
    report.ar_s = (ar_bucket[0][0] + ar_bucket[0][1]) / 2.0;
    report.ar_m = (ar_bucket[1][0] + ar_bucket[1][1]) / 2.0;
    report.ar_l = (ar_bucket[2][0] + ar_bucket[2][1]) / 2.0;
    return report;
}

double data_percent(std::span<const FrameOutcome> outcomes, double det_threshold) {
    if (outcomes.empty()) return 0.0;
    std::size_t confident = 0;
    for (const FrameOutcome& f : outcomes)
        confident += f.det_score >= det_threshold && f.has_pose && f.converged;
    return 100.0 * static_cast<double>(confident) / static_cast<double>(outcomes.size());
}

}  // namespace evs
