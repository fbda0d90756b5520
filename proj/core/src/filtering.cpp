#include "evs/filtering.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "evs/parallel.hpp"

namespace evs {

namespace {

/// Number of distinct mask pixels hit by at least one event (k), plus the
/// raw count of events landing on the mask (multiplicity included).
struct MaskOccupancy {
    std::size_t hit_pixels = 0;
    std::uint64_t events_on_mask = 0;
};

MaskOccupancy mask_occupancy(const EventWindow& window, const Mask& mask) {
    std::vector<std::uint8_t> hit(mask.in.size(), 0);
    MaskOccupancy occ;
    for (const Event& e : window.events) {
        if (e.x >= mask.width || e.y >= mask.height) continue;
        const std::size_t i = static_cast<std::size_t>(e.y) * mask.width + e.x;
        if (!mask.in[i]) continue;
        ++occ.events_on_mask;
        if (!hit[i]) {
            hit[i] = 1;
            ++occ.hit_pixels;
        }
    }
    return occ;
}

double kl_from_counts(std::size_t n_mask, std::size_t k, const MaskDistributionParams& params) {
    // k = 0 and k = N both normalize to the uniform distribution; return
    // exact zeros rather than accumulated rounding noise.
    if (k == 0 || k == n_mask) return 0.0;
    const double n = static_cast<double>(n_mask);
    const double kd = static_cast<double>(k);
    const double z = (params.in_mass * kd + params.out_mass * (n - kd)) / n;
    const double p_hit = params.in_mass / (n * z);
    const double p_miss = params.out_mass / (n * z);
    return kd * p_hit * std::log(p_hit * n) + (n - kd) * p_miss * std::log(p_miss * n);
}

}  // namespace

const char* to_string(FilterMethod method) noexcept {
    switch (method) {
        case FilterMethod::MaskKl: return "mask-kl";
        case FilterMethod::BBoxRatio: return "bbox-ratio";
        case FilterMethod::MinCount: return "min-count";
    }
    return "?";
}

double kl_mask_score(const EventWindow& window, const Mask& mask,
                     const MaskDistributionParams& params) {
    if (!mask.valid()) throw std::invalid_argument("mask is empty or malformed");
    if (!(params.in_mass > 0.0) || !(params.out_mass > 0.0))
        throw std::invalid_argument("mask distribution masses must be positive");
    const std::size_t n_mask = mask.in_count();
    if (n_mask == 0) throw std::invalid_argument("mask has no in-pixels");
    return kl_from_counts(n_mask, mask_occupancy(window, mask).hit_pixels, params);
}

double bbox_event_ratio(const EventWindow& window, const BBox& bbox) {
    if (bbox.empty()) throw std::invalid_argument("bounding box is degenerate");
    std::uint64_t inside = 0;
    for (const Event& e : window.events)
        inside += bbox.contains(e.x, e.y);
    return static_cast<double>(inside) / bbox.area();
}

bool count_filter(const EventWindow& window, std::uint64_t min_events) {
    return window.size() > min_events;
}

DatasetFilterReport filter_dataset(std::span<const EventWindow> windows,
                                   std::span<const Mask> masks,
                                   std::span<const BBox> bboxes,
                                   const FilterConfig& config) {
    const std::size_t n = windows.size();
    if (config.method == FilterMethod::MaskKl) {
        for (std::size_t i = 0; i < n; ++i)
            if (i >= masks.size() || !masks[i].valid())
                throw std::invalid_argument("no mask for frame " + std::to_string(i));
    }
    if (config.method == FilterMethod::BBoxRatio) {
        for (std::size_t i = 0; i < n; ++i)
            if (i >= bboxes.size() || bboxes[i].empty())
                throw std::invalid_argument("no bounding box for frame " + std::to_string(i));
    }

    DatasetFilterReport report;
    report.scores.resize(n);
    report.total = n;

    parallel_for(n, [&](std::size_t i) {
        FilterScore& s = report.scores[i];
        s.frame_index = i;
        s.method = config.method;
        switch (config.method) {
            case FilterMethod::MaskKl: {
                const MaskOccupancy occ = mask_occupancy(windows[i], masks[i]);
                s.score = kl_from_counts(masks[i].in_count(), occ.hit_pixels,
                                         config.distribution);
                s.kept = occ.events_on_mask >= config.min_mask_events &&
                         s.score <= config.threshold;
                break;
            }
            case FilterMethod::BBoxRatio:
                s.score = bbox_event_ratio(windows[i], bboxes[i]);
                s.kept = s.score >= config.threshold;
                break;
            case FilterMethod::MinCount:
                s.score = static_cast<double>(windows[i].size());
                s.kept = count_filter(windows[i],
                                      static_cast<std::uint64_t>(config.threshold));
                break;
        }
    });

    for (const FilterScore& s : report.scores) report.kept += s.kept;
    report.kept_fraction = n == 0 ? 0.0 : static_cast<double>(report.kept) / n;
    return report;
}

}  // namespace evs
