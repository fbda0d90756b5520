#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "evs/bbox.hpp"
#include "evs/events.hpp"

namespace evs {

/// Binary segmentation mask, row-major, one byte per pixel (nonzero = in).
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> in;

    [[nodiscard]] bool valid() const noexcept {
        return width > 0 && height > 0 &&
               in.size() == static_cast<std::size_t>(width) * height;
    }
    [[nodiscard]] bool at(int x, int y) const {
        return in[static_cast<std::size_t>(y) * width + x] != 0;
    }
    [[nodiscard]] std::size_t in_count() const noexcept {
        std::size_t n = 0;
        for (std::uint8_t v : in) n += v != 0;
        return n;
    }
};

/// Per-pixel probability masses assigned to mask pixels with and without
/// events, before normalization.
struct MaskDistributionParams {
    double in_mass = 0.99;
    double out_mass = 0.01;
};

enum class FilterMethod { MaskKl, BBoxRatio, MinCount };

const char* to_string(FilterMethod method) noexcept;

struct FilterScore {
    std::size_t frame_index = 0;
    FilterMethod method = FilterMethod::MaskKl;
    double score = 0.0;
    bool kept = false;
};

/// KL divergence (nats) between the event-occupancy distribution on the
/// mask and the uniform distribution on the mask. Mask pixels that
/// received at least one event carry in_mass, the rest out_mass; the
/// masses are normalized to a probability distribution before the
/// divergence is taken. 0 means events cover the mask uniformly (all
/// pixels hit, or none); larger values mean sparser coverage.
double kl_mask_score(const EventWindow& window, const Mask& mask,
                     const MaskDistributionParams& params = {});

/// Events whose pixel lies inside the box, divided by the box area.
/// Events are counted with multiplicity.
double bbox_event_ratio(const EventWindow& window, const BBox& bbox);

/// Keep iff the window holds strictly more than min_events events.
bool count_filter(const EventWindow& window, std::uint64_t min_events);

struct FilterConfig {
    FilterMethod method = FilterMethod::MaskKl;
    /// mask-kl keeps score <= threshold; bbox-ratio keeps score >= threshold;
    /// min-count keeps count > threshold.
    double threshold = 0.5;
    /// mask-kl only: windows with fewer events on the mask are never kept
    /// (a silent frame scores 0 and would otherwise look ideal).
    std::uint64_t min_mask_events = 1000;
    MaskDistributionParams distribution{};
};

struct DatasetFilterReport {
    std::vector<FilterScore> scores;
    std::size_t total = 0;
    std::size_t kept = 0;
    double kept_fraction = 0.0;
};

/// Scores every window with the configured method and applies the keep
/// rule. masks must cover every window for mask-kl, bboxes for
/// bbox-ratio; a missing entry raises an error naming the frame index.
DatasetFilterReport filter_dataset(std::span<const EventWindow> windows,
                                   std::span<const Mask> masks,
                                   std::span<const BBox> bboxes,
                                   const FilterConfig& config);

}  // namespace evs
