#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace evs {

/// A single sensor readout: pixel location, polarity of the intensity
/// change, and the camera-timeline timestamp in microseconds.
struct Event {
    std::uint64_t t = 0;  ///< timestamp [us]
    std::uint16_t x = 0;  ///< pixel column, 0-based
    std::uint16_t y = 0;  ///< pixel row, 0-based
    std::int8_t p = 0;    ///< polarity, +1 or -1

    friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
    int width = 0;
    int height = 0;

    [[nodiscard]] bool valid() const noexcept { return width > 0 && height > 0; }
    [[nodiscard]] bool contains(int x, int y) const noexcept {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    [[nodiscard]] std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

/// Time-ordered event sequence with the geometry it was recorded on.
/// Immutable by convention once built; all consumers treat it read-only.
struct EventStream {
    std::vector<Event> events;
    SensorGeometry geometry;

    [[nodiscard]] std::size_t size() const noexcept { return events.size(); }
    [[nodiscard]] bool empty() const noexcept { return events.empty(); }

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Violation counts for the EventStream invariants. Validation never
/// throws; a stream is well-formed iff ok().
struct ValidationReport {
    std::size_t out_of_bounds = 0;
    std::size_t out_of_order = 0;
    std::size_t bad_polarity = 0;
    std::optional<std::size_t> first_out_of_bounds;
    std::optional<std::size_t> first_out_of_order;
    std::optional<std::size_t> first_bad_polarity;

    [[nodiscard]] bool ok() const noexcept {
        return out_of_bounds == 0 && out_of_order == 0 && bad_polarity == 0;
    }
};

ValidationReport validate_stream(const EventStream& stream);

/// Half-open time slice [t_start, t_end) over a stream. Holds a view into
/// the stream's storage; the stream must outlive the window.
struct EventWindow {
    std::uint64_t t_start = 0;
    std::uint64_t t_end = 0;  ///< exclusive
    std::span<const Event> events;
    SensorGeometry geometry;

    [[nodiscard]] std::uint64_t duration_us() const noexcept { return t_end - t_start; }
    [[nodiscard]] std::size_t size() const noexcept { return events.size(); }
    [[nodiscard]] bool empty() const noexcept { return events.empty(); }
};

/// Slices a valid (sorted, in-bounds) stream into windows of width
/// `window_us` starting every `stride_us`, aligned to the first event
/// timestamp unless `origin_us` overrides it. Window starts are emitted
/// while they precede the last event timestamp; empty windows in gaps are
/// kept so indices stay aligned with per-frame labels.
std::vector<EventWindow> slice_windows(const EventStream& stream,
                                       std::uint64_t window_us,
                                       std::uint64_t stride_us,
                                       std::optional<std::uint64_t> origin_us = std::nullopt);

}  // namespace evs
