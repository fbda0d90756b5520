#include "evs/events.hpp"

#include <algorithm>
#include <stdexcept>

namespace evs {

ValidationReport validate_stream(const EventStream& stream) {
    ValidationReport report;
    const auto& events = stream.events;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (!stream.geometry.contains(e.x, e.y)) {
            if (report.out_of_bounds++ == 0) report.first_out_of_bounds = i;
        }
        if (e.p != 1 && e.p != -1) {
            if (report.bad_polarity++ == 0) report.first_bad_polarity = i;
        }
        if (i > 0 && e.t < events[i - 1].t) {
            if (report.out_of_order++ == 0) report.first_out_of_order = i;
        }
    }
    return report;
}

std::vector<EventWindow> slice_windows(const EventStream& stream,
                                       std::uint64_t window_us,
                                       std::uint64_t stride_us,
                                       std::optional<std::uint64_t> origin_us) {
    if (window_us == 0) throw std::invalid_argument("slice_windows: window_us must be positive");
    if (stride_us == 0) throw std::invalid_argument("slice_windows: stride_us must be positive");

    std::vector<EventWindow> windows;
    if (stream.empty()) return windows;

    const std::uint64_t origin = origin_us.value_or(stream.events.front().t);
    const std::uint64_t t_last = stream.events.back().t;

    const Event* base = stream.events.data();
    const Event* end = base + stream.events.size();
    // Window starts are monotone, so each lower bound resumes from the
    // previous window's start position.
    const Event* search_from = base;

    constexpr std::uint64_t kMax = ~std::uint64_t{0};
    for (std::uint64_t start = origin; start < t_last;) {
        const std::uint64_t stop = (start > kMax - window_us) ? kMax : start + window_us;
        const Event* first = std::lower_bound(
            search_from, end, start, [](const Event& e, std::uint64_t t) { return e.t < t; });
        const Event* past = std::lower_bound(
            first, end, stop, [](const Event& e, std::uint64_t t) { return e.t < t; });
        windows.push_back(EventWindow{
            .t_start = start,
            .t_end = stop,
            .events = std::span<const Event>(first, past),
            .geometry = stream.geometry,
        });
        search_from = first;
        if (start > kMax - stride_us) break;
        start += stride_us;
    }
    return windows;
}

}  // namespace evs
