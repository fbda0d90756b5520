#include "evs/representations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace evs {

namespace {

constexpr std::uint64_t kNoEvent = ~std::uint64_t{0};

void require_window(const EventWindow& window) {
    if (!window.geometry.valid())
        throw std::invalid_argument("event window has invalid sensor geometry");
    if (window.t_end <= window.t_start)
        throw std::invalid_argument("event window has non-positive duration");
}

EventFrame make_frame(const EventWindow& window, Representation repr, int channels,
                      double decay_us) {
    EventFrame frame;
    frame.repr = repr;
    frame.channels = channels;
    frame.height = window.geometry.height;
    frame.width = window.geometry.width;
    frame.t_start = window.t_start;
    frame.t_end = window.t_end;
    frame.decay_us = decay_us;
    frame.values.assign(static_cast<std::size_t>(channels) * frame.height * frame.width, 0.0f);
    return frame;
}

/// Writes exp(-(t_ref - t_last)/decay) into `plane` for every pixel with a
/// recorded last-event timestamp.
void render_time_surface(const std::vector<std::uint64_t>& last_t, std::uint64_t t_ref,
                         double decay_us, float* plane) {
    for (std::size_t i = 0; i < last_t.size(); ++i) {
        if (last_t[i] == kNoEvent) continue;
        const double age = static_cast<double>(t_ref - last_t[i]);
        plane[i] = static_cast<float>(std::exp(-age / decay_us));
    }
}

}  // namespace

const char* to_string(Representation repr) noexcept {
    switch (repr) {
        case Representation::E2F: return "e2f";
        case Representation::LNES: return "lnes";
        case Representation::TS: return "ts";
        case Representation::C3: return "3c";
    }
    return "?";
}

EventFrame build_e2f(const EventWindow& window) {
    require_window(window);
    EventFrame frame = make_frame(window, Representation::E2F, 1, 0.0);

    std::vector<std::uint32_t> counts(frame.values.size(), 0);
    const int width = frame.width;
    for (const Event& e : window.events)
        ++counts[static_cast<std::size_t>(e.y) * width + e.x];

    const std::uint32_t max_count = counts.empty()
                                        ? 0
                                        : *std::max_element(counts.begin(), counts.end());
    if (max_count == 0) return frame;  // empty window: all zeros

    const double inv = 1.0 / static_cast<double>(max_count);
    for (std::size_t i = 0; i < counts.size(); ++i)
        frame.values[i] = static_cast<float>(counts[i] * inv);
    return frame;
}

EventFrame build_lnes(const EventWindow& window) {
    require_window(window);
    EventFrame frame = make_frame(window, Representation::LNES, 2, 0.0);

    const double inv_tau = 1.0 / static_cast<double>(window.duration_us());
    const std::size_t plane = static_cast<std::size_t>(frame.height) * frame.width;
    for (const Event& e : window.events) {
        const std::size_t pixel = static_cast<std::size_t>(e.y) * frame.width + e.x;
        const std::size_t slot = (e.p > 0 ? 0 : plane) + pixel;
        frame.values[slot] =
            static_cast<float>(static_cast<double>(e.t - window.t_start) * inv_tau);
    }
    return frame;
}

EventFrame build_ts(const EventWindow& window, double decay_us) {
    require_window(window);
    if (!(decay_us > 0.0)) throw std::invalid_argument("time surface decay must be positive");
    EventFrame frame = make_frame(window, Representation::TS, 1, decay_us);

    std::vector<std::uint64_t> last_t(frame.values.size(), kNoEvent);
    for (const Event& e : window.events)
        last_t[static_cast<std::size_t>(e.y) * frame.width + e.x] = e.t;

    render_time_surface(last_t, window.t_end, decay_us, frame.values.data());
    return frame;
}

EventFrame build_3c(const EventWindow& window, double decay_us) {
    require_window(window);
    if (!(decay_us > 0.0)) throw std::invalid_argument("time surface decay must be positive");
    EventFrame frame = make_frame(window, Representation::C3, 3, decay_us);

    // Sub-window bounds on integer microseconds; the last one absorbs any
    // remainder of a duration not divisible by 3.
    const std::uint64_t tau = window.duration_us();
    const std::array<std::uint64_t, 4> bound = {
        window.t_start,
        window.t_start + tau / 3,
        window.t_start + 2 * tau / 3,
        window.t_end,
    };

    const std::size_t plane = static_cast<std::size_t>(frame.height) * frame.width;
    std::array<std::vector<std::uint64_t>, 3> last_t;
    for (auto& buf : last_t) buf.assign(plane, kNoEvent);

    for (const Event& e : window.events) {
        int c = 2;
        if (e.t < bound[1])
            c = 0;
        else if (e.t < bound[2])
            c = 1;
        last_t[c][static_cast<std::size_t>(e.y) * frame.width + e.x] = e.t;
    }

    for (int c = 0; c < 3; ++c)
        render_time_surface(last_t[c], bound[c + 1], decay_us, frame.values.data() + c * plane);
    return frame;
}

}  // namespace evs
