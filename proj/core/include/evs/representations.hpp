#pragma once

#include <cstdint>
#include <vector>

#include "evs/events.hpp"

namespace evs {

enum class Representation { E2F, LNES, TS, C3 };

const char* to_string(Representation repr) noexcept;

/// Dense float image built from one event window. Values are always in
/// [0, 1]. Storage is channel-major, then row-major within a channel.
struct EventFrame {
    Representation repr = Representation::E2F;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::uint64_t t_start = 0;
    std::uint64_t t_end = 0;
    double decay_us = 0.0;  ///< 0 for representations without a decay term
    std::vector<float> values;

    [[nodiscard]] float at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    [[nodiscard]] std::size_t value_count() const noexcept { return values.size(); }
};

/// Per-pixel event count, normalized by the frame maximum so a non-empty
/// window always peaks at exactly 1. Polarities are summed as counts.
EventFrame build_e2f(const EventWindow& window);

/// Two channels (0 = positive, 1 = negative polarity). Each event
/// overwrites its pixel with (t - t_start) / duration, so the surviving
/// value is the normalized timestamp of the last event per pixel per
/// polarity.
EventFrame build_lnes(const EventWindow& window);

/// Time surface: exp(-(t_end - t_last) / decay_us) of each pixel's most
/// recent event, polarity discarded. Pixels without events stay 0.
EventFrame build_ts(const EventWindow& window, double decay_us);

/// Three chronological sub-windows of equal duration, each rendered as a
/// time surface referenced to that sub-window's end. Channel 0 is the
/// earliest sub-window.
EventFrame build_3c(const EventWindow& window, double decay_us);

/// Decay defaults scale with the integration span: a third of the window
/// for TS, a third of each sub-window for 3C.
inline double default_ts_decay(const EventWindow& window) {
    return static_cast<double>(window.duration_us()) / 3.0;
}
inline double default_3c_decay(const EventWindow& window) {
    return static_cast<double>(window.duration_us()) / 9.0;
}

}  // namespace evs
