#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evs/events.hpp"
#include "evs/rng.hpp"

namespace evs {

/// Grayscale frame with intensities in [0, 1], row-major.
struct IntensityFrame {
    std::uint64_t t_us = 0;
    int width = 0;
    int height = 0;
    std::vector<float> intensity;

    [[nodiscard]] bool valid() const noexcept {
        return width > 0 && height > 0 &&
               intensity.size() == static_cast<std::size_t>(width) * height;
    }
};

/// Contrast-threshold sensor model.
struct EmulatorParams {
    /// Log-intensity change required to trigger one event.
    double contrast_threshold = 0.2;
    /// Dead time per pixel after an emitted event. A crossing that falls
    /// inside the dead time fires late (at its end); one pushed past the
    /// frame interval is lost and leaves the reference level untouched.
    std::uint64_t refractory_us = 0;
    /// Additive intensity floor so log(0) never occurs.
    double log_eps = 1e-3;
    /// Background noise: per-pixel Poisson rate of random-polarity events.
    double leak_rate_hz = 0.0;
};

/// Synthesizes an event stream from timestamped frames. Each pixel keeps
/// a reference log-intensity, initialized from the first frame; whenever
/// a new frame moves the pixel's log-intensity at least one threshold
/// away from the reference, events fire at the linear crossing times and
/// the reference advances by the threshold per event. Output is sorted by
/// timestamp (ties keep row-major pixel order) and fully determined by
/// the inputs and the rng seed.
EventStream emulate_events(std::span<const IntensityFrame> frames, const EmulatorParams& params,
                           const Rng& rng);

}  // namespace evs
