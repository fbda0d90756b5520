#include "evs/emulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evs {

namespace {

constexpr std::uint64_t kNever = ~std::uint64_t{0};

double log_intensity(float v, double eps) {
    return std::log(std::max(0.0, static_cast<double>(v)) + eps);
}

void require_input(std::span<const IntensityFrame> frames, const EmulatorParams& params) {
    if (!(params.contrast_threshold > 0.0))
        throw std::invalid_argument("contrast threshold must be positive");
    if (!(params.log_eps > 0.0)) throw std::invalid_argument("log epsilon must be positive");
    if (params.leak_rate_hz < 0.0) throw std::invalid_argument("leak rate must be non-negative");
    if (frames.size() < 2) throw std::invalid_argument("need at least 2 frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].valid())
            throw std::invalid_argument("frame " + std::to_string(i) + " is malformed");
        if (frames[i].width != frames[0].width || frames[i].height != frames[0].height)
            throw std::invalid_argument("frame " + std::to_string(i) +
                                        " does not match the first frame's dimensions");
        if (i > 0 && frames[i].t_us <= frames[i - 1].t_us)
            throw std::invalid_argument("frame timestamps must be strictly increasing");
    }
}

void append_leak_events(std::vector<Event>& out, int width, int height, std::uint64_t t_first,
                        std::uint64_t t_last, double rate_hz, const Rng& rng) {
    const std::size_t n_px = static_cast<std::size_t>(width) * height;
    for (std::size_t i = 0; i < n_px; ++i) {
        Rng sub = rng.substream(i);
        const auto x = static_cast<std::uint16_t>(i % width);
        const auto y = static_cast<std::uint16_t>(i / width);
        double elapsed_s = 0.0;
        for (;;) {
            elapsed_s += -std::log(1.0 - sub.uniform()) / rate_hz;
            const auto offset_us = static_cast<std::uint64_t>(std::llround(elapsed_s * 1e6));
            if (offset_us > t_last - t_first) break;
            out.push_back(Event{.t = t_first + offset_us,
                                .x = x,
                                .y = y,
                                .p = sub.bernoulli(0.5) ? std::int8_t{1} : std::int8_t{-1}});
        }
    }
}

}  // namespace

EventStream emulate_events(std::span<const IntensityFrame> frames, const EmulatorParams& params,
                           const Rng& rng) {
    require_input(frames, params);

    const int width = frames[0].width;
    const int height = frames[0].height;
    const std::size_t n_px = static_cast<std::size_t>(width) * height;
    const double c = params.contrast_threshold;

    std::vector<double> l_ref(n_px);
    for (std::size_t i = 0; i < n_px; ++i)
        l_ref[i] = log_intensity(frames[0].intensity[i], params.log_eps);
    std::vector<std::uint64_t> last_emit(n_px, kNever);

    std::vector<Event> events;
    for (std::size_t f = 1; f < frames.size(); ++f) {
        const std::uint64_t t0 = frames[f - 1].t_us;
        const std::uint64_t t1 = frames[f].t_us;
        const double dt = static_cast<double>(t1 - t0);

        for (std::size_t i = 0; i < n_px; ++i) {
            const double mag_signed =
                log_intensity(frames[f].intensity[i], params.log_eps) - l_ref[i];
            double mag = std::abs(mag_signed);
            if (mag < c) continue;
            const double step = mag_signed > 0.0 ? c : -c;
            const auto pol = static_cast<std::int8_t>(mag_signed > 0.0 ? 1 : -1);
            const auto x = static_cast<std::uint16_t>(i % width);
            const auto y = static_cast<std::uint16_t>(i / width);

            auto m = static_cast<long long>(mag / c);
            while (mag - static_cast<double>(m) * c >= c) ++m;  // floor can round down at k*c

            for (long long k = 1; k <= m; ++k) {
                const double frac = std::min(static_cast<double>(k) * c / mag, 1.0);
                auto t_cand = t0 + static_cast<std::uint64_t>(std::llround(dt * frac));
                if (last_emit[i] != kNever && params.refractory_us > 0) {
                    const std::uint64_t earliest = last_emit[i] + params.refractory_us;
                    if (t_cand < earliest) t_cand = earliest;
                }
                if (t_cand > t1) break;  // crossing lost; reference stays owed
                events.push_back(Event{.t = t_cand, .x = x, .y = y, .p = pol});
                last_emit[i] = t_cand;
                l_ref[i] += step;
            }
        }
    }

    if (params.leak_rate_hz > 0.0)
        append_leak_events(events, width, height, frames.front().t_us, frames.back().t_us,
                           params.leak_rate_hz, rng);

    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });

    EventStream stream;
    stream.events = std::move(events);
    stream.geometry = {width, height};
    return stream;
}

}  // namespace evs
