#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <evs/events.hpp>
#include <evs/rng.hpp>

namespace evs::test {

/// Random valid event stream: sorted timestamps in [t0, t0 + t_span),
/// pixels inside the geometry, polarities +1/-1.
inline EventStream random_stream(Rng& rng, SensorGeometry geometry, std::size_t n,
                                 std::uint64_t t_span, std::uint64_t t0 = 0) {
    std::vector<std::uint64_t> ts(n);
    for (auto& t : ts) t = t0 + rng.uniform_int(t_span);
    std::sort(ts.begin(), ts.end());

    EventStream stream;
    stream.geometry = geometry;
    stream.events.reserve(n);
    for (std::uint64_t t : ts) {
        stream.events.push_back(Event{
            .t = t,
            .x = static_cast<std::uint16_t>(rng.uniform_int(geometry.width)),
            .y = static_cast<std::uint16_t>(rng.uniform_int(geometry.height)),
            .p = rng.bernoulli(0.5) ? std::int8_t{1} : std::int8_t{-1},
        });
    }
    return stream;
}

/// Standard normal via Box-Muller on the deterministic generator.
inline double gaussian(Rng& rng) {
    double u1 = rng.uniform();
    while (u1 == 0.0) u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace evs::test
