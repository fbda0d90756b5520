// Throughput benchmarks for the hot paths: container decode, frame
// representations, window scoring, and the pose solver. Rates are
// reported as items/s (events for stream paths, solves for PnP).
//
// EVS_THREADS caps representation workers; run with EVS_THREADS=1 for
// single-core figures.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include <evs/events.hpp>
#include <evs/filtering.hpp>
#include <evs/geometry.hpp>
#include <evs/io.hpp>
#include <evs/pnp.hpp>
#include <evs/representations.hpp>
#include <evs/rng.hpp>

namespace {

evs::EventStream make_stream(std::size_t n, int width = 1280, int height = 720) {
    evs::Rng rng(42);
    evs::EventStream stream;
    stream.geometry = {width, height};
    stream.events.reserve(n);
    const std::uint64_t span_us = 10'000'000;
    for (std::size_t i = 0; i < n; ++i) {
        evs::Event e;
        e.t = (span_us * i) / n;
        e.x = static_cast<std::uint16_t>(rng.uniform_int(width));
        e.y = static_cast<std::uint16_t>(rng.uniform_int(height));
        e.p = rng.bernoulli(0.5) ? 1 : -1;
        stream.events.push_back(e);
    }
    return stream;
}

evs::EventWindow whole_window(const evs::EventStream& stream) {
    return evs::slice_windows(stream, 10'000'000, 10'000'000).front();
}

void bm_decode_evb1(benchmark::State& state) {
    const evs::EventStream stream = make_stream(static_cast<std::size_t>(state.range(0)));
    const std::vector<std::byte> bytes = evs::encode_evb1(stream);
    for (auto _ : state) {
        const evs::EventStream decoded = evs::decode_evb1(bytes);
        benchmark::DoNotOptimize(decoded.events.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(bm_decode_evb1)->Arg(1 << 20)->Arg(1 << 23);

void bm_encode_evb1(benchmark::State& state) {
    const evs::EventStream stream = make_stream(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        const std::vector<std::byte> bytes = evs::encode_evb1(stream);
        benchmark::DoNotOptimize(bytes.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_encode_evb1)->Arg(1 << 20);

void bm_build_e2f(benchmark::State& state) {
    const evs::EventStream stream = make_stream(static_cast<std::size_t>(state.range(0)));
    const evs::EventWindow window = whole_window(stream);
    for (auto _ : state) {
        const evs::EventFrame frame = evs::build_e2f(window);
        benchmark::DoNotOptimize(frame.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_build_e2f)->Arg(1 << 20);

void bm_build_lnes(benchmark::State& state) {
    const evs::EventStream stream = make_stream(static_cast<std::size_t>(state.range(0)));
    const evs::EventWindow window = whole_window(stream);
    for (auto _ : state) {
        const evs::EventFrame frame = evs::build_lnes(window);
        benchmark::DoNotOptimize(frame.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_build_lnes)->Arg(1 << 20);

void bm_build_ts(benchmark::State& state) {
    const evs::EventStream stream = make_stream(static_cast<std::size_t>(state.range(0)));
    const evs::EventWindow window = whole_window(stream);
    const double decay = evs::default_ts_decay(window);
    for (auto _ : state) {
        const evs::EventFrame frame = evs::build_ts(window, decay);
        benchmark::DoNotOptimize(frame.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_build_ts)->Arg(1 << 20);

void bm_build_3c(benchmark::State& state) {
    const evs::EventStream stream = make_stream(static_cast<std::size_t>(state.range(0)));
    const evs::EventWindow window = whole_window(stream);
    const double decay = evs::default_3c_decay(window);
    for (auto _ : state) {
        const evs::EventFrame frame = evs::build_3c(window, decay);
        benchmark::DoNotOptimize(frame.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_build_3c)->Arg(1 << 20);

void bm_mask_kl(benchmark::State& state) {
    const evs::EventStream stream = make_stream(static_cast<std::size_t>(state.range(0)), 256, 256);
    const evs::EventWindow window = whole_window(stream);
    evs::Mask mask;
    mask.width = 256;
    mask.height = 256;
    mask.in.assign(256 * 256, 0);
    for (int y = 64; y < 192; ++y)
        for (int x = 64; x < 192; ++x) mask.in[y * 256 + x] = 1;
    for (auto _ : state) {
        const double score = evs::kl_mask_score(window, mask);
        benchmark::DoNotOptimize(score);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_mask_kl)->Arg(1 << 18);

void bm_solve_pnp(benchmark::State& state) {
    const evs::ObjectModel model = evs::make_box_model(0.64, 0.24, 0.416);
    const evs::CameraIntrinsics intr{600.0, 600.0, 640.0, 360.0, 1280, 720};
    evs::Rng rng(7);
    evs::Pose truth;
    truth.q = evs::sample_uniform_quaternion(rng);
    truth.tvec = {0.3, -0.1, 6.0};
    std::vector<evs::Correspondence> corrs;
    for (const auto& kp : model.keypoints)
        corrs.push_back({kp.p, evs::project_point(truth, intr, kp.p), 1.0});
    for (auto _ : state) {
        const evs::PnPResult result = evs::solve_pnp(corrs, intr);
        benchmark::DoNotOptimize(result.converged);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_solve_pnp);

}  // namespace

BENCHMARK_MAIN();
