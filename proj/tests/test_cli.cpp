// End-to-end checks of the `evs` binary: each test shells out to the tool
// (path in $EVS_CLI, set by ctest) inside a fresh temp directory, then
// verifies outputs against the library run in-process with the same
// parameters.

#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include <evs/emulator.hpp>
#include <evs/events.hpp>
#include <evs/filtering.hpp>
#include <evs/geometry.hpp>
#include <evs/io.hpp>
#include <evs/metrics.hpp>
#include <evs/pnp.hpp>
#include <evs/representations.hpp>
#include <evs/rng.hpp>

#include "helpers.hpp"

using nlohmann::json;
using namespace evs;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* path = std::getenv("EVS_CLI");
    REQUIRE_MESSAGE(path != nullptr, "EVS_CLI must point at the evs binary");
    return path;
}

/// Runs `evs <args>` with stdout/stderr captured to a scratch file and
/// returns the exit code.
int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd =
        cli_path() + " " + args + " > \"" + (dir / "cli.log").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Unique per-test scratch directory, removed on destruction.
struct TempDir {
    fs::path path;

    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("evs_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    [[nodiscard]] std::string file(const char* name) const { return (path / name).string(); }
};

json read_json(const fs::path& path) { return json::parse(read_text_file(path)); }

EventStream small_stream(std::uint64_t seed, int width = 64, int height = 48, int n = 400) {
    Rng rng(seed);
    return test::random_stream(rng, SensorGeometry{width, height}, n, 20000);
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("convert round-trips binary through text") {
        TempDir tmp;
        const EventStream original = small_stream(11);
        write_binary_file(tmp.file("in.evb1"), encode_evb1(original));

        CHECK(run_cli("convert --in " + tmp.file("in.evb1") + " --out " + tmp.file("mid.txt"),
                      tmp.path) == 0);
        CHECK(run_cli("convert --in " + tmp.file("mid.txt") + " --out " + tmp.file("back.evb1") +
                          " --width 64 --height 48",
                      tmp.path) == 0);

        const EventStream back = decode_evb1(read_binary_file(tmp.file("back.evb1")));
        REQUIRE(back.size() == original.size());
        CHECK(back.geometry.width == original.geometry.width);
        CHECK(back.geometry.height == original.geometry.height);
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back.events[i].t == original.events[i].t);
            CHECK(back.events[i].x == original.events[i].x);
            CHECK(back.events[i].y == original.events[i].y);
            CHECK(back.events[i].p == original.events[i].p);
        }

        // every successful run leaves a manifest next to its output
        const json manifest = read_json(tmp.file("back.evb1.manifest.json"));
        CHECK(manifest.at("command") == "convert");
        CHECK(manifest.at("inputs").size() == 1);
        CHECK(manifest.at("inputs")[0].at("fnv1a64").get<std::string>().size() == 16);
        CHECK(manifest.at("seed").is_null());
        CHECK(manifest.contains("tool_version"));
    }

    TEST_CASE("frame renders tensors matching the library") {
        TempDir tmp;
        const EventStream stream = small_stream(23);
        write_binary_file(tmp.file("in.evb1"), encode_evb1(stream));

        CHECK(run_cli("frame --events " + tmp.file("in.evb1") +
                          " --repr 3c --window-us 5000 --stride-us 5000 --out " +
                          tmp.file("frames"),
                      tmp.path) == 0);

        const std::vector<EventWindow> windows = slice_windows(stream, 5000, 5000);
        const json index = read_json(fs::path(tmp.file("frames")) / "index.json");
        REQUIRE(index.at("frames").size() == windows.size());
        CHECK(index.at("repr") == "3c");

        for (std::size_t i = 0; i < windows.size(); ++i) {
            const EventFrame expected = build_3c(windows[i], default_3c_decay(windows[i]));
            const Tensor got = read_tensor_file(
                fs::path(tmp.file("frames")) /
                index.at("frames")[i].at("tensor").get<std::string>());
            REQUIRE(got.channels == expected.channels);
            REQUIRE(got.values.size() == expected.values.size());
            for (std::size_t k = 0; k < got.values.size(); ++k)
                CHECK(got.values[k] == expected.values[k]);
        }
        CHECK(fs::exists(fs::path(tmp.file("frames")) / "manifest.json"));
        CHECK(fs::exists(fs::path(tmp.file("frames")) / "frame_000000.ppm"));
    }

    TEST_CASE("filter report matches the library on min-count") {
        TempDir tmp;
        const EventStream stream = small_stream(37, 32, 32, 900);
        write_binary_file(tmp.file("in.evb1"), encode_evb1(stream));

        CHECK(run_cli("filter --events " + tmp.file("in.evb1") +
                          " --method count --window-us 4000 --stride-us 4000 --threshold 150"
                          " --out " +
                          tmp.file("report.json"),
                      tmp.path) == 0);

        const std::vector<EventWindow> windows = slice_windows(stream, 4000, 4000);
        FilterConfig config;
        config.method = FilterMethod::MinCount;
        config.threshold = 150.0;
        const DatasetFilterReport expected = filter_dataset(windows, {}, {}, config);

        const json report = read_json(tmp.file("report.json"));
        CHECK(report.at("method") == "min-count");
        CHECK(report.at("total").get<std::size_t>() == expected.total);
        CHECK(report.at("kept").get<std::size_t>() == expected.kept);
        REQUIRE(report.at("scores").size() == expected.scores.size());
        for (std::size_t i = 0; i < expected.scores.size(); ++i) {
            CHECK(report.at("scores")[i].at("score").get<double>() == expected.scores[i].score);
            CHECK(report.at("scores")[i].at("kept").get<bool>() == expected.scores[i].kept);
        }
    }

    TEST_CASE("trajgen is deterministic across runs") {
        TempDir tmp;
        const std::string flags = "trajgen --n-traj 2 --poses 40 --seed 99 --out ";
        CHECK(run_cli(flags + tmp.file("a"), tmp.path) == 0);
        CHECK(run_cli(flags + tmp.file("b"), tmp.path) == 0);

        for (const char* name : {"traj_000.json", "traj_001.json"}) {
            const std::string a = read_text_file(fs::path(tmp.file("a")) / name);
            const std::string b = read_text_file(fs::path(tmp.file("b")) / name);
            CHECK(a == b);
            CHECK(read_pose_labels(fs::path(tmp.file("a")) / name).size() == 40);
        }
        const json manifest = read_json(fs::path(tmp.file("a")) / "manifest.json");
        CHECK(manifest.at("seed").get<std::uint64_t>() == 99);
    }

    TEST_CASE("emulate reproduces the library event stream") {
        TempDir tmp;
        // two 8x6 frames, uniform brightness step: every pixel crosses
        const int w = 8, h = 6;
        write_pgm(tmp.file("f0.pgm"), std::vector<float>(w * h, 0.2f), w, h);
        write_pgm(tmp.file("f1.pgm"), std::vector<float>(w * h, 0.8f), w, h);
        const json frames_index = {{{"file", "f0.pgm"}, {"t_us", 0}},
                                   {{"file", "f1.pgm"}, {"t_us", 1000}}};
        write_text_file(tmp.file("frames.json"), frames_index.dump());

        CHECK(run_cli("emulate --frames " + tmp.file("frames.json") +
                          " --contrast 0.3 --seed 5 --out " + tmp.file("out.evb1"),
                      tmp.path) == 0);

        std::vector<IntensityFrame> frames;
        for (const char* name : {"f0.pgm", "f1.pgm"}) {
            const GrayImage img = read_pgm(fs::path(tmp.path) / name);
            IntensityFrame f;
            f.t_us = frames.empty() ? 0 : 1000;
            f.width = img.width;
            f.height = img.height;
            f.intensity = img.pixels;
            frames.push_back(std::move(f));
        }
        EmulatorParams params;
        params.contrast_threshold = 0.3;
        const EventStream expected = emulate_events(frames, params, Rng(5));

        const EventStream got = decode_evb1(read_binary_file(tmp.file("out.evb1")));
        REQUIRE(got.size() == expected.size());
        CHECK(got.size() > 0);
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got.events[i].t == expected.events[i].t);
            CHECK(got.events[i].x == expected.events[i].x);
            CHECK(got.events[i].y == expected.events[i].y);
            CHECK(got.events[i].p == expected.events[i].p);
        }
    }

    TEST_CASE("pnp recovers a synthetic pose") {
        TempDir tmp;
        const ObjectModel model = make_box_model(0.64, 0.24, 0.416);
        json model_doc;
        model_doc["keypoints"] = json::array();
        for (const ObjectModel::Keypoint& kp : model.keypoints)
            model_doc["keypoints"].push_back(
                {{"name", kp.name}, {"p", {kp.p.x(), kp.p.y(), kp.p.z()}}, {"edge", kp.edge}});
        write_text_file(tmp.file("model.json"), model_doc.dump());

        const CameraIntrinsics intr{600.0, 600.0, 640.0, 360.0, 1280, 720};
        Pose truth;
        truth.q = Eigen::Quaterniond(0.9, 0.1, -0.3, 0.2).normalized();
        truth.tvec = {0.4, -0.2, 6.0};

        json points = json::array();
        for (const ObjectModel::Keypoint& kp : model.keypoints) {
            const Eigen::Vector2d uv = project_point(truth, intr, kp.p);
            points.push_back({{"name", kp.name}, {"uv", {uv.x(), uv.y()}}});
        }
        const json keypoints = {
            {"frames", {{{"frame", 0}, {"det_score", 0.95}, {"points", points}}}}};
        write_text_file(tmp.file("kp.json"), keypoints.dump());

        CHECK(run_cli("pnp --keypoints " + tmp.file("kp.json") + " --model " +
                          tmp.file("model.json") + " --out " + tmp.file("poses.json"),
                      tmp.path) == 0);

        const json out = read_json(tmp.file("poses.json"));
        REQUIRE(out.at("frames").size() == 1);
        const json& f = out.at("frames")[0];
        CHECK(f.at("converged").get<bool>());
        CHECK(f.at("used_points").get<int>() == 8);
        REQUIRE(f.contains("q"));

        Pose got;
        got.q = Eigen::Quaterniond(f.at("q")[0].get<double>(), f.at("q")[1].get<double>(),
                                   f.at("q")[2].get<double>(), f.at("q")[3].get<double>());
        got.tvec = {f.at("t_m")[0].get<double>(), f.at("t_m")[1].get<double>(),
                    f.at("t_m")[2].get<double>()};
        const PoseErrors err = pose_errors(got, truth);
        CHECK(err.e_r < 1e-6);
        CHECK(err.e_t < 1e-8);
    }

    TEST_CASE("eval-pose reports zero error when predictions equal labels") {
        TempDir tmp;
        std::vector<PoseLabel> labels;
        Rng rng(71);
        for (int i = 0; i < 10; ++i) {
            PoseLabel label;
            label.frame = i;
            label.t_us = static_cast<std::uint64_t>(i) * 1000;
            label.q = sample_uniform_quaternion(rng);
            label.t_m = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(4.0, 8.0)};
            labels.push_back(label);
        }
        write_pose_labels(tmp.file("gt.json"), labels);
        write_pose_labels(tmp.file("pred.json"), labels);

        CHECK(run_cli("eval-pose --pred " + tmp.file("pred.json") + " --gt " +
                          tmp.file("gt.json") + " --out " + tmp.file("report.json"),
                      tmp.path) == 0);

        const json report = read_json(tmp.file("report.json"));
        CHECK(report.at("summary").at("count").get<std::size_t>() == 10);
        CHECK(report.at("summary").at("mean_e_p").get<double>() == 0.0);
        CHECK(report.at("summary").at("median_e_r_deg").get<double>() == 0.0);
        CHECK(!report.contains("data_percent"));  // plain label arrays carry no outcomes
    }

    TEST_CASE("eval-pose consumes pnp output and reports coverage") {
        TempDir tmp;
        std::vector<PoseLabel> labels(2);
        labels[0].frame = 0;
        labels[0].t_m = {0.0, 0.0, 5.0};
        labels[1].frame = 1;
        labels[1].t_m = {0.0, 0.0, 6.0};
        write_pose_labels(tmp.file("gt.json"), labels);

        // status schema: frame 0 solved confidently, frame 1 produced nothing
        const json pred = {
            {"frames",
             {{{"frame", 0},
               {"t_us", 0},
               {"det_score", 0.97},
               {"converged", true},
               {"used_points", 8},
               {"rms_px", 0.1},
               {"q", {1.0, 0.0, 0.0, 0.0}},
               {"t_m", {0.0, 0.0, 5.0}}},
              {{"frame", 1},
               {"t_us", 1000},
               {"det_score", 0.2},
               {"converged", false},
               {"used_points", 0},
               {"rms_px", 0.0},
               {"no_pose_reason", "insufficient keypoints"}}}}};
        write_text_file(tmp.file("pred.json"), pred.dump());

        CHECK(run_cli("eval-pose --pred " + tmp.file("pred.json") + " --gt " +
                          tmp.file("gt.json") + " --out " + tmp.file("report.json"),
                      tmp.path) == 0);

        const json report = read_json(tmp.file("report.json"));
        CHECK(report.at("summary").at("count").get<std::size_t>() == 1);
        CHECK(report.at("summary").at("mean_e_p").get<double>() == 0.0);
        CHECK(report.at("data_percent").get<double>() == 50.0);
    }

    TEST_CASE("eval-det scores perfect detections at 1.0") {
        TempDir tmp;
        const json dets = {
            {"images",
             {{{"detections",
                {{{"bbox", {0.0, 0.0, 100.0, 100.0}}, {"score", 0.9}},
                 {{"bbox", {300.0, 0.0, 310.0, 310.0}}, {"score", 0.8}}}}},
              {{"detections", {{{"bbox", {10.0, 10.0, 170.0, 170.0}}, {"score", 0.7}}}}}}}};
        const json gts = {{"images",
                           {{{"boxes", {{0.0, 0.0, 100.0, 100.0}, {300.0, 0.0, 310.0, 310.0}}}},
                            {{"boxes", {{10.0, 10.0, 170.0, 170.0}}}}}}};
        write_text_file(tmp.file("dets.json"), dets.dump());
        write_text_file(tmp.file("gts.json"), gts.dump());

        CHECK(run_cli("eval-det --dets " + tmp.file("dets.json") + " --gts " +
                          tmp.file("gts.json") + " --out " + tmp.file("report.json"),
                      tmp.path) == 0);

        const json report = read_json(tmp.file("report.json"));
        CHECK(report.at("ap50").get<double>() == 1.0);
        CHECK(report.at("ap75").get<double>() == 1.0);
        CHECK(report.at("ar").get<double>() == 1.0);
        CHECK(report.at("total_gts").get<std::size_t>() == 3);
        CHECK(!report.at("empty").get<bool>());
    }

    TEST_CASE("exit codes separate usage errors from data errors") {
        TempDir tmp;
        // unknown subcommand / missing required flags: usage (1)
        CHECK(run_cli("no-such-command", tmp.path) == 1);
        CHECK(run_cli("frame", tmp.path) == 1);

        // text convert without geometry flags: usage (1)
        write_text_file(tmp.file("events.txt"), "100 3 4 1\n");
        CHECK(run_cli("convert --in " + tmp.file("events.txt") + " --out " + tmp.file("o.evb1"),
                      tmp.path) == 1);

        // structurally broken input: data (2)
        write_text_file(tmp.file("bad.txt"), "not an event stream\n");
        CHECK(run_cli("convert --in " + tmp.file("bad.txt") + " --out " + tmp.file("o.evb1") +
                          " --width 8 --height 8",
                      tmp.path) == 2);

        // frame requires a binary container: data (2)
        CHECK(run_cli("frame --events " + tmp.file("events.txt") +
                          " --repr e2f --window-us 100 --stride-us 100 --out " + tmp.file("d"),
                      tmp.path) == 2);

        CHECK(run_cli("--version", tmp.path) == 0);
    }
}
