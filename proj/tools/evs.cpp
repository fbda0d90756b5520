// evs: batch frontend over the event-stream core. Converts containers,
// renders frame representations, filters datasets, generates trajectories,
// synthesizes events from intensity frames, solves poses from keypoints,
// and scores pose/detection predictions.
//
// Every successful run writes a manifest (command, flags, input digests,
// seed, tool version, wall time) next to its outputs: manifest.json inside
// directory outputs, <file>.manifest.json beside file outputs. Identical
// invocations produce bit-identical outputs; EVS_THREADS caps workers.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
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

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evs;

#ifndef EVS_TOOL_VERSION
#define EVS_TOOL_VERSION "0.0.0"
#endif

namespace {

/// Flag misuse that CLI11 cannot express declaratively (exit 1, not 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::span<const std::byte> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Collects flag values and input digests for one run, then writes the
/// manifest. Inputs are digested as they are loaded, so the manifest lists
/// exactly the files the run read.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)) {}

    json& params() { return params_; }
    void set_seed(std::uint64_t seed) { seed_ = seed; }

    /// Loads a file through the manifest so its digest is recorded.
    std::vector<std::byte> load_binary(const fs::path& path) {
        std::vector<std::byte> bytes = read_binary_file(path);
        inputs_.push_back({{"path", path.string()}, {"fnv1a64", fmt("%016llx", static_cast<unsigned long long>(fnv1a64(bytes)))}});
        return bytes;
    }
    std::string load_text(const fs::path& path) {
        const std::vector<std::byte> bytes = load_binary(path);
        return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
    /// Digest without returning content, for files read by other loaders.
    void track(const fs::path& path) { (void)load_binary(path); }

    void write(const fs::path& path) const {
        json doc;
        doc["command"] = command_;
        doc["tool_version"] = EVS_TOOL_VERSION;
        doc["parameters"] = params_;
        doc["inputs"] = inputs_;
        doc["seed"] = seed_ ? json(*seed_) : json(nullptr);
        doc["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_text_file(path, doc.dump(2) + "\n");
    }

private:
    std::string command_;
    json params_ = json::object();
    json inputs_ = json::array();
    std::optional<std::uint64_t> seed_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

fs::path sibling_manifest(const fs::path& output_file) {
    fs::path p = output_file;
    p += ".manifest.json";
    return p;
}

void write_json_file(const fs::path& path, const json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Shared flag groups and JSON schemas
// ---------------------------------------------------------------------------

struct CameraFlags {
    double fx = 600.0, fy = 600.0, cx = 640.0, cy = 360.0;
    int width = 1280, height = 720;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--fx", fx, "focal length x [px]")->capture_default_str();
        cmd->add_option("--fy", fy, "focal length y [px]")->capture_default_str();
        cmd->add_option("--cx", cx, "principal point x [px]")->capture_default_str();
        cmd->add_option("--cy", cy, "principal point y [px]")->capture_default_str();
        cmd->add_option("--width", width, "sensor width [px]")->capture_default_str();
        cmd->add_option("--height", height, "sensor height [px]")->capture_default_str();
    }
    [[nodiscard]] CameraIntrinsics intrinsics() const { return {fx, fy, cx, cy, width, height}; }
    void record(json& params) const {
        params["fx"] = fx;
        params["fy"] = fy;
        params["cx"] = cx;
        params["cy"] = cy;
        params["width"] = width;
        params["height"] = height;
    }
};

/// {"keypoints": [{"name": ..., "p": [x,y,z], "edge": true}, ...]};
/// "edge" defaults to true.
ObjectModel parse_model(const std::string& text) {
    const json doc = json::parse(text);
    ObjectModel model;
    for (const json& jk : doc.at("keypoints")) {
        ObjectModel::Keypoint kp;
        kp.name = jk.at("name").get<std::string>();
        const json& p = jk.at("p");
        kp.p = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
        kp.edge = jk.value("edge", true);
        model.keypoints.push_back(std::move(kp));
    }
    if (!model.valid())
        throw std::invalid_argument(
            "model needs at least 4 keypoints and at least one edge keypoint");
    return model;
}

EventStream load_evb1(Manifest& manifest, const fs::path& path) {
    const std::vector<std::byte> bytes = manifest.load_binary(path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "EVB1", 4) != 0)
        throw std::invalid_argument(path.string() +
                                    " is not an EVB1 container (run `evs convert` first)");
    return decode_evb1(bytes);
}

json pose_to_json(const Pose& pose) {
    return {{"q", {pose.q.w(), pose.q.x(), pose.q.y(), pose.q.z()}},
            {"t_m", {pose.tvec.x(), pose.tvec.y(), pose.tvec.z()}}};
}

// ---------------------------------------------------------------------------
// convert: text <-> binary event containers
// ---------------------------------------------------------------------------

struct ConvertOpts {
    std::string in, out;
    int width = 0, height = 0;
};

void run_convert(const ConvertOpts& opt) {
    Manifest manifest("convert");
    manifest.params() = {{"in", opt.in}, {"out", opt.out}};

    const std::vector<std::byte> bytes = manifest.load_binary(opt.in);
    EventStream stream;
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "EVB1", 4) == 0) {
        stream = decode_evb1(bytes);
    } else {
        if (opt.width <= 0 || opt.height <= 0)
            throw UsageError("text input needs --width and --height (text streams carry no "
                             "geometry)");
        stream = decode_text_events(
            std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
            SensorGeometry{opt.width, opt.height});
    }
    if (opt.width > 0 && opt.height > 0) {
        manifest.params()["width"] = opt.width;
        manifest.params()["height"] = opt.height;
    }

    const std::string ext = fs::path(opt.out).extension().string();
    if (ext == ".evb1")
        write_binary_file(opt.out, encode_evb1(stream));
    else if (ext == ".txt" || ext == ".text" || ext == ".csv")
        write_text_file(opt.out, encode_text_events(stream));
    else
        throw UsageError("unrecognized output extension '" + ext + "' (use .evb1, .txt, or .csv)");

    manifest.write(sibling_manifest(opt.out));
    std::cout << "converted " << stream.size() << " events (" << stream.geometry.width << "x"
              << stream.geometry.height << ") -> " << opt.out << "\n";
}

// ---------------------------------------------------------------------------
// frame: render representations over sliced windows
// ---------------------------------------------------------------------------

struct FrameOpts {
    std::string events, out;
    Representation repr = Representation::E2F;
    std::uint64_t window_us = 0, stride_us = 0;
    double decay_us = 0.0;    // 0 = representation default
    std::int64_t origin = -1; // <0 = first event timestamp
};

void run_frame(const FrameOpts& opt) {
    Manifest manifest("frame");
    const EventStream stream = load_evb1(manifest, opt.events);
    const std::optional<std::uint64_t> origin =
        opt.origin < 0 ? std::nullopt
                       : std::optional<std::uint64_t>(static_cast<std::uint64_t>(opt.origin));
    const std::vector<EventWindow> windows =
        slice_windows(stream, opt.window_us, opt.stride_us, origin);

    fs::create_directories(opt.out);
    json index;
    index["repr"] = to_string(opt.repr);
    index["window_us"] = opt.window_us;
    index["stride_us"] = opt.stride_us;
    index["frames"] = json::array();

    double decay_used = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const EventWindow& w = windows[i];
        EventFrame frame;
        switch (opt.repr) {
            case Representation::E2F: frame = build_e2f(w); break;
            case Representation::LNES: frame = build_lnes(w); break;
            case Representation::TS:
                decay_used = opt.decay_us > 0.0 ? opt.decay_us : default_ts_decay(w);
                frame = build_ts(w, decay_used);
                break;
            case Representation::C3:
                decay_used = opt.decay_us > 0.0 ? opt.decay_us : default_3c_decay(w);
                frame = build_3c(w, decay_used);
                break;
        }

        const std::string stem = fmt("frame_%06zu", i);
        const std::string tensor_name = stem + ".etf1";
        write_tensor_file(fs::path(opt.out) / tensor_name, tensor_from_frame(frame));

        json entry = {{"frame", i},
                      {"t_start", w.t_start},
                      {"t_end", w.t_end},
                      {"events", w.size()},
                      {"tensor", tensor_name}};
        if (frame.channels == 1) {
            const std::string image_name = stem + ".pgm";
            write_pgm(fs::path(opt.out) / image_name, frame);
            entry["image"] = image_name;
        } else if (frame.channels == 3) {
            const std::string image_name = stem + ".ppm";
            write_ppm(fs::path(opt.out) / image_name, frame);
            entry["image"] = image_name;
        }
        index["frames"].push_back(std::move(entry));
    }
    index["decay_us"] = decay_used > 0.0 ? json(decay_used) : json(nullptr);
    write_json_file(fs::path(opt.out) / "index.json", index);

    manifest.params() = {{"events", opt.events},   {"repr", to_string(opt.repr)},
                         {"window_us", opt.window_us}, {"stride_us", opt.stride_us},
                         {"decay_us", opt.decay_us},   {"out", opt.out}};
    if (opt.origin >= 0) manifest.params()["origin_us"] = opt.origin;
    manifest.write(fs::path(opt.out) / "manifest.json");
    std::cout << "wrote " << windows.size() << " " << to_string(opt.repr) << " frames -> "
              << opt.out << "\n";
}

// ---------------------------------------------------------------------------
// filter: score windows and keep the informative ones
// ---------------------------------------------------------------------------

struct FilterOpts {
    std::string events, masks, bboxes, out;
    FilterMethod method = FilterMethod::MaskKl;
    std::uint64_t window_us = 0, stride_us = 0;
    double threshold = std::numeric_limits<double>::quiet_NaN();  // NaN = per-method default
    std::uint64_t min_mask_events = 1000;
};

void run_filter(const FilterOpts& opt) {
    Manifest manifest("filter");
    const EventStream stream = load_evb1(manifest, opt.events);
    const std::vector<EventWindow> windows = slice_windows(stream, opt.window_us, opt.stride_us);

    FilterConfig config;
    config.method = opt.method;
    config.threshold = std::isnan(opt.threshold)
                           ? (opt.method == FilterMethod::MinCount ? 10000.0 : 0.5)
                           : opt.threshold;
    config.min_mask_events = opt.min_mask_events;

    // per-window masks / boxes from index files; unfilled slots stay
    // invalid so the library names the first frame lacking one
    std::vector<Mask> masks(windows.size());
    if (!opt.masks.empty()) {
        const json doc = json::parse(manifest.load_text(opt.masks));
        const fs::path base = fs::path(opt.masks).parent_path();
        for (const json& entry : doc) {
            const std::size_t frame = entry.at("frame").get<std::size_t>();
            if (frame >= masks.size()) continue;  // beyond the sliced range
            const fs::path file = base / entry.at("file").get<std::string>();
            manifest.track(file);
            masks[frame] = read_mask_pgm(file);
        }
    }
    std::vector<BBox> bboxes(windows.size());
    if (!opt.bboxes.empty()) {
        const json doc = json::parse(manifest.load_text(opt.bboxes));
        for (const json& entry : doc) {
            const std::size_t frame = entry.at("frame").get<std::size_t>();
            if (frame >= bboxes.size()) continue;
            const json& b = entry.at("bbox");
            bboxes[frame] = BBox{b.at(0).get<double>(), b.at(1).get<double>(),
                                 b.at(2).get<double>(), b.at(3).get<double>()};
        }
    }

    const DatasetFilterReport report = filter_dataset(windows, masks, bboxes, config);

    json doc;
    doc["method"] = to_string(config.method);
    doc["threshold"] = config.threshold;
    if (config.method == FilterMethod::MaskKl) doc["min_mask_events"] = config.min_mask_events;
    doc["total"] = report.total;
    doc["kept"] = report.kept;
    doc["kept_fraction"] = report.kept_fraction;
    doc["scores"] = json::array();
    json kept_frames = json::array();
    for (const FilterScore& s : report.scores) {
        doc["scores"].push_back(
            {{"frame", s.frame_index}, {"score", s.score}, {"kept", s.kept}});
        if (s.kept) kept_frames.push_back(s.frame_index);
    }
    doc["kept_frames"] = std::move(kept_frames);
    write_json_file(opt.out, doc);

    manifest.params() = {{"events", opt.events},
                         {"method", to_string(config.method)},
                         {"window_us", opt.window_us},
                         {"stride_us", opt.stride_us},
                         {"threshold", config.threshold},
                         {"out", opt.out}};
    if (config.method == FilterMethod::MaskKl)
        manifest.params()["min_mask_events"] = config.min_mask_events;
    if (!opt.masks.empty()) manifest.params()["masks"] = opt.masks;
    if (!opt.bboxes.empty()) manifest.params()["bboxes"] = opt.bboxes;
    manifest.write(sibling_manifest(opt.out));

    std::printf("frame   score         kept\n");
    for (const FilterScore& s : report.scores)
        std::printf("%5zu   %-11.6g   %s\n", s.frame_index, s.score, s.kept ? "yes" : "no");
    std::printf("kept %zu/%zu windows (%.1f%%)\n", report.kept, report.total,
                100.0 * report.kept_fraction);
}

// ---------------------------------------------------------------------------
// trajgen: sample smooth in-view trajectories
// ---------------------------------------------------------------------------

struct TrajgenOpts {
    int n_traj = 1;
    TrajectoryConfig config;
    std::uint64_t seed = 0;
    std::uint64_t dt_us = 10000;
    std::string model, out;
    std::vector<double> box = {0.64, 0.24, 0.416};
    CameraFlags camera;
};

void run_trajgen(const TrajgenOpts& opt) {
    Manifest manifest("trajgen");
    const ObjectModel model = opt.model.empty()
                                  ? make_box_model(opt.box[0], opt.box[1], opt.box[2])
                                  : parse_model(manifest.load_text(opt.model));

    const std::vector<Trajectory> trajectories =
        generate_dataset(opt.config, opt.n_traj, opt.camera.intrinsics(), model, opt.seed);

    fs::create_directories(opt.out);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        std::vector<PoseLabel> labels;
        for (std::size_t j = 0; j < trajectories[i].poses.size(); ++j) {
            PoseLabel label;
            label.frame = static_cast<std::int64_t>(j);
            label.t_us = static_cast<std::uint64_t>(j) * opt.dt_us;
            label.q = trajectories[i].poses[j].q;
            label.t_m = trajectories[i].poses[j].tvec;
            labels.push_back(label);
        }
        write_pose_labels(fs::path(opt.out) / fmt("traj_%03zu.json", i), labels);
    }

    manifest.set_seed(opt.seed);
    manifest.params() = {{"n_traj", opt.n_traj},
                         {"poses", opt.config.poses_per_trajectory},
                         {"spline_frac", opt.config.spline_fraction},
                         {"z_min", opt.config.z_min},
                         {"z_max", opt.config.z_max},
                         {"dt_us", opt.dt_us},
                         {"out", opt.out}};
    if (opt.model.empty())
        manifest.params()["box"] = opt.box;
    else
        manifest.params()["model"] = opt.model;
    opt.camera.record(manifest.params());
    manifest.write(fs::path(opt.out) / "manifest.json");
    std::cout << "wrote " << trajectories.size() << " trajectories x "
              << opt.config.poses_per_trajectory << " poses -> " << opt.out << "\n";
}

// ---------------------------------------------------------------------------
// emulate: intensity frames -> event stream
// ---------------------------------------------------------------------------

struct EmulateOpts {
    std::string frames, out;
    EmulatorParams params;
    std::uint64_t seed = 0;
};

void run_emulate(const EmulateOpts& opt) {
    Manifest manifest("emulate");

    // [{"file": "f_000.pgm", "t_us": 0}, ...], paths relative to the index
    const json doc = json::parse(manifest.load_text(opt.frames));
    const fs::path base = fs::path(opt.frames).parent_path();
    std::vector<IntensityFrame> frames;
    for (const json& entry : doc) {
        const fs::path file = base / entry.at("file").get<std::string>();
        manifest.track(file);
        const GrayImage image = read_pgm(file);
        IntensityFrame frame;
        frame.t_us = entry.at("t_us").get<std::uint64_t>();
        frame.width = image.width;
        frame.height = image.height;
        frame.intensity = image.pixels;
        frames.push_back(std::move(frame));
    }

    const EventStream stream = emulate_events(frames, opt.params, Rng(opt.seed));
    write_binary_file(opt.out, encode_evb1(stream));

    manifest.set_seed(opt.seed);
    manifest.params() = {{"frames", opt.frames},
                         {"contrast", opt.params.contrast_threshold},
                         {"refractory_us", opt.params.refractory_us},
                         {"log_eps", opt.params.log_eps},
                         {"leak_hz", opt.params.leak_rate_hz},
                         {"out", opt.out}};
    manifest.write(sibling_manifest(opt.out));
    std::cout << "emulated " << stream.size() << " events from " << frames.size()
              << " frames -> " << opt.out << "\n";
}

// ---------------------------------------------------------------------------
// pnp: per-frame keypoints -> per-frame poses
// ---------------------------------------------------------------------------

struct PnpOpts {
    std::string keypoints, model, out;
    double conf_threshold = 0.5;
    CameraFlags camera;
};

void run_pnp(const PnpOpts& opt) {
    Manifest manifest("pnp");
    const ObjectModel model = parse_model(manifest.load_text(opt.model));
    std::map<std::string, Eigen::Vector3d> by_name;
    for (const ObjectModel::Keypoint& kp : model.keypoints) by_name[kp.name] = kp.p;

    // {"frames": [{"frame": 0, "t_us": 0, "det_score": 0.97,
    //              "points": [{"name": ..., "uv": [u,v], "confidence": 0.9}, ...]}, ...]}
    const json doc = json::parse(manifest.load_text(opt.keypoints));
    const CameraIntrinsics intr = opt.camera.intrinsics();

    json out_frames = json::array();
    std::size_t solved = 0;
    for (const json& jf : doc.at("frames")) {
        std::vector<Correspondence> corrs;
        for (const json& jp : jf.at("points")) {
            const std::string name = jp.at("name").get<std::string>();
            const auto it = by_name.find(name);
            if (it == by_name.end())
                throw std::invalid_argument("keypoints file references unknown model point '" +
                                            name + "'");
            Correspondence c;
            c.point3d = it->second;
            const json& uv = jp.at("uv");
            c.point2d = {uv.at(0).get<double>(), uv.at(1).get<double>()};
            c.confidence = jp.value("confidence", 1.0);
            corrs.push_back(c);
        }
        const PnPResult result = solve_pnp(corrs, intr, opt.conf_threshold);

        json entry = {{"frame", jf.at("frame").get<std::int64_t>()},
                      {"t_us", jf.value("t_us", std::uint64_t{0})},
                      {"det_score", jf.value("det_score", 0.0)},
                      {"converged", result.converged},
                      {"used_points", result.used_points},
                      {"rms_px", result.rms_reprojection_error}};
        if (result.has_pose()) {
            entry.update(pose_to_json(*result.pose));
            ++solved;
        } else {
            entry["no_pose_reason"] = result.no_pose_reason;
        }
        out_frames.push_back(std::move(entry));
    }
    write_json_file(opt.out, json{{"frames", out_frames}});

    manifest.params() = {{"keypoints", opt.keypoints},
                         {"model", opt.model},
                         {"conf_threshold", opt.conf_threshold},
                         {"out", opt.out}};
    opt.camera.record(manifest.params());
    manifest.write(sibling_manifest(opt.out));
    std::cout << "solved " << solved << "/" << out_frames.size() << " frames -> " << opt.out
              << "\n";
}

// ---------------------------------------------------------------------------
// eval-pose: per-frame pose errors vs ground truth
// ---------------------------------------------------------------------------

struct EvalPoseOpts {
    std::string pred, gt, out;
    double det_threshold = 0.9;
};

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void run_eval_pose(const EvalPoseOpts& opt) {
    Manifest manifest("eval-pose");

    std::map<std::int64_t, Pose> gt;
    for (const PoseLabel& label : parse_pose_labels(manifest.load_text(opt.gt)))
        gt[label.frame] = Pose{label.q, label.t_m};

    // predictions: either a plain label array or a per-frame status object
    // (the `pnp` output); the latter also feeds the coverage statistic
    const std::string pred_text = manifest.load_text(opt.pred);
    const json pred_doc = json::parse(pred_text);

    struct Entry {
        std::int64_t frame;
        std::optional<Pose> pose;
        FrameOutcome outcome;
    };
    std::vector<Entry> entries;
    bool status_schema = false;
    if (pred_doc.is_array()) {
        for (const PoseLabel& label : parse_pose_labels(pred_text))
            entries.push_back({label.frame, Pose{label.q, label.t_m}, {}});
    } else {
        status_schema = true;
        for (const json& jf : pred_doc.at("frames")) {
            Entry e;
            e.frame = jf.at("frame").get<std::int64_t>();
            e.outcome.det_score = jf.value("det_score", 0.0);
            e.outcome.converged = jf.value("converged", false);
            e.outcome.has_pose = jf.contains("q");
            if (e.outcome.has_pose) {
                const json& q = jf.at("q");
                const json& t = jf.at("t_m");
                Pose pose;
                pose.q = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                            q.at(2).get<double>(), q.at(3).get<double>());
                pose.tvec = {t.at(0).get<double>(), t.at(1).get<double>(),
                             t.at(2).get<double>()};
                e.pose = pose;
            }
            entries.push_back(std::move(e));
        }
    }

    json frames = json::array();
    std::vector<double> e_t, e_r, e_p;
    std::vector<FrameOutcome> outcomes;
    for (const Entry& e : entries) {
        outcomes.push_back(e.outcome);
        if (!e.pose) continue;
        const auto it = gt.find(e.frame);
        if (it == gt.end())
            throw std::invalid_argument("no ground truth for frame " + std::to_string(e.frame));
        const PoseErrors err = pose_errors(*e.pose, it->second);
        e_t.push_back(err.e_t);
        e_r.push_back(err.e_r);
        e_p.push_back(err.e_p);
        frames.push_back({{"frame", e.frame},
                          {"e_t", err.e_t},
                          {"e_r_rad", err.e_r},
                          {"e_r_deg", err.e_r * 180.0 / 3.14159265358979323846},
                          {"e_p", err.e_p}});
    }

    const double rad2deg = 180.0 / 3.14159265358979323846;
    const auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (const double x : v) s += x;
        return s / static_cast<double>(v.size());
    };

    json doc;
    doc["frames"] = std::move(frames);
    doc["summary"] = {{"count", e_t.size()},
                      {"mean_e_t", mean(e_t)},
                      {"median_e_t", median(e_t)},
                      {"mean_e_r_rad", mean(e_r)},
                      {"median_e_r_rad", median(e_r)},
                      {"mean_e_r_deg", mean(e_r) * rad2deg},
                      {"median_e_r_deg", median(e_r) * rad2deg},
                      {"mean_e_p", mean(e_p)},
                      {"median_e_p", median(e_p)}};
    if (status_schema)
        doc["data_percent"] = data_percent(outcomes, opt.det_threshold);
    write_json_file(opt.out, doc);

    manifest.params() = {{"pred", opt.pred}, {"gt", opt.gt}, {"out", opt.out}};
    if (status_schema) manifest.params()["det_threshold"] = opt.det_threshold;
    manifest.write(sibling_manifest(opt.out));

    std::printf("pose errors over %zu frames\n", e_t.size());
    std::printf("               mean        median\n");
    std::printf("E_T       %9.6f     %9.6f\n", mean(e_t), median(e_t));
    std::printf("E_R [deg] %9.6f     %9.6f\n", mean(e_r) * rad2deg, median(e_r) * rad2deg);
    std::printf("E_P       %9.6f     %9.6f\n", mean(e_p), median(e_p));
    if (status_schema)
        std::printf("data      %9.1f%% of %zu frames\n", data_percent(outcomes, opt.det_threshold),
                    outcomes.size());
}

// ---------------------------------------------------------------------------
// eval-det: detection AP/AR vs ground truth boxes
// ---------------------------------------------------------------------------

struct EvalDetOpts {
    std::string dets, gts, out;
};

void run_eval_det(const EvalDetOpts& opt) {
    Manifest manifest("eval-det");

    // {"images": [{"detections": [{"bbox": [x,y,w,h], "score": s}, ...]}, ...]}
    const json det_doc = json::parse(manifest.load_text(opt.dets));
    std::vector<std::vector<Detection>> dets;
    for (const json& image : det_doc.at("images")) {
        std::vector<Detection> list;
        for (const json& jd : image.at("detections")) {
            const json& b = jd.at("bbox");
            list.push_back({BBox{b.at(0).get<double>(), b.at(1).get<double>(),
                                 b.at(2).get<double>(), b.at(3).get<double>()},
                            jd.at("score").get<double>()});
        }
        dets.push_back(std::move(list));
    }

    // {"images": [{"boxes": [[x,y,w,h], ...]}, ...]}
    const json gt_doc = json::parse(manifest.load_text(opt.gts));
    std::vector<std::vector<BBox>> gts;
    for (const json& image : gt_doc.at("images")) {
        std::vector<BBox> list;
        for (const json& jb : image.at("boxes"))
            list.push_back(BBox{jb.at(0).get<double>(), jb.at(1).get<double>(),
                                jb.at(2).get<double>(), jb.at(3).get<double>()});
        gts.push_back(std::move(list));
    }

    const DetEvalReport r = detection_eval(dets, gts);

    const json doc = {{"ap50", r.ap50},   {"ap75", r.ap75}, {"ap_s", r.ap_s},
                      {"ap_m", r.ap_m},   {"ap_l", r.ap_l}, {"ar", r.ar},
                      {"ar_s", r.ar_s},   {"ar_m", r.ar_m}, {"ar_l", r.ar_l},
                      {"total_images", r.total_images},     {"total_gts", r.total_gts},
                      {"total_dets", r.total_dets},         {"empty", r.empty}};
    write_json_file(opt.out, doc);

    manifest.params() = {{"dets", opt.dets}, {"gts", opt.gts}, {"out", opt.out}};
    manifest.write(sibling_manifest(opt.out));

    std::printf(" AP50   AP75   AP_S   AP_M   AP_L     AR   AR_S   AR_M   AR_L\n");
    std::printf("%5.3f  %5.3f  %5.3f  %5.3f  %5.3f  %5.3f  %5.3f  %5.3f  %5.3f\n", r.ap50, r.ap75,
                r.ap_s, r.ap_m, r.ap_l, r.ar, r.ar_s, r.ar_m, r.ar_l);
    std::printf("%zu images, %zu ground truths, %zu detections%s\n", r.total_images, r.total_gts,
                r.total_dets, r.empty ? " (no ground truth: all metrics zero)" : "");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-stream processing toolkit"};
    app.set_version_flag("--version", std::string("evs ") + EVS_TOOL_VERSION);
    app.require_subcommand(1);

    ConvertOpts convert_opts;
    CLI::App* convert = app.add_subcommand("convert", "convert between text and EVB1 containers");
    convert->add_option("--in", convert_opts.in, "input events (.evb1 or text, sniffed)")
        ->required()
        ->check(CLI::ExistingFile);
    convert->add_option("--out", convert_opts.out, "output path (.evb1, .txt, or .csv)")
        ->required();
    convert->add_option("--width", convert_opts.width, "sensor width (text input only)");
    convert->add_option("--height", convert_opts.height, "sensor height (text input only)");

    FrameOpts frame_opts;
    CLI::App* frame = app.add_subcommand("frame", "render frame representations over windows");
    frame->add_option("--events", frame_opts.events, "input events (.evb1)")
        ->required()
        ->check(CLI::ExistingFile);
    const std::map<std::string, Representation> repr_names{{"e2f", Representation::E2F},
                                                           {"lnes", Representation::LNES},
                                                           {"ts", Representation::TS},
                                                           {"3c", Representation::C3}};
    frame->add_option("--repr", frame_opts.repr, "representation: e2f|lnes|ts|3c")
        ->required()
        ->transform(CLI::CheckedTransformer(repr_names, CLI::ignore_case));
    frame->add_option("--window-us", frame_opts.window_us, "window length [us]")->required();
    frame->add_option("--stride-us", frame_opts.stride_us, "window stride [us]")->required();
    frame->add_option("--decay-us", frame_opts.decay_us,
                      "decay constant for ts/3c [us] (0 = window/3 resp. window/9)")
        ->capture_default_str();
    frame->add_option("--origin-us", frame_opts.origin,
                      "window grid origin [us] (-1 = first event)")
        ->capture_default_str();
    frame->add_option("--out", frame_opts.out, "output directory")->required();

    FilterOpts filter_opts;
    CLI::App* filter = app.add_subcommand("filter", "score and keep informative windows");
    filter->add_option("--events", filter_opts.events, "input events (.evb1)")
        ->required()
        ->check(CLI::ExistingFile);
    const std::map<std::string, FilterMethod> method_names{{"mask-kl", FilterMethod::MaskKl},
                                                           {"bbox", FilterMethod::BBoxRatio},
                                                           {"count", FilterMethod::MinCount}};
    filter->add_option("--method", filter_opts.method, "method: mask-kl|bbox|count")
        ->required()
        ->transform(CLI::CheckedTransformer(method_names, CLI::ignore_case));
    filter->add_option("--window-us", filter_opts.window_us, "window length [us]")->required();
    filter->add_option("--stride-us", filter_opts.stride_us, "window stride [us]")->required();
    filter->add_option("--threshold", filter_opts.threshold,
                       "keep threshold (default 0.5 for mask-kl/bbox, 10000 for count)");
    filter->add_option("--min-mask-events", filter_opts.min_mask_events,
                       "mask-kl: never keep windows with fewer on-mask events")
        ->capture_default_str();
    filter->add_option("--masks", filter_opts.masks,
                       "mask index json: [{\"frame\": 0, \"file\": \"m.pgm\"}, ...]")
        ->check(CLI::ExistingFile);
    filter->add_option("--bboxes", filter_opts.bboxes,
                       "bbox index json: [{\"frame\": 0, \"bbox\": [x,y,w,h]}, ...]")
        ->check(CLI::ExistingFile);
    filter->add_option("--out", filter_opts.out, "report json path")->required();

    TrajgenOpts trajgen_opts;
    CLI::App* trajgen = app.add_subcommand("trajgen", "generate smooth in-view trajectories");
    trajgen->add_option("--n-traj", trajgen_opts.n_traj, "number of trajectories")
        ->capture_default_str();
    trajgen->add_option("--poses", trajgen_opts.config.poses_per_trajectory,
                        "poses per trajectory")
        ->capture_default_str();
    trajgen->add_option("--spline-frac", trajgen_opts.config.spline_fraction,
                        "fraction of spline paths (rest are helixes)")
        ->capture_default_str();
    trajgen->add_option("--z-min", trajgen_opts.config.z_min, "minimum depth [m]")
        ->capture_default_str();
    trajgen->add_option("--z-max", trajgen_opts.config.z_max, "maximum depth [m]")
        ->capture_default_str();
    trajgen->add_option("--dt-us", trajgen_opts.dt_us, "label timestamp step [us]")
        ->capture_default_str();
    trajgen->add_option("--seed", trajgen_opts.seed, "master seed")->capture_default_str();
    trajgen->add_option("--model", trajgen_opts.model, "target model json (overrides --box)")
        ->check(CLI::ExistingFile);
    trajgen->add_option("--box", trajgen_opts.box, "default cuboid target extents [m]")
        ->expected(3)
        ->capture_default_str();
    trajgen_opts.camera.add_to(trajgen);
    trajgen->add_option("--out", trajgen_opts.out, "output directory")->required();

    EmulateOpts emulate_opts;
    CLI::App* emulate = app.add_subcommand("emulate", "synthesize events from intensity frames");
    emulate
        ->add_option("--frames", emulate_opts.frames,
                     "frame index json: [{\"file\": \"f.pgm\", \"t_us\": 0}, ...]")
        ->required()
        ->check(CLI::ExistingFile);
    emulate->add_option("--contrast", emulate_opts.params.contrast_threshold,
                        "log-intensity contrast threshold")
        ->capture_default_str();
    emulate->add_option("--refractory-us", emulate_opts.params.refractory_us,
                        "per-pixel dead time [us]")
        ->capture_default_str();
    emulate->add_option("--log-eps", emulate_opts.params.log_eps, "intensity floor before log")
        ->capture_default_str();
    emulate->add_option("--leak-hz", emulate_opts.params.leak_rate_hz,
                        "per-pixel background noise rate [Hz]")
        ->capture_default_str();
    emulate->add_option("--seed", emulate_opts.seed, "noise seed")->capture_default_str();
    emulate->add_option("--out", emulate_opts.out, "output events (.evb1)")->required();

    PnpOpts pnp_opts;
    CLI::App* pnp = app.add_subcommand("pnp", "solve per-frame poses from 2D keypoints");
    pnp->add_option("--keypoints", pnp_opts.keypoints, "per-frame keypoint json")
        ->required()
        ->check(CLI::ExistingFile);
    pnp->add_option("--model", pnp_opts.model, "target model json (named 3D keypoints)")
        ->required()
        ->check(CLI::ExistingFile);
    pnp->add_option("--conf-threshold", pnp_opts.conf_threshold,
                    "drop keypoints below this confidence")
        ->capture_default_str();
    pnp_opts.camera.add_to(pnp);
    pnp->add_option("--out", pnp_opts.out, "output poses json")->required();

    EvalPoseOpts eval_pose_opts;
    CLI::App* eval_pose = app.add_subcommand("eval-pose", "score predicted poses against labels");
    eval_pose->add_option("--pred", eval_pose_opts.pred,
                          "predictions: label array or `pnp` output")
        ->required()
        ->check(CLI::ExistingFile);
    eval_pose->add_option("--gt", eval_pose_opts.gt, "ground-truth label array")
        ->required()
        ->check(CLI::ExistingFile);
    eval_pose->add_option("--det-threshold", eval_pose_opts.det_threshold,
                          "detector score needed for a frame to count as data")
        ->capture_default_str();
    eval_pose->add_option("--out", eval_pose_opts.out, "report json path")->required();

    EvalDetOpts eval_det_opts;
    CLI::App* eval_det = app.add_subcommand("eval-det", "score detections against ground truth");
    eval_det->add_option("--dets", eval_det_opts.dets, "detections json")
        ->required()
        ->check(CLI::ExistingFile);
    eval_det->add_option("--gts", eval_det_opts.gts, "ground-truth boxes json")
        ->required()
        ->check(CLI::ExistingFile);
    eval_det->add_option("--out", eval_det_opts.out, "report json path")->required();

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(convert)) run_convert(convert_opts);
        if (app.got_subcommand(frame)) run_frame(frame_opts);
        if (app.got_subcommand(filter)) run_filter(filter_opts);
        if (app.got_subcommand(trajgen)) run_trajgen(trajgen_opts);
        if (app.got_subcommand(emulate)) run_emulate(emulate_opts);
        if (app.got_subcommand(pnp)) run_pnp(pnp_opts);
        if (app.got_subcommand(eval_pose)) run_eval_pose(eval_pose_opts);
        if (app.got_subcommand(eval_det)) run_eval_det(eval_det_opts);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
