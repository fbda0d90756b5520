#include "evs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "evs/parallel.hpp"

namespace evs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Vector2d pinhole(const CameraIntrinsics& intr, const Eigen::Vector3d& p_cam) {
    return {intr.fx * p_cam.x() / p_cam.z() + intr.cx,
            intr.fy * p_cam.y() / p_cam.z() + intr.cy};
}

/// Lateral bounds keeping a point at depth z projected inside the image.
struct LateralBox {
    double x_lo, x_hi, y_lo, y_hi;
};

LateralBox fov_box(const CameraIntrinsics& intr, double z) {
    return {-intr.cx * z / intr.fx, (intr.width - intr.cx) * z / intr.fx,
            -intr.cy * z / intr.fy, (intr.height - intr.cy) * z / intr.fy};
}

Eigen::Vector3d sample_position(const TrajectoryConfig& config, const CameraIntrinsics& intr,
                                Rng& rng) {
    const double z = rng.uniform(config.z_min, config.z_max);
    const LateralBox box = fov_box(intr, z);
    return {rng.uniform(box.x_lo, box.x_hi), rng.uniform(box.y_lo, box.y_hi), z};
}

Pose sample_valid_pose(const TrajectoryConfig& config, const CameraIntrinsics& intr,
                       const ObjectModel& model, Rng& rng) {
    for (int tries = 0; tries < config.pose_rejection_cap; ++tries) {
        Pose pose;
        pose.q = sample_uniform_quaternion(rng);
        pose.tvec = sample_position(config, intr, rng);
        if (validate_pose_in_fov(pose, intr, model)) return pose;
    }
    throw std::runtime_error("pose sampling exhausted the rejection cap");
}

/// Uniform Catmull-Rom over four control points; t in [0, 1] spans the
/// middle segment p1 -> p2.
Eigen::Vector3d catmull_rom(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                            const Eigen::Vector3d& p2, const Eigen::Vector3d& p3, double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

/// Orthonormal pair spanning the plane perpendicular to unit vector axis;
/// deterministic for reproducible helix sampling.
std::pair<Eigen::Vector3d, Eigen::Vector3d> perpendicular_basis(const Eigen::Vector3d& axis) {
    Eigen::Vector3d pick = Eigen::Vector3d::UnitX();
    if (std::abs(axis.y()) < std::abs(axis.x())) pick = Eigen::Vector3d::UnitY();
    if (std::abs(axis.z()) < std::abs(axis.x()) && std::abs(axis.z()) < std::abs(axis.y()))
        pick = Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d e1 = pick.cross(axis).normalized();
    const Eigen::Vector3d e2 = axis.cross(e1);
    return {e1, e2};
}

struct SplinePath {
    Eigen::Vector3d c0, c1, c2, c3;

    [[nodiscard]] Eigen::Vector3d eval(double s) const {
        const Eigen::Vector3d phantom_head = 2.0 * c0 - c1;
        const Eigen::Vector3d phantom_tail = 2.0 * c3 - c2;
        const double u = s * 3.0;
        const int seg = std::min(static_cast<int>(u), 2);
        const double t = u - seg;
        switch (seg) {
            case 0: return catmull_rom(phantom_head, c0, c1, c2, t);
            case 1: return catmull_rom(c0, c1, c2, c3, t);
            default: return catmull_rom(c1, c2, c3, phantom_tail, t);
        }
    }
};

struct HelixPath {
    Eigen::Vector3d origin, chord, e1, e2;
    double radius = 0.0;
    double phase = 0.0;
    int turns = 1;

    [[nodiscard]] Eigen::Vector3d eval(double s) const {
        const double a = kTwoPi * turns * s + phase;
        return origin + s * chord +
               radius * ((std::cos(a) - std::cos(phase)) * e1 +
                         (std::sin(a) - std::sin(phase)) * e2);
    }
};

bool pose_on_path_valid(const Pose& pose, const TrajectoryConfig& config,
                        const CameraIntrinsics& intr, const ObjectModel& model) {
    return pose.tvec.z() >= config.z_min && pose.tvec.z() <= config.z_max &&
           validate_pose_in_fov(pose, intr, model);
}

/// Fill the pose grid from a translation path; returns false as soon as
/// an interior pose fails validation. Endpoints are copied verbatim.
template <typename Path>
bool fill_trajectory(const Pose& start, const Pose& end, int n, const Path& path,
                     const TrajectoryConfig& config, const CameraIntrinsics& intr,
                     const ObjectModel& model, std::vector<Pose>& out) {
    out.resize(static_cast<std::size_t>(n));
    out.front() = start;
    out.back() = end;
    for (int i = 1; i + 1 < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        Pose& pose = out[static_cast<std::size_t>(i)];
        pose.q = slerp(start.q, end.q, s);
        pose.tvec = path(s);
        if (!pose_on_path_valid(pose, config, intr, model)) return false;
    }
    return true;
}

}  // namespace

bool ObjectModel::valid() const noexcept {
    if (keypoints.size() < 4) return false;
    return std::any_of(keypoints.begin(), keypoints.end(),
                       [](const Keypoint& k) { return k.edge; });
}

std::vector<Eigen::Vector3d> ObjectModel::edge_points() const {
    std::vector<Eigen::Vector3d> pts;
    for (const Keypoint& k : keypoints)
        if (k.edge) pts.push_back(k.p);
    return pts;
}

std::vector<Eigen::Vector3d> ObjectModel::all_points() const {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(keypoints.size());
    for (const Keypoint& k : keypoints) pts.push_back(k.p);
    return pts;
}

ObjectModel make_box_model(double size_x, double size_y, double size_z) {
    ObjectModel model;
    const double hx = size_x / 2.0, hy = size_y / 2.0, hz = size_z / 2.0;
    int index = 0;
    for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0})
            for (double sz : {-1.0, 1.0})
                model.keypoints.push_back({"corner" + std::to_string(index++),
                                           {sx * hx, sy * hy, sz * hz},
                                           true});
    return model;
}

Eigen::Vector2d project_point(const Pose& pose, const CameraIntrinsics& intr,
                              const Eigen::Vector3d& point) {
    const Eigen::Vector3d p_cam = pose.q * point + pose.tvec;
    if (p_cam.z() <= 0.0)
        throw std::domain_error("point behind camera (z = " + std::to_string(p_cam.z()) + ")");
    return pinhole(intr, p_cam);
}

std::vector<Eigen::Vector2d> project_points(const Pose& pose, const CameraIntrinsics& intr,
                                            std::span<const Eigen::Vector3d> points) {
    std::vector<Eigen::Vector2d> pixels;
    pixels.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Eigen::Vector3d p_cam = pose.q * points[i] + pose.tvec;
        if (p_cam.z() <= 0.0)
            throw std::domain_error("point " + std::to_string(i) + " behind camera");
        pixels.push_back(pinhole(intr, p_cam));
    }
    return pixels;
}

bool validate_pose_in_fov(const Pose& pose, const CameraIntrinsics& intr,
                          const ObjectModel& model) {
    for (const ObjectModel::Keypoint& k : model.keypoints) {
        if (!k.edge) continue;
        const Eigen::Vector3d p_cam = pose.q * k.p + pose.tvec;
        if (p_cam.z() <= 0.0) return false;
        const Eigen::Vector2d uv = pinhole(intr, p_cam);
        if (uv.x() < 0.0 || uv.x() >= intr.width || uv.y() < 0.0 || uv.y() >= intr.height)
            return false;
    }
    return true;
}

Eigen::Quaterniond slerp(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, double s) {
    Eigen::Quaterniond qa = a.normalized();
    Eigen::Quaterniond qb = b.normalized();
    double dot = qa.dot(qb);
    if (dot < 0.0) {
        qb.coeffs() = -qb.coeffs();
        dot = -dot;
    }
    if (s <= 0.0) return qa;
    if (s >= 1.0) return qb;

    Eigen::Quaterniond out;
    if (dot > 1.0 - 1e-10) {
        // Arc too small for a stable sine ratio: normalized lerp.
        out.coeffs() = (1.0 - s) * qa.coeffs() + s * qb.coeffs();
    } else {
        const double theta = std::acos(std::min(dot, 1.0));
        const double inv_sin = 1.0 / std::sin(theta);
        out.coeffs() = (std::sin((1.0 - s) * theta) * qa.coeffs() +
                        std::sin(s * theta) * qb.coeffs()) *
                       inv_sin;
    }
    out.normalize();
    return out;
}

Eigen::Quaterniond sample_uniform_quaternion(Rng& rng) {
    const double u1 = rng.uniform();
    const double a1 = kTwoPi * rng.uniform();
    const double a2 = kTwoPi * rng.uniform();
    const double s1 = std::sqrt(1.0 - u1);
    const double s2 = std::sqrt(u1);
    Eigen::Quaterniond q(s2 * std::cos(a2), s1 * std::sin(a1), s1 * std::cos(a1),
                         s2 * std::sin(a2));
    q.normalize();
    return q;
}

const char* to_string(TrajectoryMethod method) noexcept {
    return method == TrajectoryMethod::Spline ? "spline" : "helix";
}

std::pair<Pose, Pose> sample_pose_pair(const TrajectoryConfig& config,
                                       const CameraIntrinsics& intr, const ObjectModel& model,
                                       Rng& rng) {
    if (!intr.valid()) throw std::invalid_argument("invalid camera intrinsics");
    if (!model.valid()) throw std::invalid_argument("invalid object model");
    if (!(config.z_min > 0.0) || config.z_max < config.z_min)
        throw std::invalid_argument("invalid depth range");
    Pose start = sample_valid_pose(config, intr, model, rng);
    Pose end = sample_valid_pose(config, intr, model, rng);
    return {start, end};
}

Trajectory interpolate_trajectory(const Pose& start, const Pose& end, int n,
                                  TrajectoryMethod method, const TrajectoryConfig& config,
                                  const CameraIntrinsics& intr, const ObjectModel& model,
                                  Rng& rng) {
    if (n < 2) throw std::invalid_argument("a trajectory needs at least 2 poses");
    if (!pose_on_path_valid(start, config, intr, model) ||
        !pose_on_path_valid(end, config, intr, model))
        throw std::invalid_argument("trajectory endpoints fail validation");

    Trajectory traj;
    traj.method = method;

    const Eigen::Vector3d chord = end.tvec - start.tvec;
    const double chord_len = chord.norm();
    if (chord_len == 0.0) {
        // Degenerate span: constant translation, rotations still slerp.
        const auto constant = [&](double) { return start.tvec; };
        fill_trajectory(start, end, n, constant, config, intr, model, traj.poses);
        return traj;
    }

    for (int attempt = 0; attempt < config.path_rejection_cap; ++attempt) {
        bool ok = false;
        if (method == TrajectoryMethod::Spline) {
            SplinePath path{start.tvec, sample_position(config, intr, rng),
                            sample_position(config, intr, rng), end.tvec};
            ok = fill_trajectory(
                start, end, n, [&path](double s) { return path.eval(s); }, config, intr,
                model, traj.poses);
        } else {
            HelixPath path;
            path.origin = start.tvec;
            path.chord = chord;
            std::tie(path.e1, path.e2) = perpendicular_basis(chord / chord_len);
            path.turns = 1 + static_cast<int>(rng.uniform_int(3));
            path.radius = rng.uniform(0.0, 0.2 * chord_len);
            path.phase = rng.uniform(0.0, kTwoPi);
            ok = fill_trajectory(
                start, end, n, [&path](double s) { return path.eval(s); }, config, intr,
                model, traj.poses);
        }
        if (ok) return traj;
    }
    throw std::runtime_error("no valid path between the endpoints after " +
                             std::to_string(config.path_rejection_cap) + " attempts");
}

Trajectory generate_trajectory(const TrajectoryConfig& config, const CameraIntrinsics& intr,
                               const ObjectModel& model, Rng& rng) {
    const TrajectoryMethod method = rng.uniform() < config.spline_fraction
                                        ? TrajectoryMethod::Spline
                                        : TrajectoryMethod::Helix;
    constexpr int kPairAttempts = 100;
    for (int attempt = 0; attempt < kPairAttempts; ++attempt) {
        auto [start, end] = sample_pose_pair(config, intr, model, rng);
        try {
            return interpolate_trajectory(start, end, config.poses_per_trajectory, method,
                                          config, intr, model, rng);
        } catch (const std::runtime_error&) {
            // endpoint pair admits no valid path: draw a new pair
        }
    }
    throw std::runtime_error("trajectory generation failed for every endpoint pair");
}

std::vector<Trajectory> generate_dataset(const TrajectoryConfig& config, int n_traj,
                                         const CameraIntrinsics& intr, const ObjectModel& model,
                                         std::uint64_t seed) {
    if (n_traj < 0) throw std::invalid_argument("trajectory count must be non-negative");
    std::vector<Trajectory> out(static_cast<std::size_t>(n_traj));
    const Rng root(seed);
    parallel_for(out.size(), [&](std::size_t i) {
        Rng sub = root.substream(i);
        out[i] = generate_trajectory(config, intr, model, sub);
    });
    return out;
}

}  // namespace evs
