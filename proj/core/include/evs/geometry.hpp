#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "evs/rng.hpp"

namespace evs {

/// Pinhole camera model, pixels.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    [[nodiscard]] bool valid() const noexcept {
        return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 &&
               cx < width && cy >= 0.0 && cy < height;
    }
};

/// Rigid pose of the target in the camera frame: p_cam = R(q) * p_body + tvec.
/// Quaternions are stored (w, x, y, z) and kept unit-norm.
struct Pose {
    Eigen::Quaterniond q{1.0, 0.0, 0.0, 0.0};
    Eigen::Vector3d tvec{0.0, 0.0, 0.0};
};

/// 3D keypoint set of the target, body frame, meters. Edge keypoints are
/// the bounding extremities used for field-of-view validation.
struct ObjectModel {
    struct Keypoint {
        std::string name;
        Eigen::Vector3d p{0.0, 0.0, 0.0};
        bool edge = true;
    };
    std::vector<Keypoint> keypoints;

    [[nodiscard]] bool valid() const noexcept;
    [[nodiscard]] std::vector<Eigen::Vector3d> edge_points() const;
    [[nodiscard]] std::vector<Eigen::Vector3d> all_points() const;
};

/// Rectangular cuboid of the given extents centered at the body origin;
/// the 8 corners are edge keypoints. Handy as a stand-in target.
ObjectModel make_box_model(double size_x, double size_y, double size_z);

/// Pinhole projection of a body-frame point. Throws if the point lands at
/// or behind the camera plane (z <= 0).
Eigen::Vector2d project_point(const Pose& pose, const CameraIntrinsics& intr,
                              const Eigen::Vector3d& point);

/// Projects a batch; the error message of a behind-camera failure names
/// the offending point index.
std::vector<Eigen::Vector2d> project_points(const Pose& pose, const CameraIntrinsics& intr,
                                            std::span<const Eigen::Vector3d> points);

/// True iff every edge keypoint is in front of the camera and projects
/// inside [0, width) x [0, height).
bool validate_pose_in_fov(const Pose& pose, const CameraIntrinsics& intr,
                          const ObjectModel& model);

/// Geodesic quaternion interpolation with shortest-arc sign handling;
/// s = 0 returns a, s = 1 returns b up to sign. Falls back to normalized
/// lerp when the arc is too small for the sine ratio to be stable.
Eigen::Quaterniond slerp(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b, double s);

/// Haar-uniform rotation (Shoemake's subgroup algorithm, three uniforms).
Eigen::Quaterniond sample_uniform_quaternion(Rng& rng);

enum class TrajectoryMethod { Spline, Helix };

const char* to_string(TrajectoryMethod method) noexcept;

struct Trajectory {
    TrajectoryMethod method = TrajectoryMethod::Spline;
    std::vector<Pose> poses;
};

struct TrajectoryConfig {
    double z_min = 3.5;   ///< meters
    double z_max = 12.0;  ///< meters
    int poses_per_trajectory = 598;
    double spline_fraction = 0.8;  ///< remainder uses the helix method
    int pose_rejection_cap = 10000;
    int path_rejection_cap = 100;
};

/// Draws a start/end pose pair: orientation uniform on SO(3), depth
/// uniform in [z_min, z_max], lateral position uniform in the box that
/// keeps the body origin in the field of view at that depth. Each pose is
/// rejection-sampled until the full edge-keypoint check passes.
std::pair<Pose, Pose> sample_pose_pair(const TrajectoryConfig& config,
                                       const CameraIntrinsics& intr, const ObjectModel& model,
                                       Rng& rng);

/// Interpolates n poses between the endpoints. Rotations follow slerp on
/// a uniform grid. Translations follow either a Catmull-Rom spline
/// through two sampled interior control points, or a helix around the
/// start-end chord; endpoint translations are reproduced exactly. Every
/// interpolated pose must pass the field-of-view check and keep its depth
/// inside [z_min, z_max]; a failing path is resampled up to
/// path_rejection_cap times before an error is raised.
Trajectory interpolate_trajectory(const Pose& start, const Pose& end, int n,
                                  TrajectoryMethod method, const TrajectoryConfig& config,
                                  const CameraIntrinsics& intr, const ObjectModel& model,
                                  Rng& rng);

/// Samples endpoints, picks the method by spline_fraction, and
/// interpolates. When a sampled endpoint pair admits no valid path the
/// pair itself is resampled.
Trajectory generate_trajectory(const TrajectoryConfig& config, const CameraIntrinsics& intr,
                               const ObjectModel& model, Rng& rng);

/// n_traj trajectories from independent per-trajectory substreams of the
/// master seed, so results are reproducible regardless of worker count.
std::vector<Trajectory> generate_dataset(const TrajectoryConfig& config, int n_traj,
                                         const CameraIntrinsics& intr, const ObjectModel& model,
                                         std::uint64_t seed);

}  // namespace evs
