#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "evs/geometry.hpp"

namespace evs {

/// One 2D observation of a known 3D body-frame point.
struct Correspondence {
    Eigen::Vector3d point3d{0.0, 0.0, 0.0};  ///< meters, body frame
    Eigen::Vector2d point2d{0.0, 0.0};       ///< pixels
    double confidence = 1.0;
};

/// Outcome of a pose solve. An empty pose is a reported result, not an
/// error: frames without a confident pose feed the coverage statistic.
struct PnPResult {
    std::optional<Pose> pose;
    double rms_reprojection_error = 0.0;  ///< pixels
    int used_points = 0;
    bool converged = false;
    std::string no_pose_reason;            ///< empty when a pose is present
    std::vector<double> rms_history;       ///< per accepted refinement step

    [[nodiscard]] bool has_pose() const noexcept { return pose.has_value(); }
};

/// Derivative of the pixel projection of a body-frame point with respect
/// to a minimal pose perturbation: columns 0-2 are the rotation tangent
/// (left perturbation, R <- Exp(w) R), columns 3-5 the translation.
/// Throws when the point is at or behind the camera plane.
Eigen::Matrix<double, 2, 6> reprojection_jacobian(const Pose& pose, const CameraIntrinsics& intr,
                                                  const Eigen::Vector3d& point3d);

/// Pose from 2D-3D correspondences: confidence gate, DLT initialization
/// on normalized coordinates, then damped Gauss-Newton refinement of the
/// reprojection error. Needs at least 6 gated, non-degenerate points.
PnPResult solve_pnp(std::span<const Correspondence> correspondences,
                    const CameraIntrinsics& intr, double conf_threshold = 0.5);

}  // namespace evs
