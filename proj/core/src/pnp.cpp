#include "evs/pnp.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace evs {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

/// Quaternion exponential of a rotation-tangent vector.
Eigen::Quaterniond exp_quaternion(const Eigen::Vector3d& w) {
    const double angle = w.norm();
    if (angle < 1e-12) {
        Eigen::Quaterniond q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
        q.normalize();
        return q;
    }
    const double half = 0.5 * angle;
    const Eigen::Vector3d axis = w / angle;
    return {std::cos(half), std::sin(half) * axis.x(), std::sin(half) * axis.y(),
            std::sin(half) * axis.z()};
}

Pose apply_step(const Pose& pose, const Eigen::Matrix<double, 6, 1>& delta) {
    Pose out;
    out.q = exp_quaternion(delta.head<3>()) * pose.q;
    out.q.normalize();
    out.tvec = pose.tvec + delta.tail<3>();
    return out;
}

struct GatedPoints {
    std::vector<Eigen::Vector3d> p3;
    std::vector<Eigen::Vector2d> p2;
};

/// Sum of squared pixel residuals; nullopt when a point falls at or
/// behind the camera plane.
std::optional<double> reprojection_cost(const Pose& pose, const CameraIntrinsics& intr,
                                        const GatedPoints& pts) {
    double cost = 0.0;
    for (std::size_t i = 0; i < pts.p3.size(); ++i) {
        const Eigen::Vector3d p_cam = pose.q * pts.p3[i] + pose.tvec;
        if (p_cam.z() <= 0.0) return std::nullopt;
        const Eigen::Vector2d uv(intr.fx * p_cam.x() / p_cam.z() + intr.cx,
                                 intr.fy * p_cam.y() / p_cam.z() + intr.cy);
        cost += (uv - pts.p2[i]).squaredNorm();
    }
    return cost;
}

/// True when the 3D points span a full 3-dimensional volume; DLT needs a
/// non-coplanar (hence non-collinear) configuration.
bool points_span_3d(const std::vector<Eigen::Vector3d>& pts) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : pts) cov += (p - centroid) * (p - centroid).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const double largest = eig.eigenvalues()(2);
    return largest > 0.0 && eig.eigenvalues()(0) > 1e-9 * largest;
}

/// Direct linear transform for M = [R|t] on Hartley-normalized
/// coordinates, followed by orthonormalization of the rotation block.
std::optional<Pose> dlt_initialize(const GatedPoints& pts, const CameraIntrinsics& intr) {
    const std::size_t n = pts.p3.size();

    std::vector<Eigen::Vector2d> norm2(n);
    for (std::size_t i = 0; i < n; ++i)
        norm2[i] = {(pts.p2[i].x() - intr.cx) / intr.fx, (pts.p2[i].y() - intr.cy) / intr.fy};

    Eigen::Vector3d c3 = Eigen::Vector3d::Zero();
    Eigen::Vector2d c2 = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        c3 += pts.p3[i];
        c2 += norm2[i];
    }
    c3 /= static_cast<double>(n);
    c2 /= static_cast<double>(n);

    double mean3 = 0.0, mean2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean3 += (pts.p3[i] - c3).norm();
        mean2 += (norm2[i] - c2).norm();
    }
    mean3 /= static_cast<double>(n);
    mean2 /= static_cast<double>(n);
    if (!(mean3 > 0.0) || !(mean2 > 0.0)) return std::nullopt;
    const double s3 = std::sqrt(3.0) / mean3;
    const double s2 = std::sqrt(2.0) / mean2;

    Eigen::MatrixXd a(2 * n, 12);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = s3 * (pts.p3[i] - c3);
        const Eigen::Vector2d x = s2 * (norm2[i] - c2);
        a.row(2 * i) << p.x(), p.y(), p.z(), 1.0, 0.0, 0.0, 0.0, 0.0, -x.x() * p.x(),
            -x.x() * p.y(), -x.x() * p.z(), -x.x();
        a.row(2 * i + 1) << 0.0, 0.0, 0.0, 0.0, p.x(), p.y(), p.z(), 1.0, -x.y() * p.x(),
            -x.y() * p.y(), -x.y() * p.z(), -x.y();
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const Eigen::VectorXd v = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> m_norm;
    m_norm << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8), v(9), v(10), v(11);

    // Undo the normalizing similarities: x_norm = T2 x, X_norm = T3 X.
    Eigen::Matrix3d t2 = Eigen::Matrix3d::Identity();
    t2(0, 0) = t2(1, 1) = s2;
    t2.block<2, 1>(0, 2) = -s2 * c2;
    Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity();
    t3.block<3, 3>(0, 0) = s3 * Eigen::Matrix3d::Identity();
    t3.block<3, 1>(0, 3) = -s3 * c3;
    Eigen::Matrix<double, 3, 4> m = t2.inverse() * m_norm * t3;

    const double row3_norm = m.block<1, 3>(2, 0).norm();
    if (!(row3_norm > 0.0) || !m.allFinite()) return std::nullopt;
    m /= row3_norm;
    if (m.row(2).dot(Eigen::Vector4d(c3.x(), c3.y(), c3.z(), 1.0)) < 0.0) m = -m;

    Eigen::JacobiSVD<Eigen::Matrix3d> rot_svd(m.leftCols<3>(),
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r = rot_svd.matrixU() * rot_svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
        flip(2, 2) = -1.0;
        r = rot_svd.matrixU() * flip * rot_svd.matrixV().transpose();
    }

    Pose pose;
    pose.q = Eigen::Quaterniond(r);
    pose.q.normalize();
    pose.tvec = m.col(3);
    return pose;
}

}  // namespace

Eigen::Matrix<double, 2, 6> reprojection_jacobian(const Pose& pose, const CameraIntrinsics& intr,
                                                  const Eigen::Vector3d& point3d) {
    const Eigen::Vector3d rotated = pose.q * point3d;
    const Eigen::Vector3d p_cam = rotated + pose.tvec;
    if (p_cam.z() <= 0.0) throw std::domain_error("point behind camera");

    const double z = p_cam.z();
    Eigen::Matrix<double, 2, 3> pixel_wrt_cam;
    pixel_wrt_cam << intr.fx / z, 0.0, -intr.fx * p_cam.x() / (z * z), 0.0, intr.fy / z,
        -intr.fy * p_cam.y() / (z * z);

    Eigen::Matrix<double, 2, 6> jac;
    jac.block<2, 3>(0, 0) = pixel_wrt_cam * (-skew(rotated));
    jac.block<2, 3>(0, 3) = pixel_wrt_cam;
    return jac;
}

PnPResult solve_pnp(std::span<const Correspondence> correspondences,
                    const CameraIntrinsics& intr, double conf_threshold) {
    if (!intr.valid()) throw std::invalid_argument("invalid camera intrinsics");

    GatedPoints pts;
    for (const Correspondence& c : correspondences) {
        if (c.confidence < conf_threshold) continue;
        pts.p3.push_back(c.point3d);
        pts.p2.push_back(c.point2d);
    }

    PnPResult result;
    result.used_points = static_cast<int>(pts.p3.size());
    if (pts.p3.size() < 6) {
        result.no_pose_reason = "insufficient keypoints";
        return result;
    }
    if (!points_span_3d(pts.p3)) {
        result.no_pose_reason = "degenerate keypoint configuration (coplanar or collinear)";
        return result;
    }

    std::optional<Pose> init = dlt_initialize(pts, intr);
    if (!init) {
        result.no_pose_reason = "initialization failed";
        return result;
    }

    Pose cur = *init;
    std::optional<double> cost = reprojection_cost(cur, intr, pts);
    if (!cost) {
        result.no_pose_reason = "initialization placed the target behind the camera";
        return result;
    }

    const auto n = static_cast<double>(pts.p3.size());
    const auto rms_of = [n](double c) { return std::sqrt(c / n); };
    result.rms_history.push_back(rms_of(*cost));

    double mu = 0.0;
    constexpr int kMaxIterations = 50;
    constexpr int kMaxDampingRetries = 20;
    constexpr double kStepTolerance = 1e-10;

    for (int iter = 0; iter < kMaxIterations && !result.converged; ++iter) {
        Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
        for (std::size_t i = 0; i < pts.p3.size(); ++i) {
            const Eigen::Matrix<double, 2, 6> jac = reprojection_jacobian(cur, intr, pts.p3[i]);
            const Eigen::Vector3d p_cam = cur.q * pts.p3[i] + cur.tvec;
            const Eigen::Vector2d uv(intr.fx * p_cam.x() / p_cam.z() + intr.cx,
                                     intr.fy * p_cam.y() / p_cam.z() + intr.cy);
            const Eigen::Vector2d r = uv - pts.p2[i];
            h += jac.transpose() * jac;
            g += jac.transpose() * r;
        }

        bool accepted = false;
        for (int retry = 0; retry < kMaxDampingRetries; ++retry) {
            Eigen::Matrix<double, 6, 6> damped = h;
            damped.diagonal().array() += mu;
            const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(-g);
            if (!delta.allFinite()) {
                mu = mu == 0.0 ? 1e-6 : mu * 10.0;
                continue;
            }
            const Pose trial = apply_step(cur, delta);
            const std::optional<double> trial_cost = reprojection_cost(trial, intr, pts);
            if (trial_cost && *trial_cost <= *cost) {
                cur = trial;
                cost = trial_cost;
                result.rms_history.push_back(rms_of(*cost));
                if (delta.norm() < kStepTolerance) result.converged = true;
                mu *= 0.1;
                if (mu < 1e-12) mu = 0.0;
                accepted = true;
                break;
            }
            // Step made things worse (or left the view): damp harder.
            mu = mu == 0.0 ? 1e-6 : mu * 10.0;
        }
        if (!accepted) break;  // fully damped and still no improvement
    }

    result.pose = cur;
    result.rms_reprojection_error = rms_of(*cost);
    return result;
}

}  // namespace evs
