#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>
#include <optional>

namespace graspvae {

inline constexpr double kMaxSpread = std::numbers::pi / 2.0;

using Vector8d = Eigen::Matrix<double, 8, 1>;
using Vector12d = Eigen::Matrix<double, 12, 1>;

/// Resolve the quaternion double cover: qw >= 0, and when qw == 0 the first
/// nonzero of (qx, qy, qz) is positive. Idempotent; preserves the rotation.
Eigen::Quaterniond canonicalize(const Eigen::Quaterniond& q);

/// Geodesic angle (radians) between the rotations of two unit quaternions.
double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Gripper pose and spread angle, expressed in the object frame.
struct GraspConfiguration {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
    double spread = 0.0;

    /// Validates and canonicalizes. The quaternion must have unit norm within
    /// `quaternion_tolerance`; it is then renormalized exactly.
    static GraspConfiguration make(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation,
                                   double spread, double quaternion_tolerance = 1e-9);

    /// (x, y, z, qx, qy, qz, qw, spread)
    Vector8d as_vector() const;

    /// Gripper z-axis (direction of approach) in the object frame.
    Eigen::Vector3d approach() const { return orientation * Eigen::Vector3d::UnitZ(); }
};

/// Table plane a*x + b*y + c*z + d = 0 in the object frame, with a unit normal
/// pointing from the table toward the object.
struct TabletopPlane {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    double offset = 0.0;

    /// Rescales (a, b, c, d) so the normal is unit length. Orientation of the
    /// normal is kept as given.
    static TabletopPlane make(double a, double b, double c, double d);
    static TabletopPlane make(const Eigen::Vector4d& coefficients) {
        return make(coefficients[0], coefficients[1], coefficients[2], coefficients[3]);
    }

    Eigen::Vector4d coefficients() const { return {normal.x(), normal.y(), normal.z(), offset}; }
    double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + offset; }
    bool approx_equal(const TabletopPlane& other, double tol = 1e-6) const {
        return (coefficients() - other.coefficients()).cwiseAbs().maxCoeff() <= tol;
    }
};

struct GraspRecord {
    GraspConfiguration grasp;
    TabletopPlane plane;
    std::optional<int> grasp_type;
};

}  // namespace graspvae
