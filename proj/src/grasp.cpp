#include "graspvae/grasp.hpp"

#include "graspvae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace graspvae {

Eigen::Quaterniond canonicalize(const Eigen::Quaterniond& q) {
    bool flip = false;
    if (q.w() < 0.0) {
        flip = true;
    } else if (q.w() == 0.0) {
        for (double c : {q.x(), q.y(), q.z()}) {
            if (c != 0.0) {
                flip = c < 0.0;
                break;
            }
        }
    }
    if (!flip) return q;
    return Eigen::Quaterniond(-q.w(), -q.x(), -q.y(), -q.z());
}

double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    const double dot = std::abs(a.coeffs().dot(b.coeffs()));
    return 2.0 * std::acos(std::min(1.0, dot));
}

GraspConfiguration GraspConfiguration::make(const Eigen::Vector3d& position, const Eigen::Quaterniond& orientation,
                                            double spread, double quaternion_tolerance) {
    if (!position.allFinite() || !orientation.coeffs().allFinite() || !std::isfinite(spread))
        throw ValidationError("grasp has non-finite components");
    const double norm = orientation.norm();
    if (std::abs(norm - 1.0) > quaternion_tolerance) {
        std::ostringstream msg;
        msg << "quaternion norm " << norm << " is not 1";
        throw ValidationError(msg.str());
    }
    // Values a rounding error outside the range are snapped back.
    constexpr double slack = 1e-12;
    if (spread < -slack || spread > kMaxSpread + slack) {
        std::ostringstream msg;
        msg << "spread " << spread << " outside [0, pi/2]";
        throw ValidationError(msg.str());
    }
    GraspConfiguration g;
    g.position = position;
    // Already unit at machine precision: keep the bits so file round trips are exact.
    const bool unit = std::abs(norm - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon();
    g.orientation = canonicalize(unit ? orientation : orientation.normalized());
    g.spread = std::clamp(spread, 0.0, kMaxSpread);
    return g;
}

Vector8d GraspConfiguration::as_vector() const {
    Vector8d v;
    v << position, orientation.x(), orientation.y(), orientation.z(), orientation.w(), spread;
    return v;
}

TabletopPlane TabletopPlane::make(double a, double b, double c, double d) {
    const Eigen::Vector3d n(a, b, c);
    const double norm = n.norm();
    if (!std::isfinite(norm) || !std::isfinite(d) || norm < 1e-12)
        throw ValidationError("tabletop plane needs a finite nonzero normal");
    TabletopPlane p;
    p.normal = n / norm;
    p.offset = d / norm;
    return p;
}

}  // namespace graspvae
