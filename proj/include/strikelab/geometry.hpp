#pragma once

#include <Eigen/Dense>

namespace strikelab {

/// Plane through `point` with unit `normal`.
struct HitPlane {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::UnitX();

    double signed_distance(const Eigen::Vector3d& x) const { return normal.dot(x - point); }
    /// Throws std::invalid_argument if the normal is not unit length.
    void validate() const;
};

}  // namespace strikelab
