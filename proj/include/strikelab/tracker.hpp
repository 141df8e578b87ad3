#pragma once

// Ball state estimation: an EKF over (position, velocity) with a
// gravity + quadratic-drag flight model, and hit-plane crossing prediction.

#include <deque>
#include <optional>

#include <Eigen/Dense>

#include "strikelab/geometry.hpp"

namespace strikelab::tracker {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct BallEstimate {
    Vector6d mean = Vector6d::Zero();  // position m, velocity m/s
    Matrix6d covariance = Matrix6d::Identity();
    double stamp = 0.0;

    Eigen::Vector3d position() const { return mean.head<3>(); }
    Eigen::Vector3d velocity() const { return mean.tail<3>(); }
};

struct Observation {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double noise_std = 0.005;
    int source_id = 0;
    double stamp = 0.0;
};

struct FlightModel {
    Eigen::Vector3d gravity{0.0, 0.0, -9.81};
    /// Quadratic drag coefficient k_d in v̇ = g - k_d ‖v‖ v.
    double drag = 0.0;
    /// Process noise spectral densities per axis: position m²/s, velocity (m/s)²/s.
    double q_position = 1e-4;
    double q_velocity = 1e-2;
    /// Longest RK4 substep used when integrating, seconds.
    double max_substep = 0.005;
};

/// Integrates (p, v) forward by dt under the flight model (RK4 substeps).
Vector6d propagate_state(const Vector6d& state, double dt, const FlightModel& model);

BallEstimate ekf_predict(const BallEstimate& est, double dt, const FlightModel& model);

/// Position-only measurement update with R = noise_std² I, Joseph form.
BallEstimate ekf_update(const BallEstimate& est, const Observation& obs);

struct Crossing {
    double time_to_hit = 0.0;  // seconds after est.stamp
    double stamp = 0.0;        // est.stamp + time_to_hit
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

/// First strictly-future crossing of the plane within `horizon` seconds.
std::optional<Crossing> predict_crossing(const BallEstimate& est, const HitPlane& plane, const FlightModel& model,
                                         double horizon);

struct TrackerOptions {
    FlightModel model;
    /// Observations up to this much older than the newest are re-sorted.
    double reorder_window = 0.05;
    double initial_velocity_var = 25.0;
};

/// Single-owner filter fed by possibly out-of-order observations. Late
/// observations inside the reorder window trigger a replay from the oldest
/// buffered checkpoint; older ones are dropped and counted.
class BallTracker {
public:
    explicit BallTracker(TrackerOptions options = {});

    /// Returns false if the observation was rejected as too old.
    bool submit(const Observation& obs);

    bool has_estimate() const { return current_.has_value(); }
    const std::optional<BallEstimate>& estimate() const { return current_; }
    /// Current estimate predicted forward to `stamp` (never backward).
    std::optional<BallEstimate> estimate_at(double stamp) const;

    int observation_count() const { return count_; }
    int rejected_count() const { return rejected_; }
    const TrackerOptions& options() const { return options_; }

private:
    BallEstimate apply(const std::optional<BallEstimate>& prior, const Observation& obs) const;
    void replay();

    TrackerOptions options_;
    std::optional<BallEstimate> base_;   // estimate before the buffered observations
    std::deque<Observation> window_;     // sorted by stamp
    std::optional<BallEstimate> current_;
    int count_ = 0;
    int rejected_ = 0;
};

}  // namespace strikelab::tracker
