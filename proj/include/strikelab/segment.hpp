#pragma once

// Stroke extraction from raw joint-state recordings: a smoothed envelope of
// the fastest joint, hysteresis thresholds, and the hit-plane crossing phase.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "strikelab/geometry.hpp"
#include "strikelab/kinematics.hpp"
#include "strikelab/linalg.hpp"
#include "strikelab/promp.hpp"

namespace strikelab::segment {

struct Recording {
    Eigen::VectorXd timestamps;
    RowMatrix positions;   // T × D
    RowMatrix velocities;  // T × D
    std::vector<std::string> names;

    /// Finite-differences velocities (central inside, one-sided at the ends).
    static Recording from_positions(Eigen::VectorXd timestamps, RowMatrix positions,
                                    std::vector<std::string> names = {});

    int samples() const { return static_cast<int>(positions.rows()); }
    int dof() const { return static_cast<int>(positions.cols()); }
    /// Keeps columns [first, first + count).
    Recording columns(int first, int count) const;
    /// Rows [start, end] as a trajectory.
    promp::Trajectory slice(int start, int end) const;
    void validate() const;
};

RowMatrix finite_difference_velocities(const Eigen::VectorXd& timestamps, const RowMatrix& positions);

/// max_j |q̇_tj| followed by a centered moving average over `window` samples,
/// truncated at the edges.
Eigen::VectorXd velocity_envelope(const Recording& rec, int window);

struct SegmentOptions {
    double v_on = 0.5;
    double v_off = 0.1;
    int min_hold = 3;
    int window = 5;
    /// Envelope values at or below this are treated as rest when walking
    /// out to the surrounding local minima.
    double rest_level = 2e-3;
};

struct Segment {
    int start = 0;
    int end = 0;
};

/// First stroke in the recording, or nullopt when the envelope never holds
/// v_on for min_hold samples.
std::optional<Segment> segment_stroke(const Recording& rec, const SegmentOptions& options = {});

/// Phase in (0, 1) at which the end effector first crosses the plane inside
/// the segment, or nullopt. Column 0 of the recording is the rail.
std::optional<double> hit_phase(const Recording& rec, const Segment& seg,
                                const kinematics::KinematicChain& chain, const HitPlane& plane);

}  // namespace strikelab::segment
