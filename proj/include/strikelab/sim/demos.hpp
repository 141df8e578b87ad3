#pragma once

// Scripted demonstrations: an engineered forehand that meets a launched ball
// on the hit plane. Each demo starts from a fixed backswing pose, reaches the
// ball's crossing point with a prescribed racket velocity, and settles into a
// fixed follow-through pose (quintic segments, rest-to-rest).

#include <cstdint>
#include <optional>
#include <vector>

#include "strikelab/promp.hpp"
#include "strikelab/segment.hpp"
#include "strikelab/sim/scenario.hpp"

namespace strikelab::sim {

struct DemoOptions {
    int count = 20;
    /// Seconds from backswing to hit, and from hit to follow-through.
    double approach_time = 0.6;
    double follow_time = 0.4;
    /// Racket velocity at impact, m/s.
    Eigen::Vector3d racket_velocity{3.0, 0.0, 1.3};
    double rest_before = 0.4;
    double rest_after = 0.4;
    double rate = 200.0;
    /// Apply the launch jitter of the scenario to each demo's ball; off gives
    /// identical noiseless demonstrations of the nominal launch.
    bool jitter = false;
};

/// Arm pose used as the IK seed for the nominal hit.
Eigen::VectorXd nominal_arm_pose();

/// Rest–stroke–rest recordings (rail column first, rail held at 0).
std::vector<segment::Recording> scripted_demonstrations(const Scenario& scenario, const DemoOptions& options,
                                                        std::uint64_t seed);

struct TrainOptions {
    int n_basis = 8;
    promp::FitOptions fit;
    segment::SegmentOptions segmentation;
};

struct TrainResult {
    promp::PrimitiveParams params;
    /// RMSE of the mean trajectory against each segmented demo, rad.
    std::vector<double> rmse;
};

/// Segments the arm columns of each recording and fits a primitive whose
/// phase duration is the mean segmented stroke length.
TrainResult train_primitive(const std::vector<segment::Recording>& recordings, const TrainOptions& options);

/// Segments the arm columns (1..D) of an executed recording and resamples the
/// stroke to `phase_samples` points; nullopt when no stroke is found.
std::optional<promp::Trajectory> extract_stroke(const segment::Recording& rec, const segment::SegmentOptions& options,
                                                int phase_samples);

}  // namespace strikelab::sim
