#pragma once

// Scenario configuration for the striking simulator. All geometry is in the
// robot's home frame: x toward the net, y along the rail, z up.

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "strikelab/geometry.hpp"
#include "strikelab/kinematics.hpp"
#include "strikelab/segment.hpp"
#include "strikelab/tracker.hpp"

namespace strikelab::sim {

/// Validation failure carrying the offending field path, e.g. "launch.v0_std".
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string path, const std::string& message)
        : std::invalid_argument(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct LaunchSpec {
    Eigen::Vector3d p0{8.0, -0.7, 1.0};
    Eigen::Vector3d v0{-7.4, 0.0, 4.905};
    Eigen::Vector3d p0_std = Eigen::Vector3d::Zero();
    Eigen::Vector3d v0_std = Eigen::Vector3d::Zero();
    double drag = 0.0;
    /// Seconds between consecutive launches (bookkeeping only).
    double interval = 4.0;
};

struct CourtConfig {
    double net_distance = 4.0;
    double net_height = 1.07;
    double net_half_width = 1.5;
    double pillar_band = 0.5;
};

struct CameraConfig {
    int sources = 2;
    /// Frames per second per source; sources are phase-staggered.
    double rate = 60.0;
    double noise_std = 0.005;
    double latency = 0.0;
    /// Uniform extra delivery delay in [0, jitter].
    double jitter = 0.0;
};

struct ControllerConfig {
    double tick_rate = 200.0;
    /// Required lead time t_hit - now before conditioning starts.
    double min_lead = 0.1;
    int min_observations = 6;
    double horizon = 3.0;
    double recovery_time = 0.3;
    /// Conditioning observation noise, scaled identity.
    double condition_noise = 1e-8;
    kinematics::IkOptions ik;
    /// Rail reference speed limit, m/s.
    double rail_speed = 1.5;
};

struct ExecutionConfig {
    /// First-order tracking lag time constant, seconds (0 disables).
    double lag_tau = 0.03;
    double joint_noise_std = 0.0;
};

struct RacketConfig {
    double radius = 0.12;
    double restitution = 0.8;
    /// A miss within this distance counts as close.
    double close_miss = 0.05;
};

struct Scenario {
    kinematics::KinematicChain chain = kinematics::KinematicChain::default_chain();
    kinematics::Limits limits = kinematics::Limits::default_limits(7);
    HitPlane plane{Eigen::Vector3d(0.6, 0.0, 0.0), Eigen::Vector3d(-1.0, 0.0, 0.0)};
    LaunchSpec launch;
    CourtConfig court;
    CameraConfig cameras;
    ControllerConfig controller;
    ExecutionConfig execution;
    RacketConfig racket;
    /// Gravity and process noise; drag comes from `launch`.
    tracker::FlightModel flight;
    segment::SegmentOptions segmentation;
    double episode_duration = 2.2;
    int phase_samples = 100;

    /// Flight model with the launch drag applied.
    tracker::FlightModel flight_model() const;
    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// splitmix64 over (seed, stream, index); used for per-episode RNG streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace strikelab::sim
