#pragma once

#include <cstdint>
#include <vector>

#include "strikelab/promp.hpp"
#include "strikelab/segment.hpp"
#include "strikelab/sim/controller.hpp"
#include "strikelab/sim/scenario.hpp"

namespace strikelab::sim {

/// Inputs to the reward table.
struct RewardGeometry {
    bool hit = false;
    double min_distance = 0.0;
    bool above_net = false;
    bool pillar_zone = false;
};

/// 0 miss by a large margin, 0.25 miss within `close_miss`, 0.5 hit but not
/// good enough, 1 hit into a side-pillar zone, 2 hit above the net.
double reward_oracle(const RewardGeometry& g, double close_miss = 0.05);

struct PathSample {
    double t = 0.0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

struct EpisodeOutcome {
    bool hit = false;
    double min_racket_ball_distance = 0.0;
    bool return_crossed_net = false;
    bool return_hit_pillar_zone = false;
    /// Full joint-state log, rail first, at the tick rate.
    segment::Recording executed;
    double reward = 0.0;

    bool swung = false;
    bool aborted = false;
    double z_hit = 0.0;
    double phase_duration = 0.0;
    double stroke_start = 0.0;
    double t_hit_predicted = 0.0;
    double contact_time = 0.0;
    Eigen::Vector3d net_crossing = Eigen::Vector3d::Zero();
    int ik_failures = 0;
    int rejected_observations = 0;
    /// Largest excursion of any commanded offset outside the limits (0 when safe).
    double limit_violation = 0.0;
    std::vector<PathSample> ball_path;
    std::vector<PathSample> ee_path;
    std::vector<ControllerPhase> phases;

    RewardGeometry geometry() const;
};

/// One ball: flight, noisy cameras, tracker, controller, lagged execution,
/// contact, return classification and reward. Deterministic in `seed`.
EpisodeOutcome run_episode(const promp::PrimitiveParams& primitive, const Scenario& scenario,
                           const LaunchSpec& launch, std::uint64_t seed);

/// As above with a prebuilt controller context.
EpisodeOutcome run_episode(const ControllerContext& ctx, const Scenario& scenario, const LaunchSpec& launch,
                           std::uint64_t seed);

/// Samples a launch state (p0, v0) with the spec's Gaussian jitter.
tracker::Vector6d sample_launch(const LaunchSpec& launch, std::uint64_t seed);

}  // namespace strikelab::sim
