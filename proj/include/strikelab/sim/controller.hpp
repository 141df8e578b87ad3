#pragma once

// Stroke controller state machine:
//
//   IDLE → TRACKING           first ball estimate
//   TRACKING → CONDITIONING   crossing predicted with t_hit - now > min_lead
//   CONDITIONING → EXECUTING  now >= t_hit - z_hit · phase_duration
//   CONDITIONING → IDLE       predicted crossing lost (abort, no swing)
//   EXECUTING → RECOVERING    stroke phase reaches 1
//   RECOVERING → IDLE         after recovery_time
//
// While CONDITIONING, every tick re-predicts the crossing, runs clipped IK
// in the rail's home frame, commands the rail to net_dr and re-conditions the
// primitive on q_seed + net_dq at the hit phase. EXECUTING replays the
// conditioned mean open loop.

#include <optional>
#include <string_view>

#include "strikelab/kinematics.hpp"
#include "strikelab/promp.hpp"
#include "strikelab/sim/scenario.hpp"
#include "strikelab/tracker.hpp"

namespace strikelab::sim {

enum class ControllerPhase { idle, tracking, conditioning, executing, recovering };

std::string_view to_string(ControllerPhase phase);
bool transition_allowed(ControllerPhase from, ControllerPhase to);

/// Phase at which the primitive's mean racket path first crosses the plane
/// with the rail at home, or nullopt.
std::optional<double> primitive_hit_phase(const promp::PrimitiveParams& p, const kinematics::KinematicChain& chain,
                                          const HitPlane& plane, int n_samples = 400);

/// Everything the controller needs besides its state; built once per episode.
struct ControllerContext {
    promp::PrimitiveParams primitive;
    kinematics::KinematicChain chain;
    kinematics::Limits limits;
    HitPlane plane;
    tracker::FlightModel flight;
    ControllerConfig config;
    double z_hit = 0.0;
    Eigen::VectorXd q_seed;  // mean arm configuration at z_hit
    Eigen::VectorXd home;    // mean arm configuration at phase 0

    /// Throws std::invalid_argument if the primitive never crosses the plane
    /// or its DoF does not match the arm.
    static ControllerContext make(const promp::PrimitiveParams& primitive, const Scenario& scenario);
};

struct ControllerState {
    ControllerPhase phase = ControllerPhase::idle;
    double entered = 0.0;
    /// Set once a swing has finished or been aborted; the controller then idles.
    bool finished = false;
    bool aborted = false;
    bool swung = false;
    std::optional<promp::PrimitiveParams> conditioned;
    double t_hit = 0.0;
    Eigen::Vector3d x_hit = Eigen::Vector3d::Zero();
    double stroke_start = 0.0;
    double t_hit_at_start = 0.0;
    kinematics::IkResult ik;
    int ik_failures = 0;
    double rail_command = 0.0;
    Eigen::VectorXd arm_command;
};

struct Commands {
    double rail_target = 0.0;
    /// rail_target minus the previous rail command.
    double rail_increment = 0.0;
    Eigen::VectorXd arm_target;
};

struct StepResult {
    ControllerState state;
    Commands commands;
};

/// Pure transition function. `estimate` is the tracker estimate predicted to
/// `now` (nullopt before the first observation).
StepResult step_controller(const ControllerState& state, const std::optional<tracker::BallEstimate>& estimate,
                           int observation_count, double now, const ControllerContext& ctx);

}  // namespace strikelab::sim
