#include "strikelab/sim/controller.hpp"

#include <stdexcept>

#include "strikelab/segment.hpp"

namespace strikelab::sim {

using Phase = ControllerPhase;

std::string_view to_string(ControllerPhase phase) {
    switch (phase) {
        case Phase::idle: return "IDLE";
        case Phase::tracking: return "TRACKING";
        case Phase::conditioning: return "CONDITIONING";
        case Phase::executing: return "EXECUTING";
        case Phase::recovering: return "RECOVERING";
    }
    return "?";
}

bool transition_allowed(ControllerPhase from, ControllerPhase to) {
    if (from == to) return true;
    switch (from) {
        case Phase::idle: return to == Phase::tracking;
        case Phase::tracking: return to == Phase::conditioning;
        case Phase::conditioning: return to == Phase::executing || to == Phase::idle;
        case Phase::executing: return to == Phase::recovering;
        case Phase::recovering: return to == Phase::idle;
    }
    return false;
}

std::optional<double> primitive_hit_phase(const promp::PrimitiveParams& p, const kinematics::KinematicChain& chain,
                                          const HitPlane& plane, int n_samples) {
    const promp::Trajectory mean = promp::mean_trajectory(p, n_samples);
    RowMatrix full(mean.samples(), mean.dof() + 1);
    full.col(0).setZero();
    full.rightCols(mean.dof()) = mean.positions;
    const auto rec = segment::Recording::from_positions(mean.timestamps, full);
    return segment::hit_phase(rec, {0, rec.samples() - 1}, chain, plane);
}

ControllerContext ControllerContext::make(const promp::PrimitiveParams& primitive, const Scenario& scenario) {
    if (primitive.basis.n_dof != scenario.chain.arm_dof())
        throw std::invalid_argument("primitive DoF does not match the arm of the chain");
    ControllerContext ctx;
    ctx.primitive = primitive;
    ctx.chain = scenario.chain;
    ctx.limits = scenario.limits;
    ctx.plane = scenario.plane;
    ctx.flight = scenario.flight_model();
    ctx.config = scenario.controller;
    const auto z = primitive_hit_phase(primitive, scenario.chain, scenario.plane);
    if (!z) throw std::invalid_argument("primitive mean never crosses the hit plane");
    ctx.z_hit = *z;
    ctx.q_seed = primitive.mean_at(ctx.z_hit);
    ctx.home = primitive.mean_at(0.0);
    return ctx;
}

namespace {

/// Re-plans against the latest crossing. Returns false when the crossing is gone.
bool plan(ControllerState& s, const tracker::BallEstimate& est, const ControllerContext& ctx) {
    const auto crossing = tracker::predict_crossing(est, ctx.plane, ctx.flight, ctx.config.horizon);
    if (!crossing) return false;
    s.t_hit = crossing->stamp;
    s.x_hit = crossing->position;
    s.ik = kinematics::clipped_ik(ctx.chain, s.x_hit, ctx.q_seed, ctx.limits, ctx.config.ik);
    if (!s.ik.converged) ++s.ik_failures;
    const int dof = ctx.primitive.basis.n_dof;
    const Eigen::MatrixXd noise = ctx.config.condition_noise * Eigen::MatrixXd::Identity(dof, dof);
    s.conditioned = promp::condition(ctx.primitive, ctx.z_hit, ctx.q_seed + s.ik.net_dq, noise);
    s.rail_command = s.ik.net_dr;
    return true;
}

void enter(ControllerState& s, Phase next, double now) {
    if (!transition_allowed(s.phase, next)) throw std::logic_error("illegal controller transition");
    s.phase = next;
    s.entered = now;
}

}  // namespace

StepResult step_controller(const ControllerState& state, const std::optional<tracker::BallEstimate>& estimate,
                           int observation_count, double now, const ControllerContext& ctx) {
    StepResult out{state, {}};
    ControllerState& s = out.state;
    if (s.arm_command.size() == 0) s.arm_command = ctx.home;
    const double previous_rail = s.rail_command;
    const double duration = ctx.primitive.basis.phase_duration;

    if (s.phase == Phase::idle && !s.finished && estimate) enter(s, Phase::tracking, now);

    if (s.phase == Phase::tracking && estimate && observation_count >= ctx.config.min_observations) {
        const auto crossing = tracker::predict_crossing(*estimate, ctx.plane, ctx.flight, ctx.config.horizon);
        if (crossing && crossing->stamp - now > ctx.config.min_lead) enter(s, Phase::conditioning, now);
    }

    if (s.phase == Phase::conditioning) {
        if (!estimate || !plan(s, *estimate, ctx)) {
            enter(s, Phase::idle, now);
            s.finished = true;
            s.aborted = true;
            s.conditioned.reset();
            s.rail_command = previous_rail;
        } else {
            s.arm_command = s.conditioned->mean_at(0.0);
            if (now >= s.t_hit - ctx.z_hit * duration) {
                enter(s, Phase::executing, now);
                s.swung = true;
                // Back-computed so phase z_hit lands on t_hit even when the
                // prediction moved later than the previous tick expected.
                s.stroke_start = s.t_hit - ctx.z_hit * duration;
                s.t_hit_at_start = s.t_hit;
            }
        }
    }

    if (s.phase == Phase::executing) {
        const double z = (now - s.stroke_start) / duration;
        if (z >= 1.0) {
            s.arm_command = s.conditioned->mean_at(1.0);
            enter(s, Phase::recovering, now);
        } else {
            s.arm_command = s.conditioned->mean_at(z);
        }
    } else if (s.phase == Phase::recovering) {
        if (now - s.entered >= ctx.config.recovery_time) {
            enter(s, Phase::idle, now);
            s.finished = true;
        }
    }

    out.commands.rail_target = s.rail_command;
    out.commands.rail_increment = s.rail_command - previous_rail;
    out.commands.arm_target = s.arm_command;
    return out;
}

}  // namespace strikelab::sim
