#include "strikelab/sim/episode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace strikelab::sim {

using tracker::Vector6d;

double reward_oracle(const RewardGeometry& g, double close_miss) {
    if (!g.hit) return g.min_distance <= close_miss ? 0.25 : 0.0;
    if (g.above_net) return 2.0;
    if (g.pillar_zone) return 1.0;
    return 0.5;
}

RewardGeometry EpisodeOutcome::geometry() const {
    return {hit, min_racket_ball_distance, return_crossed_net, return_hit_pillar_zone};
}

Vector6d sample_launch(const LaunchSpec& launch, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector6d x;
    for (int i = 0; i < 3; ++i) x[i] = launch.p0[i] + launch.p0_std[i] * normal(rng);
    for (int i = 0; i < 3; ++i) x[3 + i] = launch.v0[i] + launch.v0_std[i] * normal(rng);
    return x;
}

namespace {

struct PendingObservation {
    double arrival;
    tracker::Observation obs;
};

struct ReturnFlight {
    bool above_net = false;
    bool pillar = false;
    Eigen::Vector3d crossing = Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN());
};

ReturnFlight classify_return(Vector6d x, const CourtConfig& court, const tracker::FlightModel& flight) {
    ReturnFlight out;
    constexpr double h = 1e-3;
    for (double t = 0.0; t < 3.0; t += h) {
        const Vector6d next = tracker::propagate_state(x, h, flight);
        if (next[2] < 0.0) return out;
        if (x[0] < court.net_distance && next[0] >= court.net_distance) {
            const double a = (court.net_distance - x[0]) / (next[0] - x[0]);
            out.crossing = x.head<3>() + a * (next.head<3>() - x.head<3>());
            const double y = std::abs(out.crossing.y());
            const double z = out.crossing.z();
            out.above_net = y <= court.net_half_width && z > court.net_height;
            out.pillar = y > court.net_half_width && y <= court.net_half_width + court.pillar_band && z >= 0.0;
            return out;
        }
        x = next;
    }
    return out;
}

/// Earliest s in [0, 1] with |d0 + s (d1 - d0)| <= radius, if any.
std::optional<double> first_contact(const Eigen::Vector3d& d0, const Eigen::Vector3d& d1, double radius) {
    const Eigen::Vector3d dd = d1 - d0;
    const double a = dd.squaredNorm();
    const double b = 2.0 * d0.dot(dd);
    const double c = d0.squaredNorm() - radius * radius;
    if (c <= 0.0) return 0.0;
    if (a == 0.0) return std::nullopt;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    const double s = (-b - std::sqrt(disc)) / (2.0 * a);
    if (s >= 0.0 && s <= 1.0) return s;
    return std::nullopt;
}

double closest_distance(const Eigen::Vector3d& d0, const Eigen::Vector3d& d1) {
    const Eigen::Vector3d dd = d1 - d0;
    const double a = dd.squaredNorm();
    const double s = a > 0.0 ? std::clamp(-d0.dot(dd) / a, 0.0, 1.0) : 0.0;
    return (d0 + s * dd).norm();
}

double violation(double v, double lo, double hi) { return std::max({0.0, lo - v, v - hi}); }

}  // namespace

EpisodeOutcome run_episode(const promp::PrimitiveParams& primitive, const Scenario& scenario,
                           const LaunchSpec& launch, std::uint64_t seed) {
    return run_episode(ControllerContext::make(primitive, scenario), scenario, launch, seed);
}

EpisodeOutcome run_episode(const ControllerContext& ctx, const Scenario& scenario, const LaunchSpec& launch,
                           std::uint64_t seed) {
    scenario.validate();
    const double dt = 1.0 / scenario.controller.tick_rate;
    const int ticks = static_cast<int>(std::floor(scenario.episode_duration / dt)) + 1;
    const int n_arm = ctx.chain.arm_dof();
    const tracker::FlightModel flight = [&] {
        tracker::FlightModel m = scenario.flight;
        m.drag = launch.drag;
        return m;
    }();

    std::mt19937_64 camera_rng(derive_seed(seed, 2, 0));
    std::mt19937_64 joint_rng(derive_seed(seed, 3, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const auto& cams = scenario.cameras;
    std::vector<double> next_frame(cams.sources);
    for (int s = 0; s < cams.sources; ++s) next_frame[s] = s / (cams.sources * cams.rate);
    std::vector<PendingObservation> pending;

    tracker::TrackerOptions topts;
    topts.model = flight;
    tracker::BallTracker tracker(topts);

    Vector6d ball = sample_launch(launch, derive_seed(seed, 1, 0));
    double rail = 0.0;
    double rail_ref = 0.0;
    Eigen::VectorXd arm = ctx.home;
    const double alpha = scenario.execution.lag_tau > 0.0 ? 1.0 - std::exp(-dt / scenario.execution.lag_tau) : 1.0;

    ControllerState state;
    EpisodeOutcome out;
    out.z_hit = ctx.z_hit;
    out.phase_duration = ctx.primitive.basis.phase_duration;
    out.min_racket_ball_distance = std::numeric_limits<double>::infinity();
    Eigen::VectorXd stamps(ticks);
    RowMatrix joints(ticks, n_arm + 1);
    bool contact = false;

    const auto& lim = ctx.limits;
    for (int i = 0; i < ticks; ++i) {
        const double t = i * dt;
        const Eigen::Vector3d ee = ctx.chain.forward(rail, arm);

        if (!contact) {
            for (int s = 0; s < cams.sources; ++s) {
                while (next_frame[s] < t + dt) {
                    const double frame = next_frame[s];
                    const Vector6d at = tracker::propagate_state(ball, frame - t, flight);
                    tracker::Observation obs;
                    for (int k = 0; k < 3; ++k) obs.position[k] = at[k] + cams.noise_std * normal(camera_rng);
                    obs.noise_std = cams.noise_std;
                    obs.source_id = s;
                    obs.stamp = frame;
                    const double delay = cams.latency + cams.jitter * uniform(camera_rng);
                    pending.push_back({frame + delay, obs});
                    next_frame[s] += 1.0 / cams.rate;
                }
            }
        }
        std::stable_sort(pending.begin(), pending.end(),
                         [](const PendingObservation& a, const PendingObservation& b) { return a.arrival < b.arrival; });
        auto ready = pending.begin();
        while (ready != pending.end() && ready->arrival <= t) {
            tracker.submit(ready->obs);
            ++ready;
        }
        pending.erase(pending.begin(), ready);

        const StepResult step = step_controller(state, tracker.estimate_at(t), tracker.observation_count(), t, ctx);
        state = step.state;

        double worst = violation(step.commands.rail_target, lim.lower[0], lim.upper[0]);
        if (state.phase == ControllerPhase::conditioning || state.phase == ControllerPhase::executing)
            for (int j = 0; j < n_arm; ++j)
                worst = std::max(worst, violation(state.ik.net_dq[j], lim.lower[j + 1], lim.upper[j + 1]));
        out.limit_violation = std::max(out.limit_violation, worst);

        stamps[i] = t;
        joints(i, 0) = rail;
        joints.row(i).tail(n_arm) = arm.transpose();
        out.ball_path.push_back({t, ball.head<3>(), ball.tail<3>()});
        out.ee_path.push_back({t, ee, Eigen::Vector3d::Zero()});
        out.phases.push_back(state.phase);

        // Robot follows commands through a rate-limited rail and first-order lag.
        const double max_move = scenario.controller.rail_speed * dt;
        rail_ref += std::clamp(step.commands.rail_target - rail_ref, -max_move, max_move);
        rail += alpha * (rail_ref - rail);
        arm += alpha * (step.commands.arm_target - arm);
        if (scenario.execution.joint_noise_std > 0.0)
            for (int j = 0; j < n_arm; ++j) arm[j] += scenario.execution.joint_noise_std * normal(joint_rng);
        const Eigen::Vector3d ee_next = ctx.chain.forward(rail, arm);
        out.ee_path.back().velocity = (ee_next - ee) / dt;

        const Vector6d ball_next = tracker::propagate_state(ball, dt, flight);
        if (!contact) {
            const Eigen::Vector3d d0 = ball.head<3>() - ee;
            const Eigen::Vector3d d1 = ball_next.head<3>() - ee_next;
            out.min_racket_ball_distance = std::min(out.min_racket_ball_distance, closest_distance(d0, d1));
            if (const auto s = first_contact(d0, d1, scenario.racket.radius)) {
                contact = true;
                out.hit = true;
                out.contact_time = t + *s * dt;
                Vector6d at = tracker::propagate_state(ball, *s * dt, flight);
                const Eigen::Vector3d v_racket = (ee_next - ee) / dt;
                const Eigen::Vector3d v_ball = at.tail<3>();
                const Eigen::Vector3d rel = v_ball - v_racket;
                Eigen::Vector3d n = v_racket.norm() > 1e-6 ? v_racket.normalized() : Eigen::Vector3d(-rel.normalized());
                const double approach = rel.dot(n);
                const Eigen::Vector3d rel_out =
                    approach < 0.0 ? Eigen::Vector3d(rel - (1.0 + scenario.racket.restitution) * approach * n) : rel;
                at.tail<3>() = v_racket + rel_out;
                const ReturnFlight ret = classify_return(at, scenario.court, flight);
                out.return_crossed_net = ret.above_net;
                out.return_hit_pillar_zone = ret.pillar;
                out.net_crossing = ret.crossing;
                ball = tracker::propagate_state(at, (1.0 - *s) * dt, flight);
                continue;
            }
        }
        ball = ball_next;
    }

    std::vector<std::string> names{"rail"};
    for (int j = 1; j <= n_arm; ++j) names.push_back("j" + std::to_string(j));
    out.executed = segment::Recording::from_positions(stamps, joints, names);
    out.swung = state.swung;
    out.aborted = state.aborted;
    out.stroke_start = state.stroke_start;
    out.t_hit_predicted = state.t_hit_at_start;
    out.ik_failures = state.ik_failures;
    out.rejected_observations = tracker.rejected_count();
    out.reward = reward_oracle(out.geometry(), scenario.racket.close_miss);
    return out;
}

}  // namespace strikelab::sim
