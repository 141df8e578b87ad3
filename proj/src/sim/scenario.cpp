#include "strikelab/sim/scenario.hpp"

#include <cmath>

namespace strikelab::sim {

namespace {

void check(bool ok, const char* path, const char* message) {
    if (!ok) throw ConfigError(path, message);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

tracker::FlightModel Scenario::flight_model() const {
    tracker::FlightModel m = flight;
    m.drag = launch.drag;
    return m;
}

void Scenario::validate() const {
    try {
        limits.validate(chain.size());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("limits", e.what());
    }
    check(std::abs(plane.normal.norm() - 1.0) <= 1e-9, "plane.normal", "must be a unit vector");
    check((launch.p0_std.array() >= 0.0).all(), "launch.p0_std", "must be >= 0");
    check((launch.v0_std.array() >= 0.0).all(), "launch.v0_std", "must be >= 0");
    check(launch.drag >= 0.0, "launch.drag", "must be >= 0");
    check(launch.interval > 0.0, "launch.interval", "must be > 0");
    check(court.net_distance > 0.0, "court.net_distance", "must be > 0");
    check(court.net_height > 0.0, "court.net_height", "must be > 0");
    check(court.net_half_width > 0.0, "court.net_half_width", "must be > 0");
    check(court.pillar_band >= 0.0, "court.pillar_band", "must be >= 0");
    check(cameras.sources >= 1, "cameras.sources", "must be >= 1");
    check(cameras.rate > 0.0, "cameras.rate", "must be > 0");
    check(cameras.noise_std > 0.0, "cameras.noise_std", "must be > 0");
    check(cameras.latency >= 0.0, "cameras.latency", "must be >= 0");
    check(cameras.jitter >= 0.0, "cameras.jitter", "must be >= 0");
    check(controller.tick_rate > 0.0, "controller.tick_rate", "must be > 0");
    check(controller.min_lead >= 0.0, "controller.min_lead", "must be >= 0");
    check(controller.min_observations >= 1, "controller.min_observations", "must be >= 1");
    check(controller.horizon > 0.0, "controller.horizon", "must be > 0");
    check(controller.recovery_time >= 0.0, "controller.recovery_time", "must be >= 0");
    check(controller.condition_noise > 0.0, "controller.condition_noise", "must be > 0");
    check(controller.ik.max_iter >= 1, "controller.ik.max_iter", "must be >= 1");
    check(controller.ik.tol > 0.0, "controller.ik.tol", "must be > 0");
    check(controller.ik.damping >= 0.0, "controller.ik.damping", "must be >= 0");
    check(controller.rail_speed > 0.0, "controller.rail_speed", "must be > 0");
    check(execution.lag_tau >= 0.0, "execution.lag_tau", "must be >= 0");
    check(execution.joint_noise_std >= 0.0, "execution.joint_noise_std", "must be >= 0");
    check(racket.radius >= 0.0, "racket.radius", "must be >= 0");
    check(racket.restitution >= 0.0 && racket.restitution <= 1.0, "racket.restitution", "must be in [0, 1]");
    check(racket.close_miss >= 0.0, "racket.close_miss", "must be >= 0");
    check(flight.q_position >= 0.0, "flight.q_position", "must be >= 0");
    check(flight.q_velocity >= 0.0, "flight.q_velocity", "must be >= 0");
    check(flight.max_substep > 0.0, "flight.max_substep", "must be > 0");
    check(segmentation.v_off > 0.0 && segmentation.v_on >= segmentation.v_off, "segmentation.v_on",
          "need v_on >= v_off > 0");
    check(segmentation.min_hold >= 1, "segmentation.min_hold", "must be >= 1");
    check(segmentation.window >= 1 && segmentation.window % 2 == 1, "segmentation.window", "must be odd and >= 1");
    check(episode_duration > 0.0, "episode_duration", "must be > 0");
    check(phase_samples >= 2, "phase_samples", "must be >= 2");
}

}  // namespace strikelab::sim
