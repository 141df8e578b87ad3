#include "strikelab/sim/demos.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "strikelab/sim/episode.hpp"

namespace strikelab::sim {

namespace {

/// Rest-to-velocity quintic: position/velocity/acceleration at both ends.
Eigen::VectorXd quintic(double s, double duration, const Eigen::VectorXd& p0, const Eigen::VectorXd& v0,
                        const Eigen::VectorXd& p1, const Eigen::VectorXd& v1) {
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    const double h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    const double h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    const double h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    return h0 * p0 + h1 * duration * v0 + h4 * duration * v1 + h5 * p1;
}

struct HitPose {
    Eigen::VectorXd q;
    Eigen::VectorXd qdot;
    double t_hit = 0.0;
};

HitPose hit_pose(const Scenario& sc, const tracker::Vector6d& ball, const Eigen::VectorXd& seed,
                 const Eigen::Vector3d& racket_velocity) {
    tracker::BallEstimate est;
    est.mean = ball;
    const auto crossing = tracker::predict_crossing(est, sc.plane, sc.flight_model(), 10.0);
    if (!crossing) throw std::runtime_error("demo ball never crosses the hit plane");

    const int n = sc.chain.size();
    kinematics::Limits arm_only;
    arm_only.lower = Eigen::VectorXd::Constant(n, -M_PI);
    arm_only.upper = Eigen::VectorXd::Constant(n, M_PI);
    arm_only.lower[0] = arm_only.upper[0] = 0.0;
    kinematics::IkOptions opts;
    opts.tol = 1e-9;
    opts.max_iter = 500;
    const auto ik = kinematics::clipped_ik(sc.chain, crossing->position, seed, arm_only, opts);
    if (!ik.converged) throw std::runtime_error("demo hit point is out of reach");

    HitPose pose;
    pose.q = seed + ik.net_dq;
    pose.t_hit = crossing->stamp;
    const Eigen::MatrixXd jac = sc.chain.jacobian(0.0, pose.q).rightCols(n - 1);
    const Eigen::Matrix3d jjt = jac * jac.transpose() + 1e-8 * Eigen::Matrix3d::Identity();
    pose.qdot = jac.transpose() * jjt.ldlt().solve(racket_velocity);
    return pose;
}

}  // namespace

Eigen::VectorXd nominal_arm_pose() {
    Eigen::VectorXd q(7);
    q << -0.92, 2.39, 0.03, -0.97, 0.01, -0.95, 0.0;
    return q;
}

std::vector<segment::Recording> scripted_demonstrations(const Scenario& scenario, const DemoOptions& options,
                                                        std::uint64_t seed) {
    scenario.validate();
    if (options.count < 1) throw std::invalid_argument("demonstrations: count must be >= 1");
    if (scenario.chain.arm_dof() != nominal_arm_pose().size())
        throw std::invalid_argument("demonstrations: scripted stroke expects a 7-DoF arm");

    LaunchSpec nominal_launch = scenario.launch;
    nominal_launch.p0_std.setZero();
    nominal_launch.v0_std.setZero();
    const HitPose nominal =
        hit_pose(scenario, sample_launch(nominal_launch, 0), nominal_arm_pose(), options.racket_velocity);
    const Eigen::VectorXd q_back = nominal.q - 0.5 * options.approach_time * nominal.qdot;
    const Eigen::VectorXd q_follow = nominal.q + 0.5 * options.follow_time * nominal.qdot;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(q_back.size());

    const LaunchSpec& launch = options.jitter ? scenario.launch : nominal_launch;
    std::vector<std::string> names{"rail"};
    for (int j = 1; j <= q_back.size(); ++j) names.push_back("j" + std::to_string(j));

    std::vector<segment::Recording> out;
    for (int i = 0; i < options.count; ++i) {
        const auto ball = sample_launch(launch, derive_seed(seed, 10, static_cast<std::uint64_t>(i)));
        const HitPose pose = hit_pose(scenario, ball, nominal.q, options.racket_velocity);
        const double t_start = pose.t_hit - options.approach_time - options.rest_before;
        const double span =
            options.rest_before + options.approach_time + options.follow_time + options.rest_after;
        const int samples = static_cast<int>(std::floor(span * options.rate)) + 1;

        Eigen::VectorXd stamps(samples);
        RowMatrix joints = RowMatrix::Zero(samples, q_back.size() + 1);
        for (int k = 0; k < samples; ++k) {
            const double t = t_start + k / options.rate;
            stamps[k] = t;
            const double rel = t - pose.t_hit;
            Eigen::VectorXd q;
            if (rel <= -options.approach_time)
                q = q_back;
            else if (rel <= 0.0)
                q = quintic(1.0 + rel / options.approach_time, options.approach_time, q_back, zero, pose.q, pose.qdot);
            else if (rel < options.follow_time)
                q = quintic(rel / options.follow_time, options.follow_time, pose.q, pose.qdot, q_follow, zero);
            else
                q = q_follow;
            joints.row(k).tail(q.size()) = q.transpose();
        }
        out.push_back(segment::Recording::from_positions(stamps, joints, names));
    }
    return out;
}

std::optional<promp::Trajectory> extract_stroke(const segment::Recording& rec, const segment::SegmentOptions& options,
                                                int phase_samples) {
    const segment::Recording arm = rec.columns(1, rec.dof() - 1);
    const auto seg = segment::segment_stroke(arm, options);
    if (!seg) return std::nullopt;
    return promp::resample_to_phase_grid(arm.slice(seg->start, seg->end), phase_samples);
}

TrainResult train_primitive(const std::vector<segment::Recording>& recordings, const TrainOptions& options) {
    if (recordings.size() < 2) throw std::invalid_argument("training needs at least 2 recordings");
    std::vector<promp::Trajectory> strokes;
    double total = 0.0;
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        if (recordings[i].dof() != recordings.front().dof())
            throw std::invalid_argument("recording " + std::to_string(i) + ": joint count differs from the first");
        auto stroke = extract_stroke(recordings[i], options.segmentation, options.fit.n_phase);
        if (!stroke) throw std::invalid_argument("recording " + std::to_string(i) + ": no stroke found");
        total += stroke->duration();
        strokes.push_back(std::move(*stroke));
    }
    const int dof = strokes.front().dof();
    const auto basis = promp::BasisConfig::uniform(dof, options.n_basis, total / static_cast<double>(strokes.size()));

    TrainResult res;
    res.params = promp::fit_from_demos(strokes, basis, options.fit);
    const promp::Trajectory mean = promp::mean_trajectory(res.params, options.fit.n_phase);
    for (const auto& s : strokes) {
        const double mse = (Eigen::MatrixXd(s.positions) - Eigen::MatrixXd(mean.positions)).squaredNorm() /
                           static_cast<double>(s.positions.size());
        res.rmse.push_back(std::sqrt(mse));
    }
    return res;
}

}  // namespace strikelab::sim
