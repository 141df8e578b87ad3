#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "strikelab/segment.hpp"
#include "test_support.hpp"

using namespace strikelab;
using namespace strikelab::segment;

namespace {

Recording from_velocity_profile(const Eigen::MatrixXd& qdot, double rate = 100.0) {
    // Integrate so that central differences reproduce qdot closely enough for
    // envelope shape tests; velocities are then overwritten with the exact profile.
    const Eigen::Index n = qdot.rows();
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, (n - 1) / rate);
    RowMatrix q = RowMatrix::Zero(n, qdot.cols());
    for (Eigen::Index i = 1; i < n; ++i) q.row(i) = q.row(i - 1) + qdot.row(i) / rate;
    Recording rec = Recording::from_positions(t, q);
    rec.velocities = qdot;
    return rec;
}

/// Chain whose end effector x coordinate equals the rail position.
kinematics::KinematicChain rail_on_x() {
    std::vector<kinematics::Joint> joints(2);
    joints[0].kind = kinematics::JointKind::prismatic;
    joints[0].axis = Eigen::Vector3d::UnitX();
    joints[1].axis = Eigen::Vector3d::UnitX();
    return kinematics::KinematicChain(joints);
}

/// Rail sweeps linearly from x0 to x1 across samples [10, 60] of a 71-sample
/// recording, resting before and after.
Recording rail_sweep(double x0, double x1) {
    const int n = 71;
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, 0.7);
    RowMatrix q = RowMatrix::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
        const double s = std::clamp((i - 10) / 50.0, 0.0, 1.0);
        q(i, 0) = x0 + s * (x1 - x0);
    }
    return Recording::from_positions(t, q);
}

}  // namespace

TEST(Recording, FiniteDifferencesAreCentralInside) {
    Eigen::VectorXd t(4);
    t << 0.0, 0.1, 0.3, 0.4;
    RowMatrix q(4, 1);
    q << 0.0, 1.0, 2.0, 4.0;
    const auto v = finite_difference_velocities(t, q);
    EXPECT_NEAR(v(0, 0), 10.0, 1e-12);
    EXPECT_NEAR(v(1, 0), 2.0 / 0.3, 1e-12);
    EXPECT_NEAR(v(2, 0), 3.0 / 0.3, 1e-12);
    EXPECT_NEAR(v(3, 0), 20.0, 1e-12);
}

TEST(Recording, ValidationRejectsBadTimestamps) {
    auto rec = fixtures::min_jerk_recording(5, 10, 5, Eigen::VectorXd::Ones(1));
    EXPECT_NO_THROW(rec.validate());
    rec.timestamps[3] = rec.timestamps[2];
    EXPECT_THROW(rec.validate(), std::invalid_argument);
    const auto tiny = Recording::from_positions(Eigen::Vector4d(0, 1, 2, 3), RowMatrix::Zero(4, 1));
    EXPECT_THROW(tiny.validate(), std::invalid_argument);
}

TEST(Envelope, ConstantPositionsGiveZeros) {
    const auto rec = Recording::from_positions(Eigen::VectorXd::LinSpaced(20, 0.0, 1.0), RowMatrix::Constant(20, 3, 0.7));
    EXPECT_EQ(velocity_envelope(rec, 5), Eigen::VectorXd::Zero(20));
}

TEST(Envelope, MatchesBruteForceOnStaggeredJoints) {
    const int n = 60;
    Eigen::MatrixXd qdot(n, 2);
    for (int i = 0; i < n; ++i) {
        qdot(i, 0) = std::sin(0.2 * i) * std::exp(-0.01 * (i - 20) * (i - 20));
        qdot(i, 1) = -1.5 * std::exp(-0.02 * (i - 40) * (i - 40));
    }
    const auto rec = from_velocity_profile(qdot);
    for (int window : {1, 3, 5, 9}) {
        const Eigen::VectorXd env = velocity_envelope(rec, window);
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            int count = 0;
            for (int k = i - window / 2; k <= i + window / 2; ++k) {
                if (k < 0 || k >= n) continue;
                sum += std::max(std::abs(qdot(k, 0)), std::abs(qdot(k, 1)));
                ++count;
            }
            EXPECT_NEAR(env[i], sum / count, 1e-14) << "window " << window << " i " << i;
        }
    }
}

TEST(Envelope, RejectsEvenWindow) {
    const auto rec = fixtures::min_jerk_recording(5, 10, 5, Eigen::VectorXd::Ones(1));
    EXPECT_THROW(velocity_envelope(rec, 4), std::invalid_argument);
    EXPECT_THROW(velocity_envelope(rec, 0), std::invalid_argument);
}

TEST(SegmentStroke, MinJerkBoundariesRecovered) {
    const auto rec = fixtures::min_jerk_recording(100, 100, 100, Eigen::Vector3d(1.5, -0.8, 0.3));
    const auto seg = segment_stroke(rec);
    ASSERT_TRUE(seg);
    EXPECT_LE(std::abs(seg->start - 100), 3);
    EXPECT_LE(std::abs(seg->end - 200), 3);
}

TEST(SegmentStroke, AllZeroMotionHasNoStroke) {
    const auto rec = Recording::from_positions(Eigen::VectorXd::LinSpaced(300, 0.0, 3.0), RowMatrix::Zero(300, 7));
    EXPECT_FALSE(segment_stroke(rec));
}

TEST(SegmentStroke, TwoBumpsReturnsTheFirst) {
    const int n = 400;
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, (n - 1) / 100.0);
    RowMatrix q(n, 1);
    auto shape = [](double s) {
        s = std::clamp(s, 0.0, 1.0);
        return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    };
    for (int i = 0; i < n; ++i) q(i, 0) = shape((i - 50) / 80.0) - shape((i - 250) / 80.0);
    const auto seg = segment_stroke(Recording::from_positions(t, q));
    ASSERT_TRUE(seg);
    EXPECT_LE(std::abs(seg->start - 50), 3);
    EXPECT_LE(std::abs(seg->end - 130), 3);
}

TEST(SegmentStroke, SegmentContainsOnsetSampleAndIsOrdered) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> rest(20, 120), move(60, 150);
    std::uniform_real_distribution<double> amp(0.6, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto rec = fixtures::min_jerk_recording(rest(rng), move(rng), rest(rng), Eigen::Vector2d(amp(rng), -amp(rng)));
        const auto seg = segment_stroke(rec);
        ASSERT_TRUE(seg);
        EXPECT_LT(seg->start, seg->end);
        const Eigen::VectorXd env = velocity_envelope(rec, 5);
        EXPECT_GE(env.segment(seg->start, seg->end - seg->start + 1).maxCoeff(), 0.5);
    }
}

TEST(SegmentStroke, InvariantToTimeShift) {
    const Eigen::Vector3d amp(1.2, 0.4, -0.9);
    const auto a = segment_stroke(fixtures::min_jerk_recording(73, 91, 55, amp, 100.0, 0.0));
    const auto b = segment_stroke(fixtures::min_jerk_recording(73, 91, 55, amp, 100.0, 1234.5));
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->start, b->start);
    EXPECT_EQ(a->end, b->end);
}

TEST(SegmentStroke, RejectsBadHysteresis) {
    const auto rec = fixtures::min_jerk_recording(10, 20, 10, Eigen::VectorXd::Ones(1));
    SegmentOptions opts;
    opts.v_on = 0.05;
    EXPECT_THROW(segment_stroke(rec, opts), std::invalid_argument);
    opts = {};
    opts.v_off = 0.0;
    EXPECT_THROW(segment_stroke(rec, opts), std::invalid_argument);
}

TEST(HitPhase, LinearSweepThroughPlaneAtMidpoint) {
    const auto rec = rail_sweep(-1.0, 1.0);
    const auto z = hit_phase(rec, {10, 60}, rail_on_x(), HitPlane{});
    ASSERT_TRUE(z);
    EXPECT_NEAR(*z, 0.5, 1e-12);
}

TEST(HitPhase, ConstructedCrossingAtSeventyPercent) {
    const auto rec = rail_sweep(-0.7, 0.3);
    const auto z = hit_phase(rec, {10, 60}, rail_on_x(), HitPlane{});
    ASSERT_TRUE(z);
    EXPECT_NEAR(*z, 0.70, 1e-9);
}

TEST(HitPhase, ApproachWithoutCrossing) {
    const auto rec = rail_sweep(-1.0, -0.1);
    EXPECT_FALSE(hit_phase(rec, {10, 60}, rail_on_x(), HitPlane{}));
}

TEST(HitPhase, RejectsMismatchedChain) {
    const auto rec = rail_sweep(-1.0, 1.0);
    EXPECT_THROW(hit_phase(rec, {10, 60}, kinematics::KinematicChain::default_chain(), HitPlane{}),
                 std::invalid_argument);
    EXPECT_THROW(hit_phase(rec, {60, 10}, rail_on_x(), HitPlane{}), std::invalid_argument);
}
