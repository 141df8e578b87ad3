#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "strikelab/linalg.hpp"
#include "strikelab/tracker.hpp"

using namespace strikelab;
using namespace strikelab::tracker;

namespace {

Vector6d state(const Eigen::Vector3d& p, const Eigen::Vector3d& v) {
    Vector6d x;
    x << p, v;
    return x;
}

/// Explicit Euler with a tiny step: an independent integrator for the drag model.
Vector6d euler(Vector6d x, double duration, const FlightModel& m, int steps) {
    const double h = duration / steps;
    for (int i = 0; i < steps; ++i) {
        const Eigen::Vector3d v = x.tail<3>();
        const Eigen::Vector3d a = m.gravity - m.drag * v.norm() * v;
        x.head<3>() += h * v;
        x.tail<3>() += h * a;
    }
    return x;
}

HitPlane plane_x(double x) {
    HitPlane p;
    p.point = Eigen::Vector3d(x, 0.0, 0.0);
    p.normal = Eigen::Vector3d::UnitX();
    return p;
}

}  // namespace

TEST(Propagate, DragFreeMatchesClosedForm) {
    FlightModel m;
    const Eigen::Vector3d p0(0.3, -1.0, 1.2), v0(4.0, 1.5, 3.0);
    const Vector6d x = propagate_state(state(p0, v0), 0.5, m);
    const Eigen::Vector3d p = p0 + v0 * 0.5 + 0.5 * m.gravity * 0.25;
    EXPECT_LE((x.head<3>() - p).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((x.tail<3>() - (v0 + m.gravity * 0.5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Propagate, DragMatchesFineEuler) {
    FlightModel m;
    m.drag = 0.1;
    const Vector6d x0 = state({0.0, 0.0, 1.0}, {8.0, -1.0, 3.0});
    const Vector6d rk4 = propagate_state(x0, 0.5, m);
    const Vector6d ref = euler(x0, 0.5, m, 2'000'000);
    EXPECT_LE((rk4 - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EkfPredict, StationaryBallOnlyGrowsCovariance) {
    FlightModel m;
    m.gravity.setZero();
    BallEstimate est;
    est.mean = state({1.0, 2.0, 3.0}, Eigen::Vector3d::Zero());
    est.covariance = 0.01 * Matrix6d::Identity();
    const auto out = ekf_predict(est, 0.2, m);
    EXPECT_EQ(out.mean, est.mean);
    EXPECT_DOUBLE_EQ(out.stamp, 0.2);
    Matrix6d expected = est.covariance;
    expected.block<3, 3>(0, 0) += 0.2 * m.q_position * Eigen::Matrix3d::Identity();
    expected.block<3, 3>(3, 3) += 0.2 * m.q_velocity * Eigen::Matrix3d::Identity();
    // Position picks up the velocity variance through the transition.
    expected.block<3, 3>(0, 0) += 0.04 * 0.01 * Eigen::Matrix3d::Identity();
    expected.block<3, 3>(0, 3) += 0.2 * 0.01 * Eigen::Matrix3d::Identity();
    expected.block<3, 3>(3, 0) += 0.2 * 0.01 * Eigen::Matrix3d::Identity();
    EXPECT_LE((out.covariance - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EkfPredict, JacobianMatchesFiniteDifferencesWithDrag) {
    FlightModel m;
    m.drag = 0.2;
    m.q_position = m.q_velocity = 0.0;
    BallEstimate est;
    est.mean = state({0.0, 0.1, 1.0}, {-6.0, 0.5, 2.0});
    est.covariance = Matrix6d::Identity();
    const Matrix6d f_sq = ekf_predict(est, 0.3, m).covariance;  // F Fᵀ
    Matrix6d f;
    for (int j = 0; j < 6; ++j) {
        Vector6d dp = est.mean, dm = est.mean;
        dp[j] += 1e-6;
        dm[j] -= 1e-6;
        f.col(j) = (propagate_state(dp, 0.3, m) - propagate_state(dm, 0.3, m)) / 2e-6;
    }
    EXPECT_LE((f_sq - f * f.transpose()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EkfPredict, NegativeDtThrows) {
    EXPECT_THROW(ekf_predict(BallEstimate{}, -0.1, FlightModel{}), std::invalid_argument);
}

TEST(EkfUpdate, ZeroInnovationKeepsMean) {
    BallEstimate est;
    est.mean = state({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0});
    est.covariance = Matrix6d::Identity();
    est.covariance.block<3, 3>(0, 3) = 0.3 * Eigen::Matrix3d::Identity();
    est.covariance.block<3, 3>(3, 0) = 0.3 * Eigen::Matrix3d::Identity();
    Observation obs;
    obs.position = est.position();
    obs.noise_std = 1e-6;
    const auto out = ekf_update(est, obs);
    EXPECT_LE((out.mean - est.mean).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(out.covariance(0, 0), 1e-11);
}

TEST(EkfUpdate, TinyNoiseSnapsPosition) {
    BallEstimate est;
    est.mean = state({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0});
    Observation obs;
    obs.position = Eigen::Vector3d(1.1, 1.9, 3.05);
    obs.noise_std = 1e-6;
    const auto out = ekf_update(est, obs);
    EXPECT_LE((out.position() - obs.position).norm(), 1e-9);
    // No position/velocity correlation in the prior, so velocity is untouched.
    EXPECT_EQ(out.velocity(), est.velocity());
}

TEST(EkfUpdate, UninformativeMeasurementLeavesEstimate) {
    BallEstimate est;
    est.mean = state({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0});
    Observation obs;
    obs.position = Eigen::Vector3d(10.0, -4.0, 0.0);
    obs.noise_std = std::sqrt(1e9);
    const auto out = ekf_update(est, obs);
    EXPECT_LE((out.mean - est.mean).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LE((out.covariance - est.covariance).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(EkfUpdate, ScalarKalmanAlgebra) {
    // Axis-aligned covariance decouples axes into 2-state position/velocity filters.
    BallEstimate est;
    est.mean = state({0.5, 0.0, 0.0}, {1.0, 0.0, 0.0});
    est.covariance = Matrix6d::Identity();
    est.covariance(0, 0) = 0.04;
    est.covariance(0, 3) = est.covariance(3, 0) = 0.01;
    est.covariance(3, 3) = 0.25;
    Observation obs;
    obs.position = Eigen::Vector3d(0.6, 0.0, 0.0);
    obs.noise_std = 0.1;
    const auto out = ekf_update(est, obs);
    const double s = 0.04 + 0.01;
    const double kp = 0.04 / s, kv = 0.01 / s;
    EXPECT_NEAR(out.mean[0], 0.5 + kp * 0.1, 1e-15);
    EXPECT_NEAR(out.mean[3], 1.0 + kv * 0.1, 1e-15);
    EXPECT_NEAR(out.covariance(0, 0), (1 - kp) * 0.04, 1e-15);
    EXPECT_NEAR(out.covariance(3, 3), 0.25 - kv * 0.01, 1e-15);
    EXPECT_NEAR(out.covariance(0, 3), (1 - kp) * 0.01, 1e-15);
}

TEST(EkfUpdate, NonPositiveNoiseThrows) {
    Observation obs;
    obs.noise_std = 0.0;
    EXPECT_THROW(ekf_update(BallEstimate{}, obs), std::invalid_argument);
}

TEST(Covariance, StaysSymmetricPsdUnderRandomInterleavings) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int seq = 0; seq < 1000; ++seq) {
        FlightModel m;
        m.drag = seq % 2 ? 0.1 : 0.0;
        BallEstimate est;
        est.mean = state({n01(rng), n01(rng), 1.0 + n01(rng)}, {5.0 * n01(rng), n01(rng), n01(rng)});
        Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::NullaryExpr([&] { return n01(rng); });
        est.covariance = 0.1 * a * a.transpose();
        for (int step = 0; step < 20; ++step) {
            if (u(rng) < 0.5) {
                est = ekf_predict(est, 0.05 * u(rng), m);
            } else {
                Observation obs;
                obs.position = est.position() + Eigen::Vector3d(n01(rng), n01(rng), n01(rng)) * 0.01;
                obs.noise_std = std::pow(10.0, -4.0 + 3.0 * u(rng));
                est = ekf_update(est, obs);
            }
        }
        ASSERT_TRUE(is_symmetric(est.covariance, 0.0)) << "sequence " << seq;
        ASSERT_GE(min_eigenvalue(est.covariance), -1e-12 * est.covariance.norm()) << "sequence " << seq;
    }
}

TEST(Crossing, AnalyticProjectile) {
    BallEstimate est;
    est.mean = state({0.0, 0.0, 1.0}, {10.0, 0.0, 2.0});
    const auto c = predict_crossing(est, plane_x(5.0), FlightModel{}, 2.0);
    ASSERT_TRUE(c);
    EXPECT_NEAR(c->time_to_hit, 0.5, 1e-12);
    EXPECT_LE((c->position - Eigen::Vector3d(5.0, 0.0, 0.77375)).norm(), 1e-12);
}

TEST(Crossing, DragCrossingLandsOnPlane) {
    FlightModel m;
    m.drag = 0.1;
    BallEstimate est;
    est.mean = state({0.0, 0.0, 1.0}, {10.0, 0.0, 2.0});
    const auto c = predict_crossing(est, plane_x(5.0), m, 2.0);
    ASSERT_TRUE(c);
    EXPECT_GT(c->time_to_hit, 0.5);
    EXPECT_NEAR(c->position.x(), 5.0, 1e-4);
    const Vector6d at = propagate_state(est.mean, c->time_to_hit, m);
    EXPECT_LE((at.head<3>() - c->position).norm(), 1e-9);
}

TEST(Crossing, ParallelMotionNeverCrosses) {
    BallEstimate est;
    est.mean = state({0.0, 0.0, 1.0}, {0.0, 3.0, 2.0});
    EXPECT_FALSE(predict_crossing(est, plane_x(5.0), FlightModel{}, 10.0));
}

TEST(Crossing, StartingOnPlaneMovingAwayNeverCrosses) {
    BallEstimate est;
    est.mean = state({5.0, 0.0, 1.0}, {3.0, 0.0, 0.0});
    EXPECT_FALSE(predict_crossing(est, plane_x(5.0), FlightModel{}, 10.0));
    FlightModel drag;
    drag.drag = 0.1;
    EXPECT_FALSE(predict_crossing(est, plane_x(5.0), drag, 10.0));
}

TEST(Crossing, BeyondHorizonIsNoCrossing) {
    BallEstimate est;
    est.mean = state({0.0, 0.0, 1.0}, {10.0, 0.0, 2.0});
    EXPECT_FALSE(predict_crossing(est, plane_x(5.0), FlightModel{}, 0.4));
    EXPECT_THROW(predict_crossing(est, plane_x(5.0), FlightModel{}, 0.0), std::invalid_argument);
}

TEST(BallTracker, NoiselessSixtyHertzConverges) {
    TrackerOptions opts;
    BallTracker tracker(opts);
    const Vector6d truth = state({8.0, -0.7, 1.0}, {-7.4, 0.0, 4.905});
    for (int i = 0; i < 20; ++i) {
        Observation obs;
        obs.stamp = i / 60.0;
        obs.position = propagate_state(truth, obs.stamp, opts.model).head<3>();
        obs.noise_std = 1e-4;
        ASSERT_TRUE(tracker.submit(obs));
    }
    const auto& est = *tracker.estimate();
    const Vector6d now = propagate_state(truth, est.stamp, opts.model);
    EXPECT_LE((est.position() - now.head<3>()).norm(), 1e-3);
    const HitPlane plane = [] {
        HitPlane p;
        p.point = Eigen::Vector3d(0.6, 0.0, 0.0);
        p.normal = -Eigen::Vector3d::UnitX();
        return p;
    }();
    BallEstimate exact;
    exact.mean = truth;
    const auto want = predict_crossing(exact, plane, opts.model, 5.0);
    const auto got = predict_crossing(est, plane, opts.model, 5.0);
    ASSERT_TRUE(want && got);
    EXPECT_LE((got->position - want->position).norm(), 0.01);
    EXPECT_LE(std::abs(got->stamp - want->stamp), 0.005);
}

TEST(BallTracker, NormalizedInnovationWithinChiSquareBounds) {
    FlightModel m;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double sigma = 0.005;
    double nis_sum = 0.0;
    int count = 0;
    for (int run = 0; run < 200; ++run) {
        BallEstimate est;
        est.mean = state({8.0, -0.7, 1.0}, {-7.4, 0.0, 4.905});
        est.covariance = Matrix6d::Identity() * 1e-2;
        // Draw the truth from the prior so the filter model is exact.
        Vector6d truth = est.mean + psd_sqrt(est.covariance) * Vector6d::NullaryExpr([&] { return n01(rng); });
        for (int k = 0; k < 30; ++k) {
            const double dt = 1.0 / 120.0;
            truth = propagate_state(truth, dt, m);
            const Eigen::Matrix<double, 6, 1> w = Vector6d::NullaryExpr([&] { return n01(rng); });
            truth.head<3>() += std::sqrt(m.q_position * dt) * w.head<3>();
            truth.tail<3>() += std::sqrt(m.q_velocity * dt) * w.tail<3>();
            est = ekf_predict(est, dt, m);
            Observation obs;
            obs.noise_std = sigma;
            obs.position = truth.head<3>() + sigma * Eigen::Vector3d(n01(rng), n01(rng), n01(rng));
            const Eigen::Vector3d innov = obs.position - est.position();
            const Eigen::Matrix3d s = est.covariance.block<3, 3>(0, 0) + sigma * sigma * Eigen::Matrix3d::Identity();
            nis_sum += innov.dot(s.ldlt().solve(innov));
            ++count;
            est = ekf_update(est, obs);
        }
    }
    // Average NIS of count draws from χ²(3): mean 3, std sqrt(6 / count).
    const double mean = nis_sum / count;
    const double band = 2.576 * std::sqrt(6.0 / count);
    EXPECT_GT(mean, 3.0 - band);
    EXPECT_LT(mean, 3.0 + band);
}

TEST(BallTracker, OutOfOrderObservationsMatchSortedReplay) {
    TrackerOptions opts;
    const Vector6d truth = state({8.0, -0.7, 1.0}, {-7.4, 0.0, 4.905});
    std::vector<Observation> sorted;
    for (int i = 0; i < 12; ++i) {
        Observation obs;
        obs.stamp = i / 100.0;
        obs.position = propagate_state(truth, obs.stamp, opts.model).head<3>() + Eigen::Vector3d::Constant(1e-3 * (i % 3));
        obs.source_id = i % 2;
        sorted.push_back(obs);
    }
    BallTracker in_order(opts), shuffled(opts);
    for (const auto& o : sorted) in_order.submit(o);
    const std::vector<int> order{0, 1, 3, 2, 4, 6, 5, 7, 8, 10, 9, 11};
    for (int i : order) EXPECT_TRUE(shuffled.submit(sorted[i]));
    EXPECT_LE((in_order.estimate()->mean - shuffled.estimate()->mean).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((in_order.estimate()->covariance - shuffled.estimate()->covariance).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(shuffled.rejected_count(), 0);
    EXPECT_EQ(shuffled.observation_count(), 12);
}

TEST(BallTracker, StaleObservationIsRejected) {
    BallTracker tracker;
    Observation a;
    a.stamp = 1.0;
    EXPECT_TRUE(tracker.submit(a));
    Observation late = a;
    late.stamp = 0.9;
    EXPECT_FALSE(tracker.submit(late));
    EXPECT_EQ(tracker.rejected_count(), 1);
    EXPECT_EQ(tracker.observation_count(), 1);
    Observation bad = a;
    bad.noise_std = -1.0;
    EXPECT_THROW(tracker.submit(bad), std::invalid_argument);
}

TEST(BallTracker, EstimateAtNeverRunsBackward) {
    BallTracker tracker;
    EXPECT_FALSE(tracker.estimate_at(0.0));
    Observation a;
    a.stamp = 1.0;
    tracker.submit(a);
    EXPECT_DOUBLE_EQ(tracker.estimate_at(0.5)->stamp, 1.0);
    EXPECT_DOUBLE_EQ(tracker.estimate_at(1.25)->stamp, 1.25);
}
