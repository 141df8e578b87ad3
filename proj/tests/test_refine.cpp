#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "strikelab/refine.hpp"
#include "test_support.hpp"

using namespace strikelab;
using namespace strikelab::refine;
using promp::PrimitiveParams;
using promp::Trajectory;

namespace {

PrimitiveParams scalar_primitive(double mu, double var, double noise) {
    PrimitiveParams p;
    p.basis = promp::BasisConfig::uniform(1, 1);
    p.mu_w = Eigen::VectorXd::Constant(1, mu);
    p.sigma_w = Eigen::MatrixXd::Constant(1, 1, var);
    p.sigma_y = Eigen::MatrixXd::Constant(1, 1, noise);
    return p;
}

std::vector<Trajectory> sampled(const PrimitiveParams& p, int n, std::uint64_t seed, int samples = 60) {
    std::vector<Trajectory> out;
    for (int i = 0; i < n; ++i) out.push_back(promp::sample_trajectory(p, seed + i, samples));
    return out;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(Rewards, OnlyTheFiveLevelsAreValid) {
    for (double r : kRewardValues) EXPECT_TRUE(is_valid_reward(r));
    for (double r : {-1.0, 0.3, 0.75, 1.5, 3.0, std::nan("")}) EXPECT_FALSE(is_valid_reward(r));
}

TEST(ImportanceWeights, TwoRewardClosedForm) {
    const Eigen::VectorXd a = importance_weights(Eigen::Vector2d(0.0, 2.0), 1.0);
    const double e2 = std::exp(2.0);
    EXPECT_NEAR(a[0], 1.0 / (1.0 + e2), 1e-15);
    EXPECT_NEAR(a[1], e2 / (1.0 + e2), 1e-15);
}

TEST(ImportanceWeights, HighTemperatureIsUniform) {
    const Eigen::VectorXd r = (Eigen::VectorXd(5) << 0.0, 0.25, 0.5, 1.0, 2.0).finished();
    const Eigen::VectorXd a = importance_weights(r, 1e6);
    EXPECT_LE(max_abs(a.array() - 0.2), 1e-6);
}

TEST(ImportanceWeights, ShiftInvariantAndNormalized) {
    const Eigen::VectorXd r = (Eigen::VectorXd(4) << 0.0, 2.0, 0.5, 1.0).finished();
    for (double t : {0.1, 0.5, 1.0, 3.0}) {
        const Eigen::VectorXd a = importance_weights(r, t);
        const Eigen::VectorXd b = importance_weights((r.array() + 7.5).matrix(), t);
        EXPECT_NEAR(a.sum(), 1.0, 1e-15);
        EXPECT_LE(max_abs(a - b), 1e-14);
        EXPECT_TRUE((a.array() > 0.0).all());
    }
}

TEST(ImportanceWeights, ExtremeLowTemperatureStaysFinite) {
    const Eigen::VectorXd a = importance_weights(Eigen::Vector3d(0.0, 0.0, 2.0), 1e-4);
    EXPECT_TRUE(a.allFinite());
    EXPECT_EQ(a[2], 1.0);
}

TEST(ImportanceWeights, RejectsBadInput) {
    EXPECT_THROW(importance_weights(Eigen::Vector2d(0.0, 1.0), 0.0), std::invalid_argument);
    EXPECT_THROW(importance_weights(Eigen::Vector2d(0.0, 1.0), -1.0), std::invalid_argument);
    EXPECT_THROW(importance_weights(Eigen::VectorXd(0), 1.0), std::invalid_argument);
}

TEST(EStep, ScalarBayesUpdate) {
    // K = 1: every basis row is 1, so each sample observes w directly.
    const auto p = scalar_primitive(0.2, 0.5, 0.1);
    RowMatrix y(4, 1);
    y << 1.0, 0.4, 0.7, 0.9;
    const auto post = e_step(p, fixtures::grid_trajectory(y));
    const double precision = 1.0 / 0.5 + 4.0 / 0.1;
    const double mean = (0.2 / 0.5 + y.sum() / 0.1) / precision;
    EXPECT_NEAR(post.covariance(0, 0), 1.0 / precision, 1e-14);
    EXPECT_NEAR(post.mean[0], mean, 1e-14);
}

TEST(EStep, HugeObservationNoiseReturnsPrior) {
    auto p = fixtures::random_primitive(2, 5, 3);
    const auto tau = promp::sample_trajectory(p, 9, 50);
    p.sigma_y = 1e6 * Eigen::MatrixXd::Identity(2, 2);
    const auto post = e_step(p, tau);
    EXPECT_LE(max_abs(post.mean - p.mu_w), 1e-4);
    EXPECT_LE(max_abs(post.covariance - p.sigma_w), 1e-4);
}

TEST(EStep, MatchesInformationFormOracle) {
    const auto p = fixtures::random_primitive(2, 4, 17, 1e-2);
    const auto tau = promp::sample_trajectory(p, 4, 30);
    const Eigen::MatrixXd psi = fixtures::stacked_psi(p, tau.phases());
    const Eigen::MatrixXd noise_inv =
        kron(Eigen::MatrixXd::Identity(tau.samples(), tau.samples()), p.sigma_y.inverse());
    Eigen::VectorXd y(tau.samples() * 2);
    for (int t = 0; t < tau.samples(); ++t) y.segment(2 * t, 2) = tau.positions.row(t).transpose();
    const Eigen::MatrixXd s = (p.sigma_w.inverse() + psi.transpose() * noise_inv * psi).inverse();
    const Eigen::VectorXd m = s * (p.sigma_w.inverse() * p.mu_w + psi.transpose() * noise_inv * y);
    const auto post = e_step(p, tau);
    EXPECT_LE(max_abs(post.covariance - s), 1e-9);
    EXPECT_LE(max_abs(post.mean - m), 1e-8);
}

TEST(MStep, SingleDominantTrajectory) {
    const auto p = fixtures::random_primitive(2, 4, 11);
    const auto trajs = sampled(p, 3, 100);
    std::vector<Posterior> posts;
    for (const auto& t : trajs) posts.push_back(e_step(p, t));
    MStepOptions opts;
    opts.cov_floor = 0.0;
    const auto out = m_step_weighted(posts, Eigen::Vector3d(0.0, 1.0, 0.0), trajs, p, opts);
    EXPECT_LE(max_abs(out.mu_w - posts[1].mean), 1e-15);
    EXPECT_LE(max_abs(out.sigma_w - posts[1].covariance), 1e-14);
}

TEST(MStep, WeightedMomentsOracle) {
    const auto p = fixtures::random_primitive(1, 3, 13, 1e-3);
    const auto trajs = sampled(p, 4, 200);
    std::vector<Posterior> posts;
    for (const auto& t : trajs) posts.push_back(e_step(p, t));
    const Eigen::Vector4d alpha(0.1, 0.2, 0.3, 0.4);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(3);
    for (int i = 0; i < 4; ++i) mu += alpha[i] * posts[i].mean;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < 4; ++i) {
        const Eigen::VectorXd c = posts[i].mean - mu;
        sigma += alpha[i] * (posts[i].covariance + c * c.transpose());
    }
    MStepOptions opts;
    opts.cov_floor = 1e-6;
    const auto out = m_step_weighted(posts, alpha, trajs, p, opts);
    EXPECT_LE(max_abs(out.mu_w - mu), 1e-14);
    EXPECT_LE(max_abs(out.sigma_w - sigma - 1e-6 * Eigen::MatrixXd::Identity(3, 3)), 1e-14);
    EXPECT_GT(out.sigma_y(0, 0), 0.0);
}

TEST(MStep, FreezeNoiseKeepsSigmaY) {
    const auto p = fixtures::random_primitive(2, 4, 11, 0.37);
    const auto trajs = sampled(p, 3, 10);
    std::vector<Posterior> posts;
    for (const auto& t : trajs) posts.push_back(e_step(p, t));
    MStepOptions opts;
    opts.freeze_noise = true;
    const auto out = m_step_weighted(posts, Eigen::Vector3d::Constant(1.0 / 3.0), trajs, p, opts);
    EXPECT_EQ(out.sigma_y, p.sigma_y);
}

TEST(MStep, LengthMismatchThrows) {
    const auto p = fixtures::random_primitive(1, 3, 1);
    const auto trajs = sampled(p, 2, 1);
    std::vector<Posterior> posts{e_step(p, trajs[0]), e_step(p, trajs[1])};
    EXPECT_THROW(m_step_weighted(posts, Eigen::Vector3d::Constant(1.0 / 3.0), trajs, p), std::invalid_argument);
}

TEST(WeightedLogLikelihood, IsAlphaWeightedSum) {
    const auto p = fixtures::random_primitive(2, 5, 8, 1e-3);
    WeightedDataset data;
    data.trajectories = sampled(p, 3, 50);
    data.alphas = Eigen::Vector3d(0.5, 0.3, 0.2);
    double expected = 0.0;
    for (int i = 0; i < 3; ++i) expected += data.alphas[i] * fixtures::naive_log_likelihood(p, data.trajectories[i]);
    EXPECT_NEAR(weighted_log_likelihood(p, data), expected, 1e-7 * std::abs(expected));
}

TEST(WeightedDataset, Validation) {
    const auto p = fixtures::random_primitive(1, 3, 1);
    WeightedDataset data;
    EXPECT_THROW(data.validate(), std::invalid_argument);
    data.trajectories = sampled(p, 2, 1);
    data.alphas = Eigen::Vector2d(0.5, 0.6);
    EXPECT_THROW(data.validate(), std::invalid_argument);
    data.alphas = Eigen::Vector2d(1.0, 0.0);
    EXPECT_THROW(data.validate(), std::invalid_argument);
    data.alphas = Eigen::Vector2d(0.5, 0.5);
    EXPECT_NO_THROW(data.validate());
}

TEST(Em, ZeroIterationsReturnsInitialParameters) {
    const auto p = fixtures::random_primitive(2, 4, 2);
    WeightedDataset data;
    data.trajectories = sampled(p, 4, 7);
    data.alphas = Eigen::Vector4d::Constant(0.25);
    EmOptions opts;
    opts.max_iters = 0;
    const auto res = em_weighted(p, data, opts);
    EXPECT_EQ(res.iterations, 0);
    ASSERT_EQ(res.wll_trace.size(), 1u);
    EXPECT_EQ(res.params.mu_w, p.mu_w);
    EXPECT_EQ(res.params.sigma_w, p.sigma_w);
}

TEST(Em, WeightedLikelihoodIsMonotone) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto gen = fixtures::random_primitive(3, 6, seed, 1e-3);
        WeightedDataset data;
        data.trajectories = sampled(gen, 12, seed * 100);
        Eigen::VectorXd r(12);
        for (int i = 0; i < 12; ++i) r[i] = kRewardValues[static_cast<std::size_t>(i % 5)];
        data.alphas = importance_weights(r, 1.0);
        auto init = fixtures::random_primitive(3, 6, seed + 50, 1e-2);
        EmOptions opts;
        opts.max_iters = 30;
        opts.rel_tol = 0.0;
        const auto res = em_weighted(init, data, opts);
        for (std::size_t i = 1; i < res.wll_trace.size(); ++i)
            EXPECT_GE(res.wll_trace[i], res.wll_trace[i - 1] - 1e-9 * std::abs(res.wll_trace[i - 1]))
                << "seed " << seed << " iteration " << i;
    }
}

TEST(Em, DeterministicAcrossThreadCounts) {
    const auto gen = fixtures::random_primitive(2, 5, 31, 1e-3);
    WeightedDataset data;
    data.trajectories = sampled(gen, 9, 77);
    data.alphas = Eigen::VectorXd::Constant(9, 1.0 / 9.0);
    EmOptions one, many;
    one.threads = 1;
    many.threads = 4;
    one.max_iters = many.max_iters = 5;
    const auto a = em_weighted(gen, data, one);
    const auto b = em_weighted(gen, data, many);
    EXPECT_EQ(a.params.mu_w, b.params.mu_w);
    EXPECT_EQ(a.params.sigma_w, b.params.sigma_w);
    EXPECT_EQ(a.params.sigma_y, b.params.sigma_y);
    EXPECT_EQ(a.wll_trace, b.wll_trace);
}

TEST(RefinementRound, EqualRewardsMatchUniformWeights) {
    const auto p = fixtures::random_primitive(2, 5, 4, 1e-3);
    const auto trajs = sampled(p, 6, 12);
    RoundOptions opts;
    opts.em.max_iters = 10;
    const auto a = refinement_round(p, trajs, Eigen::VectorXd::Zero(6), opts);
    const auto b = refinement_round(p, trajs, Eigen::VectorXd::Constant(6, 1.0), opts);
    WeightedDataset data;
    data.trajectories = trajs;
    data.alphas = Eigen::VectorXd::Constant(6, 1.0 / 6.0);
    const auto c = em_weighted(p, data, opts.em);
    EXPECT_LE(max_abs(a.params.mu_w - c.params.mu_w), 1e-9);
    EXPECT_LE(max_abs(a.params.sigma_w - c.params.sigma_w), 1e-9);
    EXPECT_LE(max_abs(b.params.mu_w - c.params.mu_w), 1e-9);
}

TEST(RefinementRound, LowTemperatureApproachesBestTrajectory) {
    const auto p = fixtures::random_primitive(2, 5, 6, 1e-3);
    const auto trajs = sampled(p, 3, 40);
    RoundOptions opts;
    opts.temperature = 0.1;
    opts.em.max_iters = 5;
    const auto soft = refinement_round(p, trajs, Eigen::Vector3d(0.0, 0.0, 2.0), opts);
    WeightedDataset only;
    only.trajectories = {trajs[2]};
    only.alphas = Eigen::VectorXd::Ones(1);
    const auto hard = em_weighted(p, only, opts.em);
    EXPECT_LE(max_abs(soft.params.mu_w - hard.params.mu_w), 1e-3);
    EXPECT_LE(max_abs(soft.params.sigma_w - hard.params.sigma_w), 1e-3);
}

TEST(RefinementRound, RejectsMismatchedRewards) {
    const auto p = fixtures::random_primitive(1, 3, 1);
    const auto trajs = sampled(p, 2, 1);
    EXPECT_THROW(refinement_round(p, trajs, Eigen::Vector3d::Zero()), std::invalid_argument);
    EXPECT_THROW(refinement_round(p, {}, Eigen::VectorXd(0)), std::invalid_argument);
}
