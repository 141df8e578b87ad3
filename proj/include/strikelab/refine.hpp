#pragma once

// Feedback-weighted EM refinement of primitive parameters. Human (or oracle)
// rewards become softmax importance weights over executed trajectories, and
// the M-step takes the weighted average of the per-trajectory posterior
// statistics.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strikelab/promp.hpp"

namespace strikelab::refine {

/// The five feedback values, lowest to highest.
inline constexpr std::array<double, 5> kRewardValues{0.0, 0.25, 0.5, 1.0, 2.0};

bool is_valid_reward(double r);

struct FeedbackRecord {
    std::string trajectory_id;
    double reward = 0.0;
};

struct WeightedDataset {
    std::vector<promp::Trajectory> trajectories;
    Eigen::VectorXd alphas;

    void validate() const;
};

/// softmax(rewards / temperature), max-subtracted.
Eigen::VectorXd importance_weights(const Eigen::VectorXd& rewards, double temperature);

struct Posterior {
    Eigen::VectorXd mean;        // m_n
    Eigen::MatrixXd covariance;  // S_n
};

/// Posterior over the weights of one trajectory under p.
Posterior e_step(const promp::PrimitiveParams& p, const promp::Trajectory& tau);

struct MStepOptions {
    double cov_floor = 1e-6;
    double sigma_y_floor = 1e-8;
    /// Keep Σ_y from `previous` instead of re-estimating it.
    bool freeze_noise = false;
};

/// Weighted M-step. The reduction over trajectories runs in index order, so
/// the result does not depend on how the E-steps were scheduled.
promp::PrimitiveParams m_step_weighted(std::span<const Posterior> posteriors, const Eigen::VectorXd& alphas,
                                       std::span<const promp::Trajectory> trajectories,
                                       const promp::PrimitiveParams& previous,
                                       const MStepOptions& options = {});

double weighted_log_likelihood(const promp::PrimitiveParams& p, const WeightedDataset& dataset);

struct EmOptions {
    int max_iters = 100;
    double rel_tol = 1e-8;
    MStepOptions m_step;
    /// Worker threads for the E-step; 0 picks the hardware concurrency.
    int threads = 0;
};

struct EmResult {
    promp::PrimitiveParams params;
    /// trace[0] is the WLL of the initial parameters, then one entry per iteration.
    std::vector<double> wll_trace;
    int iterations = 0;
};

/// Thrown when a posterior solve fails mid-run.
class EmFailure : public std::runtime_error {
public:
    EmFailure(int iteration, const std::string& what);
    int iteration() const { return iteration_; }

private:
    int iteration_;
};

EmResult em_weighted(const promp::PrimitiveParams& p_init, const WeightedDataset& dataset,
                     const EmOptions& options = {});

struct RoundOptions {
    double temperature = 1.0;
    EmOptions em;
};

/// One outer iteration: rewards → weights → weighted EM started from p.
EmResult refinement_round(const promp::PrimitiveParams& p, std::span<const promp::Trajectory> executed,
                          const Eigen::VectorXd& rewards, const RoundOptions& options = {});

}  // namespace strikelab::refine
