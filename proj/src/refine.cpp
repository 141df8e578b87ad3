#include "strikelab/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "strikelab/simd/kernels.hpp"

namespace strikelab::refine {

using promp::PrimitiveParams;
using promp::Trajectory;

bool is_valid_reward(double r) {
    return std::find(kRewardValues.begin(), kRewardValues.end(), r) != kRewardValues.end();
}

void WeightedDataset::validate() const {
    if (trajectories.empty()) throw std::invalid_argument("dataset: no trajectories");
    if (static_cast<Eigen::Index>(trajectories.size()) != alphas.size())
        throw std::invalid_argument("dataset: trajectories and alphas differ in length");
    if ((alphas.array() <= 0.0).any()) throw std::invalid_argument("dataset: alphas must be strictly positive");
    if (std::abs(alphas.sum() - 1.0) > 1e-12) throw std::invalid_argument("dataset: alphas must sum to 1");
}

Eigen::VectorXd importance_weights(const Eigen::VectorXd& rewards, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("importance_weights: temperature must be > 0");
    if (rewards.size() == 0) throw std::invalid_argument("importance_weights: no rewards");
    const Eigen::ArrayXd scaled = rewards.array() / temperature;
    const Eigen::ArrayXd e = (scaled - scaled.maxCoeff()).exp();
    return (e / e.sum()).matrix();
}

Posterior e_step(const PrimitiveParams& p, const Trajectory& tau) {
    const promp::detail::Projection proj = promp::detail::project(p, tau);
    const int dk = p.basis.weight_dim();
    const Eigen::MatrixXd l = psd_sqrt(p.sigma_w);
    const Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(dk, dk) + l.transpose() * proj.gram * l;
    const Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(inner));
    if (llt.info() != Eigen::Success) throw std::domain_error("e_step: posterior solve failed");

    // S = (Σ⁻¹ + G)⁻¹ = L (I + Lᵀ G L)⁻¹ Lᵀ, m = μ + S Ψᵀ A⁻¹ (y - Ψ μ).
    Posterior post;
    post.covariance = symmetrized(l * llt.solve(l.transpose()));
    post.mean = p.mu_w + post.covariance * proj.projected;
    return post;
}

PrimitiveParams m_step_weighted(std::span<const Posterior> posteriors, const Eigen::VectorXd& alphas,
                                std::span<const Trajectory> trajectories, const PrimitiveParams& previous,
                                const MStepOptions& options) {
    const auto n = posteriors.size();
    if (static_cast<Eigen::Index>(n) != alphas.size() || trajectories.size() != n)
        throw std::invalid_argument("m_step_weighted: weight/posterior/trajectory length mismatch");
    if (n == 0) throw std::invalid_argument("m_step_weighted: empty dataset");

    const int k = previous.basis.n_basis;
    const int dof = previous.basis.n_dof;
    const int dk = previous.basis.weight_dim();

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(dk);
    for (std::size_t i = 0; i < n; ++i)
        simd::axpy(alphas[i], {posteriors[i].mean.data(), static_cast<std::size_t>(dk)}, {mu.data(), static_cast<std::size_t>(dk)});

    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(dk, dk);
    Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(dof, dof);
    const auto flat = [](const Eigen::MatrixXd& m) {
        return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
    };
    const auto flat_mut = [](Eigen::MatrixXd& m) {
        return std::span<double>(m.data(), static_cast<std::size_t>(m.size()));
    };
    for (std::size_t i = 0; i < n; ++i) {
        const Posterior& post = posteriors[i];
        const Eigen::VectorXd c = post.mean - mu;
        const Eigen::MatrixXd second = post.covariance + c * c.transpose();
        simd::axpy(alphas[i], flat(second), flat_mut(sigma));

        if (!options.freeze_noise) {
            const Trajectory& tau = trajectories[i];
            const Eigen::MatrixXd b = promp::basis_matrix(tau.phases(), previous.basis);
            const Eigen::MatrixXd r =
                Eigen::MatrixXd(tau.positions) - b * promp::detail::weights_by_dof(post.mean, k, dof);
            const Eigen::MatrixXd btb = b.transpose() * b;
            Eigen::MatrixXd spread(dof, dof);
            for (int d = 0; d < dof; ++d)
                for (int e = 0; e < dof; ++e)
                    spread(d, e) = (post.covariance.block(d * k, e * k, k, k).array() * btb.array()).sum();
            const Eigen::MatrixXd per_traj = (r.transpose() * r + spread) / static_cast<double>(tau.samples());
            simd::axpy(alphas[i], flat(per_traj), flat_mut(noise));
        }
    }

    PrimitiveParams out = previous;
    out.mu_w = mu;
    out.sigma_w = symmetrized(sigma) + options.cov_floor * Eigen::MatrixXd::Identity(dk, dk);
    if (!options.freeze_noise)
        out.sigma_y = symmetrized(noise) + options.sigma_y_floor * Eigen::MatrixXd::Identity(dof, dof);
    return out;
}

double weighted_log_likelihood(const PrimitiveParams& p, const WeightedDataset& dataset) {
    dataset.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < dataset.trajectories.size(); ++i)
        total += dataset.alphas[static_cast<Eigen::Index>(i)] * promp::log_likelihood(p, dataset.trajectories[i]);
    return total;
}

EmFailure::EmFailure(int iteration, const std::string& what)
    : std::runtime_error("EM iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}

namespace {

std::vector<Posterior> all_posteriors(const PrimitiveParams& p, const std::vector<Trajectory>& trajs,
                                      int threads) {
    std::vector<Posterior> out(trajs.size());
    const std::size_t workers =
        std::min<std::size_t>(trajs.size(), threads > 0 ? static_cast<std::size_t>(threads)
                                                        : std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < trajs.size(); ++i) out[i] = e_step(p, trajs[i]);
        return out;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < trajs.size(); i += workers) out[i] = e_step(p, trajs[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace

EmResult em_weighted(const PrimitiveParams& p_init, const WeightedDataset& dataset, const EmOptions& options) {
    dataset.validate();
    EmResult res;
    res.params = p_init;
    res.wll_trace.push_back(weighted_log_likelihood(p_init, dataset));

    for (int it = 1; it <= options.max_iters; ++it) {
        try {
            const auto posteriors = all_posteriors(res.params, dataset.trajectories, options.threads);
            res.params = m_step_weighted(posteriors, dataset.alphas, dataset.trajectories, res.params,
                                         options.m_step);
            res.wll_trace.push_back(weighted_log_likelihood(res.params, dataset));
        } catch (const std::domain_error& e) {
            throw EmFailure(it, e.what());
        }
        res.iterations = it;
        const double prev = res.wll_trace[res.wll_trace.size() - 2];
        const double curr = res.wll_trace.back();
        if (std::abs(curr - prev) <= options.rel_tol * std::max(1.0, std::abs(prev))) break;
    }
    return res;
}

EmResult refinement_round(const PrimitiveParams& p, std::span<const Trajectory> executed,
                          const Eigen::VectorXd& rewards, const RoundOptions& options) {
    if (executed.empty() || static_cast<Eigen::Index>(executed.size()) != rewards.size())
        throw std::invalid_argument("refinement_round: need one reward per executed trajectory");
    WeightedDataset data;
    data.trajectories.assign(executed.begin(), executed.end());
    data.alphas = importance_weights(rewards, options.temperature);
    return em_weighted(p, data, options.em);
}

}  // namespace strikelab::refine
