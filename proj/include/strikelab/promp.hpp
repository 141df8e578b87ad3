#pragma once

// Probabilistic movement primitives over joint trajectories.
//
// Weights are stacked DoF-major: w = [w_0(0..K-1), w_1(0..K-1), ...], so the
// phase-z observation matrix Φ_z (D × DK) is block diagonal with the same
// normalized radial-basis row in every block.

#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "strikelab/linalg.hpp"

namespace strikelab::promp {

struct BasisConfig {
    int n_basis = 8;
    int n_dof = 1;
    /// Squared width of each radial basis, in phase² units.
    double bandwidth = 0.0;
    /// Seconds mapped to phase 1.0.
    double phase_duration = 1.0;
    Eigen::VectorXd centers;

    /// K centers spread uniformly over [-0.05, 1.05] with h = 0.5 / (K - 1)².
    static BasisConfig uniform(int n_dof, int n_basis = 8, double phase_duration = 1.0);

    int weight_dim() const { return n_dof * n_basis; }
    void validate() const;
};

/// Normalized radial-basis activations at phase z (entries sum to one).
Eigen::VectorXd basis_row(double z, const BasisConfig& cfg);

/// Φ_z, the D × DK block-diagonal observation matrix at phase z.
Eigen::MatrixXd basis_block(double z, const BasisConfig& cfg);

/// One basis row per phase: a phases.size() × K matrix.
Eigen::MatrixXd basis_matrix(const Eigen::VectorXd& phases, const BasisConfig& cfg);

struct PrimitiveParams {
    BasisConfig basis;
    Eigen::VectorXd mu_w;
    Eigen::MatrixXd sigma_w;
    Eigen::MatrixXd sigma_y;

    /// Φ_z μ_w.
    Eigen::VectorXd mean_at(double z) const;
    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

/// Time-stamped joint states; positions are T × D, row t at timestamps[t].
struct Trajectory {
    Eigen::VectorXd timestamps;
    RowMatrix positions;
    std::optional<RowMatrix> velocities;

    int samples() const { return static_cast<int>(positions.rows()); }
    int dof() const { return static_cast<int>(positions.cols()); }
    double duration() const;
    /// Timestamps mapped affinely onto [0, 1].
    Eigen::VectorXd phases() const;
    void validate() const;
};

/// n phases evenly spaced on [0, 1], both ends included.
Eigen::VectorXd uniform_phase_grid(int n);

/// Linear interpolation of `tau` onto an n-point uniform phase grid; the
/// output keeps the original start time and duration.
Trajectory resample_to_phase_grid(const Trajectory& tau, int n);

struct FitOptions {
    double ridge = 1e-6;
    double cov_floor = 1e-6;
    double sigma_y_floor = 1e-8;
    int n_phase = 100;
};

/// Per-demo ridge regression followed by the sample mean / covariance of the
/// weights (maximum-likelihood normalization) and the pooled residual noise.
PrimitiveParams fit_from_demos(std::span<const Trajectory> demos, const BasisConfig& basis,
                               const FitOptions& options = {});

/// Gaussian conditioning on Φ_{z*} w = q* observed with covariance obs_noise.
PrimitiveParams condition(const PrimitiveParams& p, double z_star, const Eigen::VectorXd& q_star,
                          const Eigen::MatrixXd& obs_noise);

Trajectory mean_trajectory(const PrimitiveParams& p, int n_samples);

/// Draws w ~ N(μ_w, Σ_w) then adds N(0, Σ_y) noise per step. Deterministic in
/// `seed`.
Trajectory sample_trajectory(const PrimitiveParams& p, std::uint64_t seed, int n_samples);

/// log N(Y; Ψ μ_w, Ψ Σ_w Ψᵀ + I ⊗ Σ_y) of the stacked observations of `tau`,
/// evaluated at tau's own normalized phases.
double log_likelihood(const PrimitiveParams& p, const Trajectory& tau);

namespace detail {

/// Sufficient statistics of one trajectory under p, expressed in weight
/// space. gram = Σ_t Φ_tᵀ Σ_y⁻¹ Φ_t, projected = Σ_t Φ_tᵀ Σ_y⁻¹ (q_t - Φ_t μ_w).
struct Projection {
    Eigen::MatrixXd basis;     // T × K
    Eigen::MatrixXd btb;       // K × K
    Eigen::MatrixXd gram;      // DK × DK
    Eigen::VectorXd projected; // DK
    Eigen::MatrixXd residual;  // T × D, q_t - Φ_t μ_w
    double residual_quadratic = 0.0;
    double sigma_y_logdet = 0.0;
};

Projection project(const PrimitiveParams& p, const Trajectory& tau);

/// Column d holds the K weights of DoF d.
Eigen::MatrixXd weights_by_dof(const Eigen::VectorXd& w, int n_basis, int n_dof);

}  // namespace detail

}  // namespace strikelab::promp
