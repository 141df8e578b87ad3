#pragma once

#include <Eigen/Dense>

namespace strikelab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Returns (m + mᵀ) / 2.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m);

/// Kronecker product a ⊗ b.
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

bool is_symmetric(const Eigen::MatrixXd& m, double tol);

double min_eigenvalue(const Eigen::MatrixXd& m);

bool is_psd(const Eigen::MatrixXd& m, double tol);

/// Factor L with L Lᵀ = m for a symmetric PSD matrix. Uses Cholesky and
/// falls back to an eigen square root when m is singular. Throws
/// std::domain_error if m has an eigenvalue below -tol·max(1, ‖m‖).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tol = 1e-9);

/// log N(x; mean, cov); throws std::domain_error if cov is not PD.
double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov);

}  // namespace strikelab
