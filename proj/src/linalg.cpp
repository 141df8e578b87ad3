#include "strikelab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strikelab {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool is_psd(const Eigen::MatrixXd& m, double tol) {
    return is_symmetric(m, tol) && min_eigenvalue(m) >= -tol;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double tol) {
    const Eigen::MatrixXd s = symmetrized(m);
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() == Eigen::Success) return llt.matrixL();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -tol * scale)
        throw std::domain_error("covariance is not positive semidefinite");
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(cov));
    if (llt.info() != Eigen::Success)
        throw std::domain_error("covariance is not positive definite");
    const Eigen::VectorXd r = x - mean;
    const Eigen::VectorXd y = llt.matrixL().solve(r);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + logdet + y.squaredNorm());
}

}  // namespace strikelab
