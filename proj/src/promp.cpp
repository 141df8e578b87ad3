#include "strikelab/promp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace strikelab::promp {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

BasisConfig BasisConfig::uniform(int n_dof, int n_basis, double phase_duration) {
    BasisConfig cfg;
    cfg.n_dof = n_dof;
    cfg.n_basis = n_basis;
    cfg.phase_duration = phase_duration;
    if (n_basis == 1) {
        cfg.centers = Eigen::VectorXd::Constant(1, 0.5);
        cfg.bandwidth = 0.5;
        return cfg;
    }
    cfg.centers = Eigen::VectorXd::LinSpaced(n_basis, -0.05, 1.05);
    const double spacing = 1.0 / static_cast<double>(n_basis - 1);
    cfg.bandwidth = 0.5 * spacing * spacing;
    return cfg;
}

void BasisConfig::validate() const {
    require(n_basis >= 1, "basis: n_basis must be >= 1");
    require(n_dof >= 1, "basis: n_dof must be >= 1");
    require(bandwidth > 0.0, "basis: bandwidth must be > 0");
    require(phase_duration > 0.0, "basis: phase_duration must be > 0");
    require(centers.size() == n_basis, "basis: centers must have n_basis entries");
    for (int k = 0; k < n_basis; ++k) {
        require(centers[k] >= -0.1 && centers[k] <= 1.1, "basis: centers must lie in [-0.1, 1.1]");
        if (k > 0) require(centers[k] > centers[k - 1], "basis: centers must be strictly increasing");
    }
}

Eigen::VectorXd basis_row(double z, const BasisConfig& cfg) {
    const Eigen::Index k = cfg.centers.size();
    Eigen::VectorXd expo(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double d = z - cfg.centers[i];
        expo[i] = -d * d / (2.0 * cfg.bandwidth);
    }
    const double top = expo.maxCoeff();
    Eigen::VectorXd row = (expo.array() - top).exp().matrix();
    return row / row.sum();
}

Eigen::MatrixXd basis_block(double z, const BasisConfig& cfg) {
    const Eigen::VectorXd row = basis_row(z, cfg);
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(cfg.n_dof, cfg.weight_dim());
    for (int d = 0; d < cfg.n_dof; ++d) phi.block(d, d * cfg.n_basis, 1, cfg.n_basis) = row.transpose();
    return phi;
}

Eigen::MatrixXd basis_matrix(const Eigen::VectorXd& phases, const BasisConfig& cfg) {
    Eigen::MatrixXd b(phases.size(), cfg.n_basis);
    for (Eigen::Index t = 0; t < phases.size(); ++t) b.row(t) = basis_row(phases[t], cfg).transpose();
    return b;
}

Eigen::VectorXd PrimitiveParams::mean_at(double z) const {
    const Eigen::VectorXd row = basis_row(z, basis);
    return detail::weights_by_dof(mu_w, basis.n_basis, basis.n_dof).transpose() * row;
}

void PrimitiveParams::validate() const {
    basis.validate();
    const int dk = basis.weight_dim();
    require(mu_w.size() == dk, "primitive: mu_w length must be D*K");
    require(sigma_w.rows() == dk && sigma_w.cols() == dk, "primitive: sigma_w must be DK x DK");
    require(sigma_y.rows() == basis.n_dof && sigma_y.cols() == basis.n_dof,
            "primitive: sigma_y must be D x D");
    require(is_symmetric(sigma_w, 1e-9), "primitive: sigma_w must be symmetric");
    require(min_eigenvalue(sigma_w) >= -1e-9, "primitive: sigma_w must be positive semidefinite");
    require(is_symmetric(sigma_y, 1e-9), "primitive: sigma_y must be symmetric");
    require(Eigen::LLT<Eigen::MatrixXd>(sigma_y).info() == Eigen::Success,
            "primitive: sigma_y must be positive definite");
}

double Trajectory::duration() const {
    return timestamps[timestamps.size() - 1] - timestamps[0];
}

Eigen::VectorXd Trajectory::phases() const {
    return (timestamps.array() - timestamps[0]) / duration();
}

void Trajectory::validate() const {
    require(positions.rows() >= 2, "trajectory: at least 2 samples required");
    require(timestamps.size() == positions.rows(), "trajectory: timestamps/positions length mismatch");
    for (Eigen::Index t = 1; t < timestamps.size(); ++t)
        require(timestamps[t] > timestamps[t - 1], "trajectory: timestamps must be strictly increasing");
    if (velocities)
        require(velocities->rows() == positions.rows() && velocities->cols() == positions.cols(),
                "trajectory: velocities shape must match positions");
}

Eigen::VectorXd uniform_phase_grid(int n) {
    if (n < 2) throw std::invalid_argument("phase grid needs at least 2 samples");
    return Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
}

Trajectory resample_to_phase_grid(const Trajectory& tau, int n) {
    tau.validate();
    const Eigen::VectorXd grid = uniform_phase_grid(n);
    const Eigen::VectorXd src = tau.phases();
    Trajectory out;
    out.timestamps = tau.timestamps[0] + grid.array() * tau.duration();
    out.positions.resize(n, tau.dof());
    Eigen::Index j = 0;
    const Eigen::Index last = src.size() - 1;
    for (int i = 0; i < n; ++i) {
        const double z = grid[i];
        while (j + 1 < last && src[j + 1] <= z) ++j;
        const double span = src[j + 1] - src[j];
        const double a = std::clamp((z - src[j]) / span, 0.0, 1.0);
        out.positions.row(i) = (1.0 - a) * tau.positions.row(j) + a * tau.positions.row(j + 1);
    }
    return out;
}

PrimitiveParams fit_from_demos(std::span<const Trajectory> demos, const BasisConfig& basis,
                               const FitOptions& options) {
    basis.validate();
    if (demos.size() < 2) throw std::invalid_argument("fit_from_demos: at least 2 demonstrations required");
    for (const auto& d : demos) {
        d.validate();
        if (d.dof() != basis.n_dof) {
            std::ostringstream os;
            os << "fit_from_demos: demonstration has " << d.dof() << " DoF, basis expects " << basis.n_dof;
            throw std::invalid_argument(os.str());
        }
    }

    const int k = basis.n_basis;
    const int dof = basis.n_dof;
    const int dk = basis.weight_dim();
    const Eigen::MatrixXd b = basis_matrix(uniform_phase_grid(options.n_phase), basis);
    const Eigen::MatrixXd reg = b.transpose() * b + options.ridge * Eigen::MatrixXd::Identity(k, k);
    const Eigen::LDLT<Eigen::MatrixXd> solver(reg);

    const auto n = static_cast<double>(demos.size());
    Eigen::MatrixXd weights(dk, demos.size());
    Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(dof, dof);
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const Trajectory grid = resample_to_phase_grid(demos[i], options.n_phase);
        const Eigen::MatrixXd y = grid.positions;
        const Eigen::MatrixXd w = solver.solve(b.transpose() * y);  // K × D
        for (int d = 0; d < dof; ++d) weights.block(d * k, i, k, 1) = w.col(d);
        const Eigen::MatrixXd r = y - b * w;
        noise += r.transpose() * r;
    }

    PrimitiveParams p;
    p.basis = basis;
    p.mu_w = weights.rowwise().mean();
    const Eigen::MatrixXd centered = weights.colwise() - p.mu_w;
    p.sigma_w = symmetrized(centered * centered.transpose() / n) +
                options.cov_floor * Eigen::MatrixXd::Identity(dk, dk);
    p.sigma_y = symmetrized(noise / (n * options.n_phase)) +
                options.sigma_y_floor * Eigen::MatrixXd::Identity(dof, dof);
    return p;
}

PrimitiveParams condition(const PrimitiveParams& p, double z_star, const Eigen::VectorXd& q_star,
                          const Eigen::MatrixXd& obs_noise) {
    const int dof = p.basis.n_dof;
    if (q_star.size() != dof) throw std::invalid_argument("condition: q_star must have D entries");
    if (obs_noise.rows() != dof || obs_noise.cols() != dof)
        throw std::invalid_argument("condition: obs_noise must be D x D");
    if (!is_symmetric(obs_noise, 1e-12)) throw std::invalid_argument("condition: obs_noise must be symmetric");

    const Eigen::MatrixXd phi = basis_block(z_star, p.basis);
    const Eigen::MatrixXd sigma_phi_t = p.sigma_w * phi.transpose();
    const Eigen::MatrixXd innovation = obs_noise + phi * sigma_phi_t;
    const Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(innovation));
    if (llt.info() != Eigen::Success) throw std::domain_error("condition: singular innovation covariance");

    // gain = Σ Φᵀ S⁻¹, computed as (S⁻¹ Φ Σ)ᵀ.
    const Eigen::MatrixXd gain = llt.solve(sigma_phi_t.transpose()).transpose();
    PrimitiveParams out = p;
    out.mu_w = p.mu_w + gain * (q_star - phi * p.mu_w);
    out.sigma_w = symmetrized(p.sigma_w - gain * sigma_phi_t.transpose());
    return out;
}

Trajectory mean_trajectory(const PrimitiveParams& p, int n_samples) {
    const Eigen::VectorXd grid = uniform_phase_grid(n_samples);
    const Eigen::MatrixXd w = detail::weights_by_dof(p.mu_w, p.basis.n_basis, p.basis.n_dof);
    Trajectory out;
    out.timestamps = grid * p.basis.phase_duration;
    out.positions = basis_matrix(grid, p.basis) * w;
    return out;
}

Trajectory sample_trajectory(const PrimitiveParams& p, std::uint64_t seed, int n_samples) {
    const Eigen::MatrixXd lw = psd_sqrt(p.sigma_w);
    const Eigen::MatrixXd ly = psd_sqrt(p.sigma_y);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::VectorXd xi(p.mu_w.size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
    const Eigen::VectorXd w = p.mu_w + lw * xi;

    const Eigen::VectorXd grid = uniform_phase_grid(n_samples);
    Trajectory out;
    out.timestamps = grid * p.basis.phase_duration;
    out.positions = basis_matrix(grid, p.basis) *
                    detail::weights_by_dof(w, p.basis.n_basis, p.basis.n_dof);
    Eigen::VectorXd eta(p.basis.n_dof);
    for (int t = 0; t < n_samples; ++t) {
        for (Eigen::Index d = 0; d < eta.size(); ++d) eta[d] = normal(rng);
        out.positions.row(t) += (ly * eta).transpose();
    }
    return out;
}

double log_likelihood(const PrimitiveParams& p, const Trajectory& tau) {
    const detail::Projection proj = detail::project(p, tau);
    const int dk = p.basis.weight_dim();
    const Eigen::MatrixXd l = psd_sqrt(p.sigma_w);
    const Eigen::MatrixXd inner =
        Eigen::MatrixXd::Identity(dk, dk) + l.transpose() * proj.gram * l;
    const Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(inner));
    if (llt.info() != Eigen::Success) throw std::domain_error("log_likelihood: non-PD total covariance");

    const Eigen::VectorXd u = l.transpose() * proj.projected;
    const double logdet = tau.samples() * proj.sigma_y_logdet +
                          2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double quad = proj.residual_quadratic - u.dot(llt.solve(u));
    const double n_obs = static_cast<double>(tau.samples()) * tau.dof();
    return -0.5 * (n_obs * kLog2Pi + logdet + quad);
}

namespace detail {

Eigen::MatrixXd weights_by_dof(const Eigen::VectorXd& w, int n_basis, int n_dof) {
    return Eigen::Map<const Eigen::MatrixXd>(w.data(), n_basis, n_dof);
}

Projection project(const PrimitiveParams& p, const Trajectory& tau) {
    tau.validate();
    if (tau.dof() != p.basis.n_dof) throw std::invalid_argument("trajectory DoF does not match primitive");
    const Eigen::LLT<Eigen::MatrixXd> sy(symmetrized(p.sigma_y));
    if (sy.info() != Eigen::Success) throw std::domain_error("sigma_y is not positive definite");

    const int dof = p.basis.n_dof;
    Projection out;
    out.basis = basis_matrix(tau.phases(), p.basis);
    out.btb = out.basis.transpose() * out.basis;
    const Eigen::MatrixXd sy_inv = sy.solve(Eigen::MatrixXd::Identity(dof, dof));
    out.gram = kron(sy_inv, out.btb);
    out.residual = Eigen::MatrixXd(tau.positions) -
                   out.basis * weights_by_dof(p.mu_w, p.basis.n_basis, dof);
    const Eigen::MatrixXd weighted = out.residual * sy_inv;  // rows: (Σ_y⁻¹ r_t)ᵀ
    const Eigen::MatrixXd proj = out.basis.transpose() * weighted;  // K × D
    out.projected = Eigen::Map<const Eigen::VectorXd>(proj.data(), proj.size());
    out.residual_quadratic = (weighted.array() * out.residual.array()).sum();
    out.sigma_y_logdet = 2.0 * sy.matrixLLT().diagonal().array().log().sum();
    return out;
}

}  // namespace detail

}  // namespace strikelab::promp
