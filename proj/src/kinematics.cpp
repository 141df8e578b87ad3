#include "strikelab/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace strikelab::kinematics {

namespace {

Eigen::Isometry3d joint_motion(const Joint& j, double value) {
    Eigen::Isometry3d m = Eigen::Isometry3d::Identity();
    if (j.kind == JointKind::prismatic)
        m.translation() = value * j.axis;
    else
        m.linear() = Eigen::AngleAxisd(value, j.axis).toRotationMatrix();
    return m;
}

}  // namespace

KinematicChain::KinematicChain(std::vector<Joint> joints, Eigen::Isometry3d tool)
    : joints_(std::move(joints)), tool_(tool) {
    if (joints_.size() < 2) throw std::invalid_argument("chain: at least 2 joints required");
    if (joints_.front().kind != JointKind::prismatic)
        throw std::invalid_argument("chain: first joint must be prismatic (rail)");
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        const auto& j = joints_[i];
        const std::string where = "chain: joint " + std::to_string(i);
        if (std::abs(j.axis.norm() - 1.0) > 1e-9) throw std::invalid_argument(where + " axis is not unit");
        const Eigen::Matrix3d r = j.fixed.linear();
        if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
            throw std::invalid_argument(where + " rotation is not orthonormal");
    }
    const Eigen::Matrix3d rt = tool_.linear();
    if ((rt.transpose() * rt - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
        throw std::invalid_argument("chain: tool rotation is not orthonormal");
}

KinematicChain KinematicChain::default_chain() {
    auto at = [](double x, double y, double z) {
        Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
        t.translation() = Eigen::Vector3d(x, y, z);
        return t;
    };
    const Eigen::Vector3d uy = Eigen::Vector3d::UnitY();
    const Eigen::Vector3d uz = Eigen::Vector3d::UnitZ();
    std::vector<Joint> joints{
        {JointKind::prismatic, uy, at(0, 0, 0)},     // rail
        {JointKind::revolute, uz, at(0.1, 0, 0.9)},  // shoulder yaw
        {JointKind::revolute, uy, at(0, 0, 0)},      // shoulder pitch
        {JointKind::revolute, uz, at(0, 0, 0)},      // upper-arm twist
        {JointKind::revolute, uy, at(0.045, 0, 0.55)},  // elbow
        {JointKind::revolute, uz, at(-0.045, 0, 0)},    // forearm twist
        {JointKind::revolute, uy, at(0, 0, 0.3)},    // wrist pitch
        {JointKind::revolute, uz, at(0, 0, 0)},      // wrist twist
    };
    return KinematicChain(std::move(joints), at(0, 0, 0.5));
}

void KinematicChain::check_dims(const Eigen::VectorXd& q) const {
    if (q.size() != arm_dof())
        throw std::invalid_argument("chain: expected " + std::to_string(arm_dof()) + " arm joints, got " +
                                    std::to_string(q.size()));
}

Eigen::Vector3d KinematicChain::forward(double r, const Eigen::VectorXd& q) const {
    check_dims(q);
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    for (int i = 0; i < size(); ++i) {
        const double v = i == 0 ? r : q[i - 1];
        t = t * joints_[i].fixed * joint_motion(joints_[i], v);
    }
    return (t * tool_).translation();
}

Eigen::Matrix<double, 3, Eigen::Dynamic> KinematicChain::jacobian(double r, const Eigen::VectorXd& q) const {
    check_dims(q);
    std::vector<Eigen::Vector3d> origins(size());
    std::vector<Eigen::Vector3d> axes(size());
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    for (int i = 0; i < size(); ++i) {
        t = t * joints_[i].fixed;
        origins[i] = t.translation();
        axes[i] = t.linear() * joints_[i].axis;
        t = t * joint_motion(joints_[i], i == 0 ? r : q[i - 1]);
    }
    const Eigen::Vector3d ee = (t * tool_).translation();
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, size());
    for (int i = 0; i < size(); ++i) {
        if (joints_[i].kind == JointKind::prismatic)
            jac.col(i) = axes[i];
        else
            jac.col(i) = axes[i].cross(ee - origins[i]);
    }
    return jac;
}

void Limits::validate(int n_total) const {
    if (lower.size() != n_total || upper.size() != n_total)
        throw std::invalid_argument("limits: expected " + std::to_string(n_total) + " entries");
    for (int i = 0; i < n_total; ++i)
        if (!(lower[i] <= 0.0 && upper[i] >= 0.0))
            throw std::invalid_argument("limits: entry " + std::to_string(i) + " must satisfy LL <= 0 <= UL");
}

Limits Limits::default_limits(int n_arm) {
    Limits l;
    l.lower = Eigen::VectorXd::Constant(1 + n_arm, -0.35);
    l.upper = Eigen::VectorXd::Constant(1 + n_arm, 0.35);
    l.lower[0] = -0.6;
    l.upper[0] = 0.6;
    return l;
}

Eigen::VectorXd clipped_increment(const Eigen::VectorXd& net, const Eigen::VectorXd& delta,
                                  const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    if (net.size() != delta.size() || net.size() != lower.size() || net.size() != upper.size())
        throw std::invalid_argument("clipped_increment: dimension mismatch");
    return (net + delta).cwiseMax(lower).cwiseMin(upper);
}

IkResult clipped_ik(const KinematicChain& chain, const Eigen::Vector3d& x_d, const Eigen::VectorXd& q_seed,
                    const Limits& limits, const IkOptions& options) {
    limits.validate(chain.size());
    if (!(options.tol > 0.0)) throw std::invalid_argument("clipped_ik: tolerance must be > 0");

    const int n = chain.size();
    Eigen::VectorXd net = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_c = q_seed;
    Eigen::Vector3d x_c = chain.forward(0.0, q_c);
    const double lambda2 = options.damping * options.damping;

    IkResult res;
    do {
        const Eigen::Matrix<double, 3, Eigen::Dynamic> jac = chain.jacobian(net[0], q_c);
        const Eigen::Matrix3d jjt = jac * jac.transpose() + lambda2 * Eigen::Matrix3d::Identity();
        Eigen::VectorXd step = jac.transpose() * jjt.ldlt().solve(x_d - x_c);
        if (options.step_cap_enabled) step = step.cwiseMax(-options.step_cap).cwiseMin(options.step_cap);
        if (!step.allFinite()) break;
        net = clipped_increment(net, step, limits.lower, limits.upper);
        q_c = q_seed + net.tail(n - 1);
        x_c = chain.forward(net[0], q_c);
        ++res.iterations;
    } while (res.iterations < options.max_iter && (x_c - x_d).norm() > options.tol);

    res.net_dr = net[0];
    res.net_dq = net.tail(n - 1);
    res.residual = (x_c - x_d).norm();
    res.converged = res.residual <= options.tol;
    return res;
}

}  // namespace strikelab::kinematics
