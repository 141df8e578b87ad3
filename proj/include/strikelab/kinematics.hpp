#pragma once

// Serial chain with a prismatic base joint (the lateral rail) followed by arm
// joints, and the clipped iterative IK used to pick hit configurations.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace strikelab::kinematics {

enum class JointKind { prismatic, revolute };

struct Joint {
    JointKind kind = JointKind::revolute;
    /// Unit axis in the joint frame.
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
    /// Parent frame to joint frame, applied before the joint motion.
    Eigen::Isometry3d fixed = Eigen::Isometry3d::Identity();
};

class KinematicChain {
public:
    KinematicChain() = default;
    /// Throws std::invalid_argument unless the first joint is prismatic, there
    /// are at least 2 joints, axes are unit and rotations orthonormal.
    explicit KinematicChain(std::vector<Joint> joints,
                            Eigen::Isometry3d tool = Eigen::Isometry3d::Identity());

    /// Lateral rail along +y followed by a 7-DoF arm mounted 0.9 m up, with
    /// the racket center 0.5 m past the last wrist joint. Synthetic geometry.
    static KinematicChain default_chain();

    int size() const { return static_cast<int>(joints_.size()); }
    int arm_dof() const { return size() - 1; }
    const std::vector<Joint>& joints() const { return joints_; }
    const Eigen::Isometry3d& tool() const { return tool_; }

    Eigen::Vector3d forward(double r, const Eigen::VectorXd& q) const;
    /// 3 × (1 + n); column 0 is the rail.
    Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian(double r, const Eigen::VectorXd& q) const;

private:
    void check_dims(const Eigen::VectorXd& q) const;

    std::vector<Joint> joints_;
    Eigen::Isometry3d tool_ = Eigen::Isometry3d::Identity();
};

inline Eigen::Vector3d forward(const KinematicChain& chain, double r, const Eigen::VectorXd& q) {
    return chain.forward(r, q);
}

inline Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian(const KinematicChain& chain, double r,
                                                         const Eigen::VectorXd& q) {
    return chain.jacobian(r, q);
}

/// Box on the cumulative offsets (rail, arm...) from the seed configuration.
struct Limits {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    /// Requires lower <= 0 <= upper and 1 + n entries each.
    void validate(int n_total) const;
    static Limits default_limits(int n_arm);
};

struct IkOptions {
    int max_iter = 100;
    /// Euclidean convergence radius, meters.
    double tol = 1e-3;
    /// λ in Jᵀ(J Jᵀ + λ² I)⁻¹.
    double damping = 1e-3;
    /// Per-component cap on each raw step before clipping.
    bool step_cap_enabled = true;
    double step_cap = 0.2;
};

struct IkResult {
    double net_dr = 0.0;
    Eigen::VectorXd net_dq;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

/// clamp(net + delta, lower, upper) componentwise.
Eigen::VectorXd clipped_increment(const Eigen::VectorXd& net, const Eigen::VectorXd& delta,
                                  const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

/// Iterates damped Gauss-Newton steps from (0, q_seed), clipping the
/// cumulative rail and joint offsets to `limits` after every step. The result
/// is always inside the limits; convergence is reported, not required.
IkResult clipped_ik(const KinematicChain& chain, const Eigen::Vector3d& x_d,
                    const Eigen::VectorXd& q_seed, const Limits& limits,
                    const IkOptions& options = {});

}  // namespace strikelab::kinematics
