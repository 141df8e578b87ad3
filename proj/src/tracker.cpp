#include "strikelab/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strikelab::tracker {

namespace {

Vector6d derivative(const Vector6d& x, const FlightModel& m) {
    Vector6d dx;
    const Eigen::Vector3d v = x.tail<3>();
    dx.head<3>() = v;
    dx.tail<3>() = m.gravity - m.drag * v.norm() * v;
    return dx;
}

Matrix6d derivative_jacobian(const Vector6d& x, const FlightModel& m) {
    Matrix6d a = Matrix6d::Zero();
    a.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
    const Eigen::Vector3d v = x.tail<3>();
    const double speed = v.norm();
    if (m.drag != 0.0 && speed > 0.0)
        a.block<3, 3>(3, 3) = -m.drag * (speed * Eigen::Matrix3d::Identity() + v * v.transpose() / speed);
    return a;
}

/// One RK4 step and the exact Jacobian of that discrete map.
void rk4_step(Vector6d& x, Matrix6d& f, double h, const FlightModel& m) {
    const Matrix6d eye = Matrix6d::Identity();
    const Vector6d k1 = derivative(x, m);
    const Matrix6d d1 = derivative_jacobian(x, m);
    const Vector6d x2 = x + 0.5 * h * k1;
    const Vector6d k2 = derivative(x2, m);
    const Matrix6d d2 = derivative_jacobian(x2, m) * (eye + 0.5 * h * d1);
    const Vector6d x3 = x + 0.5 * h * k2;
    const Vector6d k3 = derivative(x3, m);
    const Matrix6d d3 = derivative_jacobian(x3, m) * (eye + 0.5 * h * d2);
    const Vector6d x4 = x + h * k3;
    const Vector6d k4 = derivative(x4, m);
    const Matrix6d d4 = derivative_jacobian(x4, m) * (eye + h * d3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    f = (eye + h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)) * f;
}

/// Propagates x by dt, accumulating the transition Jacobian into f.
void integrate(Vector6d& x, Matrix6d& f, double dt, const FlightModel& m) {
    if (dt <= 0.0) return;
    if (m.drag == 0.0) {
        const Eigen::Vector3d p = x.head<3>();
        const Eigen::Vector3d v = x.tail<3>();
        x.head<3>() = p + v * dt + 0.5 * m.gravity * dt * dt;
        x.tail<3>() = v + m.gravity * dt;
        Matrix6d step = Matrix6d::Identity();
        step.block<3, 3>(0, 3) = dt * Eigen::Matrix3d::Identity();
        f = step * f;
        return;
    }
    const int steps = std::max(1, static_cast<int>(std::ceil(dt / m.max_substep)));
    const double h = dt / steps;
    for (int i = 0; i < steps; ++i) rk4_step(x, f, h, m);
}

}  // namespace

Vector6d propagate_state(const Vector6d& state, double dt, const FlightModel& model) {
    Vector6d x = state;
    Matrix6d f = Matrix6d::Identity();
    integrate(x, f, dt, model);
    return x;
}

BallEstimate ekf_predict(const BallEstimate& est, double dt, const FlightModel& model) {
    if (dt < 0.0) throw std::invalid_argument("ekf_predict: dt must be >= 0");
    BallEstimate out = est;
    Matrix6d f = Matrix6d::Identity();
    integrate(out.mean, f, dt, model);
    Vector6d q;
    q << Eigen::Vector3d::Constant(model.q_position), Eigen::Vector3d::Constant(model.q_velocity);
    out.covariance = f * est.covariance * f.transpose();
    out.covariance.diagonal() += q * dt;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    out.stamp = est.stamp + dt;
    return out;
}

BallEstimate ekf_update(const BallEstimate& est, const Observation& obs) {
    if (!(obs.noise_std > 0.0)) throw std::invalid_argument("ekf_update: noise_std must be > 0");
    Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
    h.block<3, 3>(0, 0) = Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d r = obs.noise_std * obs.noise_std * Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d s = h * est.covariance * h.transpose() + r;
    const Eigen::LLT<Eigen::Matrix3d> llt(s);
    if (llt.info() != Eigen::Success) throw std::domain_error("ekf_update: singular innovation covariance");
    const Eigen::Matrix<double, 6, 3> k = llt.solve(h * est.covariance).transpose();

    BallEstimate out = est;
    out.mean = est.mean + k * (obs.position - est.position());
    const Matrix6d ikh = Matrix6d::Identity() - k * h;
    out.covariance = ikh * est.covariance * ikh.transpose() + k * r * k.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

std::optional<Crossing> predict_crossing(const BallEstimate& est, const HitPlane& plane, const FlightModel& model,
                                         double horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("predict_crossing: horizon must be > 0");
    constexpr double kMinTime = 1e-9;
    const double d0 = plane.signed_distance(est.position());

    auto make = [&](const Vector6d& x, double t) {
        Crossing c;
        c.time_to_hit = t;
        c.stamp = est.stamp + t;
        c.position = x.head<3>();
        c.velocity = x.tail<3>();
        return c;
    };

    if (model.drag == 0.0) {
        const double a1 = plane.normal.dot(est.velocity());
        const double a2 = plane.normal.dot(model.gravity);
        double roots[2];
        int n_roots = 0;
        if (std::abs(a2) < 1e-15) {
            if (a1 != 0.0) roots[n_roots++] = -d0 / a1;
        } else {
            const double disc = a1 * a1 - 2.0 * a2 * d0;
            if (disc > 0.0) {
                const double sq = std::sqrt(disc);
                const double q = -0.5 * (a1 + (a1 >= 0.0 ? sq : -sq));
                roots[n_roots++] = q / (0.5 * a2);
                if (q != 0.0) roots[n_roots++] = d0 / q;
            }
        }
        std::optional<double> best;
        for (int i = 0; i < n_roots; ++i)
            if (roots[i] > kMinTime && roots[i] <= horizon && (!best || roots[i] < *best)) best = roots[i];
        if (!best) return std::nullopt;
        return make(propagate_state(est.mean, *best, model), *best);
    }

    const double h = model.max_substep;
    Vector6d x = est.mean;
    double t = 0.0;
    double d_prev = d0;
    while (t < horizon) {
        const double step = std::min(h, horizon - t);
        const Vector6d x_next = propagate_state(x, step, model);
        const double d_next = plane.signed_distance(x_next.head<3>());
        const bool crosses = (d_prev < 0.0 && d_next >= 0.0) || (d_prev > 0.0 && d_next <= 0.0);
        if (crosses) {
            double lo = 0.0, hi = step;
            while (hi - lo > 1e-6) {
                const double mid = 0.5 * (lo + hi);
                const double dm = plane.signed_distance(propagate_state(x, mid, model).head<3>());
                if ((dm < 0.0) == (d_prev < 0.0) && dm != 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            const double t_hit = t + hi;
            if (t_hit > kMinTime) return make(propagate_state(x, hi, model), t_hit);
        }
        x = x_next;
        d_prev = d_next;
        t += step;
    }
    return std::nullopt;
}

BallTracker::BallTracker(TrackerOptions options) : options_(std::move(options)) {}

BallEstimate BallTracker::apply(const std::optional<BallEstimate>& prior, const Observation& obs) const {
    if (!prior) {
        BallEstimate init;
        init.mean.head<3>() = obs.position;
        init.mean.tail<3>().setZero();
        init.covariance.setZero();
        init.covariance.diagonal() << Eigen::Vector3d::Constant(obs.noise_std * obs.noise_std),
            Eigen::Vector3d::Constant(options_.initial_velocity_var);
        init.stamp = obs.stamp;
        return init;
    }
    return ekf_update(ekf_predict(*prior, std::max(0.0, obs.stamp - prior->stamp), options_.model), obs);
}

void BallTracker::replay() {
    current_ = base_;
    for (const auto& obs : window_) current_ = apply(current_, obs);
}

bool BallTracker::submit(const Observation& obs) {
    if (!(obs.noise_std > 0.0)) throw std::invalid_argument("observation noise_std must be > 0");
    const double newest = window_.empty() ? (current_ ? current_->stamp : obs.stamp) : window_.back().stamp;
    if (current_ && obs.stamp < newest - options_.reorder_window) {
        ++rejected_;
        return false;
    }
    ++count_;
    const auto pos = std::upper_bound(window_.begin(), window_.end(), obs.stamp,
                                      [](double s, const Observation& o) { return s < o.stamp; });
    const bool in_order = pos == window_.end();
    window_.insert(pos, obs);
    if (in_order)
        current_ = apply(current_, obs);
    else
        replay();

    const double horizon = window_.back().stamp - options_.reorder_window;
    while (window_.size() > 1 && window_.front().stamp < horizon) {
        base_ = apply(base_, window_.front());
        window_.pop_front();
    }
    return true;
}

std::optional<BallEstimate> BallTracker::estimate_at(double stamp) const {
    if (!current_) return std::nullopt;
    return ekf_predict(*current_, std::max(0.0, stamp - current_->stamp), options_.model);
}

}  // namespace strikelab::tracker
