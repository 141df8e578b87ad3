#include "strikelab/segment.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "strikelab/simd/kernels.hpp"

namespace strikelab {

void HitPlane::validate() const {
    if (std::abs(normal.norm() - 1.0) > 1e-9) throw std::invalid_argument("hit plane: normal must be unit");
}

}  // namespace strikelab

namespace strikelab::segment {

namespace {

std::span<const double> row_span(const RowMatrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

RowMatrix finite_difference_velocities(const Eigen::VectorXd& timestamps, const RowMatrix& positions) {
    const Eigen::Index n = positions.rows();
    if (n < 2 || timestamps.size() != n)
        throw std::invalid_argument("finite differences need >= 2 samples with matching timestamps");
    RowMatrix vel(n, positions.cols());
    const auto cols = static_cast<std::size_t>(positions.cols());
    auto out_row = [&](Eigen::Index r) { return std::span<double>(vel.data() + r * vel.cols(), cols); };
    simd::scaled_difference(row_span(positions, 1), row_span(positions, 0), 1.0 / (timestamps[1] - timestamps[0]),
                            out_row(0));
    for (Eigen::Index t = 1; t + 1 < n; ++t)
        simd::scaled_difference(row_span(positions, t + 1), row_span(positions, t - 1),
                                1.0 / (timestamps[t + 1] - timestamps[t - 1]), out_row(t));
    simd::scaled_difference(row_span(positions, n - 1), row_span(positions, n - 2),
                            1.0 / (timestamps[n - 1] - timestamps[n - 2]), out_row(n - 1));
    return vel;
}

Recording Recording::from_positions(Eigen::VectorXd timestamps, RowMatrix positions,
                                    std::vector<std::string> names) {
    Recording rec;
    rec.velocities = finite_difference_velocities(timestamps, positions);
    rec.timestamps = std::move(timestamps);
    rec.positions = std::move(positions);
    rec.names = std::move(names);
    return rec;
}

Recording Recording::columns(int first, int count) const {
    if (first < 0 || count < 1 || first + count > dof())
        throw std::invalid_argument("recording: column range out of bounds");
    Recording out;
    out.timestamps = timestamps;
    out.positions = positions.middleCols(first, count);
    out.velocities = velocities.middleCols(first, count);
    if (static_cast<int>(names.size()) == dof())
        out.names.assign(names.begin() + first, names.begin() + first + count);
    return out;
}

promp::Trajectory Recording::slice(int start, int end) const {
    if (start < 0 || end >= samples() || end <= start) throw std::invalid_argument("recording: bad slice");
    promp::Trajectory tau;
    tau.timestamps = timestamps.segment(start, end - start + 1);
    tau.positions = positions.middleRows(start, end - start + 1);
    tau.velocities = RowMatrix(velocities.middleRows(start, end - start + 1));
    return tau;
}

void Recording::validate() const {
    if (positions.rows() < 5) throw std::invalid_argument("recording: at least 5 samples required");
    if (timestamps.size() != positions.rows()) throw std::invalid_argument("recording: timestamp count mismatch");
    if (velocities.rows() != positions.rows() || velocities.cols() != positions.cols())
        throw std::invalid_argument("recording: velocity shape mismatch");
    for (Eigen::Index t = 1; t < timestamps.size(); ++t)
        if (!(timestamps[t] > timestamps[t - 1]))
            throw std::invalid_argument("recording: timestamps must be strictly increasing");
}

Eigen::VectorXd velocity_envelope(const Recording& rec, int window) {
    if (window < 1 || window % 2 == 0) throw std::invalid_argument("velocity_envelope: window must be odd and >= 1");
    const Eigen::Index n = rec.velocities.rows();
    Eigen::VectorXd peak(n);
    simd::max_abs_rows({rec.velocities.data(), static_cast<std::size_t>(rec.velocities.size())},
                       static_cast<std::size_t>(n), static_cast<std::size_t>(rec.velocities.cols()),
                       {peak.data(), static_cast<std::size_t>(n)});
    const Eigen::Index half = window / 2;
    Eigen::VectorXd env(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
        env[i] = peak.segment(lo, hi - lo + 1).mean();
    }
    return env;
}

std::optional<Segment> segment_stroke(const Recording& rec, const SegmentOptions& options) {
    if (!(options.v_off > 0.0) || options.v_on < options.v_off)
        throw std::invalid_argument("segment_stroke: need v_on >= v_off > 0");
    if (options.min_hold < 1) throw std::invalid_argument("segment_stroke: min_hold must be >= 1");
    const Eigen::VectorXd env = velocity_envelope(rec, options.window);
    const int n = static_cast<int>(env.size());
    const int hold = options.min_hold;

    auto held = [&](int i, auto pred) {
        if (i + hold > n) return false;
        for (int k = i; k < i + hold; ++k)
            if (!pred(env[k])) return false;
        return true;
    };

    int rise = -1;
    for (int i = 0; i < n && rise < 0; ++i)
        if (held(i, [&](double v) { return v >= options.v_on; })) rise = i;
    if (rise < 0) return std::nullopt;

    int start = rise;
    while (start > 0 && env[start - 1] < env[start] && env[start] > options.rest_level) --start;

    int fall = n - 1;
    for (int i = rise + hold; i < n; ++i) {
        if (held(i, [&](double v) { return v <= options.v_off; })) {
            fall = i;
            break;
        }
    }
    int end = fall;
    while (end + 1 < n && env[end + 1] < env[end] && env[end] > options.rest_level) ++end;

    if (end <= start) return std::nullopt;
    return Segment{start, end};
}

std::optional<double> hit_phase(const Recording& rec, const Segment& seg, const kinematics::KinematicChain& chain,
                                const HitPlane& plane) {
    if (rec.dof() != chain.size()) throw std::invalid_argument("hit_phase: recording does not match chain");
    if (seg.start < 0 || seg.end >= rec.samples() || seg.end <= seg.start)
        throw std::invalid_argument("hit_phase: invalid segment");

    auto distance = [&](int i) {
        const Eigen::VectorXd row = rec.positions.row(i).transpose();
        return plane.signed_distance(chain.forward(row[0], row.tail(row.size() - 1)));
    };
    const double t0 = rec.timestamps[seg.start];
    const double span = rec.timestamps[seg.end] - t0;
    double prev = distance(seg.start);
    for (int i = seg.start; i < seg.end; ++i) {
        const double next = distance(i + 1);
        const bool crosses = (prev < 0.0 && next >= 0.0) || (prev > 0.0 && next <= 0.0);
        if (crosses) {
            const double a = prev / (prev - next);
            const double t = rec.timestamps[i] + a * (rec.timestamps[i + 1] - rec.timestamps[i]);
            const double z = (t - t0) / span;
            if (z > 0.0 && z < 1.0) return z;
        }
        prev = next;
    }
    return std::nullopt;
}

}  // namespace strikelab::segment
