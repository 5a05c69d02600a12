#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/geometry.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

namespace neurodrill {

/// Time-parametrized camera pose T_BC(t), t in seconds from 0 to duration.
struct CameraTrajectory {
    double duration = 0.0;
    std::function<RigidTransform(double)> pose;

    /// Camera body twist by central differences of the pose.
    Twist twist(double t, double h = 1e-5) const {
        const double t0 = std::max(0.0, t - h);
        const double t1 = std::min(duration, t + h);
        if (t1 <= t0) return {};
        const RigidTransform a = pose(t0);
        const RigidTransform b = pose(t1);
        const RigidTransform delta = a.inverse() * b;
        return {delta.translation() / (t1 - t0), so3_log(delta.rotation()) / (t1 - t0)};
    }

    static CameraTrajectory stationary(const RigidTransform& t_bc, double duration) {
        return {duration, [t_bc](double) { return t_bc; }};
    }

    /// Constant body-frame translation velocity starting from t_bc0.
    static CameraTrajectory constant_velocity(const RigidTransform& t_bc0, const Vec3& v_camera, double duration) {
        return {duration, [t_bc0, v_camera](double t) {
                    return t_bc0 * RigidTransform::from_translation(v_camera * t);
                }};
    }
};

struct PoseSample {
    std::uint64_t t = 0;   // microseconds
    RigidTransform t_bc;
};

/// Camera poses sampled at a fixed rate; interpolated for arbitrary timestamps.
struct PoseLog {
    std::vector<PoseSample> samples;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }

    bool covers(std::uint64_t t) const {
        return !samples.empty() && t >= samples.front().t && t <= samples.back().t;
    }

    RigidTransform at(std::uint64_t t) const {
        if (samples.empty()) fail(ErrorCode::InvalidArgument, "empty pose log");
        if (t <= samples.front().t) return samples.front().t_bc;
        if (t >= samples.back().t) return samples.back().t_bc;
        const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                         [](std::uint64_t x, const PoseSample& s) { return x < s.t; });
        const PoseSample& b = *it;
        const PoseSample& a = *(it - 1);
        const double s = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
        return interpolate(a.t_bc, b.t_bc, s);
    }
};

}  // namespace neurodrill
