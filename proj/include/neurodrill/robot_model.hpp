#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/geometry.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace neurodrill {

using JointVector = Eigen::VectorXd;
using JacobianMatrix = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Revolute joint described by its screw axis at the zero configuration.
struct JointSpec {
    Vec3 axis = Vec3::UnitZ();   // unit direction, base frame
    Vec3 point = Vec3::Zero();   // any point on the axis, base frame (m)
    double lower = -2.0 * std::numbers::pi;
    double upper = 2.0 * std::numbers::pi;
};

/// Serial revolute chain in product-of-exponentials form.
///
/// flange_home is the end-effector pose at theta = 0. camera_mount (T_EC) and
/// pin_mount (T_CS) are the calibrated end-effector->camera and camera->split-pin
/// transforms.
struct KinematicChain {
    std::vector<JointSpec> joints;
    RigidTransform flange_home;
    RigidTransform camera_mount;
    RigidTransform pin_mount;

    int size() const { return static_cast<int>(joints.size()); }

    std::string validation_error() const {
        if (joints.empty()) return "chain has no joints";
        for (std::size_t i = 0; i < joints.size(); ++i) {
            const auto& j = joints[i];
            if (std::abs(j.axis.norm() - 1.0) > 1e-9) return "joint " + std::to_string(i) + " axis is not unit-norm";
            if (!(j.lower < j.upper)) return "joint " + std::to_string(i) + " limits must satisfy lower < upper";
        }
        for (const auto* t : {&flange_home, &camera_mount, &pin_mount}) {
            if (t->orthonormality_error() > 1e-9 || t->rotation().determinant() < 0.0)
                return "fixed transform rotation is not a proper rotation";
        }
        return {};
    }

    bool within_limits(const JointVector& theta, double slack = 0.0) const {
        for (int i = 0; i < size(); ++i) {
            if (theta[i] < joints[i].lower - slack || theta[i] > joints[i].upper + slack) return false;
        }
        return true;
    }

    /// Generic 6R arm with UR10-like link lengths; tool z points along base +y at home.
    static KinematicChain ur10_like() {
        constexpr double l1 = 0.612, l2 = 0.5723, w1 = 0.163941, w2 = 0.0922, h1 = 0.1273, h2 = 0.1157;
        KinematicChain c;
        c.joints = {
            {Vec3(0, 0, 1), Vec3(0, 0, 0)},
            {Vec3(0, 1, 0), Vec3(0, 0, h1)},
            {Vec3(0, 1, 0), Vec3(l1, 0, h1)},
            {Vec3(0, 1, 0), Vec3(l1 + l2, 0, h1)},
            {Vec3(0, 0, -1), Vec3(l1 + l2, w1, 0)},
            {Vec3(0, 1, 0), Vec3(l1 + l2, 0, h1 - h2)},
        };
        Mat3 r;
        r << -1, 0, 0,
             0, 0, 1,
             0, 1, 0;
        c.flange_home = RigidTransform(r, Vec3(l1 + l2, w1 + w2, h1 - h2));
        c.camera_mount = RigidTransform::from_translation(Vec3(0.0, 0.0, 0.05));
        c.pin_mount = RigidTransform::from_translation(Vec3(0.0, 0.0, 0.02));
        return c;
    }
};

struct JointState {
    JointVector position;
    JointVector velocity;
    double time = 0.0;
};

struct JointKnot {
    double time = 0.0;
    JointVector position;
    JointVector velocity;
    JointVector acceleration;
};

struct JointTrajectory {
    std::vector<JointKnot> knots;

    double duration() const { return knots.empty() ? 0.0 : knots.back().time - knots.front().time; }

    /// Linear interpolation between knots, clamped at both ends.
    JointKnot sample(double t) const {
        if (knots.empty()) fail(ErrorCode::InvalidArgument, "empty trajectory");
        if (t <= knots.front().time) return knots.front();
        if (t >= knots.back().time) return knots.back();
        const auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                         [](double x, const JointKnot& k) { return x < k.time; });
        const JointKnot& b = *it;
        const JointKnot& a = *(it - 1);
        const double s = (t - a.time) / (b.time - a.time);
        JointVector acc = a.acceleration;
        if (acc.size() == 0) acc = JointVector::Zero(a.position.size());
        return {t, a.position + s * (b.position - a.position), a.velocity + s * (b.velocity - a.velocity), acc};
    }
};

namespace detail {

inline RigidTransform screw_exp(const JointSpec& j, double theta) {
    const Mat3 r = so3_exp(j.axis * theta);
    return {r, (Mat3::Identity() - r) * j.point};
}

inline void check_limits(const KinematicChain& chain, const JointVector& theta) {
    if (theta.size() != chain.size()) fail(ErrorCode::InvalidArgument, "joint vector size mismatch");
    for (int i = 0; i < chain.size(); ++i) {
        if (!std::isfinite(theta[i]) || theta[i] < chain.joints[i].lower - 1e-12 ||
            theta[i] > chain.joints[i].upper + 1e-12) {
            fail(ErrorCode::JointLimitViolation, "joint " + std::to_string(i) + " outside its limits");
        }
    }
}

/// Truncated-SVD pseudoinverse solve; singular values below rel_cutoff * sigma_max are dropped.
struct PinvSolve {
    Eigen::VectorXd x;
    double min_retained_sigma = 0.0;
    int rank = 0;
};

inline PinvSolve pinv_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double rel_cutoff) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    PinvSolve out;
    out.x = Eigen::VectorXd::Zero(a.cols());
    if (s.size() == 0 || s[0] <= 0.0) return out;
    const double cutoff = rel_cutoff * s[0];
    const Eigen::VectorXd utb = svd.matrixU().transpose() * b;
    out.min_retained_sigma = s[0];
    for (int i = 0; i < s.size(); ++i) {
        if (s[i] <= cutoff) break;
        out.x += svd.matrixV().col(i) * (utb[i] / s[i]);
        out.min_retained_sigma = s[i];
        ++out.rank;
    }
    return out;
}

inline RigidTransform fk_unchecked(const KinematicChain& chain, const JointVector& theta) {
    RigidTransform t;
    for (int i = 0; i < chain.size(); ++i) t = t * screw_exp(chain.joints[i], theta[i]);
    return t * chain.flange_home;
}

inline JacobianMatrix jacobian_unchecked(const KinematicChain& chain, const JointVector& theta) {
    const int n = chain.size();
    std::vector<RigidTransform> prefix(n + 1);
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * screw_exp(chain.joints[i], theta[i]);
    const Vec3 p_e = (prefix[n] * chain.flange_home).translation();

    JacobianMatrix j(6, n);
    for (int i = 0; i < n; ++i) {
        const Vec3 w = prefix[i].rotation() * chain.joints[i].axis;
        const Vec3 q = prefix[i].apply(chain.joints[i].point);
        j.block<3, 1>(0, i) = w.cross(p_e - q);
        j.block<3, 1>(3, i) = w;
    }
    return j;
}

}  // namespace detail

/// Flange pose T_BE for joint angles theta.
inline RigidTransform forward_kinematics(const KinematicChain& chain, const JointVector& theta) {
    detail::check_limits(chain, theta);
    return detail::fk_unchecked(chain, theta);
}

inline RigidTransform camera_pose(const KinematicChain& chain, const JointVector& theta) {
    return forward_kinematics(chain, theta) * chain.camera_mount;
}

/// Geometric Jacobian: rows (linear velocity of the flange origin; angular velocity),
/// both expressed in the base frame.
inline JacobianMatrix jacobian(const KinematicChain& chain, const JointVector& theta) {
    detail::check_limits(chain, theta);
    return detail::jacobian_unchecked(chain, theta);
}

/// Flange twist in the base frame, V_E = J(theta) * theta_dot.
inline Twist end_effector_twist(const KinematicChain& chain, const JointVector& theta, const JointVector& theta_dot) {
    return Twist::from_vector(jacobian(chain, theta) * theta_dot);
}

namespace detail {

/// Maps a base-frame flange twist into the flange body frame.
inline Mat6 base_to_body(const Mat3& r_be) {
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>() = r_be.transpose();
    m.bottomRightCorner<3, 3>() = r_be.transpose();
    return m;
}

}  // namespace detail

/// Camera body twist V_C = Ad(T_CE) V_E, with V_E the flange twist in the flange frame.
inline Twist camera_twist(const KinematicChain& chain, const JointVector& theta, const JointVector& theta_dot) {
    const RigidTransform t_be = forward_kinematics(chain, theta);
    const Vec6 v_base = jacobian(chain, theta) * theta_dot;
    const Vec6 v_body = detail::base_to_body(t_be.rotation()) * v_base;
    return Twist::from_vector(adjoint(chain.camera_mount.inverse()) * v_body);
}

struct IkOptions {
    double tolerance = 1e-10;       // translation norm + rotation angle
    int max_iterations = 200;
    double max_step = 0.5;          // rad, per-iteration step norm clamp
    double sigma_cutoff = 1e-6;     // relative truncation threshold
};

struct IkResult {
    JointVector theta;
    int iterations = 0;
    double error = 0.0;
};

/// Newton-Raphson inverse kinematics for the flange pose, seeded at theta0.
inline IkResult inverse_kinematics(const KinematicChain& chain, const RigidTransform& target,
                                   const JointVector& theta0, const IkOptions& opt = {}) {
    detail::check_limits(chain, theta0);
    JointVector theta = theta0;
    const int n = chain.size();
    IkResult result;
    for (int iter = 0; iter <= opt.max_iterations; ++iter) {
        const RigidTransform current = detail::fk_unchecked(chain, theta);
        const double err = pose_error(current, target);
        if (!std::isfinite(err)) break;
        if (err <= opt.tolerance) {
            result.iterations = iter;
            result.error = err;
            // bring each joint into its limits modulo 2 pi
            for (int i = 0; i < n; ++i) {
                const auto& js = chain.joints[i];
                double q = theta[i];
                while (q > js.upper) q -= 2.0 * std::numbers::pi;
                while (q < js.lower) q += 2.0 * std::numbers::pi;
                if (q > js.upper) {
                    fail(ErrorCode::JointLimitViolation,
                         "no in-limit solution for joint " + std::to_string(i));
                }
                theta[i] = q;
            }
            result.theta = theta;
            return result;
        }
        if (iter == opt.max_iterations) break;
        Vec6 e;
        e.head<3>() = target.translation() - current.translation();
        e.tail<3>() = so3_log(target.rotation() * current.rotation().transpose());
        auto step = detail::pinv_solve(detail::jacobian_unchecked(chain, theta), e, opt.sigma_cutoff).x;
        const double norm = step.norm();
        if (norm > opt.max_step) step *= opt.max_step / norm;
        theta += step;
    }
    fail(ErrorCode::IKDivergence, "inverse kinematics did not converge in " +
                                      std::to_string(opt.max_iterations) + " iterations");
}

struct JointVelocitySolution {
    JointVector velocity;
    bool near_singular = false;
    double min_singular_value = 0.0;
    double residual = 0.0;   // ||J theta_dot - V||, base-frame flange twist
};

/// Joint velocities realizing the camera body twist: theta_dot = J^+ Ad(T_CE)^-1 V_C.
inline JointVelocitySolution joint_velocity_for_twist(const KinematicChain& chain, const JointVector& theta,
                                                      const Twist& camera_twist_cmd,
                                                      double sigma_cutoff = 1e-6,
                                                      double singularity_threshold = 1e-4) {
    const RigidTransform t_be = forward_kinematics(chain, theta);
    const JacobianMatrix j = jacobian(chain, theta);
    const Vec6 v_body = adjoint(chain.camera_mount) * camera_twist_cmd.vector();
    Mat6 body_to_base = Mat6::Zero();
    body_to_base.topLeftCorner<3, 3>() = t_be.rotation();
    body_to_base.bottomRightCorner<3, 3>() = t_be.rotation();
    const Vec6 v_base = body_to_base * v_body;

    const auto solve = detail::pinv_solve(j, v_base, sigma_cutoff);
    JointVelocitySolution out;
    out.velocity = solve.x;
    out.min_singular_value = solve.min_retained_sigma;
    out.near_singular = solve.rank > 0 && solve.min_retained_sigma < singularity_threshold;
    out.residual = (j * solve.x - v_base).norm();
    return out;
}

/// Synchronized trapezoidal joint interpolation, sampled every dt seconds.
inline JointTrajectory plan_joint_trajectory(const JointVector& from, const JointVector& to, double v_max,
                                             double a_max, double dt = 1e-3) {
    if (from.size() != to.size()) fail(ErrorCode::InvalidArgument, "trajectory endpoint size mismatch");
    if (!(v_max > 0.0) || !(a_max > 0.0) || !(dt > 0.0))
        fail(ErrorCode::InvalidArgument, "velocity, acceleration and dt must be positive");
    const JointVector delta = to - from;
    const double dist = delta.cwiseAbs().maxCoeff();
    JointTrajectory traj;
    const JointVector zero = JointVector::Zero(from.size());
    if (dist == 0.0) {
        traj.knots.push_back({0.0, to, zero, zero});
        return traj;
    }
    // profile of the joint with the largest excursion; others are scaled copies
    double t_acc, v_peak, total;
    if (dist <= v_max * v_max / a_max) {
        t_acc = std::sqrt(dist / a_max);
        v_peak = a_max * t_acc;
        total = 2.0 * t_acc;
    } else {
        t_acc = v_max / a_max;
        v_peak = v_max;
        total = dist / v_max + t_acc;
    }
    const double acc = v_peak / t_acc;
    auto profile = [&](double t, double& s, double& sd, double& sdd) {
        double pos, vel, a;
        if (t < t_acc) {
            pos = 0.5 * acc * t * t;
            vel = acc * t;
            a = acc;
        } else if (t < total - t_acc) {
            pos = 0.5 * acc * t_acc * t_acc + v_peak * (t - t_acc);
            vel = v_peak;
            a = 0.0;
        } else {
            const double rem = std::max(0.0, total - t);
            pos = dist - 0.5 * acc * rem * rem;
            vel = acc * rem;
            a = -acc;
        }
        s = pos / dist;
        sd = vel / dist;
        sdd = a / dist;
    };
    const int steps = static_cast<int>(std::ceil(total / dt));
    traj.knots.reserve(steps + 1);
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        double s, sd, sdd;
        profile(t, s, sd, sdd);
        traj.knots.push_back({t, from + s * delta, sd * delta, sdd * delta});
    }
    traj.knots.push_back({total, to, zero, zero});
    return traj;
}

struct PlantGains {
    double time_constant = 0.01;   // actuator velocity lag tau (s); 0 = ideal
    double kp = 25.0;              // 1/s
    double ki = 0.0;               // 1/s^2
    double kd = 0.0;               // unitless
};

/// Position setpoint with optional velocity and acceleration feedforward. The
/// acceleration term is scaled by the actuator time constant.
struct PositionCommand {
    JointVector position;
    JointVector velocity_ff;
    JointVector acceleration_ff;
};

struct VelocityCommand {
    JointVector velocity;
};

using PlantCommand = std::variant<PositionCommand, VelocityCommand>;

/// Per-joint first-order velocity actuators driven by PID position control
/// (trajectory mode) or a direct velocity reference (servo mode).
class JointPlant {
public:
    JointPlant(const KinematicChain& chain, JointState initial, PlantGains gains = {})
        : lower_(chain.size()), upper_(chain.size()), state_(std::move(initial)), gains_(gains) {
        for (int i = 0; i < chain.size(); ++i) {
            lower_[i] = chain.joints[i].lower;
            upper_[i] = chain.joints[i].upper;
        }
        if (state_.velocity.size() == 0) state_.velocity = JointVector::Zero(state_.position.size());
        integral_ = JointVector::Zero(state_.position.size());
        prev_error_ = JointVector::Zero(state_.position.size());
    }

    const JointState& state() const { return state_; }
    const PlantGains& gains() const { return gains_; }
    bool last_step_clamped() const { return clamped_; }

    void reset_controller() {
        integral_.setZero();
        prev_error_.setZero();
        have_prev_ = false;
    }

    const JointState& step(const PlantCommand& command, double dt) {
        if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "plant step dt must be positive");
        JointVector cmd;
        if (const auto* pos = std::get_if<PositionCommand>(&command)) {
            const JointVector err = pos->position - state_.position;
            integral_ += err * dt;
            JointVector deriv = JointVector::Zero(err.size());
            if (have_prev_) deriv = (err - prev_error_) / dt;
            prev_error_ = err;
            have_prev_ = true;
            cmd = gains_.kp * err + gains_.ki * integral_ + gains_.kd * deriv;
            if (pos->velocity_ff.size() == cmd.size()) cmd += pos->velocity_ff;
            if (pos->acceleration_ff.size() == cmd.size()) cmd += gains_.time_constant * pos->acceleration_ff;
        } else {
            cmd = std::get<VelocityCommand>(command).velocity;
            have_prev_ = false;
        }

        const double tau = gains_.time_constant;
        if (tau <= 0.0) {
            state_.position += cmd * dt;
            state_.velocity = cmd;
        } else {
            const double decay = std::exp(-dt / tau);
            const JointVector gap = state_.velocity - cmd;
            state_.position += cmd * dt + gap * (tau * (1.0 - decay));
            state_.velocity = cmd + gap * decay;
        }
        state_.time += dt;

        clamped_ = false;
        for (int i = 0; i < state_.position.size(); ++i) {
            if (state_.position[i] < lower_[i] || state_.position[i] > upper_[i]) {
                state_.position[i] = std::clamp(state_.position[i], lower_[i], upper_[i]);
                state_.velocity[i] = 0.0;
                clamped_ = true;
            }
        }
        return state_;
    }

private:
    JointVector lower_;
    JointVector upper_;
    JointState state_;
    PlantGains gains_;
    JointVector integral_;
    JointVector prev_error_;
    bool have_prev_ = false;
    bool clamped_ = false;
};

}  // namespace neurodrill
