#include <neurodrill/robot_model.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace neurodrill;

namespace {

const KinematicChain kChain = KinematicChain::ur10_like();

JointVector home() {
    JointVector t(6);
    t << 0.0, -1.2, 1.5, -1.9, -1.5707963, 0.3;
    return t;
}

JointVector random_theta(std::mt19937_64& rng, double spread = 1.0) {
    std::uniform_real_distribution<double> d(-spread, spread);
    JointVector t = home();
    for (int i = 0; i < 6; ++i) t[i] += d(rng);
    return t;
}

KinematicChain single_z_joint(const Vec3& flange_point) {
    KinematicChain c;
    c.joints = {{Vec3::UnitZ(), Vec3::Zero()}};
    c.flange_home = RigidTransform::from_translation(flange_point);
    return c;
}

// Independent FK oracle: product of homogeneous 4x4 matrices built from the
// Rodrigues formula directly.
Mat4 fk_oracle(const KinematicChain& c, const JointVector& theta) {
    Mat4 t = Mat4::Identity();
    for (int i = 0; i < c.size(); ++i) {
        const Vec3 w = c.joints[i].axis;
        const Mat3 k = cross_matrix(w);
        const Mat3 r = Mat3::Identity() + std::sin(theta[i]) * k + (1 - std::cos(theta[i])) * k * k;
        Mat4 e = Mat4::Identity();
        e.topLeftCorner<3, 3>() = r;
        e.topRightCorner<3, 1>() = (Mat3::Identity() - r) * c.joints[i].point;
        t = t * e;
    }
    return t * c.flange_home.matrix();
}

}  // namespace

TEST(ForwardKinematics, ZeroConfigurationIsFlangeHome) {
    const JointVector zero = JointVector::Zero(6);
    EXPECT_LT(pose_error(forward_kinematics(kChain, zero), kChain.flange_home), 1e-15);
    // hand computation of the documented home pose
    const Vec3 p = forward_kinematics(kChain, zero).translation();
    EXPECT_NEAR(p.x(), 0.612 + 0.5723, 1e-12);
    EXPECT_NEAR(p.y(), 0.163941 + 0.0922, 1e-12);
    EXPECT_NEAR(p.z(), 0.1273 - 0.1157, 1e-12);
}

TEST(ForwardKinematics, MatchesMatrixProductOracle) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const JointVector th = random_theta(rng, 3.0);
        EXPECT_LT((forward_kinematics(kChain, th).matrix() - fk_oracle(kChain, th)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ForwardKinematics, SingleJoint) {
    const auto c = single_z_joint(Vec3(1, 0, 0));
    JointVector th(1);
    th << M_PI / 2;
    const RigidTransform t = forward_kinematics(c, th);
    EXPECT_LT((t.rotation() - so3_exp(Vec3(0, 0, M_PI / 2))).norm(), 1e-15);
    EXPECT_NEAR(t.translation().y(), 1.0, 1e-15);
}

TEST(ForwardKinematics, JointLimitViolation) {
    JointVector th = home();
    th[2] = 7.0;
    try {
        forward_kinematics(kChain, th);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::JointLimitViolation);
    }
}

TEST(Jacobian, SingleJointColumn) {
    const auto c = single_z_joint(Vec3(1, 0, 0));
    const JacobianMatrix j = jacobian(c, JointVector::Zero(1));
    Vec6 expect;
    expect << 0, 1, 0, 0, 0, 1;
    EXPECT_LT((j.col(0) - expect).norm(), 1e-15);
}

TEST(Jacobian, FiniteDifferenceOracle) {
    std::mt19937_64 rng(12);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const JointVector th = random_theta(rng, 2.0);
        const JacobianMatrix j = jacobian(kChain, th);
        for (int c = 0; c < 6; ++c) {
            JointVector tp = th, tm = th;
            tp[c] += h;
            tm[c] -= h;
            const Mat4 a = fk_oracle(kChain, tp), b = fk_oracle(kChain, tm);
            const Vec3 lin = (a.topRightCorner<3, 1>() - b.topRightCorner<3, 1>()) / (2 * h);
            // omega from dR/dt R^T
            const Mat3 rdot = (a.topLeftCorner<3, 3>() - b.topLeftCorner<3, 3>()) / (2 * h);
            const Mat3 w = rdot * fk_oracle(kChain, th).topLeftCorner<3, 3>().transpose();
            Vec6 fd;
            fd << lin, w(2, 1), w(0, 2), w(1, 0);
            EXPECT_LT((fd - j.col(c)).norm() / std::max(1.0, j.col(c).norm()), 1e-4);
        }
    }
}

TEST(Jacobian, ZeroVelocityZeroTwist) {
    const Twist v = end_effector_twist(kChain, home(), JointVector::Zero(6));
    EXPECT_EQ(v.vector(), Vec6::Zero());
    EXPECT_EQ(camera_twist(kChain, home(), JointVector::Zero(6)).vector(), Vec6::Zero());
}

TEST(CameraTwist, IdentityMountEqualsFlangeBodyTwist) {
    KinematicChain c = kChain;
    c.camera_mount = RigidTransform::identity();
    std::mt19937_64 rng(13);
    const JointVector th = random_theta(rng);
    JointVector td = JointVector::Random(6);
    const RigidTransform t_be = forward_kinematics(c, th);
    const Vec6 vb = jacobian(c, th) * td;
    const Twist vc = camera_twist(c, th, td);
    EXPECT_LT((vc.linear - t_be.rotation().transpose() * vb.head<3>()).norm(), 1e-12);
    EXPECT_LT((vc.angular - t_be.rotation().transpose() * vb.tail<3>()).norm(), 1e-12);
}

TEST(CameraTwist, FiniteDifferenceOfCameraPose) {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> n;
    KinematicChain c = kChain;
    c.camera_mount = RigidTransform(so3_exp(Vec3(0.2, -0.1, 0.4)), Vec3(0.03, -0.02, 0.07));
    for (int trial = 0; trial < 50; ++trial) {
        const JointVector th = random_theta(rng, 2.0);
        JointVector td(6);
        for (int i = 0; i < 6; ++i) td[i] = n(rng);
        const double h = 1e-6;
        const RigidTransform a = camera_pose(c, th - h * td);
        const RigidTransform b = camera_pose(c, th + h * td);
        const RigidTransform delta = a.inverse() * b;
        Vec6 fd;
        fd << delta.translation() / (2 * h), so3_log(delta.rotation()) / (2 * h);
        const Vec6 v = camera_twist(c, th, td).vector();
        EXPECT_LT((fd - v).norm() / std::max(1.0, v.norm()), 1e-4);
    }
}

TEST(InverseKinematics, FixedPoint) {
    const JointVector th = home();
    const auto r = inverse_kinematics(kChain, forward_kinematics(kChain, th), th);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_LT((r.theta - th).norm(), 1e-15);
}

TEST(InverseKinematics, LocalConvergence) {
    std::mt19937_64 rng(15);
    std::normal_distribution<double> n(0.0, 0.01);
    for (int trial = 0; trial < 20; ++trial) {
        const JointVector th = random_theta(rng);
        JointVector d(6);
        for (int i = 0; i < 6; ++i) d[i] = n(rng);
        const RigidTransform target = forward_kinematics(kChain, th + d);
        const auto r = inverse_kinematics(kChain, target, th);
        EXPECT_LE(r.iterations, 5);
        EXPECT_LT(pose_error(forward_kinematics(kChain, r.theta), target), 1e-6);
    }
}

TEST(InverseKinematics, RoundTripRandomReachable) {
    std::mt19937_64 rng(16);
    std::normal_distribution<double> n(0.0, 0.3);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const JointVector th = random_theta(rng);
        JointVector d(6);
        for (int i = 0; i < 6; ++i) d[i] = n(rng);
        const RigidTransform target = forward_kinematics(kChain, th + d);
        const auto r = inverse_kinematics(kChain, target, th);
        EXPECT_TRUE(kChain.within_limits(r.theta));
        EXPECT_LT(pose_error(forward_kinematics(kChain, r.theta), target), 1e-6);
        ++checked;
    }
    EXPECT_EQ(checked, 100);
}

TEST(InverseKinematics, UnreachableDiverges) {
    const RigidTransform target = RigidTransform::from_translation(Vec3(3.0, 0.0, 0.5));
    try {
        inverse_kinematics(kChain, target, home());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IKDivergence);
    }
}

TEST(JointVelocity, ZeroTwist) {
    const auto s = joint_velocity_for_twist(kChain, home(), Twist{});
    EXPECT_EQ(s.velocity, JointVector::Zero(6));
}

TEST(JointVelocity, RoundTripAwayFromSingularities) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const JointVector th = random_theta(rng);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian(kChain, th));
        if (svd.singularValues().minCoeff() <= 1e-3) continue;
        Twist v{Vec3(n(rng), n(rng), n(rng)) * 0.05, Vec3(n(rng), n(rng), n(rng)) * 0.2};
        const auto s = joint_velocity_for_twist(kChain, th, v);
        EXPECT_FALSE(s.near_singular);
        const Twist back = camera_twist(kChain, th, s.velocity);
        EXPECT_LT((back.vector() - v.vector()).norm(), 1e-8);
        ++checked;
    }
    EXPECT_GT(checked, 50);
}

TEST(JointVelocity, WristSingularityMinimumNorm) {
    // theta5 = 0 aligns the joint 4 and joint 6 axes
    JointVector th = home();
    th[4] = 0.0;
    const JacobianMatrix j = jacobian(kChain, th);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
    ASSERT_LT(svd.singularValues().minCoeff(), 1e-9);

    const Twist v{Vec3(0.01, -0.02, 0.015), Vec3(0.1, 0.05, -0.2)};
    const auto s = joint_velocity_for_twist(kChain, th, v);

    // oracle: complete orthogonal decomposition gives the minimum-norm
    // least-squares solution without an SVD
    const RigidTransform t_be = forward_kinematics(kChain, th);
    const Vec6 vb = adjoint(kChain.camera_mount) * v.vector();
    Vec6 v_base;
    v_base << t_be.rotation() * vb.head<3>(), t_be.rotation() * vb.tail<3>();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(j);
    cod.setThreshold(1e-6);
    const Eigen::VectorXd damped = cod.solve(v_base);
    EXPECT_LT((s.velocity - damped).norm(), 1e-5);
    EXPECT_GT(s.residual, 1e-6);
    EXPECT_NEAR(s.residual, (j * damped - v_base).norm(), 1e-6);
}

TEST(JointVelocity, NearSingularityFlag) {
    JointVector th = home();
    th[4] = 2e-5;
    const Twist v{Vec3(0.01, 0, 0), Vec3::Zero()};
    const auto s = joint_velocity_for_twist(kChain, th, v);
    EXPECT_TRUE(s.near_singular);
    EXPECT_LT(s.min_singular_value, 1e-4);
}

TEST(Trajectory, ZeroDuration) {
    const auto t = plan_joint_trajectory(home(), home(), 1.0, 2.0);
    EXPECT_DOUBLE_EQ(t.duration(), 0.0);
    EXPECT_EQ(t.knots.size(), 1u);
}

TEST(Trajectory, RectangleLimit) {
    JointVector a = JointVector::Zero(1), b(1);
    b << 1.0;
    const auto t = plan_joint_trajectory(a, b, 1.0, 1e6);
    EXPECT_NEAR(t.duration(), 1.0, 1e-5);
}

TEST(Trajectory, EndpointsExactAndLimitsRespected) {
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 10; ++trial) {
        const JointVector a = random_theta(rng), b = random_theta(rng);
        const double vmax = 0.8, amax = 2.0;
        const auto t = plan_joint_trajectory(a, b, vmax, amax);
        EXPECT_LT((t.knots.front().position - a).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((t.knots.back().position - b).cwiseAbs().maxCoeff(), 1e-12);
        for (std::size_t k = 1; k < t.knots.size(); ++k) {
            const double dt = t.knots[k].time - t.knots[k - 1].time;
            ASSERT_GT(dt, 0.0);
            const double v = (t.knots[k].position - t.knots[k - 1].position).cwiseAbs().maxCoeff() / dt;
            EXPECT_LE(v, vmax * (1 + 1e-9));
        }
    }
}

TEST(Plant, ZeroCommandUnchanged) {
    JointPlant plant(kChain, {home(), JointVector::Zero(6), 0.0});
    plant.step(VelocityCommand{JointVector::Zero(6)}, 1e-3);
    EXPECT_EQ(plant.state().position, home());
    EXPECT_EQ(plant.state().velocity, JointVector::Zero(6));
}

TEST(Plant, FirstOrderVelocityClosedForm) {
    const PlantGains g;
    JointPlant plant(kChain, {home(), JointVector::Zero(6), 0.0}, g);
    const JointVector ref = JointVector::Constant(6, 0.3);
    const double dt = 1e-3;
    const double tau = g.time_constant;
    double t = 0.0;
    while (t < 5 * tau - 1e-12) {
        plant.step(VelocityCommand{ref}, dt);
        t += dt;
        // closed-form first-order response of the actuator, v(t) = ref (1 - exp(-t/tau))
        const JointVector expect = ref * (1.0 - std::exp(-t / tau));
        EXPECT_LT((plant.state().velocity - expect).cwiseAbs().maxCoeff(), 1e-6);
        const JointVector expect_pos = home() + ref * (t - tau * (1.0 - std::exp(-t / tau)));
        EXPECT_LT((plant.state().position - expect_pos).cwiseAbs().maxCoeff(), 1e-9);
    }
    // after 5 tau the reference is reached within 1 %
    EXPECT_LT((plant.state().velocity - ref).cwiseAbs().maxCoeff(), 0.01 * 0.3);
}

TEST(Plant, StepSettlesWithinDocumentedTime) {
    // With kp and tau critically damped (4 kp tau = 1) the position error is
    // e(t) = (1 + t / (2 tau)) exp(-t / (2 tau)); 2 % is reached at 11.67 tau.
    const PlantGains g;
    ASSERT_NEAR(4.0 * g.kp * g.time_constant, 1.0, 1e-12);
    const double settle = 11.67 * g.time_constant;
    JointPlant plant(kChain, {home(), JointVector::Zero(6), 0.0}, g);
    const JointVector goal = home() + JointVector::Constant(6, 0.1);
    double t = 0.0;
    const double dt = 1e-4;
    double max_err_after = 0.0;
    while (t < 3.0 * settle) {
        plant.step(PositionCommand{goal, {}, {}}, dt);
        t += dt;
        const double err = (plant.state().position - goal).cwiseAbs().maxCoeff() / 0.1;
        if (t >= settle + 1e-9) max_err_after = std::max(max_err_after, err);
        if (t < settle - 0.01) {
            EXPECT_GT(err, 0.02);
        }
    }
    EXPECT_LE(max_err_after, 0.02);
}

TEST(Plant, TracksPlannedTrajectory) {
    std::mt19937_64 rng(19);
    const JointVector a = home(), b = random_theta(rng, 0.5);
    const auto traj = plan_joint_trajectory(a, b, 1.0, 2.0);
    JointPlant plant(kChain, {a, JointVector::Zero(6), 0.0});
    double max_err = 0.0;
    const double dt = 1e-3;
    for (std::size_t k = 1; k < traj.knots.size(); ++k) {
        const auto& knot = traj.knots[k];
        const auto& prev = traj.knots[k - 1];
        // setpoint of the step end, feedforward of the interval
        plant.step(PositionCommand{knot.position, knot.velocity, prev.acceleration}, knot.time - prev.time);
        max_err = std::max(max_err, (plant.state().position - knot.position).cwiseAbs().maxCoeff());
    }
    (void)dt;
    EXPECT_LE(max_err, 1e-3);
}

TEST(Plant, ClampsAtJointLimits) {
    JointVector th = home();
    th[0] = 2 * M_PI - 1e-4;
    JointPlant plant(kChain, {th, JointVector::Zero(6), 0.0}, PlantGains{0.0, 25, 0, 0});
    JointVector v = JointVector::Zero(6);
    v[0] = 1.0;
    plant.step(VelocityCommand{v}, 1e-3);
    EXPECT_TRUE(plant.last_step_clamped());
    EXPECT_DOUBLE_EQ(plant.state().position[0], 2 * M_PI);
}
