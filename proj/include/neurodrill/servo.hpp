#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/event_cht.hpp>
#include <neurodrill/event_sim.hpp>
#include <neurodrill/geometry.hpp>
#include <neurodrill/multiview.hpp>
#include <neurodrill/robot_model.hpp>
#include <neurodrill/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace neurodrill {

using Mat2 = Eigen::Matrix2d;

struct ServoGains {
    Mat2 lambda = Vec2(2.0, 2.0).asDiagonal();   // 1/s
    double epsilon = 0.3;                        // px
    double dwell = 0.2;                          // s

    /// Smallest eigenvalue of the symmetric part of lambda.
    double lambda_min() const {
        const Mat2 s = 0.5 * (lambda + lambda.transpose());
        return Eigen::SelfAdjointEigenSolver<Mat2>(s).eigenvalues().minCoeff();
    }

    std::string validation_error() const {
        if (!lambda.allFinite()) return "gains.lambda must be finite";
        if (!(lambda_min() > 0.0)) return "gains.lambda must be positive definite";
        if (!(epsilon > 0.0)) return "gains.epsilon must be positive";
        if (!(dwell >= 0.0)) return "gains.dwell must be non-negative";
        return {};
    }
};

enum class Phase { Scan, PBVSAlign, IBVSRefine, Drill, Done };

constexpr std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::Scan: return "Scan";
    case Phase::PBVSAlign: return "PBVSAlign";
    case Phase::IBVSRefine: return "IBVSRefine";
    case Phase::Drill: return "Drill";
    case Phase::Done: return "Done";
    }
    return "Unknown";
}

constexpr bool legal_transition(Phase from, Phase to) {
    switch (from) {
    case Phase::Scan: return to == Phase::PBVSAlign || to == Phase::Done;
    case Phase::PBVSAlign: return to == Phase::IBVSRefine;
    case Phase::IBVSRefine: return to == Phase::Drill;
    case Phase::Drill: return to == Phase::PBVSAlign || to == Phase::Done;
    case Phase::Done: return false;
    }
    return false;
}

/// Phase machine of the drilling sequence; rejects illegal transitions.
class DrillSequenceState {
public:
    Phase phase() const { return phase_; }
    const std::vector<Phase>& history() const { return history_; }
    int hole() const { return hole_; }

    void transition(Phase next) {
        if (!legal_transition(phase_, next)) {
            fail(ErrorCode::InvalidArgument, "illegal phase transition " + std::string(to_string(phase_)) + " -> " +
                                                 std::string(to_string(next)));
        }
        if (next == Phase::PBVSAlign) ++hole_;
        phase_ = next;
        history_.push_back(next);
    }

private:
    Phase phase_ = Phase::Scan;
    int hole_ = -1;
    std::vector<Phase> history_{Phase::Scan};
};

/// Rough workpiece region known before scanning: a horizontal rectangle.
struct ScanPrior {
    Vec3 center = Vec3(0.75, 0.0, 0.0);
    Vec2 extent = Vec2(0.12, 0.32);   // base x, base y (m)
    double height = 0.35;             // camera above the plane (m)
    double margin = 0.02;             // m, added around the extent
    double edge_px = 20.0;            // keep the cross-track edge this far from the border

    std::string validation_error() const {
        if (!center.allFinite()) return "scan.center must be finite";
        if (!(extent.minCoeff() >= 0.0)) return "scan.extent must be non-negative";
        if (!(height > 0.0)) return "scan.height must be positive";
        if (!(margin >= 0.0)) return "scan.margin must be non-negative";
        if (!(edge_px >= 0.0)) return "scan.edge_px must be non-negative";
        return {};
    }
};

/// Look-down sweep along base y at constant height with raised-cosine speed
/// ramps (position is twice continuously differentiable, peak speed v_max).
/// The height grows if the cross-track extent does not fit the field of view.
/// A degenerate extent gives a one-second stationary dwell over the center.
inline CameraTrajectory scan_trajectory(const ScanPrior& prior, double v_max, const CameraIntrinsics& k,
                                        double ramp = 0.5) {
    if (const auto e = prior.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
    if (!(v_max > 0.0)) fail(ErrorCode::InvalidArgument, "scan speed must be positive");
    if (!(ramp > 0.0)) fail(ErrorCode::InvalidArgument, "scan ramp must be positive");
    Mat3 down;
    down << 1, 0, 0,
            0, -1, 0,
            0, 0, -1;
    const double half_px = std::min(k.cx, k.width - k.cx) - prior.edge_px;
    if (!(half_px > 0.0)) fail(ErrorCode::InvalidArgument, "scan edge margin exceeds the sensor");
    double h = prior.height;
    if (prior.extent.x() > 0.0) h = std::max(h, (0.5 * prior.extent.x() + prior.margin) * k.fx / half_px);
    const Vec3 c = prior.center;
    if (prior.extent.maxCoeff() == 0.0) {
        return CameraTrajectory::stationary(RigidTransform(down, c + Vec3(0, 0, h)), 1.0);
    }
    const double y0 = c.y() - 0.5 * prior.extent.y() - prior.margin;
    const double dist = prior.extent.y() + 2.0 * prior.margin;
    const double tr = std::min(ramp, dist / v_max);   // each ramp covers v_max * tr / 2
    const double cruise = (dist - v_max * tr) / v_max;
    const double total = 2.0 * tr + cruise;
    const double pi = std::numbers::pi;
    auto ramp_dist = [=](double t) { return 0.5 * v_max * (t - tr / pi * std::sin(pi * t / tr)); };
    auto s = [=](double t) {
        t = std::clamp(t, 0.0, total);
        if (t < tr) return ramp_dist(t);
        if (t < tr + cruise) return 0.5 * v_max * tr + v_max * (t - tr);
        return dist - ramp_dist(total - t);
    };
    return {total, [=](double t) { return RigidTransform(down, Vec3(c.x(), y0 + s(t), c.z() + h)); }};
}

/// Camera pose looking straight down the hole normal from `standoff`, x axes aligned.
inline RigidTransform hole_stance(double standoff) {
    Mat3 r;
    r << 1, 0, 0,
         0, -1, 0,
         0, 0, -1;
    return {r, Vec3(0.0, 0.0, standoff)};
}

/// Flange target T_BE = T_BH * T_HC * T_EC^-1.
inline RigidTransform pbvs_target_from_hole(const RigidTransform& t_bh, const KinematicChain& chain,
                                            double standoff) {
    if (!(standoff > 0.0)) fail(ErrorCode::InvalidArgument, "standoff must be positive");
    return t_bh * hole_stance(standoff) * chain.camera_mount.inverse();
}

struct PbvsOptions {
    double joint_speed = 1.0;      // rad/s
    double joint_accel = 2.0;      // rad/s^2
    double dt = 1e-3;              // s
    double translation_tol = 1e-4; // m
    double rotation_tol = 1e-3;    // rad
    double dwell = 0.05;           // s
    double margin = 2.0;           // s past the planned duration before timing out
};

struct PbvsResult {
    double duration = 0.0;
    double translation_error = 0.0;
    double rotation_error = 0.0;
};

/// Joint-interpolated move of the flange to `target` in trajectory mode.
/// Throws IKDivergence / JointLimitViolation from the solver and
/// TrackingTimeout when the pose does not settle.
inline PbvsResult pbvs_execute(const KinematicChain& chain, JointPlant& plant, const RigidTransform& target,
                               const PbvsOptions& opt = {}) {
    if (!(opt.dt > 0.0)) fail(ErrorCode::InvalidArgument, "pbvs dt must be positive");
    const JointVector start = plant.state().position;
    const JointVector goal = inverse_kinematics(chain, target, start).theta;
    const JointTrajectory traj = plan_joint_trajectory(start, goal, opt.joint_speed, opt.joint_accel, opt.dt);
    const double limit = traj.duration() + opt.margin;
    plant.reset_controller();
    PbvsResult r;
    double settled = 0.0;
    for (double t = 0.0; t <= limit + 0.5 * opt.dt; t += opt.dt) {
        const JointKnot knot = traj.sample(t + opt.dt);
        plant.step(PositionCommand{knot.position, knot.velocity, knot.acceleration}, opt.dt);
        const RigidTransform now = forward_kinematics(chain, plant.state().position);
        r.duration = t + opt.dt;
        r.translation_error = (now.translation() - target.translation()).norm();
        r.rotation_error = so3_log(now.rotation().transpose() * target.rotation()).norm();
        if (r.translation_error < opt.translation_tol && r.rotation_error < opt.rotation_tol) {
            settled += opt.dt;
            if (settled >= opt.dwell - 1e-12 && t + opt.dt >= traj.duration()) return r;
        } else {
            settled = 0.0;
        }
    }
    fail(ErrorCode::TrackingTimeout, "PBVS did not settle within " + std::to_string(limit) + " s");
}

struct IbvsCommand {
    Vec2 error = Vec2::Zero();     // zeta = f - f_hat, px
    Twist twist;                   // camera frame
    JointVector velocity;
    bool near_singular = false;
};

/// Camera translation v* = (Z / F) lambda zeta, the planar inverse of
/// zeta_dot = -(F / Z) v driven toward zeta_dot = -lambda zeta.
inline Vec2 ibvs_velocity(const Vec2& zeta, const Mat2& lambda, double depth, double focal) {
    if (!(depth > 0.0)) fail(ErrorCode::NonPositiveDepth, "IBVS depth must be positive");
    if (!(focal > 0.0)) fail(ErrorCode::NonPositiveFocal, "IBVS focal must be positive");
    return (depth / focal) * (lambda * zeta);
}

/// One control step. Throws StaleFeature when the feature is older than max_age.
inline IbvsCommand ibvs_step(const KinematicChain& chain, const JointVector& theta, const Vec2& f, const Vec2& f_hat,
                             const ServoGains& gains, double depth, double focal, double feature_age = 0.0,
                             double max_age = std::numeric_limits<double>::infinity()) {
    if (!(feature_age < max_age)) {
        fail(ErrorCode::StaleFeature, "feature age " + std::to_string(feature_age) + " s exceeds " +
                                          std::to_string(max_age) + " s");
    }
    IbvsCommand c;
    c.error = f - f_hat;
    const Vec2 v = ibvs_velocity(c.error, gains.lambda, depth, focal);
    c.twist.linear = Vec3(v.x(), v.y(), 0.0);
    const auto sol = joint_velocity_for_twist(chain, theta, c.twist);
    c.velocity = sol.velocity;
    c.near_singular = sol.near_singular;
    return c;
}

struct ErrorSample {
    double t = 0.0;
    double norm = 0.0;   // px
};

/// True when the trailing run of samples with norm <= epsilon spans at least dwell.
inline bool ibvs_converged(const std::vector<ErrorSample>& history, double epsilon, double dwell) {
    if (history.empty() || history.back().norm > epsilon) return false;
    std::size_t i = history.size() - 1;
    while (i > 0 && history[i - 1].norm <= epsilon) --i;
    return history.back().t - history[i].t >= dwell - 1e-12;
}

/// Image point where the split-pin axis meets the plane at `depth` in front of the camera.
inline Vec2 pin_feature_target(const KinematicChain& chain, const CameraIntrinsics& k, double depth) {
    const Vec3 o = chain.pin_mount.translation();
    const Vec3 d = chain.pin_mount.rotation().col(2);
    if (!(d.z() > 1e-9)) fail(ErrorCode::InvalidArgument, "pin axis does not point into the scene");
    const double s = (depth - o.z()) / d.z();
    const Vec3 p = o + s * d;
    if (!(p.z() > 0.0)) fail(ErrorCode::NonPositiveDepth, "pin target behind the camera");
    return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

/// Distance on the workpiece plane between the split-pin axis hit point and `p_b`.
inline double pin_axis_error(const KinematicChain& chain, const RigidTransform& t_bc, const RigidTransform& t_bw,
                             const Vec3& p_b) {
    const RigidTransform t_bs = t_bc * chain.pin_mount;
    const Vec3 n = t_bw.rotation().col(2);
    const Vec3 d = t_bs.rotation().col(2);
    const double den = n.dot(d);
    if (std::abs(den) < 1e-12) fail(ErrorCode::DegenerateGeometry, "pin axis parallel to the workpiece plane");
    const double s = n.dot(t_bw.translation() - t_bs.translation()) / den;
    return (t_bs.translation() + s * d - p_b).norm();
}

struct IdealIbvsTrace {
    std::vector<ErrorSample> samples;
    Vec2 initial = Vec2::Zero();
};

/// Closed loop on an ideal plant (no actuator lag) with the feature measured
/// by exact projection of `target_b` every control step.
inline IdealIbvsTrace simulate_ideal_ibvs(const KinematicChain& chain, const JointVector& theta0,
                                          const CameraIntrinsics& k, const Vec3& target_b, const Vec2& f_hat,
                                          const ServoGains& gains, double duration, double dt = 1e-3) {
    if (!(dt > 0.0) || !(duration > 0.0)) fail(ErrorCode::InvalidArgument, "duration and dt must be positive");
    PlantGains ideal;
    ideal.time_constant = 0.0;
    JointPlant plant(chain, {theta0, JointVector::Zero(theta0.size()), 0.0}, ideal);
    const double focal = k.focal();
    IdealIbvsTrace trace;
    const auto steps = static_cast<long>(std::llround(duration / dt));
    for (long i = 0; i <= steps; ++i) {
        const RigidTransform t_bc = camera_pose(chain, plant.state().position);
        const Vec2 f = project(k, t_bc.inverse(), target_b);
        const double depth = t_bc.inverse().apply(target_b).z();
        if (i == 0) trace.initial = f - f_hat;
        trace.samples.push_back({i * dt, (f - f_hat).norm()});
        if (i == steps) break;
        const auto cmd = ibvs_step(chain, plant.state().position, f, f_hat, gains, depth, focal);
        plant.step(VelocityCommand{cmd.velocity}, dt);
    }
    return trace;
}

struct ServoConfig {
    ServoGains gains;
    double standoff = 0.075;              // m, camera above the hole at alignment
    double control_rate_hz = 1000.0;
    double timeout = 10.0;                // s of IBVS before TrackingTimeout
    double stale_periods = 2.0;           // hypothesis age limit, prediction periods
    double excitation_radius = 0.0005;    // m, planar circle run before IBVS
    double excitation_hz = 2.0;
    double roi_half_width = 40.0;         // px
    double nominal_hole_radius = 0.0025;  // m
    double radius_band = 5.0;             // px around the nominal image radius
    double match_radius = 0.005;          // m, estimate to ground-truth association
    double clearance = 0.0002;            // m, pin clearance a drilled hole is scored against
    PbvsOptions pbvs;

    std::string validation_error() const {
        if (auto e = gains.validation_error(); !e.empty()) return e;
        if (!(standoff > 0.0)) return "servo.standoff must be positive";
        if (!(control_rate_hz > 0.0)) return "servo.control_rate_hz must be positive";
        if (!(timeout > 0.0)) return "servo.timeout must be positive";
        if (!(stale_periods > 0.0)) return "servo.stale_periods must be positive";
        if (!(excitation_radius >= 0.0)) return "servo.excitation_radius must be non-negative";
        if (!(excitation_hz > 0.0)) return "servo.excitation_hz must be positive";
        if (!(roi_half_width >= 1.0)) return "servo.roi_half_width must be >= 1";
        if (!(nominal_hole_radius > 0.0)) return "servo.nominal_hole_radius must be positive";
        if (!(radius_band >= 0.0)) return "servo.radius_band must be non-negative";
        if (!(match_radius > 0.0)) return "servo.match_radius must be positive";
        if (!(clearance > 0.0)) return "servo.clearance must be positive";
        if (!(pbvs.joint_speed > 0.0) || !(pbvs.joint_accel > 0.0)) return "servo.pbvs limits must be positive";
        if (!(pbvs.translation_tol > 0.0) || !(pbvs.rotation_tol > 0.0)) return "servo.pbvs tolerances must be positive";
        if (!(pbvs.dwell >= 0.0) || !(pbvs.margin >= 0.0)) return "servo.pbvs dwell and margin must be non-negative";
        return {};
    }

    std::uint64_t control_period_us() const {
        return static_cast<std::uint64_t>(std::llround(1e6 / control_rate_hz));
    }
};

/// Tracker settings for the servo loop: egomotion comes from forward
/// kinematics, so the prediction spread is kept well under a bin.
inline TrackerConfig servo_tracker_config() {
    TrackerConfig c;
    c.covariance = Vec3(0.01, 0.01, 0.01).asDiagonal();
    return c;
}

/// Everything one drilling run needs.
struct DrillSetup {
    SceneModel scene;
    KinematicChain chain = KinematicChain::ur10_like();
    JointVector home;
    PlantGains plant;
    CameraIntrinsics intrinsics;
    SimConfig sim;
    TrackerConfig tracker = servo_tracker_config();
    LocalizationConfig localization;
    ScanPrior scan;
    double scan_speed = 0.1;   // m/s
    ServoConfig servo;
    std::uint64_t seed = 1;
};

struct HoleOutcome {
    int truth = -1;                          // ground-truth index, -1 for a spurious estimate
    int estimate = -1;                       // localized hole index, -1 if never found
    std::optional<ErrorCode> failure;
    double localization_error = std::numeric_limits<double>::quiet_NaN();   // m
    double metric_error = std::numeric_limits<double>::quiet_NaN();         // m, on the true plane
    double pixel_error = std::numeric_limits<double>::quiet_NaN();          // px, final |zeta|
    double pbvs_time = 0.0;                  // s
    double ibvs_time = 0.0;                  // s
    std::size_t events = 0;                  // events seen by the tracker
};

struct DrillReport {
    std::vector<HoleOutcome> holes;   // ground-truth order, then spurious estimates
    std::vector<Phase> phases;
    std::optional<ErrorCode> scan_failure;
    std::size_t scan_events = 0;
    double localization_mean = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct IbvsRun {
    std::optional<ErrorCode> failure;
    double duration = 0.0;
    double pixel_error = std::numeric_limits<double>::quiet_NaN();
    std::size_t events = 0;
};

// Event-driven IBVS: the simulator renders the scene from the live camera pose,
// the tracker consumes the events and the servo acts on the latest hypothesis.
inline IbvsRun run_ibvs(const DrillSetup& s, JointPlant& plant, double depth, std::uint64_t seed) {
    const auto& k = s.intrinsics;
    const auto& sv = s.servo;
    const double focal = k.focal();
    const std::uint64_t sample = s.sim.sample_period_us();
    const std::uint64_t ctrl = sv.control_period_us();
    const std::uint64_t pred = s.tracker.prediction_period_us();
    if (ctrl % sample != 0 || pred % ctrl != 0)
        fail(ErrorCode::ValidationError, "control period must be a multiple of the sample period and divide the "
                                         "prediction period");
    const Vec2 f_hat = pin_feature_target(s.chain, k, depth);
    const double r_nom = sv.nominal_hole_radius * focal / depth;
    TrackerConfig tc = s.tracker;
    tc.grid = HoughGrid::roi(f_hat, sv.roi_half_width, std::max(1.0, std::floor(r_nom - sv.radius_band)),
                             std::ceil(r_nom + sv.radius_band), s.tracker.grid.center_bin);
    tc.sensor_width = k.width;
    tc.sensor_height = k.height;
    HoughAccumulator acc(tc, 0);

    RigidTransform pose = camera_pose(s.chain, plant.state().position);
    RigidTransform pose_pred = pose;
    EventGenerator gen(s.scene, k, s.sim, seed, 0, pose);
    std::vector<Event> buf;

    const double dt = 1e-6 * static_cast<double>(ctrl);
    const double w = 2.0 * std::numbers::pi * sv.excitation_hz;
    const double t_exc = sv.excitation_radius > 0.0 ? 1.0 / sv.excitation_hz : 0.0;
    const double max_age = sv.stale_periods * 1e-6 * static_cast<double>(pred);
    std::optional<CircleHypothesis> hyp;
    std::vector<ErrorSample> history;
    IbvsRun run;
    plant.reset_controller();
    for (std::uint64_t t = 0;; t += ctrl) {
        const double ts = 1e-6 * static_cast<double>(t);
        if (ts > t_exc + sv.timeout + 1e-9) {
            run.failure = ErrorCode::TrackingTimeout;
            break;
        }
        const JointVector& theta = plant.state().position;
        JointVector qd;
        if (ts < t_exc - 1e-9) {
            const Twist v{Vec3(-sv.excitation_radius * w * std::sin(w * ts),
                               sv.excitation_radius * w * std::cos(w * ts), 0.0),
                          Vec3::Zero()};
            qd = joint_velocity_for_twist(s.chain, theta, v).velocity;
        } else {
            if (!hyp) {
                run.failure = ErrorCode::LowConfidence;
                break;
            }
            const double age = ts - 1e-6 * static_cast<double>(hyp->t);
            try {
                qd = ibvs_step(s.chain, theta, hyp->center(), f_hat, sv.gains, depth, focal, age, max_age).velocity;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::StaleFeature) throw;
                run.failure = e.code();
                break;
            }
        }
        plant.step(VelocityCommand{qd}, dt);
        const RigidTransform next = camera_pose(s.chain, plant.state().position);
        const std::uint64_t n_sub = ctrl / sample;
        for (std::uint64_t i = 1; i <= n_sub; ++i) {
            gen.advance(t + i * sample, interpolate(pose, next, static_cast<double>(i) / static_cast<double>(n_sub)),
                        buf);
        }
        pose = next;
        const std::uint64_t t1 = t + ctrl;
        // planar egomotion since the last prediction, in the camera frame at that time
        const double elapsed = 1e-6 * static_cast<double>(t1 - acc.last_prediction());
        const Vec2 shift = (pose_pred.inverse() * pose).translation().head<2>();
        acc.set_image_velocity(planar_feature_velocity(focal, depth, shift / elapsed));
        for (const Event& e : buf) acc.measurement_update(e);
        run.events += buf.size();
        buf.clear();
        if (t1 % pred == 0) {
            acc.prediction_update(Twist{Vec3(shift.x(), shift.y(), 0.0) / elapsed, Vec3::Zero()}, focal, depth, t1);
            pose_pred = pose;
            try {
                hyp = acc.infer_circle();
            } catch (const Error& e) {
                if (e.code() != ErrorCode::LowConfidence) throw;
            }
            const double ts1 = 1e-6 * static_cast<double>(t1);
            if (hyp && hyp->t == t1 && ts1 >= t_exc - 1e-9) {
                history.push_back({ts1, (hyp->center() - f_hat).norm()});
                if (ibvs_converged(history, sv.gains.epsilon, sv.gains.dwell)) {
                    run.duration = ts1;
                    run.pixel_error = history.back().norm;
                    return run;
                }
            }
        }
        run.duration = 1e-6 * static_cast<double>(t1);
    }
    if (!history.empty()) run.pixel_error = history.back().norm;
    return run;
}

}  // namespace detail

/// Scan, localize, then align, refine and drill each localized hole in turn.
/// Per-hole failures are recorded and the sequence moves on; the phase
/// history always follows the legal transition chain.
inline DrillReport run_drill_sequence(const DrillSetup& s) {
    if (auto e = s.scene.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
    if (auto e = s.chain.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, "chain: " + e);
    if (auto e = s.intrinsics.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, "intrinsics: " + e);
    if (auto e = s.sim.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
    if (auto e = s.tracker.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
    if (auto e = s.localization.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
    if (auto e = s.servo.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
    if (s.home.size() != s.chain.size()) fail(ErrorCode::ValidationError, "home must have one angle per joint");

    DrillSequenceState state;
    DrillReport report;
    const auto truth = ground_truth_holes(s.scene);
    report.holes.resize(truth.size());
    for (std::size_t g = 0; g < truth.size(); ++g) report.holes[g].truth = static_cast<int>(g);

    JointPlant plant(s.chain, {s.home, JointVector::Zero(s.home.size()), 0.0}, s.plant);
    const CameraTrajectory scan = scan_trajectory(s.scan, s.scan_speed, s.intrinsics);
    const RigidTransform scan_start = scan.pose(0.0) * s.chain.camera_mount.inverse();
    pbvs_execute(s.chain, plant, scan_start, s.servo.pbvs);

    const EventStream stream = generate_events(s.scene, scan, s.intrinsics, s.sim, detail::splitmix64(s.seed));
    report.scan_events = stream.events.size();
    // the robot tracks the scan path; continue from the pose at its end
    const JointVector end = inverse_kinematics(s.chain, scan.pose(scan.duration) * s.chain.camera_mount.inverse(),
                                               plant.state().position)
                                .theta;
    plant = JointPlant(s.chain, {end, JointVector::Zero(end.size()), 0.0}, s.plant);

    WorkpieceEstimate est;
    try {
        est = localize_workpiece(stream, s.intrinsics, s.localization);
    } catch (const Error& e) {
        switch (e.code()) {
        case ErrorCode::NoHolesFound:
        case ErrorCode::EmptyStream:
        case ErrorCode::InsufficientPoints:
        case ErrorCode::DegenerateCollinear:
        case ErrorCode::DegenerateGeometry:
            break;
        default:
            throw;
        }
        report.scan_failure = e.code();
        for (auto& h : report.holes) h.failure = ErrorCode::NoHolesFound;
        state.transition(Phase::Done);
        report.phases = state.history();
        return report;
    }

    std::vector<std::size_t> visit;
    std::vector<Vec3> candidates;
    for (std::size_t i = 0; i < est.holes.size(); ++i) {
        if (!est.inliers[i]) continue;
        visit.push_back(i);
        candidates.push_back(est.holes[i]);
    }
    const LocalizationError loc = localization_error(candidates, truth, s.servo.match_radius);
    report.localization_mean = loc.mean;
    std::vector<int> truth_of(candidates.size(), -1);
    for (std::size_t g = 0; g < truth.size(); ++g) {
        if (loc.match[g] >= 0) {
            truth_of[static_cast<std::size_t>(loc.match[g])] = static_cast<int>(g);
            report.holes[g].localization_error = loc.per_hole[g];
        } else {
            report.holes[g].failure = ErrorCode::NoHolesFound;
        }
    }

    for (std::size_t c = 0; c < candidates.size(); ++c) {
        HoleOutcome out;
        out.estimate = static_cast<int>(visit[c]);
        out.truth = truth_of[c];

        state.transition(Phase::PBVSAlign);
        const RigidTransform t_bh(est.t_bw.rotation(), candidates[c]);
        bool aligned = false;
        try {
            out.pbvs_time = pbvs_execute(s.chain, plant, pbvs_target_from_hole(t_bh, s.chain, s.servo.standoff),
                                         s.servo.pbvs)
                                .duration;
            aligned = true;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::IKDivergence && e.code() != ErrorCode::JointLimitViolation &&
                e.code() != ErrorCode::TrackingTimeout)
                throw;
            out.failure = e.code();
            plant = JointPlant(s.chain, {plant.state().position, JointVector::Zero(s.home.size()), 0.0}, s.plant);
        }

        state.transition(Phase::IBVSRefine);
        if (aligned) {
            const RigidTransform t_cb = camera_pose(s.chain, plant.state().position).inverse();
            const double depth = t_cb.apply(candidates[c]).z();
            if (!(depth > 0.0)) {
                out.failure = ErrorCode::NonPositiveDepth;
            } else {
                const auto run = detail::run_ibvs(s, plant, depth, detail::splitmix64(s.seed + 1 + c));
                out.failure = run.failure;
                out.ibvs_time = run.duration;
                out.pixel_error = run.pixel_error;
                out.events = run.events;
            }
        }

        state.transition(Phase::Drill);
        if (!out.failure) {
            const RigidTransform t_bc = camera_pose(s.chain, plant.state().position);
            Vec3 ref = candidates[c];
            if (out.truth >= 0) {
                ref = truth[static_cast<std::size_t>(out.truth)];
            } else {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& p : truth) {
                    if ((p - candidates[c]).norm() < best) {
                        best = (p - candidates[c]).norm();
                        ref = p;
                    }
                }
            }
            out.metric_error = pin_axis_error(s.chain, t_bc, s.scene.t_bw, ref);
        }
        if (out.truth >= 0) {
            out.localization_error = report.holes[static_cast<std::size_t>(out.truth)].localization_error;
            report.holes[static_cast<std::size_t>(out.truth)] = out;
        } else {
            report.holes.push_back(out);
        }
    }
    state.transition(Phase::Done);
    report.phases = state.history();
    return report;
}

}  // namespace neurodrill
