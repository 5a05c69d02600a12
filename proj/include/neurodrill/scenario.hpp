#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/event_cht.hpp>
#include <neurodrill/event_sim.hpp>
#include <neurodrill/geometry.hpp>
#include <neurodrill/multiview.hpp>
#include <neurodrill/report.hpp>
#include <neurodrill/robot_model.hpp>
#include <neurodrill/servo.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace neurodrill {

/// Random placements for the drilling benchmark, drawn around scene.pose.
struct WorkpieceJitter {
    int count = 5;
    Vec3 position = Vec3(0.03, 0.03, 0.005);   // m, uniform half-ranges
    double yaw = 0.3;                          // rad
    double tilt = 0.02;                        // rad, about base x and y
};

struct BenchConfig {
    std::vector<double> speeds{0.1, 0.3, 0.5, 1.0, 1.5};   // m/s
    std::vector<std::string> lighting{"adequate", "low"};
    std::vector<double> tracking_speeds{0.025, 0.05, 0.1, 0.2};   // m/s
    double tracking_span = 0.0375;                                // m of camera travel per pass
    std::vector<double> frame_periods_ms{1.0, 10.0};
};

struct LightingLevels {
    LightingModel model;
    double adequate = 400.0;
    double low = 5.0;
};

struct ScenarioConfig {
    std::string name = "default";
    std::uint64_t seed = 42;
    std::string lighting = "adequate";   // label or a number
    LightingLevels lighting_levels;
    DrillSetup drill;                    // scene, chain, plant, sim, localization, scan, servo
    TrackerConfig tracker;               // tracking benchmark and `track`
    WorkpieceJitter workpieces;
    BenchConfig bench;

    /// Resolves a lighting label or numeric string to a level.
    double lighting_level(const std::string& label) const {
        if (label == "adequate") return lighting_levels.adequate;
        if (label == "low") return lighting_levels.low;
        std::size_t used = 0;
        double v = std::numeric_limits<double>::quiet_NaN();
        try {
            v = std::stod(label, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != label.size() || !(v > 0.0) || !std::isfinite(v))
            fail(ErrorCode::ValidationError, "lighting must be 'adequate', 'low' or a positive number, got '" +
                                                 label + "'");
        return v;
    }

    SimConfig sim_for(const std::string& label) const {
        return lighting_proxy(lighting_level(label), drill.sim, lighting_levels.model);
    }

    /// Drill setup with the scenario lighting and seed applied.
    DrillSetup drill_setup() const {
        DrillSetup s = drill;
        s.sim = sim_for(lighting);
        s.seed = seed;
        return s;
    }
};

namespace detail {

// Strict view of a JSON object: every key must be consumed before finish().
class JsonObject {
public:
    JsonObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) bad(path_.empty() ? "<root>" : path_, "must be an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    const nlohmann::json* take(const std::string& k) {
        const auto it = j_.find(k);
        if (it == j_.end()) return nullptr;
        seen_.insert(k);
        return &*it;
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    void number(const std::string& k, double& out) {
        if (const auto* v = take(k)) out = as_number(*v, key(k));
    }

    template <class Int>
    void integer(const std::string& k, Int& out) {
        const auto* v = take(k);
        if (!v) return;
        if (!v->is_number_integer()) bad(key(k), "must be an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (v->is_number_unsigned()) {
                out = static_cast<Int>(v->get<std::uint64_t>());
                return;
            }
            bad(key(k), "must be a non-negative integer");
        } else {
            const auto x = v->get<std::int64_t>();
            if (x < std::numeric_limits<Int>::min() || x > std::numeric_limits<Int>::max()) bad(key(k), "out of range");
            out = static_cast<Int>(x);
        }
    }

    void boolean(const std::string& k, bool& out) {
        if (const auto* v = take(k)) {
            if (!v->is_boolean()) bad(key(k), "must be true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string& k, std::string& out) {
        if (const auto* v = take(k)) {
            if (!v->is_string()) bad(key(k), "must be a string");
            out = v->get<std::string>();
        }
    }

    template <int N>
    void vec(const std::string& k, Eigen::Matrix<double, N, 1>& out) {
        if (const auto* v = take(k)) out = as_vec<N>(*v, key(k));
    }

    void numbers(const std::string& k, std::vector<double>& out) {
        const auto* v = take(k);
        if (!v) return;
        if (!v->is_array()) bad(key(k), "must be an array of numbers");
        out.clear();
        for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_number((*v)[i], key(k) + "[" + std::to_string(i) + "]"));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) bad(key(it.key()), "unknown key");
    }

    [[noreturn]] static void bad(const std::string& path, const std::string& what) {
        fail(ErrorCode::ValidationError, path + ": " + what);
    }

    static double as_number(const nlohmann::json& v, const std::string& path) {
        if (!v.is_number()) bad(path, "must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) bad(path, "must be finite");
        return x;
    }

    template <int N>
    static Eigen::Matrix<double, N, 1> as_vec(const nlohmann::json& v, const std::string& path) {
        if (!v.is_array() || v.size() != static_cast<std::size_t>(N))
            bad(path, "must be an array of " + std::to_string(N) + " numbers");
        Eigen::Matrix<double, N, 1> out;
        for (int i = 0; i < N; ++i) out[i] = as_number(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
        return out;
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline RigidTransform read_pose(const nlohmann::json& j, const std::string& path) {
    JsonObject o(j, path);
    Vec3 t = Vec3::Zero();
    o.vec("translation", t);
    Mat3 r = Mat3::Identity();
    const bool has_r = o.has("rotation"), has_rv = o.has("rotation_vector");
    if (has_r && has_rv) JsonObject::bad(path, "give rotation or rotation_vector, not both");
    if (const auto* rows = o.take("rotation")) {
        if (!rows->is_array() || rows->size() != 3) JsonObject::bad(o.key("rotation"), "must be 3 rows of 3 numbers");
        for (int i = 0; i < 3; ++i)
            r.row(i) = JsonObject::as_vec<3>((*rows)[static_cast<std::size_t>(i)],
                                             o.key("rotation") + "[" + std::to_string(i) + "]")
                           .transpose();
    }
    if (has_rv) {
        Vec3 rv;
        o.vec("rotation_vector", rv);
        r = so3_exp(rv);
    }
    o.finish();
    RigidTransform out(r, t);
    if (out.orthonormality_error() > 1e-9 || r.determinant() < 0.0)
        JsonObject::bad(o.key("rotation"), "is not a proper rotation");
    return out;
}

inline void read_scene(const nlohmann::json& j, SceneModel& s) {
    JsonObject o(j, "scene");
    if (const auto* p = o.take("pose")) s.t_bw = read_pose(*p, "scene.pose");
    if (const auto* hs = o.take("holes")) {
        if (!hs->is_array()) JsonObject::bad("scene.holes", "must be an array");
        s.holes.clear();
        for (std::size_t i = 0; i < hs->size(); ++i) {
            JsonObject h((*hs)[i], "scene.holes[" + std::to_string(i) + "]");
            Hole hole;
            h.vec("center", hole.center);
            h.number("radius", hole.radius);
            h.finish();
            s.holes.push_back(hole);
        }
    }
    o.number("log_background", s.log_background);
    o.number("log_hole", s.log_hole);
    o.number("edge_width", s.edge_width);
    o.finish();
}

inline void read_chain(const nlohmann::json& j, KinematicChain& c, JointVector& home) {
    JsonObject o(j, "chain");
    std::string preset = "ur10_like";
    o.string("preset", preset);
    if (preset != "ur10_like") JsonObject::bad("chain.preset", "unknown preset '" + preset + "'");
    c = KinematicChain::ur10_like();
    if (const auto* js = o.take("joints")) {
        if (!js->is_array() || js->empty()) JsonObject::bad("chain.joints", "must be a non-empty array");
        c.joints.clear();
        for (std::size_t i = 0; i < js->size(); ++i) {
            JsonObject jo((*js)[i], "chain.joints[" + std::to_string(i) + "]");
            JointSpec spec;
            jo.vec("axis", spec.axis);
            jo.vec("point", spec.point);
            jo.number("lower", spec.lower);
            jo.number("upper", spec.upper);
            jo.finish();
            if (std::abs(spec.axis.norm() - 1.0) > 1e-9) JsonObject::bad(jo.key("axis"), "must be unit-norm");
            if (!(spec.lower < spec.upper)) JsonObject::bad(jo.key("lower"), "must be below upper");
            c.joints.push_back(spec);
        }
    }
    if (const auto* p = o.take("flange_home")) c.flange_home = read_pose(*p, "chain.flange_home");
    if (const auto* p = o.take("camera_mount")) c.camera_mount = read_pose(*p, "chain.camera_mount");
    if (const auto* p = o.take("pin_mount")) c.pin_mount = read_pose(*p, "chain.pin_mount");
    std::vector<double> h;
    o.numbers("home", h);
    if (!h.empty()) home = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
    o.finish();
    if (home.size() != c.size()) JsonObject::bad("chain.home", "needs one angle per joint");
    if (!c.within_limits(home)) JsonObject::bad("chain.home", "violates joint limits");
}

inline void read_tracker(const nlohmann::json& j, TrackerConfig& t) {
    JsonObject o(j, "tracker");
    if (const auto* g = o.take("grid")) {
        JsonObject go(*g, "tracker.grid");
        go.number("a_min", t.grid.a_min);
        go.number("a_max", t.grid.a_max);
        go.number("b_min", t.grid.b_min);
        go.number("b_max", t.grid.b_max);
        go.number("r_min", t.grid.r_min);
        go.number("r_max", t.grid.r_max);
        go.number("center_bin", t.grid.center_bin);
        go.number("radius_bin", t.grid.radius_bin);
        go.finish();
    }
    if (o.has("covariance")) {
        Vec3 d;
        o.vec("covariance", d);
        t.covariance = d.asDiagonal();
    }
    o.number("prediction_rate_hz", t.prediction_rate_hz);
    o.number("vote_width", t.vote_width);
    o.number("beta", t.beta);
    o.boolean("refine", t.refine);
    o.finish();
}

inline void read_localization(const nlohmann::json& j, LocalizationConfig& l) {
    JsonObject o(j, "localization");
    if (const auto* v = o.take("volume")) {
        JsonObject vo(*v, "localization.volume");
        Vec3 center = 0.5 * (l.volume.min_corner + l.volume.max_corner);
        Vec3 extent = l.volume.max_corner - l.volume.min_corner;
        Vec3 res(l.volume.nx, l.volume.ny, l.volume.nz);
        vo.vec("center", center);
        vo.vec("extent", extent);
        vo.vec("resolution", res);
        vo.finish();
        for (int i = 0; i < 3; ++i)
            if (res[i] != std::round(res[i]) || res[i] < 2 || res[i] > 4096)
                JsonObject::bad("localization.volume.resolution", "must be integers in [2, 4096]");
        l.volume = VolumeConfig::centered(center, extent, static_cast<int>(res.x()), static_cast<int>(res.y()),
                                          static_cast<int>(res.z()));
    }
    o.number("min_count_fraction", l.min_count_fraction);
    o.integer("nms_radius", l.nms_radius);
    o.number("attach_radius", l.attach_radius);
    o.number("max_cluster_rms", l.max_cluster_rms);
    o.number("merge_radius", l.merge_radius);
    o.number("min_support_fraction", l.min_support_fraction);
    o.number("plane_inlier_tol", l.plane_inlier_tol);
    o.number("readmit_tol", l.readmit_tol);
    o.boolean("refine_circles", l.refine_circles);
    o.integer("max_features", l.max_features);
    o.finish();
}

inline void read_servo(const nlohmann::json& j, ServoConfig& s, TrackerConfig& servo_tracker) {
    JsonObject o(j, "servo");
    o.number("standoff", s.standoff);
    o.number("control_rate_hz", s.control_rate_hz);
    o.number("timeout", s.timeout);
    o.number("stale_periods", s.stale_periods);
    o.number("excitation_radius", s.excitation_radius);
    o.number("excitation_hz", s.excitation_hz);
    o.number("roi_half_width", s.roi_half_width);
    o.number("nominal_hole_radius", s.nominal_hole_radius);
    o.number("radius_band", s.radius_band);
    o.number("match_radius", s.match_radius);
    o.number("clearance", s.clearance);
    if (o.has("tracker_covariance")) {
        Vec3 d;
        o.vec("tracker_covariance", d);
        servo_tracker.covariance = d.asDiagonal();
    }
    if (const auto* p = o.take("pbvs")) {
        JsonObject po(*p, "servo.pbvs");
        po.number("joint_speed", s.pbvs.joint_speed);
        po.number("joint_accel", s.pbvs.joint_accel);
        po.number("dt", s.pbvs.dt);
        po.number("translation_tol", s.pbvs.translation_tol);
        po.number("rotation_tol", s.pbvs.rotation_tol);
        po.number("dwell", s.pbvs.dwell);
        po.number("margin", s.pbvs.margin);
        po.finish();
    }
    o.finish();
}

inline void read_gains(const nlohmann::json& j, ServoGains& g) {
    JsonObject o(j, "gains");
    if (const auto* l = o.take("lambda")) {
        if (l->is_array() && l->size() == 2 && (*l)[0].is_array()) {
            for (int i = 0; i < 2; ++i)
                g.lambda.row(i) =
                    JsonObject::as_vec<2>((*l)[static_cast<std::size_t>(i)], "gains.lambda[" + std::to_string(i) + "]")
                        .transpose();
        } else {
            g.lambda = JsonObject::as_vec<2>(*l, "gains.lambda").asDiagonal();
        }
    }
    o.number("epsilon", g.epsilon);
    o.number("dwell", g.dwell);
    o.finish();
}

inline void require(const std::string& error, const std::string& prefix = {}) {
    if (!error.empty()) fail(ErrorCode::ValidationError, prefix + error);
}

}  // namespace detail

/// Checks every module-level invariant; throws ValidationError naming the key.
inline void validate_scenario(const ScenarioConfig& c) {
    using detail::require;
    require(c.drill.scene.validation_error());
    require(c.drill.chain.validation_error(), "chain: ");
    require(c.drill.intrinsics.validation_error(), "intrinsics: ");
    if (c.drill.intrinsics.fx != c.drill.intrinsics.fy)
        fail(ErrorCode::ValidationError, "intrinsics.fy: must equal intrinsics.fx (square pixels)");
    if (c.drill.intrinsics.width > 65535 || c.drill.intrinsics.height > 65535)
        fail(ErrorCode::ValidationError, "intrinsics.width: sensor size must fit in 16 bits");
    require(c.drill.sim.validation_error());
    require(c.tracker.validation_error());
    require(c.drill.tracker.validation_error(), "servo: ");
    require(c.drill.localization.validation_error());
    require(c.drill.scan.validation_error());
    require(c.drill.servo.validation_error());
    const auto& p = c.drill.plant;
    if (!(p.time_constant >= 0.0) || !(p.kp >= 0.0) || !(p.ki >= 0.0) || !(p.kd >= 0.0))
        fail(ErrorCode::ValidationError, "plant: gains and time_constant must be non-negative");
    if (!(c.drill.scan_speed > 0.0)) fail(ErrorCode::ValidationError, "scan_speed: must be positive");
    const auto& lm = c.lighting_levels;
    if (!(lm.model.reference_level > 0.0) || !(lm.model.half_level > 0.0) ||
        !(lm.model.half_level < lm.model.reference_level))
        fail(ErrorCode::ValidationError, "lighting_model: need 0 < half_level < reference_level");
    if (!(lm.model.max_noise_rate >= 0.0) || !(lm.model.max_threshold_sigma >= 0.0))
        fail(ErrorCode::ValidationError, "lighting_model: maxima must be non-negative");
    if (!(lm.adequate > 0.0) || !(lm.low > 0.0))
        fail(ErrorCode::ValidationError, "lighting_model: adequate_level and low_level must be positive");
    c.lighting_level(c.lighting);
    if (c.workpieces.count < 1) fail(ErrorCode::ValidationError, "workpieces.count: must be >= 1");
    if (!(c.workpieces.position.minCoeff() >= 0.0) || !(c.workpieces.yaw >= 0.0) || !(c.workpieces.tilt >= 0.0))
        fail(ErrorCode::ValidationError, "workpieces: jitter ranges must be non-negative");
    auto positive_list = [](const std::vector<double>& v, const std::string& key) {
        if (v.empty()) fail(ErrorCode::ValidationError, key + ": must not be empty");
        for (double x : v)
            if (!(x > 0.0)) fail(ErrorCode::ValidationError, key + ": entries must be positive");
    };
    positive_list(c.bench.speeds, "bench.speeds");
    positive_list(c.bench.tracking_speeds, "bench.tracking_speeds");
    positive_list(c.bench.frame_periods_ms, "bench.frame_periods_ms");
    if (c.bench.lighting.empty()) fail(ErrorCode::ValidationError, "bench.lighting: must not be empty");
    for (const auto& l : c.bench.lighting) c.lighting_level(l);
    if (!(c.bench.tracking_span > 0.0)) fail(ErrorCode::ValidationError, "bench.tracking_span: must be positive");
}

/// Shipped default: five 2.5 mm holes on a plate 0.75 m in front of the robot.
inline ScenarioConfig default_scenario() {
    ScenarioConfig c;
    auto& d = c.drill;
    d.scene.t_bw = RigidTransform::from_translation(Vec3(0.75, 0.0, 0.0));
    d.scene.holes = {{Vec2(0.00, -0.14), 0.0025}, {Vec2(0.04, -0.07), 0.0025}, {Vec2(-0.03, 0.0), 0.0025},
                     {Vec2(0.035, 0.07), 0.0025}, {Vec2(-0.01, 0.14), 0.0025}};
    d.scene.edge_width = 0.00026;
    d.home.resize(6);
    d.home << -0.220367, -1.41267, 1.84438, -2.00251, -1.5708, -1.79116;
    d.localization.volume = VolumeConfig::centered(Vec3(0.75, 0.0, 0.0), Vec3(0.6, 0.6, 0.3));
    // covers the hole pattern under the benchmark placement jitter
    d.scan.center = Vec3(0.75, 0.0, 0.0);
    d.scan.extent = Vec2(0.2, 0.4);
    d.seed = c.seed;
    return c;
}

/// Parses scenario JSON on top of the defaults; absent keys keep default values.
inline ScenarioConfig parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::ParseError, std::string("scenario is not valid JSON: ") + e.what());
    }
    ScenarioConfig c = default_scenario();
    detail::JsonObject o(j, "");
    o.string("name", c.name);
    o.integer("seed", c.seed);
    if (const auto* l = o.take("lighting")) {
        if (l->is_string()) {
            c.lighting = l->get<std::string>();
        } else {
            c.lighting = format_number(detail::JsonObject::as_number(*l, "lighting"));
        }
    }
    if (const auto* lm = o.take("lighting_model")) {
        detail::JsonObject lo(*lm, "lighting_model");
        lo.number("reference_level", c.lighting_levels.model.reference_level);
        lo.number("half_level", c.lighting_levels.model.half_level);
        lo.number("max_noise_rate", c.lighting_levels.model.max_noise_rate);
        lo.number("max_threshold_sigma", c.lighting_levels.model.max_threshold_sigma);
        lo.number("adequate_level", c.lighting_levels.adequate);
        lo.number("low_level", c.lighting_levels.low);
        lo.finish();
    }
    o.number("scan_speed", c.drill.scan_speed);
    if (const auto* s = o.take("scene")) detail::read_scene(*s, c.drill.scene);
    if (const auto* s = o.take("chain")) detail::read_chain(*s, c.drill.chain, c.drill.home);
    if (const auto* s = o.take("intrinsics")) {
        detail::JsonObject io(*s, "intrinsics");
        auto& k = c.drill.intrinsics;
        io.number("fx", k.fx);
        io.number("fy", k.fy);
        io.number("cx", k.cx);
        io.number("cy", k.cy);
        io.integer("width", k.width);
        io.integer("height", k.height);
        io.finish();
    }
    if (const auto* s = o.take("sim")) {
        detail::JsonObject so(*s, "sim");
        auto& m = c.drill.sim;
        so.number("contrast_threshold", m.contrast_threshold);
        so.number("threshold_sigma", m.threshold_sigma);
        so.number("noise_rate", m.noise_rate);
        so.integer("refractory_us", m.refractory_us);
        so.integer("timestamp_resolution_us", m.timestamp_resolution_us);
        so.number("sample_rate_hz", m.sample_rate_hz);
        so.number("pose_rate_hz", m.pose_rate_hz);
        so.finish();
    }
    if (const auto* s = o.take("tracker")) detail::read_tracker(*s, c.tracker);
    if (const auto* s = o.take("gains")) detail::read_gains(*s, c.drill.servo.gains);
    // the servo tracker shares everything but the prediction covariance
    TrackerConfig servo_tracker = c.tracker;
    servo_tracker.covariance = c.drill.tracker.covariance;
    if (const auto* s = o.take("servo")) detail::read_servo(*s, c.drill.servo, servo_tracker);
    c.drill.tracker = servo_tracker;
    if (const auto* s = o.take("plant")) {
        detail::JsonObject po(*s, "plant");
        po.number("time_constant", c.drill.plant.time_constant);
        po.number("kp", c.drill.plant.kp);
        po.number("ki", c.drill.plant.ki);
        po.number("kd", c.drill.plant.kd);
        po.finish();
    }
    if (const auto* s = o.take("localization")) detail::read_localization(*s, c.drill.localization);
    if (const auto* s = o.take("scan")) {
        detail::JsonObject so(*s, "scan");
        so.vec("center", c.drill.scan.center);
        so.vec("extent", c.drill.scan.extent);
        so.number("height", c.drill.scan.height);
        so.number("margin", c.drill.scan.margin);
        so.number("edge_px", c.drill.scan.edge_px);
        so.finish();
    }
    if (const auto* s = o.take("workpieces")) {
        detail::JsonObject wo(*s, "workpieces");
        wo.integer("count", c.workpieces.count);
        wo.vec("position_jitter", c.workpieces.position);
        wo.number("yaw_jitter", c.workpieces.yaw);
        wo.number("tilt_jitter", c.workpieces.tilt);
        wo.finish();
    }
    if (const auto* s = o.take("bench")) {
        detail::JsonObject bo(*s, "bench");
        bo.numbers("speeds", c.bench.speeds);
        if (const auto* l = bo.take("lighting")) {
            if (!l->is_array()) detail::JsonObject::bad("bench.lighting", "must be an array");
            c.bench.lighting.clear();
            for (std::size_t i = 0; i < l->size(); ++i) {
                const auto& x = (*l)[i];
                const std::string key = "bench.lighting[" + std::to_string(i) + "]";
                c.bench.lighting.push_back(x.is_string() ? x.get<std::string>()
                                                         : format_number(detail::JsonObject::as_number(x, key)));
            }
        }
        bo.numbers("tracking_speeds", c.bench.tracking_speeds);
        bo.number("tracking_span", c.bench.tracking_span);
        bo.numbers("frame_periods_ms", c.bench.frame_periods_ms);
        bo.finish();
    }
    o.finish();
    c.drill.seed = c.seed;
    validate_scenario(c);
    return c;
}

/// Loads a scenario file; "default" (or an empty path) gives the shipped defaults.
inline ScenarioConfig load_scenario(const std::string& path) {
    if (path.empty() || path == "default") {
        ScenarioConfig c = default_scenario();
        validate_scenario(c);
        return c;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ValidationError, "scenario file not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

}  // namespace neurodrill
