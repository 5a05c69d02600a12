#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/geometry.hpp>
#include <neurodrill/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace neurodrill {

struct Hole {
    Vec2 center = Vec2::Zero();   // workpiece frame, plane z = 0 (m)
    double radius = 0.0025;       // m
};

/// Flat workpiece with dark circular holes. The workpiece frame has its z axis
/// along the plane normal, pointing toward the camera side.
struct SceneModel {
    RigidTransform t_bw;
    std::vector<Hole> holes;
    double log_background = 0.0;
    double log_hole = -1.0;
    double edge_width = 0.0003;   // m, linear ramp centered on the rim

    std::string validation_error() const {
        if (t_bw.orthonormality_error() > 1e-9) return "scene.plane_pose rotation is not orthonormal";
        for (std::size_t i = 0; i < holes.size(); ++i) {
            if (!(holes[i].radius > 0.0)) return "scene.holes[" + std::to_string(i) + "].radius must be positive";
            for (std::size_t j = 0; j < i; ++j) {
                if ((holes[i].center - holes[j].center).norm() <= holes[i].radius + holes[j].radius)
                    return "scene.holes[" + std::to_string(i) + "] overlaps hole " + std::to_string(j);
            }
        }
        if (!(log_background > log_hole)) return "scene.log_background must exceed scene.log_hole";
        if (edge_width < 0.0) return "scene.edge_width must be non-negative";
        return {};
    }
};

struct SimConfig {
    double contrast_threshold = 0.2;     // log-intensity units
    double threshold_sigma = 0.03;
    double noise_rate = 0.1;             // background activity, events / pixel / s
    std::uint64_t refractory_us = 100;
    std::uint64_t timestamp_resolution_us = 1;
    double sample_rate_hz = 10000.0;     // renderer supersampling
    double pose_rate_hz = 1000.0;

    std::string validation_error() const {
        if (!(contrast_threshold > 0.0)) return "sim.contrast_threshold must be positive";
        if (threshold_sigma < 0.0) return "sim.threshold_sigma must be non-negative";
        if (noise_rate < 0.0) return "sim.noise_rate must be non-negative";
        if (timestamp_resolution_us < 1) return "sim.timestamp_resolution_us must be >= 1";
        if (refractory_us < timestamp_resolution_us) return "sim.refractory_us must be >= timestamp resolution";
        if (!(sample_rate_hz > 0.0) || !(pose_rate_hz > 0.0)) return "sim rates must be positive";
        if (pose_rate_hz > sample_rate_hz) return "sim.pose_rate_hz must not exceed sim.sample_rate_hz";
        return {};
    }

    std::uint64_t sample_period_us() const {
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(1e6 / sample_rate_hz)));
    }
    std::uint64_t pose_period_us() const {
        return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(1e6 / pose_rate_hz)));
    }
};

/// Events plus the camera pose log and, from the simulator, a source label per
/// event (hole index, or -1 for background activity).
struct EventStream {
    std::vector<Event> events;
    PoseLog poses;
    std::vector<int> labels;
    int width = 346;
    int height = 260;
};

constexpr int kNoiseLabel = -1;

struct IntensitySample {
    double value = 0.0;
    int hole = kNoiseLabel;   // nearest hole whose ramp affects the pixel
};

namespace detail {

inline IntensitySample scene_sample(const SceneModel& scene, const RigidTransform& t_wc, const CameraIntrinsics& k,
                                    double u, double v) {
    IntensitySample out{scene.log_background, kNoiseLabel};
    const Vec3 dir_c((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
    const Vec3 dir_w = t_wc.rotation() * dir_c;
    const Vec3& o_w = t_wc.translation();
    if (std::abs(dir_w.z()) < 1e-12) return out;   // parallel to the plane
    const double s = -o_w.z() / dir_w.z();
    if (s <= 0.0) return out;
    const Vec2 hit(o_w.x() + s * dir_w.x(), o_w.y() + s * dir_w.y());
    double best = 0.0;
    for (std::size_t i = 0; i < scene.holes.size(); ++i) {
        const double d = (hit - scene.holes[i].center).norm() - scene.holes[i].radius;
        double frac;
        if (scene.edge_width > 0.0) {
            frac = std::clamp(0.5 - d / scene.edge_width, 0.0, 1.0);
        } else {
            frac = d < 0.0 ? 1.0 : (d == 0.0 ? 0.5 : 0.0);
        }
        if (frac > best || (frac > 0.0 && out.hole == kNoiseLabel)) {
            best = std::max(best, frac);
            out.hole = static_cast<int>(i);
        }
    }
    out.value = scene.log_background + (scene.log_hole - scene.log_background) * best;
    return out;
}

}  // namespace detail

/// Log intensity seen by pixel px with camera pose T_BC.
inline double scene_log_intensity(const SceneModel& scene, const RigidTransform& t_bc, const CameraIntrinsics& k,
                                  const Vec2& px) {
    return detail::scene_sample(scene, scene.t_bw.inverse() * t_bc, k, px.x(), px.y()).value;
}

inline std::vector<Vec3> ground_truth_holes(const SceneModel& scene) {
    std::vector<Vec3> out;
    out.reserve(scene.holes.size());
    for (const auto& h : scene.holes) out.push_back(scene.t_bw.apply(Vec3(h.center.x(), h.center.y(), 0.0)));
    return out;
}

/// Contrast-threshold state of one pixel, advanced over piecewise-linear
/// log-intensity segments.
class PixelModel {
public:
    struct Emitted {
        std::uint64_t t;
        std::int8_t p;
    };

    double reference = 0.0;
    double threshold = 0.2;
    std::int64_t last_event = std::numeric_limits<std::int64_t>::min() / 2;
    bool pending = false;

    /// Processes the linear segment (t0, l0) -> (t1, l1), times in microseconds.
    /// draw_threshold() supplies the threshold used after each emitted event.
    template <class DrawThreshold, class Sink>
    void advance(double t0, double l0, double t1, double l1, std::int64_t refractory, std::int64_t resolution,
                 DrawThreshold&& draw_threshold, Sink&& sink) {
        pending = false;
        double ts = t0;
        const std::int64_t t_end = static_cast<std::int64_t>(std::floor(t1));
        auto value_at = [&](double t) {
            if (t1 <= t0) return l1;
            return l0 + (l1 - l0) * (t - t0) / (t1 - t0);
        };
        for (int guard = 0; guard < 100000; ++guard) {
            const double up = reference + threshold;
            const double down = reference - threshold;
            const double ls = value_at(ts);
            int polarity = 0;
            double t_cross = ts;
            if (ls >= up) {
                polarity = 1;
            } else if (ls <= down) {
                polarity = -1;
            } else if (l1 >= up) {
                polarity = 1;
                t_cross = ts + (up - ls) / (l1 - ls) * (t1 - ts);
            } else if (l1 <= down) {
                polarity = -1;
                t_cross = ts + (down - ls) / (l1 - ls) * (t1 - ts);
            } else {
                return;
            }
            t_cross = std::clamp(t_cross, ts, t1);
            std::int64_t t_emit = static_cast<std::int64_t>(std::floor(t_cross));
            t_emit -= t_emit % resolution;
            t_emit = std::max(t_emit, last_event + refractory);
            if (t_emit > t_end) {
                pending = true;
                return;
            }
            const double l_emit = value_at(std::max(static_cast<double>(t_emit), t0));
            const bool delayed = static_cast<double>(t_emit) > t_cross;
            const bool still_beyond = polarity > 0 ? l_emit >= up : l_emit <= down;
            if (delayed && !still_beyond) {
                // change reverted while the pixel was refractory; re-examine from here
                if (static_cast<double>(t_emit) <= ts) return;
                ts = std::max(ts, static_cast<double>(t_emit));
                continue;
            }
            sink(Emitted{static_cast<std::uint64_t>(t_emit), static_cast<std::int8_t>(polarity)});
            reference += polarity * threshold;
            threshold = draw_threshold();
            last_event = t_emit;
            ts = t_cross;
        }
    }
};

/// Streaming event generator: feed camera poses at the supersampling rate,
/// collect time-ordered events.
class EventGenerator {
public:
    EventGenerator(const SceneModel& scene, const CameraIntrinsics& k, const SimConfig& config, std::uint64_t seed,
                   std::uint64_t t0_us, const RigidTransform& t_bc0)
        : scene_(scene), k_(k), config_(config), rng_(seed),
          n_pixels_(static_cast<std::size_t>(k.width) * k.height),
          pixels_(n_pixels_), value_(n_pixels_), label_(n_pixels_, kNoiseLabel), last_eval_(n_pixels_, 0),
          boxes_(scene.holes.size()) {
        if (const auto e = config.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
        if (const auto e = k.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
        t_prev_ = t0_us;
        const RigidTransform t_wc = scene_.t_bw.inverse() * t_bc0;
        for (int v = 0; v < k_.height; ++v) {
            for (int u = 0; u < k_.width; ++u) {
                const std::size_t idx = index(u, v);
                const auto s = detail::scene_sample(scene_, t_wc, k_, u, v);
                value_[idx] = s.value;
                label_[idx] = s.hole;
                pixels_[idx].reference = s.value;
                pixels_[idx].threshold = draw_threshold();
            }
        }
        for (std::size_t h = 0; h < boxes_.size(); ++h) boxes_[h] = hole_box(h, t_wc);
        log_pose(t0_us, t_bc0, true);
    }

    const PoseLog& pose_log() const { return poses_; }
    std::uint64_t time() const { return t_prev_; }

    /// Advances the simulation to t_us with camera pose T_BC, appending released
    /// events (and labels) to the outputs.
    void advance(std::uint64_t t_us, const RigidTransform& t_bc, std::vector<Event>& out,
                 std::vector<int>* labels = nullptr) {
        if (t_us <= t_prev_) fail(ErrorCode::InvalidArgument, "event generator time must increase");
        ++sample_;
        const RigidTransform t_wc = scene_.t_bw.inverse() * t_bc;
        const double t0 = static_cast<double>(t_prev_);
        const double t1 = static_cast<double>(t_us);
        const auto refractory = static_cast<std::int64_t>(config_.refractory_us);
        const auto resolution = static_cast<std::int64_t>(config_.timestamp_resolution_us);
        batch_.clear();

        inject_noise(t_prev_, t_us, refractory, resolution);

        auto process = [&](std::size_t idx, double l_prev, double l_cur, int label) {
            auto& px = pixels_[idx];
            px.advance(t0, l_prev, t1, l_cur, refractory, resolution, [this] { return draw_threshold(); },
                       [&](const PixelModel::Emitted& e) { batch_.push_back({e.t, idx, e.p, label}); });
            if (px.pending) pending_next_.push_back(idx);
        };

        for (std::size_t h = 0; h < boxes_.size(); ++h) {
            const Box cur = hole_box(h, t_wc);
            Box region = boxes_[h].merge(cur).clip(k_.width, k_.height);
            boxes_[h] = cur;
            for (int v = region.v0; v <= region.v1; ++v) {
                for (int u = region.u0; u <= region.u1; ++u) {
                    const std::size_t idx = index(u, v);
                    if (last_eval_[idx] == sample_) continue;
                    const double l_prev =
                        last_eval_[idx] == sample_ - 1 ? value_[idx] : scene_.log_background;
                    const auto s = detail::scene_sample(scene_, t_wc, k_, u, v);
                    last_eval_[idx] = sample_;
                    const int label = s.hole != kNoiseLabel ? s.hole : label_[idx];
                    process(idx, l_prev, s.value, label);
                    value_[idx] = s.value;
                    label_[idx] = label;
                }
            }
        }
        // pixels with a refractory backlog outside every hole region
        pending_now_.swap(pending_next_);
        pending_next_.clear();
        for (const std::size_t idx : pending_now_) {
            if (last_eval_[idx] == sample_) continue;
            last_eval_[idx] = sample_;
            value_[idx] = scene_.log_background;
            process(idx, scene_.log_background, scene_.log_background, label_[idx]);
        }

        release(t_us, out, labels);
        t_prev_ = t_us;
        log_pose(t_us, t_bc, false);
    }

    /// Releases events held back at the last sample boundary.
    void flush(std::vector<Event>& out, std::vector<int>* labels = nullptr) {
        for (const auto& e : held_) emit(e, out, labels);
        held_.clear();
    }

private:
    struct Box {
        int u0 = 0, v0 = 0, u1 = -1, v1 = -1;
        bool empty() const { return u1 < u0 || v1 < v0; }
        Box merge(const Box& o) const {
            if (empty()) return o;
            if (o.empty()) return *this;
            return {std::min(u0, o.u0), std::min(v0, o.v0), std::max(u1, o.u1), std::max(v1, o.v1)};
        }
        Box clip(int w, int h) const {
            Box b{std::max(u0, 0), std::max(v0, 0), std::min(u1, w - 1), std::min(v1, h - 1)};
            return b;
        }
    };

    struct Pending {
        std::uint64_t t;
        std::size_t pixel;
        std::int8_t p;
        int label;
    };

    std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * k_.width + u; }

    double draw_threshold() {
        if (config_.threshold_sigma <= 0.0) return config_.contrast_threshold;
        const double c = config_.contrast_threshold + config_.threshold_sigma * normal_(rng_);
        return std::max(c, 0.1 * config_.contrast_threshold);
    }

    /// Conservative pixel box containing the hole and its edge ramp.
    Box hole_box(std::size_t h, const RigidTransform& t_wc) const {
        const RigidTransform t_cw = t_wc.inverse();
        const Hole& hole = scene_.holes[h];
        const double half = hole.radius + scene_.edge_width + 1e-4;
        double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
        for (int sx : {-1, 1}) {
            for (int sy : {-1, 1}) {
                const Vec3 pc = t_cw.apply(Vec3(hole.center.x() + sx * half, hole.center.y() + sy * half, 0.0));
                if (pc.z() <= 1e-6) return {0, 0, k_.width - 1, k_.height - 1};
                const double u = k_.fx * pc.x() / pc.z() + k_.cx;
                const double v = k_.fy * pc.y() / pc.z() + k_.cy;
                umin = std::min(umin, u);
                umax = std::max(umax, u);
                vmin = std::min(vmin, v);
                vmax = std::max(vmax, v);
            }
        }
        const double lim = 1e6;
        if (umax < -1.0 || vmax < -1.0 || umin > k_.width + 1.0 || vmin > k_.height + 1.0) return {};
        return {static_cast<int>(std::floor(std::max(umin, -lim))) - 1,
                static_cast<int>(std::floor(std::max(vmin, -lim))) - 1,
                static_cast<int>(std::ceil(std::min(umax, lim))) + 1,
                static_cast<int>(std::ceil(std::min(vmax, lim))) + 1};
    }

    void inject_noise(std::uint64_t t0, std::uint64_t t1, std::int64_t refractory, std::int64_t resolution) {
        if (config_.noise_rate <= 0.0) return;
        const double mean = config_.noise_rate * static_cast<double>(n_pixels_) * static_cast<double>(t1 - t0) * 1e-6;
        std::poisson_distribution<int> count(mean);
        const int n = count(rng_);
        if (n == 0) return;
        std::uniform_int_distribution<std::uint64_t> when(t0, t1 - 1);
        std::uniform_int_distribution<std::size_t> where(0, n_pixels_ - 1);
        std::bernoulli_distribution sign(0.5);
        noise_.clear();
        for (int i = 0; i < n; ++i) {
            std::uint64_t t = when(rng_);
            t -= t % static_cast<std::uint64_t>(resolution);
            const std::size_t idx = where(rng_);
            const std::int8_t p = sign(rng_) ? 1 : -1;
            noise_.push_back({t, idx, p, kNoiseLabel});
        }
        std::sort(noise_.begin(), noise_.end(),
                  [](const Pending& a, const Pending& b) { return a.t != b.t ? a.t < b.t : a.pixel < b.pixel; });
        for (const auto& e : noise_) {
            auto& px = pixels_[e.pixel];
            const auto t = static_cast<std::int64_t>(e.t);
            if (t - px.last_event < refractory) continue;
            px.last_event = t;
            batch_.push_back(e);
        }
    }

    void release(std::uint64_t boundary, std::vector<Event>& out, std::vector<int>* labels) {
        batch_.insert(batch_.end(), held_.begin(), held_.end());
        held_.clear();
        std::sort(batch_.begin(), batch_.end(),
                  [](const Pending& a, const Pending& b) { return a.t != b.t ? a.t < b.t : a.pixel < b.pixel; });
        for (const auto& e : batch_) {
            if (e.t >= boundary) {
                held_.push_back(e);
            } else {
                emit(e, out, labels);
            }
        }
    }

    void emit(const Pending& e, std::vector<Event>& out, std::vector<int>* labels) const {
        out.push_back({e.t, static_cast<std::uint16_t>(e.pixel % k_.width),
                       static_cast<std::uint16_t>(e.pixel / k_.width), e.p});
        if (labels) labels->push_back(e.label);
    }

    void log_pose(std::uint64_t t, const RigidTransform& t_bc, bool force) {
        const std::uint64_t period = config_.pose_period_us();
        if (force || t / period != last_pose_slot_) {
            poses_.samples.push_back({t, t_bc});
            last_pose_slot_ = t / period;
        }
    }

    SceneModel scene_;
    CameraIntrinsics k_;
    SimConfig config_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::size_t n_pixels_;
    std::vector<PixelModel> pixels_;
    std::vector<double> value_;
    std::vector<int> label_;
    std::vector<std::int64_t> last_eval_;
    std::vector<Box> boxes_;
    std::vector<std::size_t> pending_now_, pending_next_;
    std::vector<Pending> batch_, held_, noise_;
    std::uint64_t t_prev_ = 0;
    std::int64_t sample_ = 0;
    std::uint64_t last_pose_slot_ = 0;
    PoseLog poses_;
};

/// Renders the full event stream for a camera trajectory starting at t = 0.
inline EventStream generate_events(const SceneModel& scene, const CameraTrajectory& trajectory,
                                   const CameraIntrinsics& k, const SimConfig& config, std::uint64_t seed) {
    if (!(trajectory.duration > 0.0)) fail(ErrorCode::InvalidArgument, "trajectory duration must be positive");
    EventStream stream;
    stream.width = k.width;
    stream.height = k.height;
    EventGenerator gen(scene, k, config, seed, 0, trajectory.pose(0.0));
    const std::uint64_t period = config.sample_period_us();
    const auto end = static_cast<std::uint64_t>(std::llround(trajectory.duration * 1e6));
    for (std::uint64_t t = period; ; t += period) {
        const std::uint64_t tc = std::min(t, end);
        gen.advance(tc, trajectory.pose(static_cast<double>(tc) * 1e-6), stream.events, &stream.labels);
        if (tc >= end) break;
    }
    gen.flush(stream.events, &stream.labels);
    stream.poses = gen.pose_log();
    return stream;
}

/// Monotone mapping from an illumination level to sensor noise settings.
/// At or above reference_level the base configuration is returned unchanged;
/// below it a weight w = ln(ref/level) / (ln(ref/level) + ln(ref/half_level))
/// interpolates the noise rate and threshold jitter toward their maxima.
struct LightingModel {
    double reference_level = 400.0;
    double half_level = 10.0;
    double max_noise_rate = 2.0;
    double max_threshold_sigma = 0.08;

    double weight(double level) const {
        if (!(level > 0.0)) fail(ErrorCode::InvalidArgument, "lighting level must be positive");
        if (level >= reference_level) return 0.0;
        const double x = std::log(reference_level / level);
        return x / (x + std::log(reference_level / half_level));
    }
};

inline SimConfig lighting_proxy(double level, const SimConfig& base, const LightingModel& model = {}) {
    const double w = model.weight(level);
    SimConfig out = base;
    if (w == 0.0) return out;
    out.noise_rate = base.noise_rate + (std::max(model.max_noise_rate, base.noise_rate) - base.noise_rate) * w;
    out.threshold_sigma =
        base.threshold_sigma + (std::max(model.max_threshold_sigma, base.threshold_sigma) - base.threshold_sigma) * w;
    return out;
}

}  // namespace neurodrill
