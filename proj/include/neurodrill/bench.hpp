#pragma once

#include <neurodrill/event_cht.hpp>
#include <neurodrill/event_sim.hpp>
#include <neurodrill/multiview.hpp>
#include <neurodrill/report.hpp>
#include <neurodrill/scenario.hpp>
#include <neurodrill/servo.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace neurodrill {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline std::string failure_label(const std::optional<ErrorCode>& e) {
    return e ? std::string(to_string(*e)) : std::string("none");
}

/// Scan events for the scenario at a speed and lighting level.
inline EventStream simulate_scan(const ScenarioConfig& c, double speed, const std::string& lighting,
                                 std::uint64_t seed) {
    const auto traj = scan_trajectory(c.drill.scan, speed, c.drill.intrinsics);
    return generate_events(c.drill.scene, traj, c.drill.intrinsics, c.sim_for(lighting), detail::splitmix64(seed));
}

// ---------------------------------------------------------------- multiview

struct MultiviewCell {
    double speed = 0.0;
    std::string lighting;
    double level = 0.0;
    std::optional<ErrorCode> failure;
    double mean = kNaN;             // D, m
    std::vector<double> per_hole;   // m, NaN when unmatched
    std::size_t matched = 0;
    std::size_t spurious = 0;
    std::size_t events = 0;
    WorkpieceEstimate estimate;
};

constexpr double kBenchMatchRadius = 0.02;   // m

inline MultiviewCell localize_cell(const ScenarioConfig& c, const EventStream& stream) {
    MultiviewCell cell;
    cell.events = stream.events.size();
    const auto truth = ground_truth_holes(c.drill.scene);
    cell.per_hole.assign(truth.size(), kNaN);
    try {
        cell.estimate = localize_workpiece(stream, c.drill.intrinsics, c.drill.localization);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::ValidationError) throw;
        cell.failure = e.code();
        return cell;
    }
    std::vector<Vec3> est;
    for (std::size_t i = 0; i < cell.estimate.holes.size(); ++i)
        if (cell.estimate.inliers[i]) est.push_back(cell.estimate.holes[i]);
    const auto err = localization_error(est, truth, kBenchMatchRadius);
    cell.per_hole = err.per_hole;
    cell.mean = err.mean;
    cell.matched = truth.size() - err.unmatched_truth.size();
    cell.spurious = err.spurious_estimates.size();
    if (cell.matched == 0) cell.failure = ErrorCode::NoHolesFound;
    return cell;
}

/// Scan and localize for every (speed, lighting) pair. The seed depends on the
/// speed index only, so lighting columns share the same draw sequence start.
inline std::vector<MultiviewCell> run_multiview_grid(const ScenarioConfig& c, const std::vector<double>& speeds,
                                                     const std::vector<std::string>& lighting) {
    std::vector<MultiviewCell> cells;
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        for (const auto& l : lighting) {
            const auto stream = simulate_scan(c, speeds[i], l, c.seed + 7919 * (i + 1));
            MultiviewCell cell = localize_cell(c, stream);
            cell.speed = speeds[i];
            cell.lighting = l;
            cell.level = c.lighting_level(l);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

/// One row per speed, a column group per lighting level (Table 1 layout).
inline Report multiview_report(const ScenarioConfig& c, const std::vector<MultiviewCell>& cells,
                               const std::vector<double>& speeds, const std::vector<std::string>& lighting) {
    std::vector<std::string> header{"scenario", "speed_mps"};
    for (const auto& l : lighting) {
        header.push_back("D_mm_" + l);
        header.push_back("max_d_mm_" + l);
        header.push_back("matched_" + l);
        header.push_back("spurious_" + l);
        header.push_back("events_" + l);
        header.push_back("failure_" + l);
    }
    Report r(header);
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        std::vector<std::string> row{c.name, format_number(speeds[i])};
        for (std::size_t j = 0; j < lighting.size(); ++j) {
            const auto& cell = cells[i * lighting.size() + j];
            double worst = kNaN;
            for (double d : cell.per_hole)
                if (std::isfinite(d)) worst = std::isfinite(worst) ? std::max(worst, d) : d;
            row.push_back(format_number(cell.mean * 1e3));
            row.push_back(format_number(worst * 1e3));
            row.push_back(format_number(static_cast<std::uint64_t>(cell.matched)));
            row.push_back(format_number(static_cast<std::uint64_t>(cell.spurious)));
            row.push_back(format_number(static_cast<std::uint64_t>(cell.events)));
            row.push_back(failure_label(cell.failure));
        }
        r.add_row(std::move(row));
    }
    return r;
}

inline Report bench_multiview(const ScenarioConfig& c, const std::vector<double>& speeds,
                              const std::vector<std::string>& lighting) {
    return multiview_report(c, run_multiview_grid(c, speeds, lighting), speeds, lighting);
}

/// Per-estimate rows of a single localization run.
inline Report localization_report(const ScenarioConfig& c, const MultiviewCell& cell) {
    Report r({"scenario", "estimate", "x_mm", "y_mm", "z_mm", "support", "inlier", "truth", "d_mm", "D_mm",
              "failure"});
    const auto truth = ground_truth_holes(c.drill.scene);
    std::vector<std::size_t> inlier_index;
    for (std::size_t i = 0; i < cell.estimate.holes.size(); ++i)
        if (cell.estimate.inliers[i]) inlier_index.push_back(i);
    std::vector<Vec3> est;
    for (auto i : inlier_index) est.push_back(cell.estimate.holes[i]);
    const auto err = localization_error(est, truth, kBenchMatchRadius);
    for (std::size_t i = 0; i < cell.estimate.holes.size(); ++i) {
        int g = -1;
        double d = kNaN;
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (err.match[t] >= 0 && inlier_index[static_cast<std::size_t>(err.match[t])] == i) {
                g = static_cast<int>(t);
                d = err.per_hole[t];
            }
        }
        const Vec3& p = cell.estimate.holes[i];
        r.add_row({c.name, format_number(static_cast<std::uint64_t>(i)), format_number(p.x() * 1e3),
                   format_number(p.y() * 1e3), format_number(p.z() * 1e3),
                   format_number(static_cast<std::uint64_t>(cell.estimate.support[i])),
                   cell.estimate.inliers[i] ? "1" : "0", format_number(g), format_number(d * 1e3),
                   format_number(cell.mean * 1e3), failure_label(cell.failure)});
    }
    if (cell.estimate.holes.empty()) {
        r.add_row({c.name, "-1", kFailToken, kFailToken, kFailToken, "0", "0", "-1", kFailToken, kFailToken,
                   failure_label(cell.failure)});
    }
    return r;
}

// ---------------------------------------------------------------- tracking

struct TrackingSample {
    double t = 0.0;        // s
    double error = kNaN;   // px, NaN when the method produced nothing
};

struct TrackingSeries {
    double speed = 0.0;
    std::string method;   // "bayesian" or "frame_<ms>ms"
    std::vector<TrackingSample> samples;

    double median() const {
        std::vector<double> v;
        for (const auto& s : samples)
            if (std::isfinite(s.error)) v.push_back(s.error);
        if (v.empty()) return kNaN;
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    std::size_t misses() const {
        return static_cast<std::size_t>(
            std::count_if(samples.begin(), samples.end(), [](const auto& s) { return !std::isfinite(s.error); }));
    }
};

/// Look-down pass at the servo standoff over the first hole, along the workpiece x axis.
inline CameraTrajectory tracking_pass(const ScenarioConfig& c, double speed) {
    if (c.drill.scene.holes.empty()) fail(ErrorCode::ValidationError, "scene.holes: tracking needs a hole");
    const RigidTransform& t_bw = c.drill.scene.t_bw;
    const RigidTransform t_bh(t_bw.rotation(), ground_truth_holes(c.drill.scene).front());
    const RigidTransform start = t_bh * hole_stance(c.drill.servo.standoff);
    const double span = c.bench.tracking_span;
    return {span / speed, [=](double t) {
                return start * RigidTransform::from_translation(Vec3(-0.5 * span + speed * t, 0.0, 0.0));
            }};
}

inline std::vector<TrackingSeries> run_tracking(const ScenarioConfig& c, const std::vector<double>& speeds) {
    const auto& k = c.drill.intrinsics;
    const double focal = k.focal();
    const double depth = c.drill.servo.standoff;
    const Vec3 hole = ground_truth_holes(c.drill.scene).front();
    const SimConfig sim = c.sim_for(c.lighting);
    std::vector<TrackingSeries> out;
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        const auto traj = tracking_pass(c, speeds[i]);
        const auto stream =
            generate_events(c.drill.scene, traj, k, sim, detail::splitmix64(c.seed + 104729 * (i + 1)));
        const auto end = static_cast<std::uint64_t>(std::llround(traj.duration * 1e6));
        auto truth = [&](std::uint64_t t) {
            return project(k, traj.pose(1e-6 * static_cast<double>(t)).inverse(), hole);
        };
        TrackingSeries bayes{speeds[i], "bayesian", {}};
        for (const auto& s : track(stream.events, [&](double t) { return traj.twist(t); }, focal, depth, c.tracker,
                                   0, end)) {
            bayes.samples.push_back({1e-6 * static_cast<double>(s.t),
                                     s.hypothesis ? (s.hypothesis->center() - truth(s.t)).norm() : kNaN});
        }
        out.push_back(std::move(bayes));
        for (double ms : c.bench.frame_periods_ms) {
            const auto period = static_cast<std::uint64_t>(std::llround(ms * 1e3));
            TrackingSeries fr{speeds[i], "frame_" + format_number(ms) + "ms", {}};
            for (const auto& f :
                 frame_cht_baseline(stream.events, period, c.tracker.grid, c.tracker.vote_width, 0, end,
                                    c.tracker.refine)) {
                fr.samples.push_back({1e-6 * static_cast<double>(f.t_end),
                                      f.circle ? (f.circle->center() - truth(f.t_end)).norm() : kNaN});
            }
            out.push_back(std::move(fr));
        }
    }
    return out;
}

inline Report tracking_report(const ScenarioConfig& c, const std::vector<TrackingSeries>& series) {
    Report r({"scenario", "speed_mps", "method", "t_ms", "pixel_error"});
    for (const auto& s : series)
        for (const auto& x : s.samples)
            r.add_row({c.name, format_number(s.speed), s.method, format_number(x.t * 1e3), format_number(x.error)});
    return r;
}

inline Report tracking_summary(const ScenarioConfig& c, const std::vector<TrackingSeries>& series) {
    Report r({"scenario", "speed_mps", "method", "samples", "misses", "median_px"});
    for (const auto& s : series)
        r.add_row({c.name, format_number(s.speed), s.method, format_number(static_cast<std::uint64_t>(s.samples.size())),
                   format_number(static_cast<std::uint64_t>(s.misses())), format_number(s.median())});
    return r;
}

inline Report bench_tracking(const ScenarioConfig& c, const std::vector<double>& speeds) {
    return tracking_report(c, run_tracking(c, speeds));
}

// ---------------------------------------------------------------- drilling

/// Workpiece i of the drilling benchmark: the scene pose perturbed by uniform
/// draws within the jitter ranges.
inline RigidTransform workpiece_placement(const ScenarioConfig& c, int i) {
    std::mt19937_64 rng(detail::splitmix64(c.seed * 0x100000001B3ull + static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto& j = c.workpieces;
    const Vec3 dp(j.position.x() * u(rng), j.position.y() * u(rng), j.position.z() * u(rng));
    const double yaw = j.yaw * u(rng);
    const double tx = j.tilt * u(rng);
    const double ty = j.tilt * u(rng);
    const Mat3 r = so3_exp(Vec3(tx, ty, 0.0)) * so3_exp(Vec3(0.0, 0.0, yaw)) * c.drill.scene.t_bw.rotation();
    return {r, c.drill.scene.t_bw.translation() + dp};
}

struct DrillBench {
    std::vector<DrillReport> runs;
    double mean = kNaN;   // m, over successful holes
    double max = kNaN;
    double stddev = kNaN;   // population
    std::size_t succeeded = 0;
    std::size_t failed = 0;
};

struct ErrorStats {
    double mean = kNaN, max = kNaN, stddev = kNaN;
    std::size_t n = 0;
};

inline ErrorStats error_stats(const std::vector<double>& xs) {
    ErrorStats s;
    double sum = 0.0;
    for (double x : xs) {
        if (!std::isfinite(x)) continue;
        sum += x;
        s.max = s.n ? std::max(s.max, x) : x;
        ++s.n;
    }
    if (!s.n) return s;
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0.0;
    for (double x : xs)
        if (std::isfinite(x)) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n));
    return s;
}

inline DrillBench run_drilling(const ScenarioConfig& c) {
    DrillBench b;
    std::vector<double> all;
    for (int i = 0; i < c.workpieces.count; ++i) {
        DrillSetup s = c.drill_setup();
        s.scene.t_bw = workpiece_placement(c, i);
        s.seed = detail::splitmix64(c.seed + 0x5DEECE66Dull * static_cast<std::uint64_t>(i + 1));
        b.runs.push_back(run_drill_sequence(s));
        for (const auto& h : b.runs.back().holes) {
            if (h.truth < 0) continue;
            if (h.failure) {
                ++b.failed;
            } else {
                ++b.succeeded;
                all.push_back(h.metric_error);
            }
        }
    }
    const auto st = error_stats(all);
    b.mean = st.mean;
    b.max = st.max;
    b.stddev = st.stddev;
    return b;
}

/// One row per workpiece with a column per ground-truth hole, plus an aggregate
/// row whose hole columns are per-hole means over workpieces (Table 2 layout).
inline Report drilling_report(const ScenarioConfig& c, const DrillBench& b) {
    const std::size_t n = c.drill.scene.holes.size();
    std::vector<std::string> header{"scenario", "workpiece"};
    for (std::size_t h = 0; h < n; ++h) header.push_back("hole_" + std::to_string(h + 1) + "_mm");
    for (const char* s : {"mean_mm", "max_mm", "std_mm", "succeeded", "failed", "spurious", "within_clearance",
                          "failures"})
        header.push_back(s);
    Report r(header);
    std::vector<std::vector<double>> per_hole(n);
    for (std::size_t w = 0; w < b.runs.size(); ++w) {
        const auto& run = b.runs[w];
        std::vector<std::string> row{c.name, std::to_string(w + 1)};
        std::vector<double> errs;
        std::size_t failed = 0, spurious = 0, inside = 0;
        std::string labels;
        for (const auto& h : run.holes) {
            if (h.truth < 0) {
                ++spurious;
                continue;
            }
            const double e = h.failure ? kNaN : h.metric_error * 1e3;
            if (h.failure) {
                ++failed;
                if (!labels.empty()) labels += ';';
                labels += std::to_string(h.truth + 1) + ":" + failure_label(h.failure);
            }
            inside += !h.failure && h.metric_error <= c.drill.servo.clearance;
            errs.push_back(e);
            per_hole[static_cast<std::size_t>(h.truth)].push_back(e);
            row.push_back(format_number(e));
        }
        const auto st = error_stats(errs);
        row.push_back(format_number(st.mean));
        row.push_back(format_number(st.max));
        row.push_back(format_number(st.stddev));
        row.push_back(format_number(static_cast<std::uint64_t>(st.n)));
        row.push_back(format_number(static_cast<std::uint64_t>(failed)));
        row.push_back(format_number(static_cast<std::uint64_t>(spurious)));
        row.push_back(format_number(static_cast<std::uint64_t>(inside)));
        row.push_back(labels.empty() ? "none" : labels);
        r.add_row(std::move(row));
    }
    std::vector<std::string> agg{c.name, "aggregate"};
    for (const auto& v : per_hole) agg.push_back(format_number(error_stats(v).mean));
    agg.push_back(format_number(b.mean * 1e3));
    agg.push_back(format_number(b.max * 1e3));
    agg.push_back(format_number(b.stddev * 1e3));
    agg.push_back(format_number(static_cast<std::uint64_t>(b.succeeded)));
    agg.push_back(format_number(static_cast<std::uint64_t>(b.failed)));
    std::size_t spurious = 0, inside = 0;
    for (const auto& run : b.runs)
        for (const auto& h : run.holes) {
            spurious += h.truth < 0;
            inside += h.truth >= 0 && !h.failure && h.metric_error <= c.drill.servo.clearance;
        }
    agg.push_back(format_number(static_cast<std::uint64_t>(spurious)));
    agg.push_back(format_number(static_cast<std::uint64_t>(inside)));
    agg.push_back("none");
    r.add_row(std::move(agg));
    return r;
}

inline Report bench_drilling(const ScenarioConfig& c) { return drilling_report(c, run_drilling(c)); }

/// Per-hole rows of one drilling run.
inline Report drill_report(const ScenarioConfig& c, const DrillReport& d) {
    Report r({"scenario", "hole", "estimate", "metric_error_mm", "pixel_error_px", "localization_error_mm",
              "pbvs_s", "ibvs_s", "events", "within_clearance", "failure"});
    for (const auto& h : d.holes) {
        r.add_row({c.name, format_number(h.truth < 0 ? -1 : h.truth + 1), format_number(h.estimate),
                   format_number(h.failure ? kNaN : h.metric_error * 1e3), format_number(h.pixel_error),
                   format_number(h.localization_error * 1e3), format_number(h.pbvs_time),
                   format_number(h.ibvs_time), format_number(static_cast<std::uint64_t>(h.events)),
                   !h.failure && h.metric_error <= c.drill.servo.clearance ? "1" : "0", failure_label(h.failure)});
    }
    return r;
}

}  // namespace neurodrill
