#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace neurodrill {

/// Bin layout of the (a, b, r) accumulator. Center bins are square; bin i of
/// the a axis is centered at a_min + i * center_bin, for centers below a_max.
/// Radius centers run from r_min to r_max inclusive.
struct HoughGrid {
    double a_min = 0.0;
    double a_max = 346.0;
    double b_min = 0.0;
    double b_max = 260.0;
    double r_min = 5.0;
    double r_max = 40.0;
    double center_bin = 1.0;
    double radius_bin = 1.0;

    int na() const { return static_cast<int>(std::ceil((a_max - a_min) / center_bin - 1e-9)); }
    int nb() const { return static_cast<int>(std::ceil((b_max - b_min) / center_bin - 1e-9)); }
    int nr() const { return static_cast<int>(std::floor((r_max - r_min) / radius_bin + 1e-9)) + 1; }
    std::size_t size() const {
        return static_cast<std::size_t>(na()) * static_cast<std::size_t>(nb()) * static_cast<std::size_t>(nr());
    }

    double a_center(double i) const { return a_min + i * center_bin; }
    double b_center(double j) const { return b_min + j * center_bin; }
    double r_center(double k) const { return r_min + k * radius_bin; }

    /// Square window of half-width `half` pixels around (a, b), radius band [r0, r1].
    static HoughGrid roi(const Vec2& center, double half, double r0, double r1, double bin = 1.0) {
        HoughGrid g;
        g.a_min = std::round(center.x() - half);
        g.a_max = g.a_min + 2.0 * half + bin;
        g.b_min = std::round(center.y() - half);
        g.b_max = g.b_min + 2.0 * half + bin;
        g.r_min = r0;
        g.r_max = r1;
        g.center_bin = bin;
        g.radius_bin = bin;
        return g;
    }

    std::string validation_error() const {
        if (!(center_bin > 0.0) || !(radius_bin > 0.0)) return "grid bin widths must be positive";
        if (!(a_max > a_min) || !(b_max > b_min)) return "grid center ranges must be non-empty";
        if (!(r_min > 0.0) || !(r_max >= r_min)) return "grid radius range must be positive and ordered";
        return {};
    }
};

struct TrackerConfig {
    HoughGrid grid;
    Mat3 covariance = Vec3(4.0, 4.0, 0.25).asDiagonal();   // px^2 over (a, b, r)
    double prediction_rate_hz = 100.0;
    double vote_width = 1.0;     // half-width of the triangular vote profile, bins
    double beta = 0.999;         // prior retention per accepted event
    bool refine = true;          // sub-bin peak refinement
    int sensor_width = 346;
    int sensor_height = 260;

    std::uint64_t prediction_period_us() const {
        return static_cast<std::uint64_t>(std::llround(1e6 / prediction_rate_hz));
    }

    std::string validation_error() const {
        if (auto e = grid.validation_error(); !e.empty()) return "tracker.grid: " + e;
        if (!covariance.allFinite() || (covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            return "tracker.covariance must be symmetric";
        const Mat3 off = covariance - Mat3(covariance.diagonal().asDiagonal());
        if (off.cwiseAbs().maxCoeff() != 0.0) return "tracker.covariance must be diagonal (separable kernel)";
        if (!(covariance.diagonal().minCoeff() > 0.0)) return "tracker.covariance must be positive definite";
        if (!(prediction_rate_hz > 0.0)) return "tracker.prediction_rate_hz must be positive";
        if (!(vote_width > 0.0)) return "tracker.vote_width must be positive";
        if (!(beta > 0.0 && beta <= 1.0)) return "tracker.beta must be in (0, 1]";
        if (sensor_width <= 0 || sensor_height <= 0) return "tracker sensor size must be positive";
        return {};
    }
};

struct CircleHypothesis {
    double a = 0.0;
    double b = 0.0;
    double r = 0.0;
    double peak_mass = 0.0;
    std::uint64_t t = 0;
    bool refined = false;

    Vec2 center() const { return {a, b}; }
};

/// Per-radius vote pattern: row spans of a triangular ring profile, each
/// radius layer summing to 1 / nr before clipping.
class VoteStencil {
public:
    struct Span {
        int layer;
        int db;
        int da0;
        int len;
        std::size_t w0;
        double sum = 0.0;
    };

    VoteStencil() = default;

    VoteStencil(const HoughGrid& grid, double width) {
        const int nr = grid.nr();
        for (int k = 0; k < nr; ++k) {
            const double r = grid.r_center(k);
            const int reach = static_cast<int>(std::ceil((r + width * grid.center_bin) / grid.center_bin));
            const std::size_t first = weights_.size();
            layer_begin_.push_back(spans_.size());
            for (int db = -reach; db <= reach; ++db) {
                int run_start = 0;
                bool in_run = false;
                for (int da = -reach; da <= reach + 1; ++da) {
                    double w = 0.0;
                    if (da <= reach) {
                        const double d = std::hypot(da * grid.center_bin, db * grid.center_bin);
                        w = std::max(0.0, 1.0 - std::abs(d - r) / (width * grid.center_bin));
                    }
                    if (w > 0.0 && !in_run) {
                        in_run = true;
                        run_start = da;
                        spans_.push_back({k, db, da, 0, weights_.size()});
                    }
                    if (w > 0.0) {
                        weights_.push_back(w);
                    } else if (in_run) {
                        in_run = false;
                        spans_.back().len = da - run_start;
                    }
                }
            }
            double sum = 0.0;
            for (std::size_t i = first; i < weights_.size(); ++i) sum += weights_[i];
            for (std::size_t i = first; i < weights_.size(); ++i) weights_[i] /= sum * nr;
        }
        layer_begin_.push_back(spans_.size());
        for (Span& sp : spans_)
            for (int i = 0; i < sp.len; ++i) sp.sum += weights_[sp.w0 + static_cast<std::size_t>(i)];
    }

    const std::vector<Span>& spans() const { return spans_; }
    const std::vector<double>& weights() const { return weights_; }

    /// Adds the pattern centered on bin (ia, ib) into `acc` (layout r, b, a with a
    /// fastest); returns the total weight that landed inside the grid.
    double add(std::vector<double>& acc, int na, int nb, int ia, int ib, double scale = 1.0) const {
        double added = 0.0;
        for (std::size_t k = 0; k + 1 < layer_begin_.size(); ++k)
            added += add_layer(acc, na, nb, static_cast<int>(k), ia, ib, scale);
        return added;
    }

    /// Same for one radius layer only.
    double add_layer(std::vector<double>& acc, int na, int nb, int layer, int ia, int ib, double scale = 1.0) const {
        double added = 0.0;
        const double* w = weights_.data();
        double* plane = acc.data() + static_cast<std::size_t>(layer) * nb * na;
        const std::size_t end = layer_begin_[static_cast<std::size_t>(layer) + 1];
        for (std::size_t si = layer_begin_[static_cast<std::size_t>(layer)]; si < end; ++si) {
            const Span& s = spans_[si];
            const int row = ib + s.db;
            if (row < 0 || row >= nb) continue;
            int lo = ia + s.da0;
            int hi = lo + s.len;
            double* row_ptr = plane + static_cast<std::size_t>(row) * na;
            if (lo >= 0 && hi <= na) {
                const double* src = w + s.w0;
                for (int i = 0; i < s.len; ++i) row_ptr[lo + i] += scale * src[i];
                added += scale * s.sum;
                continue;
            }
            std::size_t w0 = s.w0;
            if (lo < 0) {
                w0 += static_cast<std::size_t>(-lo);
                lo = 0;
            }
            hi = std::min(hi, na);
            if (hi <= lo) continue;
            double part = 0.0;
            for (int i = lo; i < hi; ++i) {
                const double x = w[w0 + static_cast<std::size_t>(i - lo)];
                row_ptr[i] += scale * x;
                part += x;
            }
            added += scale * part;
        }
        return added;
    }

private:
    std::vector<Span> spans_;
    std::vector<double> weights_;
    std::vector<std::size_t> layer_begin_;
};

namespace detail {

/// Truncated, renormalized 1-D Gaussian taps over integer offsets. Below half
/// a bin the samples cannot carry a fractional mean, so the kernel becomes a
/// two-tap linear interpolation that keeps the mean exact.
struct Kernel1d {
    int lo = 0;
    std::vector<double> w;
};

inline Kernel1d gaussian_taps(double mean, double sigma) {
    Kernel1d k;
    if (sigma < 0.5) {
        const double fl = std::floor(mean);
        const double frac = mean - fl;
        k.lo = static_cast<int>(fl);
        if (frac == 0.0) {
            k.w = {1.0};
        } else {
            k.w = {1.0 - frac, frac};
        }
        return k;
    }
    const int lo = static_cast<int>(std::ceil(mean - 3.0 * sigma));
    const int hi = static_cast<int>(std::floor(mean + 3.0 * sigma));
    k.lo = lo;
    double sum = 0.0;
    for (int o = lo; o <= hi; ++o) {
        const double z = (o - mean) / sigma;
        k.w.push_back(std::exp(-0.5 * z * z));
        sum += k.w.back();
    }
    for (double& x : k.w) x /= sum;
    return k;
}

// out[i] = sum_o w_o in[i - o] along one axis; mass pushed off the grid is lost
inline void convolve_axis(std::vector<double>& data, std::vector<double>& scratch, int n, std::size_t stride,
                          std::size_t outer_count, std::size_t outer_stride, std::size_t inner_count,
                          const Kernel1d& k) {
    if (k.w.size() == 1 && k.lo == 0) return;
    scratch.assign(data.size(), 0.0);
    const int taps = static_cast<int>(k.w.size());
    for (std::size_t o = 0; o < outer_count; ++o) {
        const std::size_t base = o * outer_stride;
        for (int t = 0; t < taps; ++t) {
            const int off = k.lo + t;
            const double w = k.w[static_cast<std::size_t>(t)];
            const int i0 = std::max(0, off);
            const int i1 = std::min(n, n + off);
            for (int i = i0; i < i1; ++i) {
                double* dst = scratch.data() + base + static_cast<std::size_t>(i) * stride;
                const double* src = data.data() + base + static_cast<std::size_t>(i - off) * stride;
                for (std::size_t in = 0; in < inner_count; ++in) dst[in] += w * src[in];
            }
        }
    }
    data.swap(scratch);
}

}  // namespace detail

/// Normalized (a, b, r) probability mass with per-event measurement updates and
/// motion-driven prediction. Internally an unnormalized evidence array A with
/// A <- beta * A + votes per event; every query divides by the sum of A. A starts
/// uniform with the weight of one event.
class HoughAccumulator {
public:
    explicit HoughAccumulator(const TrackerConfig& config, std::uint64_t t0 = 0)
        : config_(config), t_pred_(t0) {
        if (const auto e = config.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
        na_ = config.grid.na();
        nb_ = config.grid.nb();
        nr_ = config.grid.nr();
        stencil_ = VoteStencil(config.grid, config.vote_width);
        prior_.assign(config.grid.size(), 1.0 / static_cast<double>(config.grid.size()));
        votes_.assign(prior_.size(), 0.0);
        prior_total_ = sum(prior_);
        pad_ = static_cast<int>(std::ceil(config.grid.r_max / config.grid.center_bin + config.vote_width)) + 1;
        pending_.assign(static_cast<std::size_t>(na_ + 2 * pad_) * (nb_ + 2 * pad_), 0);
    }

    const TrackerConfig& config() const { return config_; }
    int na() const { return na_; }
    int nb() const { return nb_; }
    int nr() const { return nr_; }
    std::size_t size() const { return prior_.size(); }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * nb_ + static_cast<std::size_t>(j)) * na_ + static_cast<std::size_t>(i);
    }
    std::uint64_t last_prediction() const { return t_pred_; }
    std::uint64_t rejected() const { return rejected_; }
    std::uint64_t accepted() const { return accepted_; }

    /// Image velocity (px/s) used to refer votes back to the last prediction time.
    void set_image_velocity(const Vec2& v) { velocity_ = v; }
    const Vec2& image_velocity() const { return velocity_; }

    double mass(std::size_t i) const {
        flush();
        return (scale_ * prior_[i] + votes_[i]) / total();
    }
    double mass(int i, int j, int k) const { return mass(index(i, j, k)); }

    /// Exact sum over every bin.
    double total_mass() const {
        flush();
        double s = 0.0;
        for (std::size_t i = 0; i < prior_.size(); ++i) s += scale_ * prior_[i] + votes_[i];
        return s / total();
    }

    /// Replaces the state with the given non-negative masses (normalized here).
    void set_masses(const std::vector<double>& m) {
        if (m.size() != prior_.size()) fail(ErrorCode::InvalidArgument, "mass array size mismatch");
        double s = 0.0;
        for (double x : m) {
            if (!(x >= 0.0) || !std::isfinite(x)) fail(ErrorCode::InvalidArgument, "masses must be finite and >= 0");
            s += x;
        }
        if (!(s > 0.0)) fail(ErrorCode::InvalidArgument, "masses sum to zero");
        flush();
        for (std::size_t i = 0; i < m.size(); ++i) prior_[i] = m[i] / s;
        std::fill(votes_.begin(), votes_.end(), 0.0);
        scale_ = 1.0;
        vote_total_ = 0.0;
        prior_total_ = sum(prior_);
    }

    /// Votes one event. Returns false when the event lies off the sensor
    /// (counted in rejected()). Polarity is ignored. Events are binned at their
    /// motion-compensated pixel; the ring votes of a bin are rasterized once per
    /// batch, weighted by its event count, which equals voting them one by one.
    bool measurement_update(const Event& e) {
        if (e.u >= config_.sensor_width || e.v >= config_.sensor_height) {
            ++rejected_;
            return false;
        }
        ++accepted_;
        Vec2 px(e.u, e.v);
        if (e.t > t_pred_) px -= velocity_ * (1e-6 * static_cast<double>(e.t - t_pred_));
        const auto& g = config_.grid;
        const double fi = std::round((px.x() - g.a_min) / g.center_bin) + pad_;
        const double fj = std::round((px.y() - g.b_min) / g.center_bin) + pad_;
        if (!(fi >= 0.0 && fj >= 0.0 && fi < na_ + 2 * pad_ && fj < nb_ + 2 * pad_)) return true;
        const std::size_t key = static_cast<std::size_t>(fj) * (na_ + 2 * pad_) + static_cast<std::size_t>(fi);
        if (pending_[key]++ == 0) pending_keys_.push_back(static_cast<std::uint32_t>(key));
        scale_ *= config_.beta;
        if (scale_ < 1e-250) fold();
        return true;
    }

    /// Motion prediction to time `now` under a planar camera twist.
    void prediction_update(const Twist& v_c, double focal, double depth, std::uint64_t now) {
        if (!(depth > 0.0)) fail(ErrorCode::NonPositiveDepth, "prediction depth must be positive");
        if (!(focal > 0.0)) fail(ErrorCode::NonPositiveFocal, "prediction focal must be positive");
        if (std::abs(v_c.linear.z()) > 1e-6 || v_c.angular.cwiseAbs().maxCoeff() > 1e-6)
            fail(ErrorCode::PlanarityViolation, "camera twist has out-of-plane components");
        if (now < t_pred_) fail(ErrorCode::InvalidArgument, "prediction time went backwards");
        const Vec2 vel = planar_feature_velocity(focal, depth, v_c.linear.head<2>());
        const double dt = 1e-6 * static_cast<double>(now - t_pred_);
        fold();
        const auto& g = config_.grid;
        const Vec3 sd = config_.covariance.diagonal().cwiseSqrt();
        const auto ka = detail::gaussian_taps(vel.x() * dt / g.center_bin, sd.x() / g.center_bin);
        const auto kb = detail::gaussian_taps(vel.y() * dt / g.center_bin, sd.y() / g.center_bin);
        const auto kr = detail::gaussian_taps(0.0, sd.z() / g.radius_bin);
        const std::size_t plane = static_cast<std::size_t>(na_) * nb_;
        detail::convolve_axis(prior_, votes_, na_, 1, static_cast<std::size_t>(nb_) * nr_, na_, 1, ka);
        detail::convolve_axis(prior_, votes_, nb_, na_, nr_, plane, na_, kb);
        detail::convolve_axis(prior_, votes_, nr_, plane, 1, 0, plane, kr);
        votes_.assign(prior_.size(), 0.0);
        prior_total_ = sum(prior_);
        if (!(prior_total_ > 1e-200)) {
            std::fill(prior_.begin(), prior_.end(), 1.0 / static_cast<double>(prior_.size()));
            prior_total_ = sum(prior_);
        }
        t_pred_ = now;
        velocity_ = vel;
    }

    /// Highest-mass bin; ties go to the lowest (a, b, r) index.
    CircleHypothesis infer_circle() const {
        flush();
        const double t = total();
        double best = -1.0;
        std::size_t arg = 0;
        for (int k = 0; k < nr_; ++k)
            for (int j = 0; j < nb_; ++j)
                for (int i = 0; i < na_; ++i) {
                    const std::size_t idx = index(i, j, k);
                    const double m = scale_ * prior_[idx] + votes_[idx];
                    if (m > best) {
                        best = m;
                        arg = idx;
                    } else if (m == best) {
                        const auto [ai, aj, ak] = coords(arg);
                        if (std::tie(i, j, k) < std::tie(ai, aj, ak)) arg = idx;
                    }
                }
        const double peak = best / t;
        if (!(peak > 2.0 / static_cast<double>(size())))
            fail(ErrorCode::LowConfidence, "accumulator peak is not above twice the uniform mass");
        const auto [i, j, k] = coords(arg);
        CircleHypothesis h;
        h.peak_mass = peak;
        h.t = t_pred_;
        double di = 0.0, dj = 0.0, dk = 0.0;
        if (config_.refine) {
            auto at = [&](int x, int y, int z) { return scale_ * prior_[index(x, y, z)] + votes_[index(x, y, z)]; };
            if (i > 0 && i + 1 < na_) di = vertex(at(i - 1, j, k), best, at(i + 1, j, k));
            if (j > 0 && j + 1 < nb_) dj = vertex(at(i, j - 1, k), best, at(i, j + 1, k));
            if (k > 0 && k + 1 < nr_) dk = vertex(at(i, j, k - 1), best, at(i, j, k + 1));
            h.refined = true;
        }
        const auto& g = config_.grid;
        h.a = g.a_center(i + di);
        h.b = g.b_center(j + dj);
        h.r = g.r_center(k + dk);
        return h;
    }

    /// Binary snapshot: "NDHA", u32 version, u32 na nb nr, f64 a_min b_min r_min
    /// center_bin radius_bin, u64 timestamp, then na*nb*nr f64 masses with a
    /// fastest, then b, then r. Little-endian.
    void dump(const std::string& path) const {
        flush();
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot open " + path);
        auto put = [&](const auto& x) { out.write(reinterpret_cast<const char*>(&x), sizeof(x)); };
        out.write("NDHA", 4);
        put(std::uint32_t{1});
        put(static_cast<std::uint32_t>(na_));
        put(static_cast<std::uint32_t>(nb_));
        put(static_cast<std::uint32_t>(nr_));
        const auto& g = config_.grid;
        for (double x : {g.a_min, g.b_min, g.r_min, g.center_bin, g.radius_bin}) put(x);
        put(t_pred_);
        for (std::size_t i = 0; i < size(); ++i) put(mass(i));
        if (!out) fail(ErrorCode::IoError, "write failed for " + path);
    }

private:
    static double sum(const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }

    // parabola vertex through (-1, l), (0, c), (1, r), clamped to half a bin
    static double vertex(double l, double c, double r) {
        const double den = l - 2.0 * c + r;
        if (!(den < 0.0)) return 0.0;
        return std::clamp(0.5 * (l - r) / den, -0.5, 0.5);
    }

    std::tuple<int, int, int> coords(std::size_t idx) const {
        const int i = static_cast<int>(idx % na_);
        const int j = static_cast<int>((idx / na_) % nb_);
        const int k = static_cast<int>(idx / (static_cast<std::size_t>(na_) * nb_));
        return {i, j, k};
    }

    double total() const { return scale_ * prior_total_ + vote_total_; }

    void flush() const {
        if (pending_keys_.empty()) return;
        std::sort(pending_keys_.begin(), pending_keys_.end());
        const std::size_t w = static_cast<std::size_t>(na_ + 2 * pad_);
        // layer by layer so the touched plane stays cache resident
        for (int k = 0; k < nr_; ++k)
            for (std::uint32_t key : pending_keys_) {
                const int i = static_cast<int>(key % w) - pad_;
                const int j = static_cast<int>(key / w) - pad_;
                vote_total_ += stencil_.add_layer(votes_, na_, nb_, k, i, j, static_cast<double>(pending_[key]));
            }
        for (std::uint32_t key : pending_keys_) pending_[key] = 0;
        pending_keys_.clear();
    }

    void fold() {
        flush();
        // keeps the accumulated evidence scale; only guards the exponent range
        const double t = total();
        const double norm = (t > 1e200 || t < 1e-200) ? 1.0 / t : 1.0;
        for (std::size_t i = 0; i < prior_.size(); ++i) prior_[i] = (scale_ * prior_[i] + votes_[i]) * norm;
        std::fill(votes_.begin(), votes_.end(), 0.0);
        scale_ = 1.0;
        vote_total_ = 0.0;
        prior_total_ = sum(prior_);
    }

    TrackerConfig config_;
    int na_ = 0, nb_ = 0, nr_ = 0;
    VoteStencil stencil_;
    std::vector<double> prior_;
    mutable std::vector<double> votes_;
    double prior_total_ = 1.0;
    mutable double vote_total_ = 0.0;
    int pad_ = 0;
    mutable std::vector<std::uint32_t> pending_;        // event counts per padded bin
    mutable std::vector<std::uint32_t> pending_keys_;
    double scale_ = 1.0;
    std::uint64_t t_pred_ = 0;
    std::uint64_t rejected_ = 0;
    std::uint64_t accepted_ = 0;
    Vec2 velocity_ = Vec2::Zero();
};

struct TrackSample {
    std::uint64_t t = 0;
    std::optional<CircleHypothesis> hypothesis;   // empty on LowConfidence
};

/// Camera twist at a time in seconds.
using TwistProvider = std::function<Twist(double)>;

/// Runs the recursive filter over a time-ordered stream: each prediction tick
/// uses the twist at the middle of the elapsed interval, votes in between are
/// referred back with the twist at the start of the interval. One sample per tick.
inline std::vector<TrackSample> track(const std::vector<Event>& events, const TwistProvider& twist, double focal,
                                      double depth, const TrackerConfig& config, std::uint64_t t_start,
                                      std::uint64_t t_end) {
    HoughAccumulator acc(config, t_start);
    const std::uint64_t period = std::max<std::uint64_t>(1, config.prediction_period_us());
    std::vector<TrackSample> out;
    auto set_hint = [&](std::uint64_t t) {
        const Twist v = twist(1e-6 * static_cast<double>(t));
        acc.set_image_velocity(planar_feature_velocity(focal, depth, v.linear.head<2>()));
    };
    set_hint(t_start);
    std::uint64_t next = t_start + period;
    std::size_t e = 0;
    while (e < events.size() && events[e].t < t_start) ++e;
    while (next <= t_end) {
        for (; e < events.size() && events[e].t < next; ++e) {
            if (e > 0 && events[e].t < events[e - 1].t) fail(ErrorCode::InvalidArgument, "stream not time-ordered");
            acc.measurement_update(events[e]);
        }
        const std::uint64_t prev = acc.last_prediction();
        acc.prediction_update(twist(0.5e-6 * static_cast<double>(prev + next)), focal, depth, next);
        set_hint(next);
        TrackSample s;
        s.t = next;
        try {
            s.hypothesis = acc.infer_circle();
        } catch (const Error& err) {
            if (err.code() != ErrorCode::LowConfidence) throw;
        }
        out.push_back(s);
        next += period;
    }
    return out;
}

struct FrameDetection {
    std::uint64_t t_begin = 0;
    std::uint64_t t_end = 0;
    std::size_t pixels = 0;
    std::optional<CircleHypothesis> circle;   // empty when the frame yields no peak
};

/// Event-frame baseline: binary frames of `period_us`, plain CHT votes per
/// frame with the same ring profile, peak per frame. No carry-over between frames.
inline std::vector<FrameDetection> frame_cht_baseline(const std::vector<Event>& events, std::uint64_t period_us,
                                                      const HoughGrid& grid, double vote_width,
                                                      std::uint64_t t_start, std::uint64_t t_end,
                                                      bool refine = true) {
    if (period_us == 0) fail(ErrorCode::InvalidArgument, "frame period must be positive");
    if (const auto e = grid.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
    const VoteStencil stencil(grid, vote_width);
    const int na = grid.na(), nb = grid.nb(), nr = grid.nr();
    std::vector<double> acc(grid.size());
    std::vector<std::uint8_t> seen;
    std::vector<std::pair<int, int>> pixels;
    std::vector<FrameDetection> out;
    std::size_t e = 0;
    while (e < events.size() && events[e].t < t_start) ++e;
    for (std::uint64_t t0 = t_start; t0 + period_us <= t_end; t0 += period_us) {
        const std::uint64_t t1 = t0 + period_us;
        pixels.clear();
        int max_u = 0, max_v = 0;
        const std::size_t first = e;
        for (; e < events.size() && events[e].t < t1; ++e) {
            max_u = std::max<int>(max_u, events[e].u);
            max_v = std::max<int>(max_v, events[e].v);
        }
        const std::size_t w = static_cast<std::size_t>(max_u) + 1;
        seen.assign(w * (static_cast<std::size_t>(max_v) + 1), 0);
        for (std::size_t i = first; i < e; ++i) {
            auto& s = seen[static_cast<std::size_t>(events[i].v) * w + events[i].u];
            if (!s) pixels.emplace_back(events[i].u, events[i].v);
            s = 1;
        }
        std::sort(pixels.begin(), pixels.end(), [](const auto& p, const auto& q) {
            return std::tie(p.second, p.first) < std::tie(q.second, q.first);
        });
        FrameDetection d;
        d.t_begin = t0;
        d.t_end = t1;
        d.pixels = pixels.size();
        std::fill(acc.begin(), acc.end(), 0.0);
        double total = 0.0;
        for (const auto& [u, v] : pixels) {
            const double fi = std::round((u - grid.a_min) / grid.center_bin);
            const double fj = std::round((v - grid.b_min) / grid.center_bin);
            total += stencil.add(acc, na, nb, static_cast<int>(fi), static_cast<int>(fj));
        }
        if (total > 0.0) {
            std::size_t arg = 0;
            double best = -1.0;
            for (int k = 0; k < nr; ++k)
                for (int j = 0; j < nb; ++j)
                    for (int i = 0; i < na; ++i) {
                        const std::size_t idx = (static_cast<std::size_t>(k) * nb + j) * na + i;
                        if (acc[idx] > best) {
                            best = acc[idx];
                            arg = idx;
                        }
                    }
            if (best / total > 2.0 / static_cast<double>(grid.size())) {
                const int i = static_cast<int>(arg % na);
                const int j = static_cast<int>((arg / na) % nb);
                const int k = static_cast<int>(arg / (static_cast<std::size_t>(na) * nb));
                auto vtx = [](double l, double c, double r) {
                    const double den = l - 2.0 * c + r;
                    return den < 0.0 ? std::clamp(0.5 * (l - r) / den, -0.5, 0.5) : 0.0;
                };
                auto at = [&](int x, int y, int z) { return acc[(static_cast<std::size_t>(z) * nb + y) * na + x]; };
                double di = 0.0, dj = 0.0, dk = 0.0;
                if (refine) {
                    if (i > 0 && i + 1 < na) di = vtx(at(i - 1, j, k), best, at(i + 1, j, k));
                    if (j > 0 && j + 1 < nb) dj = vtx(at(i, j - 1, k), best, at(i, j + 1, k));
                    if (k > 0 && k + 1 < nr) dk = vtx(at(i, j, k - 1), best, at(i, j, k + 1));
                }
                CircleHypothesis h;
                h.a = grid.a_center(i + di);
                h.b = grid.b_center(j + dj);
                h.r = grid.r_center(k + dk);
                h.peak_mass = best / total;
                h.t = t1;
                h.refined = refine;
                d.circle = h;
            }
        }
        out.push_back(d);
    }
    return out;
}

}  // namespace neurodrill
