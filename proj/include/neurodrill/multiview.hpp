#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/event_sim.hpp>
#include <neurodrill/geometry.hpp>
#include <neurodrill/trajectory.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace neurodrill {

/// Axis-aligned voxel volume in the base frame.
struct VolumeConfig {
    Vec3 min_corner = Vec3(0.45, -0.3, -0.15);
    Vec3 max_corner = Vec3(1.05, 0.3, 0.15);
    int nx = 120;
    int ny = 120;
    int nz = 60;

    std::string validation_error() const {
        if (nx < 2 || ny < 2 || nz < 2) return "volume dimensions must be >= 2 per axis";
        if (!((max_corner - min_corner).minCoeff() > 0.0)) return "volume max_corner must exceed min_corner";
        return {};
    }

    static VolumeConfig centered(const Vec3& center, const Vec3& extent, int nx = 120, int ny = 120, int nz = 60) {
        return {center - 0.5 * extent, center + 0.5 * extent, nx, ny, nz};
    }
};

/// Ray-density accumulator. Voxel (i, j, k) is stored at (k * ny + j) * nx + i.
class DSIGrid {
public:
    explicit DSIGrid(const VolumeConfig& config) : config_(config) {
        if (const auto e = config.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
        counts_.assign(static_cast<std::size_t>(config.nx) * config.ny * config.nz, 0u);
        voxel_ = (config.max_corner - config.min_corner).cwiseQuotient(Vec3(config.nx, config.ny, config.nz));
    }

    const VolumeConfig& config() const { return config_; }
    const Vec3& voxel_size() const { return voxel_; }
    double voxel_diagonal() const { return voxel_.norm(); }
    int nx() const { return config_.nx; }
    int ny() const { return config_.ny; }
    int nz() const { return config_.nz; }
    std::size_t size() const { return counts_.size(); }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * config_.ny + j) * config_.nx + i;
    }
    std::array<int, 3> coords(std::size_t idx) const {
        const int i = static_cast<int>(idx % config_.nx);
        const int j = static_cast<int>((idx / config_.nx) % config_.ny);
        const int k = static_cast<int>(idx / (static_cast<std::size_t>(config_.nx) * config_.ny));
        return {i, j, k};
    }
    Vec3 center(int i, int j, int k) const {
        return config_.min_corner + voxel_.cwiseProduct(Vec3(i + 0.5, j + 0.5, k + 0.5));
    }
    Vec3 center(std::size_t idx) const {
        const auto c = coords(idx);
        return center(c[0], c[1], c[2]);
    }

    std::uint32_t at(int i, int j, int k) const { return counts_[index(i, j, k)]; }
    std::uint32_t& at(int i, int j, int k) { return counts_[index(i, j, k)]; }
    const std::vector<std::uint32_t>& counts() const { return counts_; }
    std::vector<std::uint32_t>& counts() { return counts_; }

    std::uint64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

    /// Visits every voxel the ray passes through, in order, once each.
    /// Returns the number of voxels visited.
    template <class Visit>
    std::size_t traverse(const Ray& ray, Visit&& visit) const {
        const Vec3& o = ray.origin;
        const Vec3& d = ray.direction;
        double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            if (d[a] == 0.0) {
                if (o[a] < config_.min_corner[a] || o[a] >= config_.max_corner[a]) return 0;
                continue;
            }
            double ta = (config_.min_corner[a] - o[a]) / d[a];
            double tb = (config_.max_corner[a] - o[a]) / d[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
        if (!(t0 < t1)) return 0;

        const std::array<int, 3> dims{config_.nx, config_.ny, config_.nz};
        const Vec3 entry = o + d * t0;
        std::array<int, 3> cell{}, step{};
        std::array<double, 3> t_max{}, t_delta{};
        for (int a = 0; a < 3; ++a) {
            const double rel = (entry[a] - config_.min_corner[a]) / voxel_[a];
            cell[a] = std::clamp(static_cast<int>(std::floor(rel)), 0, dims[a] - 1);
            if (d[a] > 0.0) {
                step[a] = 1;
                t_max[a] = t0 + ((config_.min_corner[a] + (cell[a] + 1) * voxel_[a]) - entry[a]) / d[a];
                t_delta[a] = voxel_[a] / d[a];
            } else if (d[a] < 0.0) {
                step[a] = -1;
                t_max[a] = t0 + ((config_.min_corner[a] + cell[a] * voxel_[a]) - entry[a]) / d[a];
                t_delta[a] = -voxel_[a] / d[a];
            } else {
                step[a] = 0;
                t_max[a] = std::numeric_limits<double>::infinity();
                t_delta[a] = std::numeric_limits<double>::infinity();
            }
        }
        std::size_t visited = 0;
        while (true) {
            visit(index(cell[0], cell[1], cell[2]));
            ++visited;
            int a = 0;
            if (t_max[1] < t_max[a]) a = 1;
            if (t_max[2] < t_max[a]) a = 2;
            if (t_max[a] > t1) break;
            cell[a] += step[a];
            if (cell[a] < 0 || cell[a] >= dims[a]) break;
            t_max[a] += t_delta[a];
        }
        return visited;
    }

    std::size_t add_ray(const Ray& ray) {
        return traverse(ray, [this](std::size_t idx) { ++counts_[idx]; });
    }

    /// Binary dump: "NDSI", u32 version, u32 nx ny nz, f64 min xyz, f64 max xyz,
    /// then u32 counts in storage order, all little-endian.
    void dump(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot open " + path);
        out.write("NDSI", 4);
        auto put_u32 = [&](std::uint32_t v) {
            unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
            out.write(reinterpret_cast<const char*>(b), 4);
        };
        auto put_f64 = [&](double v) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xff));
        };
        put_u32(1);
        put_u32(config_.nx);
        put_u32(config_.ny);
        put_u32(config_.nz);
        for (int a = 0; a < 3; ++a) put_f64(config_.min_corner[a]);
        for (int a = 0; a < 3; ++a) put_f64(config_.max_corner[a]);
        for (const auto c : counts_) put_u32(c);
        if (!out) fail(ErrorCode::IoError, "write failed for " + path);
    }

private:
    VolumeConfig config_;
    Vec3 voxel_;
    std::vector<std::uint32_t> counts_;
};

/// Back-projects every event through the interpolated camera pose and counts
/// ray crossings per voxel.
inline DSIGrid sweep_accumulate(const EventStream& stream, const CameraIntrinsics& k, const VolumeConfig& volume) {
    if (stream.events.empty()) fail(ErrorCode::EmptyStream, "no events to sweep");
    if (stream.poses.empty()) fail(ErrorCode::InvalidArgument, "event stream has no pose log");
    DSIGrid grid(volume);
    std::size_t hits = 0;
    for (const Event& e : stream.events) {
        const Ray ray = back_project(k, stream.poses.at(e.t), Vec2(e.u, e.v));
        if (grid.add_ray(ray) > 0) ++hits;
    }
    if (hits == 0) fail(ErrorCode::VolumeBehindCamera, "no event ray intersects the volume");
    return grid;
}

struct DSIMaximum {
    std::size_t voxel = 0;
    Vec3 center = Vec3::Zero();
    std::uint32_t count = 0;
};

/// Voxels that are strict maxima within a cube of nms_radius voxels and hold at
/// least min_count rays, sorted by count descending. Equal counts inside the
/// window are resolved in favor of the lower storage index.
inline std::vector<DSIMaximum> extract_maxima(const DSIGrid& grid, std::uint32_t min_count, int nms_radius) {
    std::vector<DSIMaximum> out;
    const auto& c = grid.counts();
    const std::uint32_t floor = std::max<std::uint32_t>(min_count, 1);
    for (std::size_t idx = 0; idx < c.size(); ++idx) {
        const std::uint32_t v = c[idx];
        if (v < floor) continue;
        const auto [i, j, k] = grid.coords(idx);
        bool is_max = true;
        for (int dk = -nms_radius; dk <= nms_radius && is_max; ++dk) {
            const int kk = k + dk;
            if (kk < 0 || kk >= grid.nz()) continue;
            for (int dj = -nms_radius; dj <= nms_radius && is_max; ++dj) {
                const int jj = j + dj;
                if (jj < 0 || jj >= grid.ny()) continue;
                for (int di = -nms_radius; di <= nms_radius; ++di) {
                    const int ii = i + di;
                    if (ii < 0 || ii >= grid.nx() || (di == 0 && dj == 0 && dk == 0)) continue;
                    const std::size_t n = grid.index(ii, jj, kk);
                    if (c[n] > v || (c[n] == v && n < idx)) {
                        is_max = false;
                        break;
                    }
                }
            }
        }
        if (is_max) out.push_back({idx, grid.center(idx), v});
    }
    std::stable_sort(out.begin(), out.end(), [](const DSIMaximum& a, const DSIMaximum& b) { return a.count > b.count; });
    return out;
}

/// Observations attributed to one 3D feature.
struct FeatureCluster {
    Vec3 seed = Vec3::Zero();
    std::vector<std::size_t> event_indices;
    std::vector<Vec2> pixels;
    std::vector<RigidTransform> t_cb;   // camera pose at each event, base -> camera
    double rms_ray_distance = 0.0;

    std::size_t size() const { return pixels.size(); }

    /// Number of distinct camera poses (exact comparison).
    std::size_t distinct_poses() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < t_cb.size(); ++i) {
            if (i == 0 || t_cb[i].matrix() != t_cb[i - 1].matrix()) ++n;
        }
        return n;
    }
};

/// Assigns each event to the nearest maximum whose distance to the event ray is
/// within attach_radius. Unassigned events are dropped.
inline std::vector<FeatureCluster> cluster_rays(const EventStream& stream, const CameraIntrinsics& k,
                                                const std::vector<Vec3>& maxima, double attach_radius) {
    if (maxima.empty()) fail(ErrorCode::InvalidArgument, "cluster_rays needs at least one maximum");
    std::vector<FeatureCluster> clusters(maxima.size());
    std::vector<double> sq(maxima.size(), 0.0);
    for (std::size_t m = 0; m < maxima.size(); ++m) clusters[m].seed = maxima[m];
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        const RigidTransform t_bc = stream.poses.at(e.t);
        const Ray ray = back_project(k, t_bc, Vec2(e.u, e.v));
        std::size_t best = maxima.size();
        double best_d = attach_radius;
        for (std::size_t m = 0; m < maxima.size(); ++m) {
            const double d = ray.distance_to(maxima[m]);
            if (d <= best_d && (best == maxima.size() || d < best_d)) {
                best = m;
                best_d = d;
            }
        }
        if (best == maxima.size()) continue;
        auto& c = clusters[best];
        c.event_indices.push_back(i);
        c.pixels.emplace_back(e.u, e.v);
        c.t_cb.push_back(t_bc.inverse());
        sq[best] += best_d * best_d;
    }
    for (std::size_t m = 0; m < clusters.size(); ++m) {
        if (clusters[m].size() > 0) clusters[m].rms_ray_distance = std::sqrt(sq[m] / clusters[m].size());
    }
    return clusters;
}

struct DltResult {
    Vec3 point = Vec3::Zero();
    double residual = 0.0;   // smallest singular value / ||A||_F
};

/// Linear triangulation from pixel observations and base->camera poses.
/// Each observation contributes the rows [e]x K T_CB with e = (u, v, 1), left
/// multiplied by K^T / det K, which turns them into [K^-1 e]x T_CB. The null
/// space is unchanged; the conditioning no longer depends on pixel magnitudes.
inline DltResult dlt_triangulate(const std::vector<Vec2>& pixels, const std::vector<RigidTransform>& t_cb,
                                 const CameraIntrinsics& k) {
    if (pixels.size() != t_cb.size()) fail(ErrorCode::InvalidArgument, "pixel and pose counts differ");
    if (pixels.size() < 2) fail(ErrorCode::DegenerateGeometry, "at least two observations are required");
    Eigen::MatrixXd a(3 * pixels.size(), 4);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const Vec3 x((pixels[i].x() - k.cx) / k.fx, (pixels[i].y() - k.cy) / k.fy, 1.0);
        a.block<3, 4>(3 * i, 0) = cross_matrix(x) * t_cb[i].matrix34();
    }
    // singular values of A equal those of R from A = QR
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::Matrix4d r = qr.matrixQR().topRows<4>().triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(r, Eigen::ComputeFullV);
    const Eigen::Vector4d s = svd.singularValues();
    if (!(s[0] > 0.0) || (s[2] - s[3]) / s[0] < 1e-9)
        fail(ErrorCode::DegenerateGeometry, "observations do not constrain a unique point");
    const Eigen::Vector4d x = svd.matrixV().col(3);
    if (std::abs(x[3]) < 1e-15) fail(ErrorCode::DegenerateGeometry, "solution at infinity");
    DltResult out;
    out.point = x.head<3>() / x[3];
    out.residual = s[3] / a.norm();
    return out;
}

inline DltResult dlt_triangulate(const FeatureCluster& cluster, const CameraIntrinsics& k) {
    return dlt_triangulate(cluster.pixels, cluster.t_cb, k);
}

struct Plane {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;   // normal . x = offset

    double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

struct PlaneFit {
    Plane plane;
    std::vector<bool> inliers;
    int iterations = 0;
};

namespace detail {

inline Plane tls_plane(const std::vector<Vec3>& pts, const std::vector<bool>& use) {
    Vec3 c = Vec3::Zero();
    int n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (use[i]) {
            c += pts[i];
            ++n;
        }
    }
    c /= n;
    Mat3 cov = Mat3::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (use[i]) cov += (pts[i] - c) * (pts[i] - c).transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 normal = eig.eigenvectors().col(0).normalized();
    return {normal, normal.dot(c)};
}

inline bool collinear(const std::vector<Vec3>& pts) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    Mat3 cov = Mat3::Zero();
    double scale = 0.0;
    for (const auto& p : pts) {
        cov += (p - c) * (p - c).transpose();
        scale = std::max(scale, (p - c).norm());
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    // second largest spread relative to the extent
    return scale == 0.0 || std::sqrt(std::max(0.0, eig.eigenvalues()[1])) <= 1e-9 * std::max(scale, 1e-300);
}

}  // namespace detail

/// Robust total-least-squares plane. Seeded from the point triple with the
/// largest consensus, then refit on inliers until the inlier set is stable.
inline PlaneFit fit_workpiece_plane(const std::vector<Vec3>& points, double inlier_tol) {
    if (points.size() < 3) fail(ErrorCode::InsufficientPoints, "plane fit needs at least 3 points");
    if (!(inlier_tol > 0.0)) fail(ErrorCode::InvalidArgument, "inlier tolerance must be positive");
    if (detail::collinear(points)) fail(ErrorCode::DegenerateCollinear, "points are collinear");
    const std::size_t n = points.size();

    auto select = [&](const Plane& p) {
        std::vector<bool> in(n);
        for (std::size_t i = 0; i < n; ++i) in[i] = std::abs(p.signed_distance(points[i])) <= inlier_tol;
        return in;
    };
    auto count = [](const std::vector<bool>& v) { return std::count(v.begin(), v.end(), true); };

    std::vector<bool> best_in;
    long best_count = -1;
    double best_spread = -1.0;
    // exhaustive over triples for the small hole counts this is used with;
    // a deterministic stride keeps the cost bounded otherwise
    const std::size_t limit = 60;
    const std::size_t stride = n > limit ? n / limit : 1;
    for (std::size_t a = 0; a < n; a += stride) {
        for (std::size_t b = a + 1; b < n; b += stride) {
            for (std::size_t c = b + 1; c < n; c += stride) {
                const Vec3 nrm = (points[b] - points[a]).cross(points[c] - points[a]);
                const double area = nrm.norm();
                if (area < 1e-12) continue;
                const Plane p{nrm / area, (nrm / area).dot(points[a])};
                auto in = select(p);
                const long k = count(in);
                if (k > best_count || (k == best_count && area > best_spread)) {
                    best_count = k;
                    best_spread = area;
                    best_in = std::move(in);
                }
            }
        }
    }
    if (best_count < 3) fail(ErrorCode::DegenerateCollinear, "no non-degenerate point triple");

    PlaneFit fit;
    fit.inliers = best_in;
    for (int iter = 1; iter <= 20; ++iter) {
        fit.iterations = iter;
        if (count(fit.inliers) < 3) break;
        fit.plane = detail::tls_plane(points, fit.inliers);
        auto next = select(fit.plane);
        if (next == fit.inliers) break;
        if (count(next) < 3) break;
        fit.inliers = std::move(next);
    }
    return fit;
}

struct LocalizationConfig {
    VolumeConfig volume;
    double min_count_fraction = 0.3;   // of distinct pose samples
    int nms_radius = 3;
    double attach_radius = 0.0;        // 0: two voxel diagonals
    double max_cluster_rms = 0.0;      // 0: half the attach radius
    double merge_radius = 0.0;         // 0: the attach radius
    double min_support_fraction = 0.25;   // of the best supported feature
    double plane_inlier_tol = 0.003;
    double readmit_tol = 0.01;   // plane distance for rejoining after rim refinement
    bool refine_circles = true;
    std::size_t max_features = 32;

    std::string validation_error() const {
        if (auto e = volume.validation_error(); !e.empty()) return "localization.volume: " + e;
        if (!(min_count_fraction > 0.0)) return "localization.min_count_fraction must be positive";
        if (nms_radius < 1) return "localization.nms_radius must be >= 1";
        if (attach_radius < 0.0) return "localization.attach_radius must be non-negative";
        if (merge_radius < 0.0) return "localization.merge_radius must be non-negative";
        if (!(min_support_fraction >= 0.0 && min_support_fraction < 1.0))
            return "localization.min_support_fraction must be in [0, 1)";
        if (!(plane_inlier_tol > 0.0)) return "localization.plane_inlier_tol must be positive";
        if (!(readmit_tol >= plane_inlier_tol)) return "localization.readmit_tol must be at least plane_inlier_tol";
        return {};
    }
};

struct WorkpieceEstimate {
    std::vector<Vec3> holes;
    std::vector<bool> inliers;
    std::vector<std::size_t> support;   // events per hole cluster
    Plane plane;
    RigidTransform t_bw;
    std::size_t maxima = 0;
};

/// Workpiece frame from a plane and hole positions: origin at the hole
/// centroid, z along the plane normal, x along the base x axis projected
/// into the plane (base y if x is nearly normal to the plane).
inline RigidTransform workpiece_frame(const Plane& plane, const std::vector<Vec3>& holes) {
    Vec3 c = Vec3::Zero();
    for (const auto& h : holes) c += h;
    if (!holes.empty()) c /= static_cast<double>(holes.size());
    const Vec3 z = plane.normal.normalized();
    Vec3 x = Vec3::UnitX() - Vec3::UnitX().dot(z) * z;
    if (x.norm() < 1e-6) x = Vec3::UnitY() - Vec3::UnitY().dot(z) * z;
    x.normalize();
    Mat3 r;
    r.col(0) = x;
    r.col(1) = z.cross(x);
    r.col(2) = z;
    // project the origin onto the plane
    c -= plane.signed_distance(c) * z;
    return {r, c};
}

namespace detail {

/// Joint refinement of the plane and per-hole rim circles: every event ray is
/// intersected with the plane and its distance to the hole center is matched
/// to the hole radius. Removes the depth bias of rim-centroid triangulation.
struct CircleRefinement {
    Plane plane;
    std::vector<Vec3> centers;
    std::vector<double> radii;
    bool ok = false;
};

inline CircleRefinement refine_rim_circles(const Plane& plane0, const std::vector<Vec3>& centers0,
                                           const std::vector<const FeatureCluster*>& clusters,
                                           const CameraIntrinsics& k) {
    CircleRefinement out;
    const std::size_t h = centers0.size();
    // plane basis
    Vec3 n0 = plane0.normal;
    Vec3 e1 = (std::abs(n0.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
    e1 = (e1 - e1.dot(n0) * n0).normalized();
    const Vec3 e2 = n0.cross(e1);
    Vec3 origin = Vec3::Zero();
    for (const auto& c : centers0) origin += c;
    origin /= static_cast<double>(h);
    origin -= plane0.signed_distance(origin) * n0;

    struct Obs {
        Vec3 o, d;
        std::size_t hole;
    };
    std::vector<Obs> obs;
    for (std::size_t i = 0; i < h; ++i) {
        const auto& cl = *clusters[i];
        for (std::size_t j = 0; j < cl.size(); ++j) {
            const RigidTransform t_bc = cl.t_cb[j].inverse();
            const Ray r = back_project(k, t_bc, cl.pixels[j]);
            obs.push_back({r.origin, r.direction, i});
        }
    }
    if (obs.size() < 3 * h + 3) return out;

    // parameters: tilt a, tilt b, offset, then (x, y, r) per hole
    const int np = 3 + 3 * static_cast<int>(h);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(np);
    for (std::size_t i = 0; i < h; ++i) {
        const Vec3 rel = centers0[i] - origin;
        p[3 + 3 * i] = rel.dot(e1);
        p[4 + 3 * i] = rel.dot(e2);
        p[5 + 3 * i] = 0.0;
    }
    auto frame = [&](const Eigen::VectorXd& q, Vec3& n, Vec3& o, Vec3& u1, Vec3& u2) {
        const Mat3 rot = so3_exp(q[0] * e1 + q[1] * e2);
        n = rot * n0;
        u1 = rot * e1;
        u2 = rot * e2;
        o = origin + q[2] * n0;
    };
    auto residual = [&](const Eigen::VectorXd& q, const Obs& ob, double& value) {
        Vec3 n, o, u1, u2;
        frame(q, n, o, u1, u2);
        const double denom = n.dot(ob.d);
        if (std::abs(denom) < 1e-9) return false;
        const double s = n.dot(o - ob.o) / denom;
        const Vec3 hit = ob.o + s * ob.d - o;
        const Vec2 uv(hit.dot(u1), hit.dot(u2));
        const std::size_t base = 3 + 3 * ob.hole;
        value = (uv - Vec2(q[base], q[base + 1])).norm() - q[base + 2];
        return true;
    };

    // initial radius: median distance per hole
    {
        std::vector<std::vector<double>> d(h);
        for (const auto& ob : obs) {
            double v;
            if (residual(p, ob, v)) d[ob.hole].push_back(v);
        }
        for (std::size_t i = 0; i < h; ++i) {
            if (d[i].empty()) return out;
            std::nth_element(d[i].begin(), d[i].begin() + d[i].size() / 2, d[i].end());
            p[5 + 3 * i] = d[i][d[i].size() / 2];
        }
    }

    std::vector<double> w(obs.size(), 1.0);
    for (int iter = 0; iter < 30; ++iter) {
        // robust scale from the current residuals
        std::vector<double> res(obs.size(), 0.0), absres;
        std::vector<bool> valid(obs.size(), false);
        for (std::size_t i = 0; i < obs.size(); ++i) {
            valid[i] = residual(p, obs[i], res[i]);
            if (valid[i]) absres.push_back(std::abs(res[i]));
        }
        if (absres.size() < static_cast<std::size_t>(np)) return out;
        std::nth_element(absres.begin(), absres.begin() + absres.size() / 2, absres.end());
        const double sigma = std::max(1.4826 * absres[absres.size() / 2], 1e-7);
        const double c = 2.5 * sigma;

        Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(np, np);
        Eigen::VectorXd jtr = Eigen::VectorXd::Zero(np);
        const double step = 1e-7;
        std::array<int, 6> cols{};
        for (std::size_t i = 0; i < obs.size(); ++i) {
            if (!valid[i]) continue;
            const double a = std::abs(res[i]);
            const double wi = a <= c ? 1.0 : c / a;   // Huber
            const int base = 3 + 3 * static_cast<int>(obs[i].hole);
            cols = {0, 1, 2, base, base + 1, base + 2};
            Eigen::Matrix<double, 6, 1> g;
            for (int t = 0; t < 6; ++t) {
                Eigen::VectorXd q = p;
                q[cols[t]] += step;
                double v;
                if (!residual(q, obs[i], v)) v = res[i];
                g[t] = (v - res[i]) / step;
            }
            for (int r = 0; r < 6; ++r) {
                jtr[cols[r]] += wi * g[r] * res[i];
                for (int s = 0; s < 6; ++s) jtj(cols[r], cols[s]) += wi * g[r] * g[s];
            }
        }
        const Eigen::VectorXd delta = jtj.ldlt().solve(-jtr);
        if (!delta.allFinite()) return out;
        p += delta;
        if (delta.norm() < 1e-10) break;
    }

    Vec3 n, o, u1, u2;
    frame(p, n, o, u1, u2);
    out.plane = {n, n.dot(o)};
    for (std::size_t i = 0; i < h; ++i) {
        out.centers.push_back(o + p[3 + 3 * i] * u1 + p[4 + 3 * i] * u2);
        out.radii.push_back(p[5 + 3 * i]);
    }
    out.ok = true;
    for (const auto& c : out.centers) out.ok = out.ok && c.allFinite();
    return out;
}

}  // namespace detail

/// Full localization: sweep, maxima, clustering, per-cluster DLT, plane fit.
inline WorkpieceEstimate localize_workpiece(const EventStream& stream, const CameraIntrinsics& k,
                                            const LocalizationConfig& config) {
    if (const auto e = config.validation_error(); !e.empty()) fail(ErrorCode::ValidationError, e);
    const DSIGrid grid = sweep_accumulate(stream, k, config.volume);

    const auto min_count = static_cast<std::uint32_t>(
        std::max(2.0, std::ceil(config.min_count_fraction * static_cast<double>(stream.poses.size()))));
    auto maxima = extract_maxima(grid, min_count, config.nms_radius);
    if (maxima.size() > config.max_features) maxima.resize(config.max_features);
    if (maxima.empty()) fail(ErrorCode::NoHolesFound, "no DSI maximum reaches the minimum count");

    const double attach = config.attach_radius > 0.0 ? config.attach_radius : 2.0 * grid.voxel_diagonal();
    const double max_rms = config.max_cluster_rms > 0.0 ? config.max_cluster_rms : 0.5 * attach;
    std::vector<Vec3> seeds;
    for (const auto& m : maxima) seeds.push_back(m.center);
    const auto clusters = cluster_rays(stream, k, seeds, attach);

    const double merge = config.merge_radius > 0.0 ? config.merge_radius : attach;
    auto triangulate = [&](const FeatureCluster& c, DltResult& r) {
        try {
            r = dlt_triangulate(c, k);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DegenerateGeometry) return false;
            throw;
        }
        return r.point.allFinite();
    };

    // elongated DSI columns give several maxima per feature; fold those whose points agree
    std::vector<FeatureCluster> groups;
    std::vector<Vec3> group_points;
    for (const auto& c : clusters) {
        if (c.size() < 2 || c.distinct_poses() < 2 || c.rms_ray_distance > max_rms) continue;
        DltResult r;
        if (!triangulate(c, r) || (r.point - c.seed).norm() > attach) continue;
        std::size_t g = 0;
        while (g < groups.size() && (group_points[g] - r.point).norm() > merge) ++g;
        if (g == groups.size()) {
            groups.push_back(c);
            group_points.push_back(r.point);
            continue;
        }
        auto& dst = groups[g];
        dst.event_indices.insert(dst.event_indices.end(), c.event_indices.begin(), c.event_indices.end());
        dst.pixels.insert(dst.pixels.end(), c.pixels.begin(), c.pixels.end());
        dst.t_cb.insert(dst.t_cb.end(), c.t_cb.begin(), c.t_cb.end());
    }

    WorkpieceEstimate est;
    est.maxima = maxima.size();
    std::vector<const FeatureCluster*> used;
    std::size_t best = 0;
    for (const auto& g : groups) best = std::max(best, g.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (static_cast<double>(groups[g].size()) < config.min_support_fraction * static_cast<double>(best)) continue;
        DltResult r;
        if (!triangulate(groups[g], r)) continue;
        est.holes.push_back(r.point);
        est.support.push_back(groups[g].size());
        used.push_back(&groups[g]);
    }
    if (est.holes.empty()) fail(ErrorCode::NoHolesFound, "no cluster triangulated to a hole");

    const PlaneFit fit = fit_workpiece_plane(est.holes, config.plane_inlier_tol);
    est.plane = fit.plane;
    est.inliers = fit.inliers;

    // normal toward the observing cameras
    Vec3 cam = Vec3::Zero();
    for (const auto& s : stream.poses.samples) cam += s.t_bc.translation();
    cam /= static_cast<double>(stream.poses.size());
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : est.holes) centroid += p;
    centroid /= static_cast<double>(est.holes.size());
    if (est.plane.normal.dot(cam - centroid) < 0.0) est.plane = {-est.plane.normal, -est.plane.offset};

    // refit rims on the plane; outliers of a skewed first plane that sit near the
    // refined one, and do not duplicate an inlier, rejoin and the refinement runs again
    std::vector<bool> trial(est.inliers);
    for (int pass = 0; config.refine_circles && pass < 3; ++pass) {
        std::vector<Vec3> in_pts;
        std::vector<const FeatureCluster*> in_cl;
        std::vector<std::size_t> in_idx;
        for (std::size_t i = 0; i < est.holes.size(); ++i) {
            if (!trial[i]) continue;
            in_pts.push_back(est.holes[i]);
            in_cl.push_back(used[i]);
            in_idx.push_back(i);
        }
        if (in_pts.size() < 3) break;
        const auto ref = detail::refine_rim_circles(est.plane, in_pts, in_cl, k);
        if (!ref.ok) break;
        bool sane = true;
        for (std::size_t j = 0; j < in_idx.size(); ++j)
            sane = sane && (ref.centers[j] - in_pts[j]).norm() < config.plane_inlier_tol + attach;
        if (!sane) break;
        est.inliers = trial;
        est.plane = ref.plane;
        if (est.plane.normal.dot(cam - centroid) < 0.0) est.plane = {-est.plane.normal, -est.plane.offset};
        for (std::size_t j = 0; j < in_idx.size(); ++j) est.holes[in_idx[j]] = ref.centers[j];
        bool grew = false;
        for (std::size_t i = 0; i < est.holes.size(); ++i) {
            if (trial[i]) continue;
            const double d = est.plane.signed_distance(est.holes[i]);
            if (std::abs(d) > config.readmit_tol) continue;
            const Vec3 on_plane = est.holes[i] - d * est.plane.normal;
            bool duplicate = false;
            for (std::size_t j = 0; j < est.holes.size(); ++j)
                duplicate = duplicate || (est.inliers[j] && (est.holes[j] - on_plane).norm() < merge);
            if (duplicate) continue;
            trial[i] = true;
            grew = true;
        }
        if (!grew) break;
    }

    std::vector<Vec3> inlier_holes;
    for (std::size_t i = 0; i < est.holes.size(); ++i)
        if (est.inliers[i]) inlier_holes.push_back(est.holes[i]);
    est.t_bw = workpiece_frame(est.plane, inlier_holes);
    return est;
}

struct LocalizationError {
    std::vector<double> per_hole;                 // indexed by ground-truth hole, NaN when unmatched
    std::vector<int> match;                       // ground-truth -> estimate index, -1 when unmatched
    std::vector<std::size_t> unmatched_truth;
    std::vector<std::size_t> spurious_estimates;
    double mean = std::numeric_limits<double>::quiet_NaN();
};

/// One-to-one nearest matching (globally closest pairs first) within max_distance.
inline LocalizationError localization_error(const std::vector<Vec3>& est, const std::vector<Vec3>& truth,
                                            double max_distance = std::numeric_limits<double>::infinity()) {
    struct Pair {
        double d;
        std::size_t g, e;
    };
    std::vector<Pair> pairs;
    for (std::size_t g = 0; g < truth.size(); ++g)
        for (std::size_t e = 0; e < est.size(); ++e) {
            const double d = (truth[g] - est[e]).norm();
            if (d <= max_distance) pairs.push_back({d, g, e});
        }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.d < b.d; });
    LocalizationError out;
    out.per_hole.assign(truth.size(), std::numeric_limits<double>::quiet_NaN());
    out.match.assign(truth.size(), -1);
    std::vector<bool> used(est.size(), false);
    for (const auto& p : pairs) {
        if (out.match[p.g] >= 0 || used[p.e]) continue;
        out.match[p.g] = static_cast<int>(p.e);
        out.per_hole[p.g] = p.d;
        used[p.e] = true;
    }
    double sum = 0.0;
    int n = 0;
    for (std::size_t g = 0; g < truth.size(); ++g) {
        if (out.match[g] < 0) {
            out.unmatched_truth.push_back(g);
        } else {
            sum += out.per_hole[g];
            ++n;
        }
    }
    for (std::size_t e = 0; e < est.size(); ++e)
        if (!used[e]) out.spurious_estimates.push_back(e);
    if (n > 0) out.mean = sum / n;
    return out;
}

}  // namespace neurodrill
