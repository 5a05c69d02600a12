#pragma once

#include <neurodrill/errors.hpp>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <string>

namespace neurodrill {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat34 = Eigen::Matrix<double, 3, 4>;

/// Skew-symmetric matrix such that cross_matrix(v) * w == v.cross(w).
inline Mat3 cross_matrix(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

/// Rotation matrix of the rotation vector w (axis * angle).
inline Mat3 so3_exp(const Vec3& w) {
    const double angle = w.norm();
    if (angle < 1e-12) return Mat3::Identity() + cross_matrix(w);
    return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

/// Rotation vector of R; angle in [0, pi].
inline Vec3 so3_log(const Mat3& r) {
    Eigen::AngleAxisd aa(r);
    const double angle = aa.angle();
    if (angle < 1e-15) {
        // first order: R - R^T = 2 [w]x
        return Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)) * 0.5;
    }
    return aa.axis() * angle;
}

/// Rigid body transform. Stores an orthonormal rotation and a translation;
/// a * b maps points through b first, then a.
class RigidTransform {
public:
    RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
    RigidTransform(const Mat3& rotation, const Vec3& translation)
        : rotation_(rotation), translation_(translation) {}

    static RigidTransform identity() { return {}; }
    static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
    static RigidTransform from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
    static RigidTransform from_matrix(const Mat4& m) {
        return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
    }

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }

    Mat4 matrix() const {
        Mat4 m = Mat4::Identity();
        m.topLeftCorner<3, 3>() = rotation_;
        m.topRightCorner<3, 1>() = translation_;
        return m;
    }

    /// Top three rows of the homogeneous matrix.
    Mat34 matrix34() const {
        Mat34 m;
        m.leftCols<3>() = rotation_;
        m.col(3) = translation_;
        return m;
    }

    RigidTransform inverse() const {
        const Mat3 rt = rotation_.transpose();
        return {rt, -rt * translation_};
    }

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

    RigidTransform operator*(const RigidTransform& other) const {
        return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
    }

    /// Deviation of the rotation block from SO(3), max-abs of R^T R - I.
    double orthonormality_error() const {
        return (rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff();
    }

private:
    Mat3 rotation_;
    Vec3 translation_;
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
inline RigidTransform invert(const RigidTransform& t) { return t.inverse(); }

/// Translation norm plus rotation angle of a^-1 b, meters + radians.
inline double pose_error(const RigidTransform& a, const RigidTransform& b) {
    const double dt = (a.translation() - b.translation()).norm();
    const double dr = so3_log(a.rotation().transpose() * b.rotation()).norm();
    return dt + dr;
}

/// Interpolates between two poses: linear in translation, slerp in rotation.
inline RigidTransform interpolate(const RigidTransform& a, const RigidTransform& b, double s) {
    const Eigen::Quaterniond qa(a.rotation());
    const Eigen::Quaterniond qb(b.rotation());
    const Vec3 t = (1.0 - s) * a.translation() + s * b.translation();
    return {qa.slerp(s, qb).toRotationMatrix(), t};
}

/// Linear then angular velocity.
struct Twist {
    Vec3 linear = Vec3::Zero();
    Vec3 angular = Vec3::Zero();

    static Twist from_vector(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
    Vec6 vector() const {
        Vec6 v;
        v << linear, angular;
        return v;
    }
    bool finite() const { return linear.allFinite() && angular.allFinite(); }
};

/// 6x6 twist transport [R, [p]x R; 0, R] for twists stacked (linear; angular).
inline Mat6 adjoint(const RigidTransform& t) {
    Mat6 ad = Mat6::Zero();
    const Mat3& r = t.rotation();
    ad.topLeftCorner<3, 3>() = r;
    ad.topRightCorner<3, 3>() = cross_matrix(t.translation()) * r;
    ad.bottomRightCorner<3, 3>() = r;
    return ad;
}

inline Twist apply_adjoint(const RigidTransform& t, const Twist& v) {
    return Twist::from_vector(adjoint(t) * v.vector());
}

struct CameraIntrinsics {
    double fx = 400.0;
    double fy = 400.0;
    double cx = 172.5;
    double cy = 129.5;
    int width = 346;
    int height = 260;

    Mat3 matrix() const {
        Mat3 k;
        k << fx, 0.0, cx,
             0.0, fy, cy,
             0.0, 0.0, 1.0;
        return k;
    }

    bool contains(double u, double v) const {
        return u >= 0.0 && v >= 0.0 && u < width && v < height;
    }

    /// Empty string when valid, otherwise the first violated constraint.
    std::string validation_error() const {
        if (!(fx > 0.0) || !(fy > 0.0)) return "focal lengths must be positive";
        if (width <= 0 || height <= 0) return "sensor size must be positive";
        if (!(cx > 0.0 && cx < width)) return "cx must lie inside the sensor";
        if (!(cy > 0.0 && cy < height)) return "cy must lie inside the sensor";
        return {};
    }

    /// Scalar focal length used by the planar image Jacobian; requires square pixels.
    double focal() const {
        if (fx != fy) fail(ErrorCode::InvalidArgument, "anisotropic intrinsics (fx != fy)");
        return fx;
    }
};

/// Rectified pixel event. Timestamp in microseconds, polarity +1 or -1.
struct Event {
    std::uint64_t t = 0;
    std::uint16_t u = 0;
    std::uint16_t v = 0;
    std::int8_t p = 1;

    friend bool operator==(const Event&, const Event&) = default;
};

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();

    Vec3 point_at(double s) const { return origin + s * direction; }

    double distance_to(const Vec3& p) const {
        const Vec3 d = p - origin;
        return (d - d.dot(direction) * direction).norm();
    }
};

/// Pinhole projection of a base-frame point through the camera pose T_CB.
inline Vec2 project(const CameraIntrinsics& k, const RigidTransform& t_cb, const Vec3& p_b) {
    const Vec3 pc = t_cb.apply(p_b);
    if (pc.z() <= 1e-9) fail(ErrorCode::NonPositiveDepth, "point behind or on the camera plane");
    return {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
}

/// Ray from the camera center through the pixel, expressed in the base frame.
inline Ray back_project(const CameraIntrinsics& k, const RigidTransform& t_bc, const Vec2& px) {
    const Vec3 dir_c((px.x() - k.cx) / k.fx, (px.y() - k.cy) / k.fy, 1.0);
    return {t_bc.translation(), (t_bc.rotation() * dir_c).normalized()};
}

/// Interaction matrix for a point feature; px is principal-point-centered.
inline Mat26 image_jacobian(const Vec2& px, double depth, double focal) {
    if (!(depth > 0.0)) fail(ErrorCode::NonPositiveDepth, "image_jacobian depth must be positive");
    if (!(focal > 0.0)) fail(ErrorCode::NonPositiveFocal, "image_jacobian focal must be positive");
    const double u = px.x();
    const double v = px.y();
    const double f = focal;
    const double z = depth;
    Mat26 j;
    j << -f / z, 0.0, u / z, u * v / f, -(f + u * u / f), v,
         0.0, -f / z, v / z, f + v * v / f, -u * v / f, -u;
    return j;
}

/// Pixel velocity of any feature under in-plane camera translation.
inline Vec2 planar_feature_velocity(double focal, double depth, const Vec2& v_xy) {
    if (!(depth > 0.0)) fail(ErrorCode::NonPositiveDepth, "planar_feature_velocity depth must be positive");
    return (-focal / depth) * v_xy;
}

}  // namespace neurodrill
