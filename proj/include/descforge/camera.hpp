#pragma once

#include "descforge/error.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace descforge {

/// Pinhole intrinsics in pixels. Pixel (u, v) covers [u, u+1) x [v, v+1) and is
/// sampled at its center (u + 0.5, v + 0.5).
struct CameraIntrinsics {
    double fx = 615.0;
    double fy = 615.0;
    double cx = 320.0;
    double cy = 240.0;
    int width = 640;
    int height = 480;

    void validate() const
    {
        if (!(fx > 0.0) || !(fy > 0.0))
            fail(ErrorCode::InvalidArgument, "focal lengths must be positive");
        if (width <= 0 || height <= 0)
            fail(ErrorCode::InvalidArgument, "image size must be positive");
        if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
            fail(ErrorCode::InvalidArgument, "principal point must lie inside the image");
    }

    bool operator==(const CameraIntrinsics&) const = default;

    /// Continuous image coordinates of a camera-frame point (z > 0).
    Eigen::Vector2d project(const Eigen::Vector3d& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }

    /// Camera-frame point seen at the center of pixel (u, v) at depth z.
    Eigen::Vector3d unproject(int u, int v, double z) const
    {
        return {(u + 0.5 - cx) / fx * z, (v + 0.5 - cy) / fy * z, z};
    }

    /// Camera-frame point at continuous image coordinates (x, y) and depth z.
    Eigen::Vector3d unproject(const Eigen::Vector2d& xy, double z) const
    {
        return {(xy.x() - cx) / fx * z, (xy.y() - cy) / fy * z, z};
    }
};

/// Rigid transform x -> R x + t.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static RigidTransform identity() { return {}; }

    static RigidTransform from_matrix(const Eigen::Matrix4d& m)
    {
        return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
    }

    Eigen::Matrix4d matrix() const
    {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }

    RigidTransform inverse() const
    {
        Eigen::Matrix3d rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }

    Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    RigidTransform operator*(const RigidTransform& other) const
    {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }

    bool is_valid(double tolerance = 1e-9) const
    {
        if (!rotation.allFinite() || !translation.allFinite())
            return false;
        const double orth = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
        return orth <= tolerance && std::abs(rotation.determinant() - 1.0) <= tolerance;
    }

    void validate(double tolerance = 1e-9) const
    {
        if (!is_valid(tolerance))
            fail(ErrorCode::InvalidArgument, "rotation is not orthonormal with determinant +1");
    }
};

/// Pose of the object in the camera frame: T_c^{-1} * T_o.
inline RigidTransform object_in_camera(const RigidTransform& camera, const RigidTransform& object)
{
    return camera.inverse() * object;
}

/// Camera-to-world pose at `eye` whose optical axis (+z) points at `target`;
/// image +y points as close to -`up` as possible.
inline RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, Eigen::Vector3d up = Eigen::Vector3d::UnitZ())
{
    Eigen::Vector3d z = target - eye;
    if (!(z.norm() > 0.0))
        fail(ErrorCode::InvalidArgument, "look_at eye coincides with target");
    z.normalize();
    if (std::abs(z.dot(up.normalized())) > 0.999)
        up = std::abs(z.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    Eigen::Vector3d down = -up.normalized();
    Eigen::Vector3d y = (down - down.dot(z) * z).normalized();
    Eigen::Vector3d x = y.cross(z);
    RigidTransform pose;
    pose.rotation.col(0) = x;
    pose.rotation.col(1) = y;
    pose.rotation.col(2) = z;
    pose.translation = eye;
    return pose;
}

/// Rotation by `angle` radians about a unit axis.
inline Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle)
{
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

} // namespace descforge
