#pragma once

#include "descforge/camera.hpp"
#include "descforge/error.hpp"
#include "descforge/raster.hpp"
#include "descforge/tracking.hpp"

#include <cmath>
#include <numbers>

namespace descforge {

struct GraspPose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

    RigidTransform transform() const { return {rotation, position}; }
};

inline constexpr double kDegeneratePairDistance = 1e-6;
inline constexpr double kParallelAxisDeg = 1.0;

/// Gripper pose from two surface points: x along p1 - p2, z the reference axis
/// orthogonalized against x, y = z x x; position lambda p1 + (1 - lambda) p2.
inline GraspPose axis_grasp(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, const Eigen::Vector3d& reference_axis, double lambda = 0.5)
{
    if (!(lambda >= 0.0 && lambda <= 1.0))
        fail(ErrorCode::InvalidArgument, "blend must lie in [0, 1]");
    const Eigen::Vector3d diff = p1 - p2;
    if (!(diff.norm() > kDegeneratePairDistance))
        fail(ErrorCode::DegeneratePair, "grasp points coincide");
    if (!(reference_axis.norm() > 0.0))
        fail(ErrorCode::InvalidArgument, "reference axis must be non-zero");
    const Eigen::Vector3d x = diff.normalized();
    const Eigen::Vector3d axis = reference_axis.normalized();
    const double sin_angle = axis.cross(x).norm();
    if (sin_angle < std::sin(kParallelAxisDeg * std::numbers::pi / 180.0))
        fail(ErrorCode::ParallelAxis, "reference axis is parallel to the point difference");
    const Eigen::Vector3d z = (axis - axis.dot(x) * x).normalized();
    const Eigen::Vector3d y = z.cross(x);
    GraspPose pose;
    pose.position = lambda * p1 + (1.0 - lambda) * p2;
    pose.rotation.col(0) = x;
    pose.rotation.col(1) = y;
    pose.rotation.col(2) = z;
    return pose;
}

/// World point at the best-matching pixel among those with valid depth.
inline Eigen::Vector3d top_down_grasp(const Eigen::VectorXd& descriptor, const DescriptorImage& image)
{
    if (descriptor.size() != image.channels)
        fail(ErrorCode::DimensionMismatch, "descriptor dimension differs from the image");
    if (image.depth.size() != image.pixel_count() || std::none_of(image.depth.begin(), image.depth.end(), [](std::uint16_t d) { return d > 0; }))
        fail(ErrorCode::NoValidDepth, "image has no valid depth");
    const PixelMatch best = best_pixel(image, descriptor, true);
    return image.world_point(best.u, best.v);
}

} // namespace descforge
