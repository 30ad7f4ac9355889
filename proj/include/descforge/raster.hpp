#pragma once

#include "descforge/camera.hpp"
#include "descforge/embedding.hpp"
#include "descforge/error.hpp"
#include "descforge/mesh.hpp"
#include "descforge/parallel.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace descforge {

/// Depth quantum: depth images store z in units of 100 micrometers.
inline constexpr double kDepthUnit = 1e-4;
inline constexpr double kNearPlane = 1e-6;
/// Farthest representable depth; surfaces beyond it are not rendered.
inline constexpr double kFarPlane = 65535 * kDepthUnit;

/// h x w x D descriptor image (channel-last, row-major) with mask, quantized
/// depth and, for rendered frames, the id of the visible triangle per pixel.
struct DescriptorImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> descriptors;
    std::vector<std::uint8_t> mask;
    std::vector<std::uint16_t> depth;
    std::vector<std::int32_t> triangle_ids; // empty when unavailable; -1 = background
    std::vector<float> background;
    CameraIntrinsics intrinsics;
    RigidTransform camera;      // camera-to-world extrinsic
    RigidTransform object_pose; // object-to-world

    DescriptorImage() = default;

    DescriptorImage(int w, int h, int d)
        : width(w)
        , height(h)
        , channels(d)
        , descriptors(static_cast<std::size_t>(w) * h * d, 0.0f)
        , mask(static_cast<std::size_t>(w) * h, 0)
        , depth(static_cast<std::size_t>(w) * h, 0)
    {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
    bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }

    std::span<float> descriptor(int u, int v)
    {
        return {descriptors.data() + index(u, v) * channels, static_cast<std::size_t>(channels)};
    }
    std::span<const float> descriptor(int u, int v) const
    {
        return {descriptors.data() + index(u, v) * channels, static_cast<std::size_t>(channels)};
    }

    bool has_triangle_ids() const { return triangle_ids.size() == pixel_count(); }

    double depth_meters(int u, int v) const { return depth[index(u, v)] * kDepthUnit; }

    /// World point seen at pixel (u, v); requires valid depth.
    Eigen::Vector3d world_point(int u, int v) const { return camera * intrinsics.unproject(u, v, depth_meters(u, v)); }
};

struct RasterOptions {
    int threads = thread_count();
};

namespace detail {

struct ClipVertex {
    Eigen::Vector3d position;   // camera frame
    Eigen::Vector3d barycentric; // w.r.t. the original triangle corners
};

/// Sutherland-Hodgman against z = near. Edge intersections are computed from the
/// endpoint with the lower vertex id so neighbouring triangles agree bit-for-bit.
inline int clip_near(const std::array<Eigen::Vector3d, 3>& p, const std::array<int, 3>& ids, std::array<ClipVertex, 4>& out, double near)
{
    int count = 0;
    for (int k = 0; k < 3; ++k) {
        const int a = k, b = (k + 1) % 3;
        const bool a_in = p[a].z() > near, b_in = p[b].z() > near;
        Eigen::Vector3d bary_a = Eigen::Vector3d::Zero();
        bary_a[a] = 1.0;
        if (a_in)
            out[count++] = {p[a], bary_a};
        if (a_in != b_in) {
            const int lo = ids[a] < ids[b] ? a : b, hi = lo == a ? b : a;
            const double t = (near - p[lo].z()) / (p[hi].z() - p[lo].z());
            ClipVertex cv;
            cv.position = p[lo] + t * (p[hi] - p[lo]);
            cv.position.z() = near;
            cv.barycentric.setZero();
            cv.barycentric[lo] = 1.0 - t;
            cv.barycentric[hi] = t;
            out[count++] = cv;
        }
    }
    return count;
}

struct ScreenVertex {
    double x = 0.0;
    double y = 0.0;
    double inv_z = 0.0;
    Eigen::Vector3d barycentric;
};

/// Edge function of the directed edge a -> b at p, evaluated in a canonical
/// endpoint order so the two triangles sharing an edge get exactly opposite values.
inline double edge_function(const ScreenVertex& a, const ScreenVertex& b, double px, double py)
{
    const bool swap = b.x < a.x || (b.x == a.x && b.y < a.y);
    const ScreenVertex& s = swap ? b : a;
    const ScreenVertex& e = swap ? a : b;
    const double value = (e.x - s.x) * (py - s.y) - (e.y - s.y) * (px - s.x);
    return swap ? -value : value;
}

/// Top-left ownership for a directed edge of a positively oriented triangle.
inline bool owns_edge(const ScreenVertex& a, const ScreenVertex& b)
{
    const double dx = b.x - a.x, dy = b.y - a.y;
    return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

struct Fragment {
    double z = std::numeric_limits<double>::infinity();
    std::int32_t triangle = -1;
    Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
};

inline void raster_triangle(std::array<ScreenVertex, 3> v, std::int32_t triangle, int width, int row_begin, int row_end, std::vector<Fragment>& frags)
{
    double area = edge_function(v[0], v[1], v[2].x, v[2].y);
    if (area == 0.0 || !std::isfinite(area))
        return;
    if (area < 0.0) {
        std::swap(v[1], v[2]);
        area = -area;
    }
    const double xmin = std::min({v[0].x, v[1].x, v[2].x}), xmax = std::max({v[0].x, v[1].x, v[2].x});
    const double ymin = std::min({v[0].y, v[1].y, v[2].y}), ymax = std::max({v[0].y, v[1].y, v[2].y});
    const int u0 = std::max(0, static_cast<int>(std::ceil(xmin - 0.5)));
    const int u1 = std::min(width - 1, static_cast<int>(std::floor(xmax - 0.5)));
    const int r0 = std::max(row_begin, static_cast<int>(std::ceil(ymin - 0.5)));
    const int r1 = std::min(row_end - 1, static_cast<int>(std::floor(ymax - 0.5)));
    if (u0 > u1 || r0 > r1)
        return;

    const std::array<bool, 3> owns{owns_edge(v[0], v[1]), owns_edge(v[1], v[2]), owns_edge(v[2], v[0])};
    for (int row = r0; row <= r1; ++row) {
        const double py = row + 0.5;
        for (int col = u0; col <= u1; ++col) {
            const double px = col + 0.5;
            // e[k] is the edge opposite corner (k + 2) % 3.
            const std::array<double, 3> e{edge_function(v[0], v[1], px, py), edge_function(v[1], v[2], px, py), edge_function(v[2], v[0], px, py)};
            bool inside = true;
            for (int k = 0; k < 3 && inside; ++k)
                inside = e[k] > 0.0 || (e[k] == 0.0 && owns[k]);
            if (!inside)
                continue;
            // Screen-space weights, then perspective correction through 1/z.
            const double w0 = e[1] / area * v[0].inv_z;
            const double w1 = e[2] / area * v[1].inv_z;
            const double w2 = e[0] / area * v[2].inv_z;
            const double sum = w0 + w1 + w2;
            const double z = 1.0 / sum;
            const double quanta = std::round(z / kDepthUnit);
            if (!(quanta >= 1.0 && quanta <= 65535.0))
                continue;
            Fragment& frag = frags[static_cast<std::size_t>(row - row_begin) * width + col];
            if (z < frag.z) {
                frag.z = z;
                frag.triangle = triangle;
                frag.barycentric = (w0 * v[0].barycentric + w1 * v[1].barycentric + w2 * v[2].barycentric) / sum;
            }
        }
    }
}

} // namespace detail

/// Renders a normalized descriptor field. Perspective projection
/// u = fx x / z + cx; nearest surface wins (ties: lowest triangle index); no
/// back-face culling; covered pixels carry perspective-correct barycentric
/// blends of the vertex descriptors, uncovered ones the background descriptor.
inline DescriptorImage rasterize(const TriangleMesh& mesh, const DescriptorField& field, const CameraIntrinsics& intrinsics,
                                 const RigidTransform& object_in_camera, const RasterOptions& options = {})
{
    if (!field.normalized)
        fail(ErrorCode::UnnormalizedField, "rasterize needs a normalized descriptor field");
    if (!field.background)
        fail(ErrorCode::MissingBackground, "rasterize needs a background descriptor");
    if (field.vertex_count() != static_cast<Eigen::Index>(mesh.vertices.size()))
        fail(ErrorCode::ShapeMismatch, "descriptor field and mesh vertex counts differ");
    intrinsics.validate();
    check_face_indices(mesh);

    const int width = intrinsics.width, height = intrinsics.height;
    const int dims = static_cast<int>(field.dimension());

    std::vector<Eigen::Vector3d> cam(mesh.vertices.size());
    for (std::size_t i = 0; i < cam.size(); ++i)
        cam[i] = object_in_camera * mesh.vertices[i];

    // Screen-space triangles after near clipping; a clipped triangle may become two.
    struct ScreenTriangle {
        std::array<detail::ScreenVertex, 3> v;
        std::int32_t face;
    };
    std::vector<ScreenTriangle> tris;
    tris.reserve(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        const std::array<Eigen::Vector3d, 3> p{cam[face[0]], cam[face[1]], cam[face[2]]};
        std::array<detail::ClipVertex, 4> clipped;
        const int count = detail::clip_near(p, face, clipped, kNearPlane);
        std::array<detail::ScreenVertex, 4> sv;
        for (int k = 0; k < count; ++k) {
            const auto& q = clipped[k].position;
            sv[k] = {intrinsics.fx * q.x() / q.z() + intrinsics.cx, intrinsics.fy * q.y() / q.z() + intrinsics.cy, 1.0 / q.z(), clipped[k].barycentric};
        }
        for (int k = 1; k + 1 < count; ++k)
            tris.push_back({{sv[0], sv[k], sv[k + 1]}, static_cast<std::int32_t>(f)});
    }

    DescriptorImage image(width, height, dims);
    image.intrinsics = intrinsics;
    image.triangle_ids.assign(image.pixel_count(), -1);
    image.background.resize(static_cast<std::size_t>(dims));
    for (int d = 0; d < dims; ++d)
        image.background[static_cast<std::size_t>(d)] = static_cast<float>((*field.background)[d]);

    // Row bands are independent, so the result does not depend on the thread count.
    parallel_chunks(
        height,
        [&](std::int64_t band_begin, std::int64_t band_end) {
            const int r0 = static_cast<int>(band_begin), r1 = static_cast<int>(band_end);
            std::vector<detail::Fragment> frags(static_cast<std::size_t>(r1 - r0) * width);
            for (const auto& tri : tris)
                detail::raster_triangle(tri.v, tri.face, width, r0, r1, frags);
            for (int row = r0; row < r1; ++row) {
                for (int col = 0; col < width; ++col) {
                    const auto& frag = frags[static_cast<std::size_t>(row - r0) * width + col];
                    const std::size_t px = image.index(col, row);
                    float* out = image.descriptors.data() + px * dims;
                    if (frag.triangle < 0 || frag.z > kFarPlane) {
                        std::copy(image.background.begin(), image.background.end(), out);
                        continue;
                    }
                    const auto& face = mesh.faces[static_cast<std::size_t>(frag.triangle)];
                    for (int d = 0; d < dims; ++d) {
                        const double value = frag.barycentric[0] * field.values(d, face[0]) + frag.barycentric[1] * field.values(d, face[1]) +
                                             frag.barycentric[2] * field.values(d, face[2]);
                        out[d] = static_cast<float>(std::clamp(value, 0.0, 1.0));
                    }
                    image.mask[px] = 1;
                    image.depth[px] = static_cast<std::uint16_t>(std::round(frag.z / kDepthUnit));
                    image.triangle_ids[px] = frag.triangle;
                }
            }
        },
        options.threads);
    return image;
}

/// Renders a frame from world poses and records them as frame metadata.
inline DescriptorImage render_frame(const TriangleMesh& mesh, const DescriptorField& field, const CameraIntrinsics& intrinsics,
                                    const RigidTransform& camera, const RigidTransform& object_pose, const RasterOptions& options = {})
{
    camera.validate();
    object_pose.validate();
    DescriptorImage image = rasterize(mesh, field, intrinsics, object_in_camera(camera, object_pose), options);
    image.camera = camera;
    image.object_pose = object_pose;
    return image;
}

} // namespace descforge
