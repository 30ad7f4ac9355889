#pragma once

#include "descforge/error.hpp"
#include "descforge/mesh.hpp"
#include "descforge/parallel.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

// Procedural fixture meshes. All outputs are closed, manifold and wound
// counter-clockwise seen from outside.

namespace descforge {

/// Torus around the z axis. Vertex (i, j) has index i * minor_segments + j, so
/// rotating by 2*pi/major_segments about z is the permutation (i, j) -> (i + 1, j).
inline TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments)
{
    if (major_segments < 3 || minor_segments < 3)
        fail(ErrorCode::InvalidArgument, "torus needs at least 3 segments in each direction");
    if (!(minor_radius > 0.0) || !(major_radius > minor_radius))
        fail(ErrorCode::InvalidArgument, "torus needs 0 < minor radius < major radius");

    TriangleMesh mesh;
    const int n = major_segments, m = minor_segments;
    mesh.vertices.reserve(static_cast<std::size_t>(n * m));
    for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / n;
        for (int j = 0; j < m; ++j) {
            const double phi = 2.0 * std::numbers::pi * j / m;
            const double ring = major_radius + minor_radius * std::cos(phi);
            mesh.vertices.emplace_back(ring * std::cos(theta), ring * std::sin(theta), minor_radius * std::sin(phi));
        }
    }
    auto id = [m, n](int i, int j) { return ((i % n + n) % n) * m + (j % m + m) % m; };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            mesh.faces.push_back({a, b, c});
            mesh.faces.push_back({a, c, d});
        }
    }
    return mesh;
}

/// Vertex permutation of make_torus for a rotation by `steps` major segments.
inline std::vector<int> torus_rotation_permutation(int major_segments, int minor_segments, int steps = 1)
{
    std::vector<int> perm(static_cast<std::size_t>(major_segments * minor_segments));
    for (int i = 0; i < major_segments; ++i)
        for (int j = 0; j < minor_segments; ++j)
            perm[static_cast<std::size_t>(i * minor_segments + j)] = (((i + steps) % major_segments + major_segments) % major_segments) * minor_segments + j;
    return perm;
}

/// Capped cylinder along z, centered at the origin.
inline TriangleMesh make_cylinder(double radius, double height, int segments, int rings = 1)
{
    if (segments < 3 || rings < 1)
        fail(ErrorCode::InvalidArgument, "cylinder needs segments >= 3 and rings >= 1");
    if (!(radius > 0.0) || !(height > 0.0))
        fail(ErrorCode::InvalidArgument, "cylinder needs positive radius and height");

    TriangleMesh mesh;
    for (int r = 0; r <= rings; ++r) {
        const double z = -0.5 * height + height * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double a = 2.0 * std::numbers::pi * s / segments;
            mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
        }
    }
    const int bottom = static_cast<int>(mesh.vertices.size());
    mesh.vertices.emplace_back(0.0, 0.0, -0.5 * height);
    const int top = bottom + 1;
    mesh.vertices.emplace_back(0.0, 0.0, 0.5 * height);

    auto id = [segments](int r, int s) { return r * segments + (s % segments); };
    for (int r = 0; r < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            int a = id(r, s), b = id(r, s + 1), c = id(r + 1, s + 1), d = id(r + 1, s);
            mesh.faces.push_back({a, b, c});
            mesh.faces.push_back({a, c, d});
        }
    }
    for (int s = 0; s < segments; ++s) {
        mesh.faces.push_back({bottom, id(0, s + 1), id(0, s)});
        mesh.faces.push_back({top, id(rings, s), id(rings, s + 1)});
    }
    return mesh;
}

/// Axis-aligned box centered at the origin with `subdivisions` quads per edge.
inline TriangleMesh make_box(double size_x, double size_y, double size_z, int subdivisions = 1)
{
    if (subdivisions < 1)
        fail(ErrorCode::InvalidArgument, "box needs subdivisions >= 1");
    if (!(size_x > 0.0) || !(size_y > 0.0) || !(size_z > 0.0))
        fail(ErrorCode::InvalidArgument, "box needs positive extents");

    TriangleMesh mesh;
    const Eigen::Vector3d half(0.5 * size_x, 0.5 * size_y, 0.5 * size_z);
    // Vertices are welded on integer lattice coordinates, so shared edges are exact.
    std::map<std::array<int, 3>, int> lattice;
    auto vertex = [&](const std::array<int, 3>& key) {
        auto [it, inserted] = lattice.try_emplace(key, static_cast<int>(mesh.vertices.size()));
        if (inserted) {
            Eigen::Vector3d p;
            for (int k = 0; k < 3; ++k)
                p[k] = -half[k] + 2.0 * half[k] * key[k] / subdivisions;
            mesh.vertices.push_back(p);
        }
        return it->second;
    };

    const int s = subdivisions;
    for (int axis = 0; axis < 3; ++axis) {
        const int u_axis = (axis + 1) % 3, v_axis = (axis + 2) % 3;
        for (int side = 0; side < 2; ++side) {
            for (int i = 0; i < s; ++i) {
                for (int j = 0; j < s; ++j) {
                    auto key = [&](int di, int dj) {
                        std::array<int, 3> k{};
                        k[axis] = side * s;
                        k[u_axis] = i + di;
                        k[v_axis] = j + dj;
                        return vertex(k);
                    };
                    int a = key(0, 0), b = key(1, 0), c = key(1, 1), d = key(0, 1);
                    // (u, v, axis) is right-handed, so a-b-c is outward on the + side.
                    if (side == 1) {
                        mesh.faces.push_back({a, b, c});
                        mesh.faces.push_back({a, c, d});
                    } else {
                        mesh.faces.push_back({a, c, b});
                        mesh.faces.push_back({a, d, c});
                    }
                }
            }
        }
    }
    return mesh;
}

/// Latitude-longitude sphere with single pole vertices.
inline TriangleMesh make_uv_sphere(double radius, int longitude_segments, int latitude_segments)
{
    if (longitude_segments < 3 || latitude_segments < 2)
        fail(ErrorCode::InvalidArgument, "uv sphere needs >= 3 longitude and >= 2 latitude segments");
    if (!(radius > 0.0))
        fail(ErrorCode::InvalidArgument, "uv sphere needs a positive radius");

    TriangleMesh mesh;
    const int nl = longitude_segments, nt = latitude_segments;
    mesh.vertices.emplace_back(0.0, 0.0, radius);
    for (int t = 1; t < nt; ++t) {
        const double polar = std::numbers::pi * t / nt;
        for (int l = 0; l < nl; ++l) {
            const double az = 2.0 * std::numbers::pi * l / nl;
            mesh.vertices.emplace_back(radius * std::sin(polar) * std::cos(az), radius * std::sin(polar) * std::sin(az), radius * std::cos(polar));
        }
    }
    const int south = static_cast<int>(mesh.vertices.size());
    mesh.vertices.emplace_back(0.0, 0.0, -radius);

    auto id = [nl](int ring, int l) { return 1 + (ring - 1) * nl + (l % nl); };
    for (int l = 0; l < nl; ++l)
        mesh.faces.push_back({0, id(1, l), id(1, l + 1)});
    for (int t = 1; t + 1 < nt; ++t) {
        for (int l = 0; l < nl; ++l) {
            int a = id(t, l), b = id(t + 1, l), c = id(t + 1, l + 1), d = id(t, l + 1);
            mesh.faces.push_back({a, b, c});
            mesh.faces.push_back({a, c, d});
        }
    }
    for (int l = 0; l < nl; ++l)
        mesh.faces.push_back({south, id(nt - 1, l + 1), id(nt - 1, l)});
    return mesh;
}

/// Unit-radius subdivided icosahedron: 10 * 4^s + 2 vertices.
inline TriangleMesh make_icosphere(int subdivisions)
{
    if (subdivisions < 0)
        fail(ErrorCode::InvalidArgument, "icosphere needs subdivisions >= 0");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh mesh;
    mesh.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                     {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : mesh.vertices)
        v.normalize();
    mesh.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                  {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                  {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto [it, inserted] = midpoint.try_emplace(edge_key(a, b), static_cast<int>(mesh.vertices.size()));
            if (inserted)
                mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
            return it->second;
        };
        std::vector<Face> faces;
        faces.reserve(mesh.faces.size() * 4);
        for (const auto& [a, b, c] : mesh.faces) {
            int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
            faces.push_back({a, ab, ca});
            faces.push_back({b, bc, ab});
            faces.push_back({c, ca, bc});
            faces.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(faces);
    }
    return mesh;
}

/// Smooth asymmetric closed surface: an ellipsoid with seeded low-frequency
/// bumps. Stands in for a scanned object such as the Stanford bunny; with
/// subdivisions = 4 it has 2562 vertices.
inline TriangleMesh make_blob(int subdivisions = 4, std::uint64_t seed = 7, const Eigen::Vector3d& semi_axes = {0.06, 0.045, 0.035})
{
    TriangleMesh mesh = make_icosphere(subdivisions);
    std::mt19937_64 rng(seed);
    struct Bump {
        Eigen::Vector3d direction;
        double amplitude;
        double sharpness;
    };
    std::vector<Bump> bumps;
    for (int b = 0; b < 5; ++b) {
        Eigen::Vector3d d(standard_normal(rng), standard_normal(rng), standard_normal(rng));
        bumps.push_back({d.normalized(), uniform(rng, 0.08, 0.2), uniform(rng, 2.0, 5.0)});
    }
    for (auto& v : mesh.vertices) {
        double scale = 1.0;
        for (const auto& bump : bumps)
            scale += bump.amplitude * std::exp(bump.sharpness * (v.dot(bump.direction) - 1.0));
        v = scale * v.cwiseProduct(semi_axes);
    }
    return mesh;
}

} // namespace descforge
