#pragma once

#include "descforge/error.hpp"
#include "descforge/mesh.hpp"

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace descforge {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Weighting { Cotangent, Uniform };

/// Diagonal constraint metric. Degree is C_ii = sum_j A_ij; barycentric is the
/// lumped vertex area (one third of each incident face).
enum class MassMode { Degree, Barycentric };

inline std::string to_string(Weighting w) { return w == Weighting::Cotangent ? "cotangent" : "uniform"; }
inline std::string to_string(MassMode m) { return m == MassMode::Degree ? "degree" : "barycentric"; }

/// L = C - A with A the symmetric weight matrix. C is stored as its diagonal.
struct LaplacianPair {
    SparseMatrix L;
    Eigen::VectorXd C;
    Weighting weighting = Weighting::Cotangent;
    MassMode mass = MassMode::Degree;
    bool clamped_negative_weights = false;

    Eigen::Index size() const { return L.rows(); }
};

struct WeightedEdge {
    int i = 0;
    int j = 0;
    double weight = 1.0;
};

namespace detail {

inline LaplacianPair assemble(Eigen::Index n, const std::vector<Eigen::Triplet<double>>& weights)
{
    SparseMatrix A(n, n);
    A.setFromTriplets(weights.begin(), weights.end());
    A.makeCompressed();

    LaplacianPair pair;
    pair.C = Eigen::VectorXd::Zero(n);
    for (Eigen::Index col = 0; col < A.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(A, col); it; ++it)
            pair.C[it.row()] += it.value();

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(A.nonZeros() + n));
    for (Eigen::Index col = 0; col < A.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(A, col); it; ++it)
            entries.emplace_back(it.row(), it.col(), -it.value());
    for (Eigen::Index i = 0; i < n; ++i)
        entries.emplace_back(i, i, pair.C[i]);
    pair.L.resize(n, n);
    pair.L.setFromTriplets(entries.begin(), entries.end());
    pair.L.makeCompressed();
    return pair;
}

inline double cotangent(const Eigen::Vector3d& apex, const Eigen::Vector3d& p, const Eigen::Vector3d& q)
{
    const Eigen::Vector3d u = p - apex, v = q - apex;
    return u.dot(v) / u.cross(v).norm();
}

} // namespace detail

/// Graph Laplacian with degree matrix, for weighted edge lists. Each edge
/// contributes its weight to A_ij and A_ji; repeated edges sum.
inline LaplacianPair laplacian_from_edges(int vertex_count, const std::vector<WeightedEdge>& edges)
{
    if (vertex_count <= 0)
        fail(ErrorCode::EmptyMesh, "graph has no vertices");
    std::vector<Eigen::Triplet<double>> weights;
    weights.reserve(edges.size() * 2);
    for (const auto& e : edges) {
        if (e.i < 0 || e.j < 0 || e.i >= vertex_count || e.j >= vertex_count)
            fail(ErrorCode::IndexOutOfRange, "edge endpoint outside graph");
        if (e.i == e.j)
            continue;
        weights.emplace_back(e.i, e.j, e.weight);
        weights.emplace_back(e.j, e.i, e.weight);
    }
    LaplacianPair pair = detail::assemble(vertex_count, weights);
    pair.weighting = Weighting::Uniform;
    return pair;
}

/// Cycle graph C_n with unit weights (C = 2I).
inline LaplacianPair cycle_graph_laplacian(int n)
{
    std::vector<WeightedEdge> edges;
    for (int i = 0; i < n; ++i)
        edges.push_back({i, (i + 1) % n, 1.0});
    return laplacian_from_edges(n, edges);
}

/// Mesh Laplacian. Cotangent mode uses A_ij = (cot a_ij + cot b_ij) / 2 for the
/// angles opposite edge (i, j); an edge with a single incident face gets half its
/// one cotangent. Uniform mode sets A_ij = 1 per edge. When the degree diagonal
/// has a non-positive entry under cotangent weights, negative weights are
/// clamped to zero and `clamped_negative_weights` is set.
inline LaplacianPair build_laplacian(const TriangleMesh& mesh, Weighting weighting = Weighting::Cotangent, MassMode mass = MassMode::Degree)
{
    if (mesh.vertices.empty() || mesh.faces.empty())
        fail(ErrorCode::EmptyMesh, "mesh has no vertices or no faces");
    check_face_indices(mesh);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        if (mesh.face_area(f) <= kDegenerateArea)
            fail(ErrorCode::DegenerateFace, "face " + std::to_string(f) + " has area <= 1e-12");

    const auto n = static_cast<Eigen::Index>(mesh.vertices.size());

    auto build = [&](bool clamp) {
        std::vector<Eigen::Triplet<double>> weights;
        if (weighting == Weighting::Uniform) {
            for (const auto& [edge, count] : edge_face_counts(mesh)) {
                weights.emplace_back(edge.first, edge.second, 1.0);
                weights.emplace_back(edge.second, edge.first, 1.0);
            }
        } else {
            weights.reserve(mesh.faces.size() * 6);
            for (const auto& face : mesh.faces) {
                for (int c = 0; c < 3; ++c) {
                    const int apex = face[c], i = face[(c + 1) % 3], j = face[(c + 2) % 3];
                    double w = 0.5 * detail::cotangent(mesh.vertices[apex], mesh.vertices[i], mesh.vertices[j]);
                    if (clamp && w < 0.0)
                        w = 0.0;
                    weights.emplace_back(i, j, w);
                    weights.emplace_back(j, i, w);
                }
            }
        }
        return detail::assemble(n, weights);
    };

    LaplacianPair pair = build(false);
    if (weighting == Weighting::Cotangent && mass == MassMode::Degree && (pair.C.array() <= 0.0).any()) {
        pair = build(true);
        pair.clamped_negative_weights = true;
    }
    pair.weighting = weighting;
    pair.mass = mass;

    if (mass == MassMode::Barycentric) {
        pair.C.setZero();
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            const double third = mesh.face_area(f) / 3.0;
            for (int v : mesh.faces[f])
                pair.C[v] += third;
        }
    }
    return pair;
}

} // namespace descforge
