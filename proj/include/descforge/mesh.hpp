#pragma once

#include "descforge/error.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace descforge {

using Face = std::array<int, 3>;

/// Triangle mesh in meters; faces are counter-clockwise vertex-index triples.
struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Face> faces;
    std::vector<Eigen::Vector3d> normals; // optional, empty or one per vertex

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }

    double face_area(std::size_t f) const
    {
        const auto& [a, b, c] = faces[f];
        return 0.5 * (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]).norm();
    }

    Eigen::Vector3d face_normal(std::size_t f) const
    {
        const auto& [a, b, c] = faces[f];
        return (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]).normalized();
    }

    Eigen::Vector3d centroid() const
    {
        Eigen::Vector3d sum = Eigen::Vector3d::Zero();
        for (const auto& v : vertices)
            sum += v;
        return vertices.empty() ? sum : Eigen::Vector3d(sum / static_cast<double>(vertices.size()));
    }
};

inline constexpr double kDegenerateArea = 1e-12;

/// Checks the structural invariants (index range, no repeated corner).
inline void check_face_indices(const TriangleMesh& mesh)
{
    const auto n = static_cast<long long>(mesh.vertices.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (int idx : face) {
            if (idx < 0 || idx >= n)
                fail(ErrorCode::IndexOutOfRange,
                     "face " + std::to_string(f) + " references vertex " + std::to_string(idx) + " but mesh has " + std::to_string(n) + " vertices");
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
            fail(ErrorCode::ParseError, "face " + std::to_string(f) + " references the same vertex twice");
    }
}

struct MeshReport {
    std::size_t vertex_count = 0;
    std::size_t face_count = 0;
    std::size_t edge_count = 0;
    std::size_t boundary_edge_count = 0;
    std::size_t non_manifold_edge_count = 0;
    std::size_t component_count = 0;
    std::size_t isolated_vertex_count = 0;
    double min_face_area = 0.0;
    double obtuse_fraction = 0.0;
    std::vector<std::size_t> degenerate_faces;

    int euler_characteristic() const
    {
        return static_cast<int>(vertex_count) - static_cast<int>(edge_count) + static_cast<int>(face_count);
    }
};

/// Undirected edge with the smaller index first.
inline std::pair<int, int> edge_key(int a, int b)
{
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

/// Incident-face count per undirected edge, ordered by key.
inline std::map<std::pair<int, int>, int> edge_face_counts(const TriangleMesh& mesh)
{
    std::map<std::pair<int, int>, int> counts;
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e)
            ++counts[edge_key(f[e], f[(e + 1) % 3])];
    return counts;
}

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : m_parent(n) { std::iota(m_parent.begin(), m_parent.end(), std::size_t{0}); }

    std::size_t find(std::size_t x)
    {
        while (m_parent[x] != x) {
            m_parent[x] = m_parent[m_parent[x]];
            x = m_parent[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            m_parent[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> m_parent;
};

} // namespace detail

/// Connected components over all vertices; a vertex used by no face is its own component.
inline std::size_t count_components(const TriangleMesh& mesh)
{
    detail::DisjointSets sets(mesh.vertices.size());
    for (const auto& f : mesh.faces) {
        sets.unite(static_cast<std::size_t>(f[0]), static_cast<std::size_t>(f[1]));
        sets.unite(static_cast<std::size_t>(f[1]), static_cast<std::size_t>(f[2]));
    }
    std::size_t count = 0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        if (sets.find(v) == v)
            ++count;
    return count;
}

/// Reporting only; never throws on geometric defects and never mutates the mesh.
inline MeshReport validate_mesh(const TriangleMesh& mesh)
{
    MeshReport report;
    report.vertex_count = mesh.vertices.size();
    report.face_count = mesh.faces.size();
    if (mesh.faces.empty()) {
        report.component_count = mesh.vertices.size();
        report.isolated_vertex_count = mesh.vertices.size();
        return report;
    }

    const auto edges = edge_face_counts(mesh);
    report.edge_count = edges.size();
    for (const auto& [edge, count] : edges) {
        if (count == 1)
            ++report.boundary_edge_count;
        else if (count > 2)
            ++report.non_manifold_edge_count;
    }

    std::vector<char> used(mesh.vertices.size(), 0);
    for (const auto& f : mesh.faces)
        for (int v : f)
            used[static_cast<std::size_t>(v)] = 1;
    report.isolated_vertex_count = static_cast<std::size_t>(std::count(used.begin(), used.end(), 0));
    report.component_count = count_components(mesh);

    report.min_face_area = std::numeric_limits<double>::infinity();
    std::size_t obtuse = 0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        double area = mesh.face_area(f);
        report.min_face_area = std::min(report.min_face_area, area);
        if (area <= kDegenerateArea) {
            report.degenerate_faces.push_back(f);
            continue;
        }
        const auto& face = mesh.faces[f];
        for (int c = 0; c < 3; ++c) {
            const auto& p = mesh.vertices[face[c]];
            const auto& q = mesh.vertices[face[(c + 1) % 3]];
            const auto& r = mesh.vertices[face[(c + 2) % 3]];
            if ((q - p).dot(r - p) < 0.0) {
                ++obtuse;
                break;
            }
        }
    }
    report.obtuse_fraction = static_cast<double>(obtuse) / static_cast<double>(mesh.faces.size());
    return report;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

enum class MeshFormat { Obj, Ply };

inline MeshFormat format_from_path(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".obj")
        return MeshFormat::Obj;
    if (ext == ".ply")
        return MeshFormat::Ply;
    fail(ErrorCode::ParseError, "unrecognized mesh extension '" + ext + "'");
}

namespace detail {

inline int parse_obj_index(const std::string& token, std::size_t vertex_count, std::size_t line_no)
{
    // "7", "7/1", "7//3", "7/1/3"; negative indices are relative to the end.
    auto slash = token.find('/');
    std::string head = token.substr(0, slash);
    long long idx = 0;
    try {
        std::size_t used = 0;
        idx = std::stoll(head, &used);
        if (used != head.size())
            throw std::invalid_argument(head);
    } catch (const std::exception&) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad face index '" + token + "'");
    }
    if (idx == 0)
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": OBJ indices are 1-based");
    if (idx < 0)
        idx += static_cast<long long>(vertex_count) + 1;
    return static_cast<int>(idx - 1);
}

inline TriangleMesh read_obj(std::istream& in)
{
    TriangleMesh mesh;
    std::vector<Eigen::Vector3d> normals;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#')
            continue;
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(ls >> p.x() >> p.y() >> p.z()))
                fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": malformed vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "vn") {
            Eigen::Vector3d n;
            if (!(ls >> n.x() >> n.y() >> n.z()))
                fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": malformed normal");
            normals.push_back(n);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ls >> tok)
                poly.push_back(parse_obj_index(tok, mesh.vertices.size(), line_no));
            if (poly.size() < 3)
                fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
        }
    }
    if (normals.size() == mesh.vertices.size())
        mesh.normals = std::move(normals);
    return mesh;
}

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

inline PlyType ply_type(const std::string& name)
{
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    fail(ErrorCode::ParseError, "unknown PLY type '" + name + "'");
}

inline std::size_t ply_size(PlyType t)
{
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

template <typename T>
T read_le(std::istream& in)
{
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in)
        fail(ErrorCode::ParseError, "unexpected end of binary PLY data");
    return value;
}

inline double read_binary_scalar(std::istream& in, PlyType t)
{
    switch (t) {
    case PlyType::Int8: return read_le<std::int8_t>(in);
    case PlyType::UInt8: return read_le<std::uint8_t>(in);
    case PlyType::Int16: return read_le<std::int16_t>(in);
    case PlyType::UInt16: return read_le<std::uint16_t>(in);
    case PlyType::Int32: return read_le<std::int32_t>(in);
    case PlyType::UInt32: return read_le<std::uint32_t>(in);
    case PlyType::Float32: return read_le<float>(in);
    case PlyType::Float64: return read_le<double>(in);
    }
    return 0.0;
}

inline double read_ascii_scalar(std::istream& in)
{
    double v = 0.0;
    if (!(in >> v))
        fail(ErrorCode::ParseError, "malformed ASCII PLY value");
    return v;
}

inline TriangleMesh read_ply(std::istream& in)
{
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0)
        fail(ErrorCode::ParseError, "missing 'ply' magic");

    bool binary = false;
    std::vector<PlyElement> elements;
    while (true) {
        if (!std::getline(in, line))
            fail(ErrorCode::ParseError, "unterminated PLY header");
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii")
                binary = false;
            else if (fmt == "binary_little_endian")
                binary = true;
            else
                fail(ErrorCode::ParseError, "unsupported PLY format '" + fmt + "'");
        } else if (word == "element") {
            PlyElement el;
            ls >> el.name >> el.count;
            if (!ls)
                fail(ErrorCode::ParseError, "malformed element line");
            elements.push_back(el);
        } else if (word == "property") {
            if (elements.empty())
                fail(ErrorCode::ParseError, "property before element");
            PlyProperty prop;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string count_type, item_type;
                ls >> count_type >> item_type >> prop.name;
                prop.is_list = true;
                prop.count_type = ply_type(count_type);
                prop.type = ply_type(item_type);
            } else {
                prop.type = ply_type(type);
                ls >> prop.name;
            }
            elements.back().properties.push_back(prop);
        } else if (word == "end_header") {
            break;
        }
    }

    TriangleMesh mesh;
    for (const auto& el : elements) {
        const bool is_vertex = el.name == "vertex";
        const bool is_face = el.name == "face";
        int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ifaces = -1;
        for (int p = 0; p < static_cast<int>(el.properties.size()); ++p) {
            const auto& name = el.properties[p].name;
            if (name == "x") ix = p;
            else if (name == "y") iy = p;
            else if (name == "z") iz = p;
            else if (name == "nx") inx = p;
            else if (name == "ny") iny = p;
            else if (name == "nz") inz = p;
            else if (name == "vertex_indices" || name == "vertex_index") ifaces = p;
        }
        if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
            fail(ErrorCode::ParseError, "vertex element lacks x/y/z");
        if (is_face && ifaces < 0)
            fail(ErrorCode::ParseError, "face element lacks vertex_indices");
        const bool has_normals = is_vertex && inx >= 0 && iny >= 0 && inz >= 0;

        for (std::size_t i = 0; i < el.count; ++i) {
            std::vector<double> scalars(el.properties.size(), 0.0);
            std::vector<int> poly;
            for (int p = 0; p < static_cast<int>(el.properties.size()); ++p) {
                const auto& prop = el.properties[p];
                if (prop.is_list) {
                    auto n = static_cast<long long>(binary ? read_binary_scalar(in, prop.count_type) : read_ascii_scalar(in));
                    if (n < 0)
                        fail(ErrorCode::ParseError, "negative list length");
                    for (long long k = 0; k < n; ++k) {
                        double value = binary ? read_binary_scalar(in, prop.type) : read_ascii_scalar(in);
                        if (p == ifaces)
                            poly.push_back(static_cast<int>(value));
                    }
                } else {
                    scalars[p] = binary ? read_binary_scalar(in, prop.type) : read_ascii_scalar(in);
                }
            }
            if (is_vertex) {
                mesh.vertices.emplace_back(scalars[ix], scalars[iy], scalars[iz]);
                if (has_normals)
                    mesh.normals.emplace_back(scalars[inx], scalars[iny], scalars[inz]);
            } else if (is_face) {
                if (poly.size() < 3)
                    fail(ErrorCode::ParseError, "face with fewer than 3 vertices");
                for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                    mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
            }
        }
    }
    return mesh;
}

} // namespace detail

/// Loads an ASCII OBJ or an ASCII / binary little-endian PLY. Polygons are
/// fan-triangulated; winding is kept as stored.
inline TriangleMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format = std::nullopt)
{
    MeshFormat fmt = format ? *format : format_from_path(path);
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorCode::IoError, "cannot open " + path.string());
    TriangleMesh mesh = fmt == MeshFormat::Obj ? detail::read_obj(in) : detail::read_ply(in);
    check_face_indices(mesh);
    return mesh;
}

/// PLY output is binary little-endian with float64 coordinates, so a reload is bit-exact.
inline void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, std::optional<MeshFormat> format = std::nullopt)
{
    MeshFormat fmt = format ? *format : format_from_path(path);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::IoError, "cannot write " + path.string());
    if (fmt == MeshFormat::Obj) {
        out << std::setprecision(17);
        for (const auto& v : mesh.vertices)
            out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
        for (const auto& f : mesh.faces)
            out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
        return;
    }
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << mesh.vertices.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "element face " << mesh.faces.size() << "\n"
        << "property list uchar int vertex_indices\nend_header\n";
    for (const auto& v : mesh.vertices) {
        double xyz[3] = {v.x(), v.y(), v.z()};
        out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
    for (const auto& f : mesh.faces) {
        std::uint8_t n = 3;
        std::int32_t idx[3] = {f[0], f[1], f[2]};
        out.write(reinterpret_cast<const char*>(&n), 1);
        out.write(reinterpret_cast<const char*>(idx), sizeof(idx));
    }
    if (!out)
        fail(ErrorCode::IoError, "write failed for " + path.string());
}

/// Applies p -> R p + t to every vertex (normals rotate).
inline TriangleMesh transformed(const TriangleMesh& mesh, const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
{
    TriangleMesh out = mesh;
    for (auto& v : out.vertices)
        v = rotation * v + translation;
    for (auto& n : out.normals)
        n = rotation * n;
    return out;
}

/// Concatenates meshes, offsetting face indices.
inline TriangleMesh merge(const TriangleMesh& a, const TriangleMesh& b)
{
    TriangleMesh out = a;
    const int offset = static_cast<int>(a.vertices.size());
    out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (const auto& f : b.faces)
        out.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    if (a.normals.size() != a.vertices.size() || b.normals.size() != b.vertices.size())
        out.normals.clear();
    else
        out.normals.insert(out.normals.end(), b.normals.begin(), b.normals.end());
    return out;
}

} // namespace descforge
