#include "oracles.hpp"
#include "test_helpers.hpp"

#include <cstring>

using namespace descforge;
using Catch::Approx;

TEST_CASE("OBJ tetrahedron loads with four vertices and faces")
{
    const auto dir = testing::scratch_dir("mesh_obj");
    testing::write_file(dir / "tet.obj", "# tetrahedron\n"
                                         "v 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\n"
                                         "f 1 2 3\nf 1 4 2\nf 1 3 4\nf 2 4 3\n");
    const TriangleMesh mesh = load_mesh(dir / "tet.obj");
    CHECK(mesh.vertex_count() == 4);
    CHECK(mesh.face_count() == 4);
    CHECK(mesh.faces[1] == Face{0, 3, 1});
}

TEST_CASE("OBJ face index past the vertex count is rejected")
{
    const auto dir = testing::scratch_dir("mesh_oob");
    testing::write_file(dir / "bad.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 5\n");
    CHECK(testing::error_code_of([&] { load_mesh(dir / "bad.obj"); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("OBJ reader handles slash syntax, negative indices and polygons")
{
    const auto dir = testing::scratch_dir("mesh_obj_syntax");
    testing::write_file(dir / "quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\n"
                                          "f 1/1/1 2//1 -2 -1\n");
    const TriangleMesh mesh = load_mesh(dir / "quad.obj");
    REQUIRE(mesh.face_count() == 2);
    CHECK(mesh.faces[0] == Face{0, 1, 2});
    CHECK(mesh.faces[1] == Face{0, 2, 3});
}

TEST_CASE("malformed files raise ParseError")
{
    const auto dir = testing::scratch_dir("mesh_malformed");
    testing::write_file(dir / "a.obj", "v 0 0\n");
    testing::write_file(dir / "b.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n");
    testing::write_file(dir / "c.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n");
    CHECK(testing::error_code_of([&] { load_mesh(dir / "a.obj"); }) == ErrorCode::ParseError);
    CHECK(testing::error_code_of([&] { load_mesh(dir / "b.ply"); }) == ErrorCode::ParseError);
    CHECK(testing::error_code_of([&] { load_mesh(dir / "c.obj"); }) == ErrorCode::ParseError);
}

TEST_CASE("ASCII PLY with float vertices and int lists")
{
    const auto dir = testing::scratch_dir("mesh_ply_ascii");
    testing::write_file(dir / "tri.ply", "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\n"
                                         "property float z\nproperty float nx\nproperty float ny\nproperty float nz\n"
                                         "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
                                         "0 0 0 0 0 1\n1 0 0 0 0 1\n0 1 0 0 0 1\n3 0 1 2\n");
    const TriangleMesh mesh = load_mesh(dir / "tri.ply");
    CHECK(mesh.vertex_count() == 3);
    CHECK(mesh.normals.size() == 3);
    CHECK(mesh.faces[0] == Face{0, 1, 2});
}

TEST_CASE("binary PLY torus round-trips bit-exactly")
{
    const auto dir = testing::scratch_dir("mesh_ply_roundtrip");
    const TriangleMesh torus = make_torus(0.1, 0.04, 64, 64);
    REQUIRE(torus.vertex_count() == 4096);
    REQUIRE(torus.face_count() == 8192);
    save_mesh(torus, dir / "torus.ply");
    const TriangleMesh loaded = load_mesh(dir / "torus.ply", MeshFormat::Ply);
    REQUIRE(loaded.vertex_count() == torus.vertex_count());
    REQUIRE(loaded.faces == torus.faces);
    bool exact = true;
    for (std::size_t i = 0; i < torus.vertices.size(); ++i)
        exact = exact && std::memcmp(loaded.vertices[i].data(), torus.vertices[i].data(), 3 * sizeof(double)) == 0;
    CHECK(exact);

    save_mesh(torus, dir / "torus.obj");
    const TriangleMesh obj = load_mesh(dir / "torus.obj");
    bool obj_exact = obj.faces == torus.faces;
    for (std::size_t i = 0; i < torus.vertices.size(); ++i)
        obj_exact = obj_exact && obj.vertices[i] == torus.vertices[i];
    CHECK(obj_exact);
}

TEST_CASE("validate_mesh on the reference fixtures")
{
    const MeshReport tet = validate_mesh(testing::tetrahedron());
    CHECK(tet.boundary_edge_count == 0);
    CHECK(tet.component_count == 1);
    CHECK(tet.non_manifold_edge_count == 0);
    CHECK(tet.euler_characteristic() == 2);

    TriangleMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.faces = {{0, 1, 2}};
    const MeshReport single = validate_mesh(tri);
    CHECK(single.boundary_edge_count == 3);
    CHECK(single.component_count == 1);
    CHECK(single.min_face_area == Approx(0.5));

    TriangleMesh two = merge(testing::tetrahedron(), transformed(testing::tetrahedron(), Eigen::Matrix3d::Identity(), {5, 0, 0}));
    CHECK(validate_mesh(two).component_count == oracle::face_components(two));
    CHECK(validate_mesh(two).component_count == 2);
}

TEST_CASE("validate_mesh lists degenerate faces and non-manifold edges without mutating")
{
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}, {0, 0, 1}, {0, 0, -1}};
    mesh.faces = {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}, {0, 1, 5}};
    const TriangleMesh copy = mesh;
    const MeshReport report = validate_mesh(mesh);
    CHECK(report.degenerate_faces == std::vector<std::size_t>{1});
    CHECK(report.non_manifold_edge_count == 1);
    CHECK(mesh.faces == copy.faces);
}

TEST_CASE("generated fixtures have the expected topology")
{
    const TriangleMesh torus = make_torus(0.1, 0.04, 64, 32);
    const MeshReport t = validate_mesh(torus);
    CHECK(t.vertex_count == 2048);
    CHECK(t.boundary_edge_count == 0);
    CHECK(t.non_manifold_edge_count == 0);
    CHECK(t.euler_characteristic() == 0);

    for (const TriangleMesh& closed : {make_box(0.1, 0.2, 0.3, 3), make_cylinder(0.03, 0.1, 24, 4), make_uv_sphere(0.05, 24, 12), make_blob()}) {
        const MeshReport r = validate_mesh(closed);
        CHECK(r.boundary_edge_count == 0);
        CHECK(r.non_manifold_edge_count == 0);
        CHECK(r.degenerate_faces.empty());
        CHECK(r.component_count == 1);
        CHECK(r.euler_characteristic() == 2);
    }
    CHECK(testing::error_code_of([] { make_torus(0.1, 0.04, 2, 32); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("generated meshes are outward oriented")
{
    for (const TriangleMesh& mesh : {make_box(0.1, 0.2, 0.3, 2), make_cylinder(0.03, 0.1, 24, 4), make_uv_sphere(0.05, 24, 12), make_blob(3)}) {
        // Signed volume via the divergence theorem is positive for outward faces.
        double volume = 0.0;
        for (const auto& f : mesh.faces)
            volume += mesh.vertices[f[0]].dot(mesh.vertices[f[1]].cross(mesh.vertices[f[2]])) / 6.0;
        CHECK(volume > 0.0);
    }
}
