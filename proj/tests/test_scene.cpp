#include "oracles.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <numbers>

using namespace descforge;
using Catch::Approx;

namespace {

struct Fixture {
    TriangleMesh mesh = make_blob(3);
    DescriptorField field;
    CameraIntrinsics intrinsics{150, 150, 80, 60, 160, 120};

    Fixture()
    {
        field = normalize_descriptors(embed(build_laplacian(mesh), 3));
        background_descriptor(field);
    }
};

const Fixture& fixture()
{
    static const Fixture f;
    return f;
}

} // namespace

TEST_CASE("trajectory cameras sit on the view sphere and look at the center")
{
    TrajectorySpec spec;
    spec.radius_min = 0.3;
    spec.radius_max = 0.5;
    const Eigen::Vector3d center(0.1, -0.2, 0.05);
    const auto poses = sample_trajectory(spec, center, 50, 11);
    REQUIRE(poses.size() == 50);
    for (const auto& pose : poses) {
        CHECK(pose.is_valid());
        const Eigen::Vector3d offset = pose.translation - center;
        CHECK(offset.norm() >= 0.3 - 1e-12);
        CHECK(offset.norm() <= 0.5 + 1e-12);
        const double elevation = std::asin(offset.z() / offset.norm()) * 180.0 / std::numbers::pi;
        CHECK(elevation >= 20.0 - 1e-9);
        CHECK(elevation <= 70.0 + 1e-9);
        CHECK((pose.rotation.col(2) + offset.normalized()).norm() < 1e-12);
    }
}

TEST_CASE("trajectory sampling is seeded and validated")
{
    TrajectorySpec spec;
    const auto a = sample_trajectory(spec, Eigen::Vector3d::Zero(), 5, 3);
    const auto b = sample_trajectory(spec, Eigen::Vector3d::Zero(), 5, 3);
    const auto c = sample_trajectory(spec, Eigen::Vector3d::Zero(), 5, 4);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].matrix() == b[i].matrix());
    CHECK(a[0].matrix() != c[0].matrix());

    TrajectorySpec flat = spec;
    flat.radius_min = flat.radius_max = 0.0;
    CHECK(testing::error_code_of([&] { sample_trajectory(flat, Eigen::Vector3d::Zero(), 1, 0); }) == ErrorCode::DegenerateTrajectory);
    TrajectorySpec inverted = spec;
    inverted.elevation_min_deg = 80;
    CHECK(testing::error_code_of([&] { sample_trajectory(inverted, Eigen::Vector3d::Zero(), 1, 0); }) == ErrorCode::DegenerateTrajectory);
    CHECK(testing::error_code_of([&] { sample_trajectory(spec, Eigen::Vector3d::Zero(), 0, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("single overhead camera centers the object")
{
    const Fixture& f = fixture();
    SceneOptions options;
    options.trajectory.radius_min = options.trajectory.radius_max = 0.5;
    options.trajectory.elevation_min_deg = options.trajectory.elevation_max_deg = 90.0;
    const SceneDataset scene = generate_scene(f.mesh, f.field, f.intrinsics, RigidTransform::identity(), options);
    REQUIRE(scene.frames.size() == 1);
    const DescriptorImage& img = scene.frames[0].target;
    CHECK((img.camera.translation - (f.mesh.centroid() + Eigen::Vector3d(0, 0, 0.5))).norm() < 1e-12);
    double su = 0, sv = 0, n = 0;
    for (int v = 0; v < img.height; ++v)
        for (int u = 0; u < img.width; ++u)
            if (img.mask[img.index(u, v)]) {
                su += u + 0.5;
                sv += v + 0.5;
                n += 1;
            }
    REQUIRE(n > 0);
    CHECK(std::abs(su / n - f.intrinsics.cx) < 3.0);
    CHECK(std::abs(sv / n - f.intrinsics.cy) < 3.0);
}

TEST_CASE("orbit depth reprojects onto the mesh surface")
{
    const Fixture& f = fixture();
    SceneOptions options;
    options.frame_count = 20;
    options.seed = 5;
    options.trajectory.radius_min = options.trajectory.radius_max = 0.3;
    const RigidTransform pose{axis_angle({0, 0, 1}, 0.4), {0.02, 0.01, 0.0}};
    const SceneDataset scene = generate_scene(f.mesh, f.field, f.intrinsics, pose, options);
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& frame : scene.frames) {
        std::size_t index = 0;
        for (int v = 0; v < frame.target.height; ++v)
            for (int u = 0; u < frame.target.width; ++u)
                if (frame.target.mask[frame.target.index(u, v)] && index++ % 23 == 0) {
                    worst = std::max(worst, oracle::point_to_mesh(frame.target.world_point(u, v), f.mesh, pose));
                    ++checked;
                }
    }
    CHECK(checked > 500);
    CHECK(worst < 1e-3);
}

TEST_CASE("RGB renders shade the object and fill the background")
{
    const Fixture& f = fixture();
    SceneOptions options;
    options.frame_count = 3;
    const SceneDataset plain = generate_scene(f.mesh, f.field, f.intrinsics, {}, options);
    for (const auto& frame : plain.frames) {
        REQUIRE(frame.rgb.channels == 3);
        for (std::size_t p = 0; p < frame.target.pixel_count(); ++p) {
            const std::uint8_t* rgb = frame.rgb.data8.data() + 3 * p;
            if (!frame.target.mask[p]) {
                REQUIRE(rgb[0] == 40);
                REQUIRE(rgb[2] == 48);
            } else {
                REQUIRE(rgb[0] >= rgb[1]); // warm albedo
            }
        }
    }

    options.randomize_background = true;
    const SceneDataset random = generate_scene(f.mesh, f.field, f.intrinsics, {}, options);
    CHECK(random.frames[0].rgb.data8 != plain.frames[0].rgb.data8);
    CHECK(random.frames[0].target.descriptors == plain.frames[0].target.descriptors);
}

TEST_CASE("view-dependent scene options")
{
    const Fixture& f = fixture();
    SceneOptions options;
    options.frame_count = 2;
    const SceneDataset plain = generate_scene(f.mesh, f.field, f.intrinsics, {}, options);

    options.view_dependent = {ViewDependentMode::EdgeBlend, 2};
    const SceneDataset blended = generate_scene(f.mesh, f.field, f.intrinsics, {}, options);
    CHECK(blended.frames[0].target.descriptors != plain.frames[0].target.descriptors);
    CHECK(blended.frames[0].target.mask == plain.frames[0].target.mask);

    options.view_dependent = {ViewDependentMode::MaskRamp, 0};
    const SceneDataset ramp = generate_scene(f.mesh, f.field, f.intrinsics, {}, options);
    CHECK(ramp.frames[0].target.channels == 4);

    options.trajectory.center = Eigen::Vector3d(5, 5, 5);
    CHECK(testing::error_code_of([&] { generate_scene(f.mesh, f.field, f.intrinsics, {}, options); }) == ErrorCode::EmptyMask);

    CHECK(view_dependent_from_string(to_string(ViewDependentMode::EdgeBlend)) == ViewDependentMode::EdgeBlend);
    CHECK(testing::error_code_of([] { view_dependent_from_string("blur"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("dataset directory round trip")
{
    const Fixture& f = fixture();
    const auto dir = testing::scratch_dir("scene_io");
    SceneOptions options;
    options.frame_count = 3;
    options.seed = 8;
    SceneDataset scene = generate_scene(f.mesh, f.field, f.intrinsics, {axis_angle({1, 0, 0}, 0.2), {0, 0, 0.01}}, options);
    scene.mesh_path = "mesh.ply";
    scene.field_path = "field.dfld";
    write_dataset(scene, dir / "a");

    for (const char* name : {"scene.json", "rgb_00000.png", "depth_00002.png", "mask_00001.png", "desc_00002.dimg", "preview_00000.png"})
        CHECK(std::filesystem::exists(dir / "a" / name));
    const auto json = nlohmann::json::parse(testing::read_file(dir / "a" / "scene.json"));
    CHECK(json["frames"].size() == 3);
    CHECK(json["descriptor_dim"] == 3);
    CHECK(json["depth_unit_m"] == kDepthUnit);
    CHECK(json["frames"][1]["camera_to_world"].size() == 4);

    const SceneDataset loaded = read_dataset(dir / "a", true);
    CHECK(loaded.intrinsics == scene.intrinsics);
    CHECK(loaded.mesh_path == "mesh.ply");
    CHECK((loaded.object_pose.matrix() - scene.object_pose.matrix()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(loaded.frames.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const DescriptorImage& a = scene.frames[i].target;
        const DescriptorImage& b = loaded.frames[i].target;
        CHECK(a.descriptors == b.descriptors);
        CHECK(a.depth == b.depth);
        CHECK(a.mask == b.mask);
        CHECK(a.background == b.background);
        CHECK(a.camera.matrix() == b.camera.matrix());
        CHECK(loaded.frames[i].rgb.data8 == scene.frames[i].rgb.data8);
    }

    write_dataset(scene, dir / "b");
    for (const auto& entry : std::filesystem::directory_iterator(dir / "a"))
        CHECK(testing::read_file(entry.path()) == testing::read_file(dir / "b" / entry.path().filename()));
}

TEST_CASE("malformed scene.json raises ParseError")
{
    const auto dir = testing::scratch_dir("scene_bad");
    testing::write_file(dir / "scene.json", "{\"intrinsics\": 3}");
    CHECK(testing::error_code_of([&] { read_dataset(dir); }) == ErrorCode::ParseError);
    testing::write_file(dir / "scene.json", "{not json");
    CHECK(testing::error_code_of([&] { read_dataset(dir); }) == ErrorCode::ParseError);
    CHECK(testing::error_code_of([&] { read_dataset(dir / "nowhere"); }) == ErrorCode::IoError);
}
