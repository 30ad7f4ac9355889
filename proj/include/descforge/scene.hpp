#pragma once

#include "descforge/camera.hpp"
#include "descforge/embedding.hpp"
#include "descforge/error.hpp"
#include "descforge/formats.hpp"
#include "descforge/mesh.hpp"
#include "descforge/parallel.hpp"
#include "descforge/raster.hpp"
#include "descforge/view_dependent.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace descforge {

/// Cameras sampled on a view sphere around `center` (defaults to the object
/// centroid in world coordinates). Angles in degrees; elevation is measured
/// from the xy-plane toward +z.
struct TrajectorySpec {
    std::optional<Eigen::Vector3d> center;
    double radius_min = 0.4;
    double radius_max = 0.4;
    double elevation_min_deg = 20.0;
    double elevation_max_deg = 70.0;
    double azimuth_min_deg = 0.0;
    double azimuth_max_deg = 360.0;
};

enum class ViewDependentMode { None, EdgeBlend, MaskRamp };

inline std::string to_string(ViewDependentMode mode)
{
    switch (mode) {
    case ViewDependentMode::None: return "none";
    case ViewDependentMode::EdgeBlend: return "edge_blend";
    case ViewDependentMode::MaskRamp: return "mask_ramp";
    }
    return "none";
}

inline ViewDependentMode view_dependent_from_string(const std::string& name)
{
    if (name == "none")
        return ViewDependentMode::None;
    if (name == "edge_blend")
        return ViewDependentMode::EdgeBlend;
    if (name == "mask_ramp")
        return ViewDependentMode::MaskRamp;
    fail(ErrorCode::InvalidArgument, "unknown view-dependent mode '" + name + "'");
}

struct ViewDependentOption {
    ViewDependentMode mode = ViewDependentMode::None;
    int band_px = 3;
};

struct SceneOptions {
    TrajectorySpec trajectory;
    int frame_count = 1;
    std::uint64_t seed = 0;
    ViewDependentOption view_dependent;
    bool randomize_background = false;
    std::array<std::uint8_t, 3> background_rgb{40, 40, 48};
    RasterOptions raster;
};

struct SceneFrame {
    PngImage rgb;
    DescriptorImage target;
};

struct SceneDataset {
    CameraIntrinsics intrinsics;
    RigidTransform object_pose;
    std::string mesh_path;
    std::string field_path;
    ViewDependentOption view_dependent;
    std::vector<SceneFrame> frames;
};

/// Camera pose on the view sphere, optical axis through `center`.
inline RigidTransform orbit_camera(const Eigen::Vector3d& center, double radius, double elevation_deg, double azimuth_deg)
{
    const double el = elevation_deg * std::numbers::pi / 180.0;
    const double az = azimuth_deg * std::numbers::pi / 180.0;
    const Eigen::Vector3d offset(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    return look_at(center + radius * offset, center);
}

inline std::vector<RigidTransform> sample_trajectory(const TrajectorySpec& spec, const Eigen::Vector3d& center, int count, std::uint64_t seed)
{
    if (!(spec.radius_min > 0.0) || spec.radius_max < spec.radius_min)
        fail(ErrorCode::DegenerateTrajectory, "view-sphere radius must be positive with min <= max");
    if (spec.elevation_max_deg < spec.elevation_min_deg || spec.azimuth_max_deg < spec.azimuth_min_deg)
        fail(ErrorCode::DegenerateTrajectory, "angle ranges must satisfy min <= max");
    if (count < 1)
        fail(ErrorCode::InvalidArgument, "frame count must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<RigidTransform> poses;
    poses.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double r = uniform(rng, spec.radius_min, spec.radius_max);
        const double el = uniform(rng, spec.elevation_min_deg, spec.elevation_max_deg);
        const double az = uniform(rng, spec.azimuth_min_deg, spec.azimuth_max_deg);
        poses.push_back(orbit_camera(center, r, el, az));
    }
    return poses;
}

/// Flat-shaded Lambertian render from the triangle ids of a rendered frame.
/// The light sits at the camera, so shading uses |n . view| and is two-sided.
inline PngImage shade_rgb(const TriangleMesh& mesh, const DescriptorImage& frame, const RigidTransform& object_in_cam,
                          const std::array<std::uint8_t, 3>& background_rgb)
{
    static constexpr std::array<double, 3> kAlbedo{0.80, 0.72, 0.62};
    static constexpr double kAmbient = 0.15;
    PngImage png{frame.width, frame.height, 3, 8, std::vector<std::uint8_t>(frame.pixel_count() * 3), {}};
    std::vector<Eigen::Vector3d> normals(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        normals[f] = object_in_cam.rotation * mesh.face_normal(f);
    for (int v = 0; v < frame.height; ++v)
        for (int u = 0; u < frame.width; ++u) {
            const std::size_t p = frame.index(u, v);
            std::uint8_t* rgb = png.data8.data() + 3 * p;
            const std::int32_t tri = frame.triangle_ids.empty() ? -1 : frame.triangle_ids[p];
            if (tri < 0) {
                std::copy(background_rgb.begin(), background_rgb.end(), rgb);
                continue;
            }
            const Eigen::Vector3d ray = frame.intrinsics.unproject(u, v, 1.0).normalized();
            const double lambert = std::abs(normals[static_cast<std::size_t>(tri)].dot(ray));
            const double shade = kAmbient + (1.0 - kAmbient) * lambert;
            for (int c = 0; c < 3; ++c)
                rgb[c] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(kAlbedo[static_cast<std::size_t>(c)] * shade, 0.0, 1.0)));
        }
    return png;
}

inline DescriptorImage apply_view_dependent(const DescriptorImage& frame, const ViewDependentOption& option)
{
    switch (option.mode) {
    case ViewDependentMode::None: return frame;
    case ViewDependentMode::EdgeBlend: return blend_edges(frame, option.band_px);
    case ViewDependentMode::MaskRamp: return with_mask_ramp(frame);
    }
    return frame;
}

/// Renders K frames from cameras sampled on the trajectory's view sphere.
inline SceneDataset generate_scene(const TriangleMesh& mesh, const DescriptorField& field, const CameraIntrinsics& intrinsics,
                                   const RigidTransform& object_pose, const SceneOptions& options)
{
    object_pose.validate();
    const Eigen::Vector3d center = options.trajectory.center.value_or(object_pose * mesh.centroid());
    const std::vector<RigidTransform> cameras = sample_trajectory(options.trajectory, center, options.frame_count, options.seed);

    // Background colors draw from a stream separate from the camera poses.
    std::mt19937_64 color_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    SceneDataset dataset;
    dataset.intrinsics = intrinsics;
    dataset.object_pose = object_pose;
    dataset.view_dependent = options.view_dependent;
    dataset.frames.reserve(cameras.size());
    for (const auto& camera : cameras) {
        DescriptorImage target = render_frame(mesh, field, intrinsics, camera, object_pose, options.raster);
        std::array<std::uint8_t, 3> bg = options.background_rgb;
        if (options.randomize_background)
            for (auto& c : bg)
                c = static_cast<std::uint8_t>(uniform_index(color_rng, 256));
        PngImage rgb = shade_rgb(mesh, target, object_in_camera(camera, object_pose), bg);
        if (options.view_dependent.mode == ViewDependentMode::MaskRamp && target.mask.end() == std::find(target.mask.begin(), target.mask.end(), 1))
            fail(ErrorCode::EmptyMask, "a sampled view does not see the object; mask ramp is undefined");
        target = apply_view_dependent(target, options.view_dependent);
        dataset.frames.push_back({std::move(rgb), std::move(target)});
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Dataset directory I/O
// ---------------------------------------------------------------------------

namespace detail {

inline std::string frame_file(const char* stem, std::size_t index, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%05zu.%s", stem, index, ext);
    return buf;
}

inline nlohmann::json matrix_json(const Eigen::Matrix4d& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 4; ++r)
        rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    return rows;
}

inline Eigen::Matrix4d matrix_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 4)
        fail(ErrorCode::ParseError, "expected a 4x4 row-major matrix");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        if (!j[static_cast<std::size_t>(r)].is_array() || j[static_cast<std::size_t>(r)].size() != 4)
            fail(ErrorCode::ParseError, "expected a 4x4 row-major matrix");
        for (int c = 0; c < 4; ++c)
            m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out)
        fail(ErrorCode::IoError, "write failed for " + path.string());
}

} // namespace detail

inline nlohmann::json intrinsics_json(const CameraIntrinsics& k)
{
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const nlohmann::json& j)
{
    CameraIntrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    k.validate();
    return k;
}

/// Writes scene.json plus rgb/depth/mask/desc/preview files per frame.
inline void write_dataset(const SceneDataset& dataset, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    nlohmann::json scene;
    scene["version"] = 1;
    scene["intrinsics"] = intrinsics_json(dataset.intrinsics);
    scene["object_pose"] = detail::matrix_json(dataset.object_pose.matrix());
    scene["mesh"] = dataset.mesh_path;
    scene["descriptor_field"] = dataset.field_path;
    scene["view_dependent"] = {{"mode", to_string(dataset.view_dependent.mode)}, {"band_px", dataset.view_dependent.band_px}};
    scene["depth_unit_m"] = kDepthUnit;
    if (!dataset.frames.empty()) {
        scene["descriptor_dim"] = dataset.frames.front().target.channels;
        scene["background_descriptor"] = dataset.frames.front().target.background;
    }
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
        const auto& frame = dataset.frames[i];
        nlohmann::json entry;
        entry["id"] = i;
        entry["camera_to_world"] = detail::matrix_json(frame.target.camera.matrix());
        entry["rgb"] = detail::frame_file("rgb", i, "png");
        entry["depth"] = detail::frame_file("depth", i, "png");
        entry["mask"] = detail::frame_file("mask", i, "png");
        entry["descriptors"] = detail::frame_file("desc", i, "dimg");
        entry["preview"] = detail::frame_file("preview", i, "png");
        write_png(frame.rgb, dir / entry["rgb"].get<std::string>());
        write_png(depth_png(frame.target), dir / entry["depth"].get<std::string>());
        write_png(mask_png(frame.target), dir / entry["mask"].get<std::string>());
        write_descriptor_image(frame.target, dir / entry["descriptors"].get<std::string>());
        write_png(descriptor_preview_png(frame.target), dir / entry["preview"].get<std::string>());
        frames.push_back(std::move(entry));
    }
    scene["frames"] = std::move(frames);
    detail::write_text(dir / "scene.json", scene.dump(2) + "\n");
}

/// Loads a dataset directory. Triangle ids are not stored, so loaded frames
/// have none; RGB images are loaded only when `load_rgb` is set.
inline SceneDataset read_dataset(const std::filesystem::path& dir, bool load_rgb = false)
{
    std::ifstream in(dir / "scene.json");
    if (!in)
        fail(ErrorCode::IoError, "cannot open " + (dir / "scene.json").string());
    nlohmann::json scene;
    try {
        scene = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("scene.json: ") + e.what());
    }
    SceneDataset dataset;
    try {
        dataset.intrinsics = intrinsics_from_json(scene.at("intrinsics"));
        dataset.object_pose = RigidTransform::from_matrix(detail::matrix_from_json(scene.at("object_pose")));
        dataset.mesh_path = scene.value("mesh", "");
        dataset.field_path = scene.value("descriptor_field", "");
        if (scene.contains("view_dependent")) {
            dataset.view_dependent.mode = view_dependent_from_string(scene["view_dependent"].value("mode", "none"));
            dataset.view_dependent.band_px = scene["view_dependent"].value("band_px", 3);
        }
        const std::vector<float> background = scene.value("background_descriptor", std::vector<float>{});
        for (const auto& entry : scene.at("frames")) {
            SceneFrame frame;
            DescriptorImage target = read_descriptor_image(dir / entry.at("descriptors").get<std::string>());
            if (target.width != dataset.intrinsics.width || target.height != dataset.intrinsics.height)
                fail(ErrorCode::ShapeMismatch, "descriptor image size differs from the intrinsics");
            const PngImage depth = read_png(dir / entry.at("depth").get<std::string>());
            const PngImage mask = read_png(dir / entry.at("mask").get<std::string>());
            if (depth.bit_depth != 16 || depth.channels != 1 || depth.width != target.width || depth.height != target.height)
                fail(ErrorCode::ParseError, "depth PNG must be 16-bit gray at the frame size");
            if (mask.bit_depth != 8 || mask.channels != 1 || mask.width != target.width || mask.height != target.height)
                fail(ErrorCode::ParseError, "mask PNG must be 8-bit gray at the frame size");
            target.depth = depth.data16;
            for (std::size_t p = 0; p < target.pixel_count(); ++p)
                target.mask[p] = mask.data8[p] ? 1 : 0;
            target.background = background;
            target.intrinsics = dataset.intrinsics;
            target.camera = RigidTransform::from_matrix(detail::matrix_from_json(entry.at("camera_to_world")));
            target.object_pose = dataset.object_pose;
            frame.target = std::move(target);
            if (load_rgb)
                frame.rgb = read_png(dir / entry.at("rgb").get<std::string>());
            dataset.frames.push_back(std::move(frame));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("scene.json: ") + e.what());
    }
    return dataset;
}

} // namespace descforge
