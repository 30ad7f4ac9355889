// descforge command-line tool: embed, render, correspondences, eval, grasp, gen-mesh.

#include "descforge/descforge.hpp"

#include <CLI11.hpp>
#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace descforge;

namespace {

// ---------------------------------------------------------------------------
// TOML config: tables map to subcommands, keys to long flag names.
// ---------------------------------------------------------------------------

class TomlConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        toml::table root;
        try {
            root = toml::parse(input);
        } catch (const toml::parse_error& e) {
            std::ostringstream msg;
            msg << e.description() << " at line " << e.source().begin.line;
            throw CLI::FileError(msg.str());
        }
        std::vector<CLI::ConfigItem> items;
        collect(root, {}, items);
        return items;
    }

private:
    static std::string flag_name(std::string_view key)
    {
        std::string name(key);
        std::replace(name.begin(), name.end(), '_', '-');
        return name;
    }

    static void flatten(const toml::node& node, std::vector<std::string>& out)
    {
        if (const auto* arr = node.as_array()) {
            for (const auto& element : *arr)
                flatten(element, out);
        } else if (const auto* s = node.as_string()) {
            out.push_back(s->get());
        } else if (const auto* b = node.as_boolean()) {
            out.push_back(b->get() ? "true" : "false");
        } else if (const auto* i = node.as_integer()) {
            out.push_back(std::to_string(i->get()));
        } else if (const auto* f = node.as_floating_point()) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", f->get());
            out.push_back(buf);
        } else {
            throw CLI::ConversionError("unsupported TOML value type");
        }
    }

    static void collect(const toml::table& table, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items)
    {
        for (const auto& [key, node] : table) {
            if (const auto* sub = node.as_table()) {
                auto next = parents;
                next.emplace_back(key.str());
                collect(*sub, next, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = flag_name(key.str());
            flatten(node, item.inputs);
            items.push_back(std::move(item));
        }
    }
};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

void write_json(const nlohmann::json& j, const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void ensure_parent(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
}

template <typename Enum>
Enum parse_choice(const std::string& value, std::initializer_list<std::pair<const char*, Enum>> choices)
{
    for (const auto& [name, e] : choices)
        if (value == name)
            return e;
    fail(ErrorCode::InvalidArgument, "unknown choice '" + value + "'");
}

struct IntrinsicsArgs {
    CameraIntrinsics k;

    void add(CLI::App* cmd)
    {
        cmd->add_option("--fx", k.fx, "Focal length x (px)")->capture_default_str();
        cmd->add_option("--fy", k.fy, "Focal length y (px)")->capture_default_str();
        cmd->add_option("--cx", k.cx, "Principal point x (px)")->capture_default_str();
        cmd->add_option("--cy", k.cy, "Principal point y (px)")->capture_default_str();
        cmd->add_option("--width", k.width, "Image width (px)")->capture_default_str();
        cmd->add_option("--height", k.height, "Image height (px)")->capture_default_str();
    }
};

/// Replaces the descriptor channels of dataset frames by prediction files
/// desc_XXXXX.dimg found in `dir`; mask, depth and extrinsics stay.
void substitute_predictions(SceneDataset& dataset, const fs::path& dir)
{
    for (std::size_t i = 0; i < dataset.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "desc_%05zu.dimg", i);
        DescriptorImage pred = read_descriptor_image(dir / name);
        DescriptorImage& target = dataset.frames[i].target;
        if (pred.width != target.width || pred.height != target.height)
            fail(ErrorCode::ShapeMismatch, std::string(name) + " differs in size from the dataset frame");
        target.channels = pred.channels;
        target.descriptors = std::move(pred.descriptors);
        target.background.assign(static_cast<std::size_t>(pred.channels), 0.0f);
    }
}

const DescriptorImage& frame_at(const SceneDataset& dataset, int index, const char* what)
{
    if (index < 0 || static_cast<std::size_t>(index) >= dataset.frames.size())
        fail(ErrorCode::InvalidArgument, std::string(what) + " " + std::to_string(index) + " is outside the dataset (" +
                                             std::to_string(dataset.frames.size()) + " frames)");
    return dataset.frames[static_cast<std::size_t>(index)].target;
}

std::vector<Eigen::Vector2i> to_pixels(const std::vector<std::pair<int, int>>& pairs)
{
    std::vector<Eigen::Vector2i> out;
    for (const auto& [u, v] : pairs)
        out.emplace_back(u, v);
    return out;
}

nlohmann::json vec_json(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json matrix_json(const Eigen::Matrix3d& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
        rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

// ---------------------------------------------------------------------------
// gen-mesh
// ---------------------------------------------------------------------------

struct GenMeshArgs {
    std::string shape = "torus";
    double radius = 0.1;
    double minor_radius = 0.04;
    double height = 0.1;
    std::vector<double> size{0.1, 0.06, 0.04};
    int segments = 64;
    int rings = 32;
    int subdivisions = 3;
    std::uint64_t seed = 7;
    fs::path out;
};

int cmd_gen_mesh(const GenMeshArgs& a)
{
    TriangleMesh mesh;
    if (a.shape == "torus")
        mesh = make_torus(a.radius, a.minor_radius, a.segments, a.rings);
    else if (a.shape == "cylinder")
        mesh = make_cylinder(a.radius, a.height, a.segments, a.rings);
    else if (a.shape == "box")
        mesh = make_box(a.size.at(0), a.size.at(1), a.size.at(2), a.subdivisions);
    else if (a.shape == "uv_sphere")
        mesh = make_uv_sphere(a.radius, a.segments, a.rings);
    else if (a.shape == "icosphere")
        mesh = make_icosphere(a.subdivisions);
    else
        mesh = make_blob(a.subdivisions, a.seed);
    save_mesh(mesh, a.out);

    const MeshReport r = validate_mesh(mesh);
    nlohmann::json j{{"shape", a.shape},
                     {"path", a.out.string()},
                     {"vertices", r.vertex_count},
                     {"faces", r.face_count},
                     {"edges", r.edge_count},
                     {"euler_characteristic", r.euler_characteristic()},
                     {"closed", r.boundary_edge_count == 0},
                     {"manifold", r.non_manifold_edge_count == 0},
                     {"components", r.component_count}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

struct EmbedArgs {
    fs::path mesh;
    int dim = 3;
    std::string symmetry = "off";
    double epsilon = 1e-3;
    bool exact_dimension = false;
    std::string weighting = "cotangent";
    std::string mass = "degree";
    std::string solver = "auto";
    fs::path out;
    fs::path report;
    fs::path preview;
    int preview_size = 480;
};

/// Three-quarter view of the whole mesh for the embedding preview.
DescriptorImage preview_render(const TriangleMesh& mesh, const DescriptorField& field, int size)
{
    const Eigen::Vector3d center = mesh.centroid();
    double radius = 0.0;
    for (const auto& v : mesh.vertices)
        radius = std::max(radius, (v - center).norm());
    const double distance = 3.0 * radius;
    const CameraIntrinsics k{size * 1.2, size * 1.2, size / 2.0, size / 2.0, size, size};
    const RigidTransform camera = look_at(center + distance * Eigen::Vector3d(1.0, -1.0, 0.8).normalized(), center);
    return render_frame(mesh, field, k, camera, {});
}

int cmd_embed(const EmbedArgs& a)
{
    if (a.dim < 1)
        fail(ErrorCode::InvalidArgument, "--dim must be >= 1");
    const TriangleMesh mesh = load_mesh(a.mesh);
    const Weighting weighting = parse_choice(a.weighting, {std::pair{"cotangent", Weighting::Cotangent}, {"uniform", Weighting::Uniform}});
    const MassMode mass = parse_choice(a.mass, {std::pair{"degree", MassMode::Degree}, {"barycentric", MassMode::Barycentric}});
    SymmetryOptions symmetry;
    symmetry.mode = parse_choice(a.symmetry, {std::pair{"off", SymmetryMode::Off}, {"gisif", SymmetryMode::Gisif}});
    symmetry.epsilon = a.epsilon;
    symmetry.exact_dimension = a.exact_dimension;
    EigenSolverOptions solver;
    solver.path = parse_choice(a.solver, {std::pair{"auto", SolverPath::Auto}, {"dense", SolverPath::Dense}, {"lanczos", SolverPath::Lanczos}});

    Spectrum spectrum;
    const LaplacianPair pair = build_laplacian(mesh, weighting, mass);
    const DescriptorField raw = embed(pair, a.dim, symmetry, solver, &spectrum);
    DescriptorField field = normalize_descriptors(raw);
    const Eigen::VectorXd background = background_descriptor(field);
    write_descriptor_field(field, a.out);

    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < field.dimension(); ++r) {
        const IndexRange range = field.spectral_ranges[static_cast<std::size_t>(r)];
        rows.push_back({{"source", to_string(field.sources[static_cast<std::size_t>(r)])}, {"spectral_range", {range.first, range.last}}});
    }
    nlohmann::json groups = nlohmann::json::array();
    for (const IndexRange& g : detect_symmetry_groups(spectrum, a.epsilon).ranges)
        groups.push_back({g.first, g.last});
    nlohmann::json report{{"mesh", a.mesh.string()},
                          {"vertices", mesh.vertex_count()},
                          {"weighting", a.weighting},
                          {"mass", a.mass},
                          {"symmetry", a.symmetry},
                          {"epsilon", a.epsilon},
                          {"requested_dimension", a.dim},
                          {"dimension", field.dimension()},
                          {"eigenvalues", vec_json(spectrum.eigenvalues)},
                          {"groups", groups},
                          {"rows", rows},
                          {"background", vec_json(background)}};
    const fs::path report_path = a.report.empty() ? fs::path(a.out).replace_extension(".json") : a.report;
    write_json(report, report_path);
    if (!a.preview.empty()) {
        ensure_parent(a.preview);
        write_png(descriptor_preview_png(preview_render(mesh, field, a.preview_size)), a.preview);
    }
    std::cout << report.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

struct RenderArgs {
    fs::path mesh;
    fs::path field;
    fs::path out;
    IntrinsicsArgs intrinsics;
    int frames = 20;
    double radius_min = 0.4;
    double radius_max = 0.4;
    double elevation_min = 20.0;
    double elevation_max = 70.0;
    double azimuth_min = 0.0;
    double azimuth_max = 360.0;
    std::vector<double> center;
    std::string view_dependent = "none";
    int band = 3;
    bool randomize_background = false;
    std::uint64_t seed = 0;
};

int cmd_render(const RenderArgs& a)
{
    const TriangleMesh mesh = load_mesh(a.mesh);
    const DescriptorField field = read_descriptor_field(a.field);
    SceneOptions options;
    options.frame_count = a.frames;
    options.seed = a.seed;
    options.trajectory.radius_min = a.radius_min;
    options.trajectory.radius_max = a.radius_max;
    options.trajectory.elevation_min_deg = a.elevation_min;
    options.trajectory.elevation_max_deg = a.elevation_max;
    options.trajectory.azimuth_min_deg = a.azimuth_min;
    options.trajectory.azimuth_max_deg = a.azimuth_max;
    if (!a.center.empty())
        options.trajectory.center = Eigen::Vector3d(a.center.at(0), a.center.at(1), a.center.at(2));
    options.view_dependent = {view_dependent_from_string(a.view_dependent), a.band};
    options.randomize_background = a.randomize_background;

    SceneDataset dataset = generate_scene(mesh, field, a.intrinsics.k, RigidTransform::identity(), options);
    dataset.mesh_path = a.mesh.string();
    dataset.field_path = a.field.string();
    write_dataset(dataset, a.out);
    std::cout << nlohmann::json{{"dataset", a.out.string()}, {"frames", dataset.frames.size()}}.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// correspondences
// ---------------------------------------------------------------------------

struct CorrespondenceArgs {
    fs::path dataset;
    fs::path predictions;
    fs::path out;
    int frame_a = 0;
    int frame_b = 1;
    CorrespondenceOptions options;
    double margin_object = kObjectMargin;
    double margin_background = kBackgroundMargin;
    std::uint64_t seed = 0;
};

int cmd_correspondences(CorrespondenceArgs a)
{
    SceneDataset dataset = read_dataset(a.dataset);
    if (!a.predictions.empty())
        substitute_predictions(dataset, a.predictions);
    a.options.seed = a.seed;
    a.options.frame_a = a.frame_a;
    a.options.frame_b = a.frame_b;
    const DescriptorImage& fa = frame_at(dataset, a.frame_a, "--frame-a");
    const DescriptorImage& fb = frame_at(dataset, a.frame_b, "--frame-b");
    const CorrespondenceSet set = find_correspondences(fa, fb, a.options);
    ensure_parent(a.out);
    write_correspondences_jsonl(set, a.out);
    const ContrastiveLoss loss = contrastive_loss(fa, fb, set, a.margin_object, a.margin_background);
    nlohmann::json j{{"correspondences", a.out.string()},
                     {"matches", set.matches.size()},
                     {"nonmatches_object", set.non_matches_object.size()},
                     {"nonmatches_background", set.non_matches_background.size()},
                     {"attempts", set.attempts},
                     {"loss", {{"match", loss.match_loss}, {"nonmatch", loss.nonmatch_loss}, {"total", loss.total}}}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    fs::path dataset;
    fs::path predictions;
    fs::path out;
    int ref_frame = 0;
    std::vector<std::pair<int, int>> pixels;
    int num_refs = 10;
    std::string visibility = "auto";
    double threshold = 0.2;
    double depth_tolerance = 1e-3;
    int bins = 24;
    std::uint64_t seed = 0;
};

/// `count` distinct masked pixels with valid depth, drawn with the given seed.
std::vector<Eigen::Vector2i> sample_reference_pixels(const DescriptorImage& image, int count, std::uint64_t seed)
{
    std::vector<Eigen::Vector2i> candidates;
    for (int v = 0; v < image.height; ++v)
        for (int u = 0; u < image.width; ++u)
            if (image.mask[image.index(u, v)] && image.depth[image.index(u, v)] > 0)
                candidates.emplace_back(u, v);
    if (candidates.size() < static_cast<std::size_t>(count))
        fail(ErrorCode::OffObjectPixel, "reference frame has only " + std::to_string(candidates.size()) + " object pixels");
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates keeps the draw independent of the standard library.
    for (int i = 0; i < count; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) + uniform_index(rng, candidates.size() - static_cast<std::size_t>(i));
        std::swap(candidates[static_cast<std::size_t>(i)], candidates[j]);
    }
    candidates.resize(static_cast<std::size_t>(count));
    return candidates;
}

int cmd_eval(const EvalArgs& a)
{
    SceneDataset dataset = read_dataset(a.dataset);
    const DescriptorImage& source = frame_at(dataset, a.ref_frame, "--ref-frame");
    std::vector<Eigen::Vector2i> pixels = to_pixels(a.pixels);
    if (pixels.empty()) {
        if (a.num_refs < 1)
            fail(ErrorCode::InvalidArgument, "no reference pixels: give --pixel or --num-refs >= 1");
        pixels = sample_reference_pixels(source, a.num_refs, a.seed);
    }
    // References come from the rendered ground truth of the reference frame.
    ReferenceSet refs = select_references(source, pixels, a.ref_frame);
    if (!a.predictions.empty()) {
        substitute_predictions(dataset, a.predictions);
        refs = select_references(frame_at(dataset, a.ref_frame, "--ref-frame"), pixels, a.ref_frame);
    }

    TrackOptions options;
    options.visibility = parse_choice(a.visibility, {std::pair{"auto", VisibilityMode::Auto}, {"geometric", VisibilityMode::Geometric},
                                                     {"threshold", VisibilityMode::Threshold}});
    options.distance_threshold = a.threshold;
    options.depth_tolerance = a.depth_tolerance;
    std::vector<TrackResult> results;
    for (std::size_t i = 0; i < dataset.frames.size(); ++i)
        results.push_back(track(refs, dataset.frames[i].target, static_cast<int>(i), options));

    const TrackingStatistics stats = tracking_statistics(results, a.bins);
    fs::create_directories(a.out);
    write_tracking_csv(results, a.out / "tracking.csv");
    write_histogram_csv(stats, a.out / "histogram.csv");
    write_png(histogram_plot(stats), a.out / "histogram.png");

    std::size_t off_object = 0;
    for (const auto& r : results)
        for (const auto& p : r.points)
            off_object += p.visible && !p.on_object;
    nlohmann::json references = nlohmann::json::array();
    for (const auto& ref : refs)
        references.push_back({{"frame", ref.frame}, {"u", ref.u}, {"v", ref.v}, {"world", vec_json(ref.world)}});
    nlohmann::json summary = statistics_json(stats);
    summary["frames"] = dataset.frames.size();
    summary["references"] = references;
    summary["visible_off_object"] = off_object;
    write_json(summary, a.out / "summary.json");
    std::cout << summary["pooled"].dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// grasp
// ---------------------------------------------------------------------------

struct GraspArgs {
    fs::path dataset;
    fs::path predictions;
    fs::path out;
    int ref_frame = 0;
    int frame = 1;
    std::vector<std::pair<int, int>> pixels;
    std::vector<double> axis;
    double blend = 0.5;
};

int cmd_grasp(const GraspArgs& a)
{
    if (a.pixels.empty() || a.pixels.size() > 2)
        fail(ErrorCode::InvalidArgument, "grasp needs one (top-down) or two (axis) --pixel values");
    SceneDataset dataset = read_dataset(a.dataset);
    if (!a.predictions.empty())
        substitute_predictions(dataset, a.predictions);
    const ReferenceSet refs = select_references(frame_at(dataset, a.ref_frame, "--ref-frame"), to_pixels(a.pixels), a.ref_frame);
    const DescriptorImage& target = frame_at(dataset, a.frame, "--frame");

    nlohmann::json j{{"frame", a.frame}, {"ref_frame", a.ref_frame}};
    if (refs.size() == 1) {
        const Eigen::Vector3d point = top_down_grasp(refs[0].descriptor, target);
        j["mode"] = "top_down";
        j["position"] = vec_json(point);
    } else {
        std::array<Eigen::Vector3d, 2> points;
        for (std::size_t i = 0; i < 2; ++i)
            points[i] = top_down_grasp(refs[i].descriptor, target);
        // Default reference axis: the optical axis of the target camera.
        const Eigen::Vector3d axis = a.axis.empty() ? Eigen::Vector3d(target.camera.rotation.col(2))
                                                    : Eigen::Vector3d(a.axis.at(0), a.axis.at(1), a.axis.at(2));
        const GraspPose pose = axis_grasp(points[0], points[1], axis, a.blend);
        j["mode"] = "axis";
        j["points"] = {vec_json(points[0]), vec_json(points[1])};
        j["position"] = vec_json(pose.position);
        j["rotation"] = matrix_json(pose.rotation);
    }
    if (!a.out.empty())
        write_json(j, a.out);
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// Error reporting
// ---------------------------------------------------------------------------

int report_error(std::string_view code, const std::string& message, int exit_code)
{
    const nlohmann::json j{{"error", {{"code", code}, {"message", message}, {"exit_code", exit_code}}}};
    std::cerr << j.dump() << '\n';
    return exit_code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optimal dense descriptor embedding, descriptor-target rendering and tracking evaluation"};
    app.config_formatter(std::make_shared<TomlConfig>());
    app.set_config("--config", "", "TOML config; tables name subcommands, keys are flag names; flags win");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();
    app.footer("Exit codes: 0 success, 2 argument error, 3 data error (JSON error on stderr).\n"
               "DESCFORGE_THREADS caps worker threads.");

    GenMeshArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-mesh", "Write a fixture mesh (OBJ or PLY by extension)");
    gen_cmd->add_option("--shape", gen.shape, "Shape")->check(CLI::IsMember({"torus", "cylinder", "box", "uv_sphere", "icosphere", "blob"}))->capture_default_str();
    gen_cmd->add_option("--radius", gen.radius, "Radius (torus: major radius)")->capture_default_str();
    gen_cmd->add_option("--minor-radius", gen.minor_radius, "Torus tube radius")->capture_default_str();
    gen_cmd->add_option("--height", gen.height, "Cylinder height")->capture_default_str();
    gen_cmd->add_option("--size", gen.size, "Box extents x,y,z")->expected(3)->delimiter(',')->capture_default_str();
    gen_cmd->add_option("--segments", gen.segments, "Segments around the main axis")->capture_default_str();
    gen_cmd->add_option("--rings", gen.rings, "Segments along the secondary direction")->capture_default_str();
    gen_cmd->add_option("--subdivisions", gen.subdivisions, "Box/icosphere/blob subdivision level")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Blob displacement seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Output mesh path")->required();

    EmbedArgs emb;
    auto* embed_cmd = app.add_subcommand("embed", "Compute the optimal descriptor field of a mesh");
    embed_cmd->add_option("--mesh", emb.mesh, "Input mesh (OBJ or PLY)")->required();
    embed_cmd->add_option("--dim", emb.dim, "Descriptor dimension D")->capture_default_str();
    embed_cmd->add_option("--symmetry", emb.symmetry, "Symmetry compression")->check(CLI::IsMember({"off", "gisif"}))->capture_default_str();
    embed_cmd->add_option("--epsilon", emb.epsilon, "Relative eigenvalue grouping tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    embed_cmd->add_flag("--exact-dimension", emb.exact_dimension, "Truncate to exactly D rows even inside a group");
    embed_cmd->add_option("--weighting", emb.weighting, "Edge weights")->check(CLI::IsMember({"cotangent", "uniform"}))->capture_default_str();
    embed_cmd->add_option("--mass", emb.mass, "Constraint metric C")->check(CLI::IsMember({"degree", "barycentric"}))->capture_default_str();
    embed_cmd->add_option("--solver", emb.solver, "Eigen solver path")->check(CLI::IsMember({"auto", "dense", "lanczos"}))->capture_default_str();
    embed_cmd->add_option("--out", emb.out, "Output descriptor field (.dfld)")->required();
    embed_cmd->add_option("--report", emb.report, "Spectrum report JSON (default: --out with .json)");
    embed_cmd->add_option("--preview", emb.preview, "Preview PNG with RGB = dimensions 1-3");
    embed_cmd->add_option("--preview-size", emb.preview_size, "Preview edge length (px)")->check(CLI::PositiveNumber)->capture_default_str();

    RenderArgs ren;
    auto* render_cmd = app.add_subcommand("render", "Render a descriptor-target dataset along a camera orbit");
    render_cmd->add_option("--mesh", ren.mesh, "Input mesh")->required();
    render_cmd->add_option("--field", ren.field, "Normalized descriptor field (.dfld)")->required();
    render_cmd->add_option("--out", ren.out, "Output dataset directory")->required();
    ren.intrinsics.add(render_cmd);
    render_cmd->add_option("--frames", ren.frames, "Number of frames K")->capture_default_str();
    render_cmd->add_option("--radius-min", ren.radius_min, "Minimum camera distance (m)")->capture_default_str();
    render_cmd->add_option("--radius-max", ren.radius_max, "Maximum camera distance (m)")->capture_default_str();
    render_cmd->add_option("--elevation-min", ren.elevation_min, "Minimum elevation (deg)")->capture_default_str();
    render_cmd->add_option("--elevation-max", ren.elevation_max, "Maximum elevation (deg)")->capture_default_str();
    render_cmd->add_option("--azimuth-min", ren.azimuth_min, "Minimum azimuth (deg)")->capture_default_str();
    render_cmd->add_option("--azimuth-max", ren.azimuth_max, "Maximum azimuth (deg)")->capture_default_str();
    render_cmd->add_option("--center", ren.center, "Look-at point x,y,z (default: mesh centroid)")->expected(3)->delimiter(',');
    render_cmd->add_option("--view-dependent", ren.view_dependent, "View-dependent target channel")
        ->check(CLI::IsMember({"none", "edge_blend", "mask_ramp"}))
        ->capture_default_str();
    render_cmd->add_option("--band", ren.band, "Edge blend band (px)")->capture_default_str();
    render_cmd->add_flag("--randomize-background", ren.randomize_background, "Random RGB background per frame");
    render_cmd->add_option("--seed", ren.seed, "Random seed")->capture_default_str();

    CorrespondenceArgs cor;
    auto* corr_cmd = app.add_subcommand("correspondences", "Sample pixel correspondences between two frames and report the contrastive loss");
    corr_cmd->add_option("--dataset", cor.dataset, "Dataset directory")->required();
    corr_cmd->add_option("--predictions", cor.predictions, "Directory of predicted desc_XXXXX.dimg images");
    corr_cmd->add_option("--out", cor.out, "Output JSON lines file")->required();
    corr_cmd->add_option("--frame-a", cor.frame_a, "Source frame")->capture_default_str();
    corr_cmd->add_option("--frame-b", cor.frame_b, "Target frame")->capture_default_str();
    corr_cmd->add_option("--matches", cor.options.n_match, "Number of matches N_m")->capture_default_str();
    corr_cmd->add_option("--nonmatch-object", cor.options.n_nonmatch_object, "On-object non-matches")->capture_default_str();
    corr_cmd->add_option("--nonmatch-background", cor.options.n_nonmatch_background, "Background non-matches")->capture_default_str();
    corr_cmd->add_option("--depth-tolerance", cor.options.depth_tolerance, "Occlusion depth tolerance (m)")->capture_default_str();
    corr_cmd->add_option("--min-nonmatch-px", cor.options.min_nonmatch_px, "Minimum non-match distance (px)")->capture_default_str();
    corr_cmd->add_option("--margin-object", cor.margin_object, "Hinge margin M_o")->capture_default_str();
    corr_cmd->add_option("--margin-background", cor.margin_background, "Hinge margin M_b")->capture_default_str();
    corr_cmd->add_option("--seed", cor.seed, "Random seed")->capture_default_str();

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "Track reference descriptors over a dataset and export error statistics");
    eval_cmd->add_option("--dataset", ev.dataset, "Dataset directory")->required();
    eval_cmd->add_option("--predictions", ev.predictions, "Directory of predicted desc_XXXXX.dimg images");
    eval_cmd->add_option("--out", ev.out, "Output directory")->required();
    eval_cmd->add_option("--ref-frame", ev.ref_frame, "Frame the references are taken from")->capture_default_str();
    eval_cmd->add_option("--pixel", ev.pixels, "Reference pixel u,v (repeatable)")->delimiter(',');
    eval_cmd->add_option("--num-refs", ev.num_refs, "Random reference count when no --pixel is given")->capture_default_str();
    eval_cmd->add_option("--visibility", ev.visibility, "Visibility test")->check(CLI::IsMember({"auto", "geometric", "threshold"}))->capture_default_str();
    eval_cmd->add_option("--threshold", ev.threshold, "Descriptor distance threshold for visibility")->capture_default_str();
    eval_cmd->add_option("--depth-tolerance", ev.depth_tolerance, "Geometric visibility depth tolerance (m)")->capture_default_str();
    eval_cmd->add_option("--bins", ev.bins, "Histogram bins")->check(CLI::PositiveNumber)->capture_default_str();
    eval_cmd->add_option("--seed", ev.seed, "Random seed")->capture_default_str();

    GraspArgs gr;
    auto* grasp_cmd = app.add_subcommand("grasp", "Predict a grasp from one (top-down) or two (axis) tracked descriptors");
    grasp_cmd->add_option("--dataset", gr.dataset, "Dataset directory")->required();
    grasp_cmd->add_option("--predictions", gr.predictions, "Directory of predicted desc_XXXXX.dimg images");
    grasp_cmd->add_option("--out", gr.out, "Output JSON file");
    grasp_cmd->add_option("--ref-frame", gr.ref_frame, "Frame the reference pixels are taken from")->capture_default_str();
    grasp_cmd->add_option("--frame", gr.frame, "Frame to grasp in")->capture_default_str();
    grasp_cmd->add_option("--pixel", gr.pixels, "Reference pixel u,v (one or two)")->delimiter(',')->required();
    grasp_cmd->add_option("--axis", gr.axis, "Reference axis x,y,z (default: camera optical axis)")->expected(3)->delimiter(',');
    grasp_cmd->add_option("--blend", gr.blend, "Position blend lambda")->check(CLI::Range(0.0, 1.0))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(e.get_name(), e.what(), 2);
    }

    try {
        if (gen_cmd->parsed())
            return cmd_gen_mesh(gen);
        if (embed_cmd->parsed())
            return cmd_embed(emb);
        if (render_cmd->parsed())
            return cmd_render(ren);
        if (corr_cmd->parsed())
            return cmd_correspondences(cor);
        if (eval_cmd->parsed())
            return cmd_eval(ev);
        if (grasp_cmd->parsed())
            return cmd_grasp(gr);
    } catch (const Error& e) {
        return report_error(to_string(e.code()), e.what(), e.code() == ErrorCode::InvalidArgument ? 2 : 3);
    } catch (const std::exception& e) {
        return report_error("InternalError", e.what(), 3);
    }
    return 0;
}
