#include "oracles.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <random>

using namespace descforge;
using Catch::Approx;

namespace {

struct Views {
    TriangleMesh mesh = make_blob(3);
    DescriptorField field;
    CameraIntrinsics k{240, 240, 120, 90, 240, 180};
    DescriptorImage source, rotated;

    Views()
    {
        field = normalize_descriptors(embed(build_laplacian(mesh), 3));
        background_descriptor(field);
        source = render_frame(mesh, field, k, orbit_camera(mesh.centroid(), 0.3, 40, 0), {});
        rotated = render_frame(mesh, field, k, orbit_camera(mesh.centroid(), 0.3, 40, 30), {});
    }
};

const Views& views()
{
    static const Views v;
    return v;
}

/// Every `stride`-th masked pixel in row-major order.
std::vector<Eigen::Vector2i> mask_pixels(const DescriptorImage& img, int stride)
{
    std::vector<Eigen::Vector2i> out;
    int seen = 0;
    for (int v = 0; v < img.height; ++v)
        for (int u = 0; u < img.width; ++u)
            if (img.mask[img.index(u, v)] && seen++ % stride == 0)
                out.emplace_back(u, v);
    return out;
}

TrackResult result_with_errors(const std::vector<double>& errors, int frame = 0)
{
    TrackResult r;
    r.frame = frame;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        TrackedPoint p;
        p.reference = static_cast<int>(i);
        p.frame = frame;
        p.visible = true;
        p.error = errors[i];
        r.points.push_back(p);
    }
    return r;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    return q.normalized().toRotationMatrix();
}

} // namespace

TEST_CASE("references record descriptors and surface points")
{
    const Views& w = views();
    double su = 0, sv = 0, count = 0;
    for (int v = 0; v < w.source.height; ++v)
        for (int u = 0; u < w.source.width; ++u)
            if (w.source.mask[w.source.index(u, v)]) {
                su += u;
                sv += v;
                ++count;
            }
    const Eigen::Vector2i centroid(static_cast<int>(std::lround(su / count)), static_cast<int>(std::lround(sv / count)));
    const ReferenceSet refs = select_references(w.source, {centroid, {centroid.x() - 20, centroid.y()}, {centroid.x() + 15, centroid.y() + 10}}, 4);
    REQUIRE(refs.size() == 3);
    CHECK(refs[0].frame == 4);
    CHECK(refs[0].descriptor.cast<float>()[1] == w.source.descriptor(centroid.x(), centroid.y())[1]);
    CHECK(oracle::point_to_mesh(refs[0].world, w.mesh) < 1e-3);
    CHECK((refs[0].descriptor - refs[1].descriptor).norm() > 1e-3);
    CHECK((refs[1].descriptor - refs[2].descriptor).norm() > 1e-3);

    CHECK(testing::error_code_of([&] { select_references(w.source, {{0, 0}}); }) == ErrorCode::OffObjectPixel);
    CHECK(testing::error_code_of([&] { select_references(w.source, {{-1, 5}}); }) == ErrorCode::OffObjectPixel);
    DescriptorImage holes = w.source;
    holes.depth[holes.index(centroid.x(), centroid.y())] = 0;
    CHECK(testing::error_code_of([&] { select_references(holes, {centroid}); }) == ErrorCode::InvalidDepth);
}

TEST_CASE("self-tracking is exact")
{
    const Views& w = views();
    const ReferenceSet refs = select_references(w.source, mask_pixels(w.source, 97));
    REQUIRE(refs.size() > 50);
    const TrackResult result = track(refs, w.source);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const TrackedPoint& p = result.points[i];
        // Equal descriptors can occur earlier in row-major order; the world point still matches.
        CHECK(p.distance == 0.0);
        CHECK(p.visible);
        REQUIRE(p.error);
        if (p.u == refs[i].u && p.v == refs[i].v)
            CHECK(*p.error == 0.0);
        else
            CHECK(*p.error < 1e-3);
    }
}

TEST_CASE("tracking a 30 degree view stays within 2 mm")
{
    const Views& w = views();
    const ReferenceSet refs = select_references(w.source, mask_pixels(w.source, 41));
    const TrackResult result = track(refs, w.rotated, 1);
    std::size_t visible = 0;
    double worst = 0.0;
    for (const auto& p : result.points) {
        CHECK(p.frame == 1);
        CHECK(p.error.has_value() == p.visible);
        if (p.error) {
            ++visible;
            worst = std::max(worst, *p.error);
            CHECK(p.on_object);
        }
    }
    CHECK(visible > refs.size() / 2);
    CHECK(worst < 2e-3);
}

TEST_CASE("tracking is independent of the thread count")
{
    const Views& w = views();
    const ReferenceSet refs = select_references(w.source, mask_pixels(w.source, 151));
    TrackOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const TrackResult a = track(refs, w.rotated, 0, one), b = track(refs, w.rotated, 0, four);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        CHECK(a.points[i].u == b.points[i].u);
        CHECK(a.points[i].v == b.points[i].v);
        CHECK(a.points[i].distance == b.points[i].distance);
    }
}

TEST_CASE("threshold visibility rejects a different object")
{
    const Views& w = views();
    const ReferenceSet refs = select_references(w.source, mask_pixels(w.source, 301));
    DescriptorImage other(40, 30, 3);
    std::fill(other.descriptors.begin(), other.descriptors.end(), 5.0f);
    TrackOptions options;
    options.visibility = VisibilityMode::Threshold;
    const TrackResult result = track(refs, other, 0, options);
    for (const auto& p : result.points) {
        CHECK(p.distance > 1.0);
        CHECK_FALSE(p.visible);
        CHECK_FALSE(p.error);
    }

    DescriptorImage narrow(4, 4, 2);
    CHECK(testing::error_code_of([&] { track(refs, narrow); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("GISIF tracking lands on the symmetry orbit")
{
    const TriangleMesh torus = make_torus(0.1, 0.04, 64, 32);
    DescriptorField field = normalize_descriptors(embed(build_laplacian(torus), 3, {SymmetryMode::Gisif, 1e-3}));
    background_descriptor(field);
    const CameraIntrinsics k{200, 200, 120, 90, 240, 180};
    const DescriptorImage a = render_frame(torus, field, k, orbit_camera(Eigen::Vector3d::Zero(), 0.45, 50, 0), {});
    const DescriptorImage b = render_frame(torus, field, k, orbit_camera(Eigen::Vector3d::Zero(), 0.45, 50, 100), {});
    const ReferenceSet refs = select_references(a, mask_pixels(a, 211));
    const TrackResult result = track(refs, b);

    // Rotation about z preserves the distance from the axis and the height.
    auto orbit_coords = [](const Eigen::Vector3d& p) { return Eigen::Vector2d(p.head<2>().norm(), p.z()); };
    double orbit_worst = 0.0, point_worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const TrackedPoint& p = result.points[i];
        if (!p.visible || !p.predicted)
            continue;
        ++compared;
        orbit_worst = std::max(orbit_worst, (orbit_coords(*p.predicted) - orbit_coords(refs[i].world)).norm());
        point_worst = std::max(point_worst, (*p.predicted - refs[i].world).norm());
    }
    REQUIRE(compared > 10);
    CHECK(orbit_worst < 5e-3);
    CHECK(point_worst > 0.05);
}

TEST_CASE("error statistics")
{
    const TrackingStatistics stats = tracking_statistics({result_with_errors({0.001, 0.002, 0.003, 0.004, 0.100})});
    CHECK(stats.pooled.count == 5);
    CHECK(stats.pooled.median == Approx(0.003));
    CHECK(stats.pooled.mean == Approx(0.022));
    CHECK(stats.pooled.max == 0.100);
    CHECK(stats.per_reference.size() == 5);
    std::size_t total = 0;
    for (std::size_t c : stats.pooled_histogram.counts)
        total += c;
    CHECK(total == 5);
    CHECK(stats.pooled_histogram.edges.front() == Approx(0.001));
    CHECK(stats.pooled_histogram.counts.front() == 1);
    CHECK(stats.pooled_histogram.counts.back() == 1);

    const ErrorSummary flat = summarize({0.25, 0.25, 0.25});
    CHECK(flat.median == 0.25);
    CHECK(flat.mean == 0.25);
    CHECK(flat.p95 == 0.25);

    CHECK(summarize({1, 2, 3, 4, 5}).p95 == Approx(4.8));
    CHECK(testing::error_code_of([] { summarize({}); }) == ErrorCode::NoValidSamples);
    CHECK(testing::error_code_of([] { tracking_statistics({TrackResult{}}); }) == ErrorCode::NoValidSamples);
}

TEST_CASE("statistics exports")
{
    const auto dir = testing::scratch_dir("tracking_export");
    std::vector<TrackResult> results{result_with_errors({0.001, 0.004}, 0), result_with_errors({0.002, 0.0}, 1)};
    results[1].points.push_back({});
    const TrackingStatistics stats = tracking_statistics(results, 8);
    write_tracking_csv(results, dir / "track.csv");
    write_histogram_csv(stats, dir / "hist.csv");
    const std::string csv = testing::read_file(dir / "track.csv");
    CHECK(csv.rfind("reference,frame,u,v,distance,error_m,visible,on_object\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
    CHECK(csv.find("\n0,0,-1,-1,inf,,0,0\n") != std::string::npos);
    const std::string hist = testing::read_file(dir / "hist.csv");
    CHECK(std::count(hist.begin(), hist.end(), '\n') == 1 + 3 * 8);
    CHECK(hist.find("\nref1,") != std::string::npos);

    const nlohmann::json j = statistics_json(stats);
    CHECK(j["pooled"]["count"] == 4);
    CHECK(j["per_reference"]["0"]["median_m"] == Approx(0.0015));

    const PngImage plot = histogram_plot(stats);
    CHECK(plot.width == 8 * 16 + 8);
    CHECK(plot.height == 3 * 64 + 4);
    write_png(plot, dir / "hist.png");
    CHECK(read_png(dir / "hist.png").data8 == plot.data8);
}

TEST_CASE("axis grasp hand example and errors")
{
    const GraspPose pose = axis_grasp({1, 0, 0}, {0, 0, 0}, {0, 0, 1});
    CHECK(pose.position == Eigen::Vector3d(0.5, 0, 0));
    CHECK(pose.rotation == Eigen::Matrix3d::Identity());
    CHECK(axis_grasp({1, 0, 0}, {0, 0, 0}, {0, 0, 1}, 1.0).position == Eigen::Vector3d(1, 0, 0));

    CHECK(testing::error_code_of([] { axis_grasp({1, 2, 3}, {1, 2, 3}, {0, 0, 1}); }) == ErrorCode::DegeneratePair);
    CHECK(testing::error_code_of([] { axis_grasp({1, 0, 0}, {0, 0, 0}, {1, 0.01, 0}); }) == ErrorCode::ParallelAxis);
    CHECK(testing::error_code_of([] { axis_grasp({1, 0, 0}, {0, 0, 0}, {0, 0, 1}, 1.5); }) == ErrorCode::InvalidArgument);
    CHECK(testing::error_code_of([] { axis_grasp({1, 0, 0}, {0, 0, 0}, {0, 0, 0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("axis grasp rotations are proper and rigidly equivariant")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coord(-0.5, 0.5), blend(0.0, 1.0);
    auto vec = [&] { return Eigen::Vector3d(coord(rng), coord(rng), coord(rng)); };
    int built = 0;
    while (built < 200) {
        const Eigen::Vector3d p1 = vec(), p2 = vec(), axis = vec();
        const double lambda = blend(rng);
        GraspPose pose;
        try {
            pose = axis_grasp(p1, p2, axis, lambda);
        } catch (const Error&) {
            continue;
        }
        ++built;
        CHECK((pose.rotation.transpose() * pose.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(std::abs(pose.rotation.determinant() - 1.0) < 1e-9);

        const RigidTransform t{random_rotation(rng), vec()};
        const GraspPose moved = axis_grasp(t * p1, t * p2, t.rotation * axis, lambda);
        CHECK((moved.transform().matrix() - (t * pose.transform()).matrix()).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("top-down grasp")
{
    const Views& w = views();
    const ReferenceSet refs = select_references(w.source, mask_pixels(w.source, 211));
    for (const auto& ref : refs) {
        CHECK((top_down_grasp(ref.descriptor, w.source) - ref.world).norm() < 1e-3);
        const std::optional<Eigen::Vector3d> truth = [&]() -> std::optional<Eigen::Vector3d> {
            if (!geometrically_visible(w.rotated, ref.world, 1e-3))
                return std::nullopt;
            return ref.world;
        }();
        if (truth)
            CHECK((top_down_grasp(ref.descriptor, w.rotated) - *truth).norm() < 2e-3);
    }
    const Reference& first = refs.front();
    CHECK(top_down_grasp(first.descriptor, w.source) == w.source.world_point(first.u, first.v));

    DescriptorImage empty = w.source;
    std::fill(empty.depth.begin(), empty.depth.end(), 0);
    CHECK(testing::error_code_of([&] { top_down_grasp(first.descriptor, empty); }) == ErrorCode::NoValidDepth);
    CHECK(testing::error_code_of([&] { top_down_grasp(Eigen::VectorXd::Zero(2), w.source); }) == ErrorCode::DimensionMismatch);
}
