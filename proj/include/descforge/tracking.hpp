#pragma once

#include "descforge/error.hpp"
#include "descforge/formats.hpp"
#include "descforge/parallel.hpp"
#include "descforge/raster.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace descforge {

struct Reference {
    Eigen::VectorXd descriptor;
    Eigen::Vector3d world;
    int u = 0;
    int v = 0;
    int frame = 0;
};

using ReferenceSet = std::vector<Reference>;

/// Records descriptor and world point of on-object pixels with valid depth.
inline ReferenceSet select_references(const DescriptorImage& image, const std::vector<Eigen::Vector2i>& pixels, int frame = 0)
{
    ReferenceSet refs;
    refs.reserve(pixels.size());
    for (const auto& px : pixels) {
        if (!image.in_bounds(px.x(), px.y()))
            fail(ErrorCode::OffObjectPixel, "reference pixel outside the image");
        const std::size_t i = image.index(px.x(), px.y());
        if (image.mask.size() != image.pixel_count() || !image.mask[i])
            fail(ErrorCode::OffObjectPixel, "reference pixel (" + std::to_string(px.x()) + ", " + std::to_string(px.y()) + ") is not on the object");
        if (image.depth.size() != image.pixel_count() || image.depth[i] == 0)
            fail(ErrorCode::InvalidDepth, "reference pixel has no valid depth");
        Reference ref;
        const auto d = image.descriptor(px.x(), px.y());
        ref.descriptor.resize(static_cast<Eigen::Index>(d.size()));
        for (std::size_t c = 0; c < d.size(); ++c)
            ref.descriptor[static_cast<Eigen::Index>(c)] = d[c];
        ref.world = image.world_point(px.x(), px.y());
        ref.u = px.x();
        ref.v = px.y();
        ref.frame = frame;
        refs.push_back(std::move(ref));
    }
    return refs;
}

/// How a reference is judged visible in a frame.
///   Geometric: its world point projects in-bounds onto the mask and the depth
///              there agrees within `depth_tolerance` (needs depth and extrinsic).
///   Threshold: the best descriptor distance is at most `distance_threshold`.
enum class VisibilityMode { Auto, Geometric, Threshold };

struct TrackOptions {
    VisibilityMode visibility = VisibilityMode::Auto;
    double distance_threshold = 0.2;
    double depth_tolerance = 1e-3;
    int threads = thread_count();
};

struct TrackedPoint {
    int reference = 0;
    int frame = 0;
    int u = -1;
    int v = -1;
    double distance = std::numeric_limits<double>::infinity();
    bool on_object = false;
    bool visible = false;
    std::optional<Eigen::Vector3d> predicted;
    std::optional<double> error; // present iff visible with valid depth at the best pixel
};

struct TrackResult {
    int frame = 0;
    std::vector<TrackedPoint> points;
};

struct PixelMatch {
    int u = -1;
    int v = -1;
    double squared_distance = std::numeric_limits<double>::infinity();
};

/// Exhaustive argmin of ||I(u, v) - d||^2; ties go to the first pixel in
/// row-major order. With `depth_only`, pixels without depth are skipped.
inline PixelMatch best_pixel(const DescriptorImage& image, const Eigen::VectorXd& descriptor, bool depth_only = false)
{
    PixelMatch best;
    const std::size_t dims = static_cast<std::size_t>(image.channels);
    for (int v = 0; v < image.height; ++v)
        for (int u = 0; u < image.width; ++u) {
            const std::size_t p = image.index(u, v);
            if (depth_only && image.depth[p] == 0)
                continue;
            const float* px = image.descriptors.data() + p * dims;
            double sq = 0.0;
            for (std::size_t c = 0; c < dims; ++c) {
                const double diff = static_cast<double>(px[c]) - descriptor[static_cast<Eigen::Index>(c)];
                sq += diff * diff;
            }
            if (sq < best.squared_distance) {
                best = {u, v, sq};
            }
        }
    return best;
}

inline bool geometrically_visible(const DescriptorImage& image, const Eigen::Vector3d& world, double tolerance)
{
    const Eigen::Vector3d cam = image.camera.inverse() * world;
    if (!(cam.z() > kNearPlane))
        return false;
    const Eigen::Vector2d xy = image.intrinsics.project(cam);
    const int u = static_cast<int>(std::floor(xy.x())), v = static_cast<int>(std::floor(xy.y()));
    if (!image.in_bounds(u, v))
        return false;
    const std::size_t p = image.index(u, v);
    return image.mask[p] && image.depth[p] > 0 && std::abs(image.depth_meters(u, v) - cam.z()) <= tolerance;
}

inline TrackResult track(const ReferenceSet& refs, const DescriptorImage& image, int frame = 0, const TrackOptions& options = {})
{
    for (const auto& ref : refs)
        if (ref.descriptor.size() != image.channels)
            fail(ErrorCode::DimensionMismatch, "reference descriptor dimension differs from the image");
    const bool has_depth = image.depth.size() == image.pixel_count();
    const bool has_mask = image.mask.size() == image.pixel_count();
    VisibilityMode mode = options.visibility;
    if (mode == VisibilityMode::Auto)
        mode = has_depth && has_mask ? VisibilityMode::Geometric : VisibilityMode::Threshold;
    if (mode == VisibilityMode::Geometric && !(has_depth && has_mask))
        fail(ErrorCode::InvalidArgument, "geometric visibility needs mask and depth channels");

    TrackResult result;
    result.frame = frame;
    result.points.resize(refs.size());
    parallel_chunks(
        static_cast<std::int64_t>(refs.size()),
        [&](std::int64_t begin, std::int64_t end) {
            for (std::int64_t r = begin; r < end; ++r) {
                const Reference& ref = refs[static_cast<std::size_t>(r)];
                const PixelMatch best = best_pixel(image, ref.descriptor);
                TrackedPoint& tp = result.points[static_cast<std::size_t>(r)];
                tp.reference = static_cast<int>(r);
                tp.frame = frame;
                tp.u = best.u;
                tp.v = best.v;
                tp.distance = std::sqrt(best.squared_distance);
                const std::size_t p = image.index(best.u, best.v);
                tp.on_object = has_mask && image.mask[p];
                tp.visible = mode == VisibilityMode::Geometric ? geometrically_visible(image, ref.world, options.depth_tolerance)
                                                               : tp.distance <= options.distance_threshold;
                if (has_depth && image.depth[p] > 0) {
                    tp.predicted = image.world_point(best.u, best.v);
                    if (tp.visible)
                        tp.error = (*tp.predicted - ref.world).norm();
                }
            }
        },
        options.threads);
    return result;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct ErrorSummary {
    std::size_t count = 0;
    double median = 0.0;
    double mean = 0.0;
    double p95 = 0.0;
    double max = 0.0;
};

struct Histogram {
    std::vector<double> edges; // bins + 1, log-spaced
    std::vector<std::size_t> counts;
};

struct TrackingStatistics {
    ErrorSummary pooled;
    std::map<int, ErrorSummary> per_reference;
    Histogram pooled_histogram;
    std::map<int, Histogram> per_reference_histogram;
};

/// Linear-interpolated percentile of sorted values, q in [0, 1].
inline double percentile(const std::vector<double>& sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ErrorSummary summarize(std::vector<double> values)
{
    if (values.empty())
        fail(ErrorCode::NoValidSamples, "no valid tracking errors");
    std::sort(values.begin(), values.end());
    ErrorSummary s;
    s.count = values.size();
    s.median = percentile(values, 0.5);
    s.p95 = percentile(values, 0.95);
    s.max = values.back();
    double sum = 0.0;
    for (double v : values)
        sum += v;
    s.mean = sum / static_cast<double>(values.size());
    return s;
}

/// Log-spaced bins between [lo, hi]; values below lo (including 0) fall in the
/// first bin.
inline Histogram log_histogram(const std::vector<double>& values, double lo, double hi, int bins = 24)
{
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    const double llo = std::log10(lo), lhi = std::log10(hi);
    for (int i = 0; i <= bins; ++i)
        h.edges[static_cast<std::size_t>(i)] = std::pow(10.0, llo + (lhi - llo) * i / bins);
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        const auto it = std::upper_bound(h.edges.begin() + 1, h.edges.end() - 1, v);
        ++h.counts[static_cast<std::size_t>(it - h.edges.begin() - 1)];
    }
    return h;
}

inline constexpr double kHistogramFloor = 1e-5; // meters

inline TrackingStatistics tracking_statistics(const std::vector<TrackResult>& results, int bins = 24)
{
    std::vector<double> pooled;
    std::map<int, std::vector<double>> per_ref;
    for (const auto& r : results)
        for (const auto& p : r.points)
            if (p.error) {
                pooled.push_back(*p.error);
                per_ref[p.reference].push_back(*p.error);
            }
    TrackingStatistics stats;
    stats.pooled = summarize(pooled);
    const double lo = std::max(kHistogramFloor, *std::min_element(pooled.begin(), pooled.end()));
    const double hi = std::max(lo * 10.0, stats.pooled.max * 1.0001);
    stats.pooled_histogram = log_histogram(pooled, lo, hi, bins);
    for (auto& [ref, errors] : per_ref) {
        stats.per_reference[ref] = summarize(errors);
        stats.per_reference_histogram[ref] = log_histogram(errors, lo, hi, bins);
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline nlohmann::json summary_json(const ErrorSummary& s)
{
    return {{"count", s.count}, {"median_m", s.median}, {"mean_m", s.mean}, {"p95_m", s.p95}, {"max_m", s.max}};
}

inline nlohmann::json statistics_json(const TrackingStatistics& stats)
{
    nlohmann::json j;
    j["pooled"] = summary_json(stats.pooled);
    nlohmann::json refs = nlohmann::json::object();
    for (const auto& [ref, s] : stats.per_reference)
        refs[std::to_string(ref)] = summary_json(s);
    j["per_reference"] = std::move(refs);
    return j;
}

/// reference,frame,u,v,distance,error_m,visible,on_object (error empty when absent).
inline void write_tracking_csv(const std::vector<TrackResult>& results, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::IoError, "cannot write " + path.string());
    out << "reference,frame,u,v,distance,error_m,visible,on_object\n";
    char buf[256];
    for (const auto& r : results)
        for (const auto& p : r.points) {
            std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.9g,", p.reference, p.frame, p.u, p.v, p.distance);
            out << buf;
            if (p.error) {
                std::snprintf(buf, sizeof buf, "%.9g", *p.error);
                out << buf;
            }
            out << ',' << (p.visible ? 1 : 0) << ',' << (p.on_object ? 1 : 0) << '\n';
        }
}

/// series,bin_lo_m,bin_hi_m,count with series "pooled" or "ref<i>".
inline void write_histogram_csv(const TrackingStatistics& stats, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::IoError, "cannot write " + path.string());
    out << "series,bin_lo_m,bin_hi_m,count\n";
    char buf[160];
    auto emit = [&](const std::string& name, const Histogram& h) {
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%zu\n", name.c_str(), h.edges[i], h.edges[i + 1], h.counts[i]);
            out << buf;
        }
    };
    emit("pooled", stats.pooled_histogram);
    for (const auto& [ref, h] : stats.per_reference_histogram)
        emit("ref" + std::to_string(ref), h);
}

/// Stacked bar plots on a log-x axis: pooled panel on top, one panel per reference below.
inline PngImage histogram_plot(const TrackingStatistics& stats, int bar_width = 16, int panel_height = 60)
{
    std::vector<const Histogram*> panels{&stats.pooled_histogram};
    for (const auto& [ref, h] : stats.per_reference_histogram)
        panels.push_back(&h);
    const int bins = static_cast<int>(stats.pooled_histogram.counts.size());
    const int margin = 4;
    const int width = bins * bar_width + 2 * margin;
    const int height = static_cast<int>(panels.size()) * (panel_height + margin) + margin;
    PngImage png{width, height, 3, 8, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3, 255), {}};
    auto put = [&](int x, int y, std::array<std::uint8_t, 3> c) {
        std::copy(c.begin(), c.end(), png.data8.begin() + (static_cast<std::ptrdiff_t>(y) * width + x) * 3);
    };
    for (std::size_t k = 0; k < panels.size(); ++k) {
        const Histogram& h = *panels[k];
        const std::size_t peak = std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
        const int base = margin + static_cast<int>(k) * (panel_height + margin) + panel_height - 1;
        const std::array<std::uint8_t, 3> color = k == 0 ? std::array<std::uint8_t, 3>{40, 70, 160} : std::array<std::uint8_t, 3>{200, 110, 40};
        for (int x = margin; x < width - margin; ++x)
            put(x, base, {0, 0, 0});
        for (int b = 0; b < bins; ++b) {
            const int bar = static_cast<int>(std::lround(static_cast<double>(h.counts[static_cast<std::size_t>(b)]) / static_cast<double>(peak) * (panel_height - 2)));
            for (int y = 0; y < bar; ++y)
                for (int x = 1; x < bar_width - 1; ++x)
                    put(margin + b * bar_width + x, base - 1 - y, color);
        }
    }
    return png;
}

} // namespace descforge
