#pragma once

#include "descforge/error.hpp"
#include "descforge/parallel.hpp"
#include "descforge/raster.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <utility>
#include <random>
#include <string>
#include <vector>

namespace descforge {

/// Pixel location in index units: integer (u, v) is the center of pixel (u, v).
using PixelCoord = Eigen::Vector2d;

inline Eigen::Vector2i nearest_pixel(const PixelCoord& p)
{
    return {static_cast<int>(std::floor(p.x() + 0.5)), static_cast<int>(std::floor(p.y() + 0.5))};
}

struct PixelPair {
    PixelCoord a;
    PixelCoord b;
};

struct CorrespondenceSet {
    std::vector<PixelPair> matches;
    std::vector<PixelPair> non_matches_object;
    std::vector<PixelPair> non_matches_background;
    int frame_a = 0;
    int frame_b = 1;
    std::size_t attempts = 0;

    std::size_t non_match_count() const { return non_matches_object.size() + non_matches_background.size(); }
};

struct CorrespondenceOptions {
    int n_match = 5000;
    int n_nonmatch_object = 2500;
    int n_nonmatch_background = 2500;
    std::uint64_t seed = 0;
    double depth_tolerance = 1e-3; // meters
    double min_nonmatch_px = 5.0;
    int frame_a = 0;
    int frame_b = 1;
};

/// Bilinear descriptor sample at a sub-pixel location (clamped to the image).
inline std::vector<float> sample_bilinear(const DescriptorImage& image, const PixelCoord& p)
{
    const double x = std::clamp(p.x(), 0.0, image.width - 1.0), y = std::clamp(p.y(), 0.0, image.height - 1.0);
    const int u0 = static_cast<int>(std::floor(x)), v0 = static_cast<int>(std::floor(y));
    const int u1 = std::min(u0 + 1, image.width - 1), v1 = std::min(v0 + 1, image.height - 1);
    const double fx = x - u0, fy = y - v0;
    std::vector<float> out(static_cast<std::size_t>(image.channels));
    const auto d00 = image.descriptor(u0, v0), d10 = image.descriptor(u1, v0), d01 = image.descriptor(u0, v1), d11 = image.descriptor(u1, v1);
    for (int c = 0; c < image.channels; ++c)
        out[static_cast<std::size_t>(c)] = static_cast<float>((1 - fy) * ((1 - fx) * d00[c] + fx * d10[c]) + fy * ((1 - fx) * d01[c] + fx * d11[c]));
    return out;
}

/// Reprojects a pixel of frame `a` into frame `b` through depth and extrinsics.
/// Returns the sub-pixel location in `b` and the depth there, or nothing when
/// the point lands behind the camera.
inline std::optional<std::pair<PixelCoord, double>> reproject(const DescriptorImage& a, const DescriptorImage& b, int u, int v)
{
    const Eigen::Vector3d world = a.world_point(u, v);
    const Eigen::Vector3d cam = b.camera.inverse() * world;
    if (!(cam.z() > kNearPlane))
        return std::nullopt;
    const Eigen::Vector2d xy = b.intrinsics.project(cam);
    return std::pair{PixelCoord(xy.x() - 0.5, xy.y() - 0.5), cam.z()};
}

/// Samples matches by depth reprojection with an occlusion test, then
/// non-matches at least `min_nonmatch_px` away from the true correspondence.
/// Partial results are returned when fewer than n_match pixels are visible.
inline CorrespondenceSet find_correspondences(const DescriptorImage& a, const DescriptorImage& b, const CorrespondenceOptions& options)
{
    if (!(a.intrinsics == b.intrinsics) || a.width != b.width || a.height != b.height)
        fail(ErrorCode::RegistrationMismatch, "frames have different intrinsics or sizes");
    if (!a.camera.is_valid() || !b.camera.is_valid())
        fail(ErrorCode::RegistrationMismatch, "frame extrinsic is not a valid rigid transform");
    if (a.depth.size() != a.pixel_count() || b.depth.size() != b.pixel_count())
        fail(ErrorCode::RegistrationMismatch, "frames need depth channels");
    if (options.n_match < 0 || options.n_nonmatch_object < 0 || options.n_nonmatch_background < 0)
        fail(ErrorCode::InvalidArgument, "sample counts must be non-negative");

    std::vector<Eigen::Vector2i> candidates, object_b, background_b;
    for (int v = 0; v < a.height; ++v)
        for (int u = 0; u < a.width; ++u) {
            const std::size_t p = a.index(u, v);
            if (a.mask[p] && a.depth[p] > 0)
                candidates.emplace_back(u, v);
            (b.mask[p] ? object_b : background_b).emplace_back(u, v);
        }

    CorrespondenceSet set;
    set.frame_a = options.frame_a;
    set.frame_b = options.frame_b;
    std::mt19937_64 rng(options.seed);
    const std::size_t budget = 100 * static_cast<std::size_t>(options.n_match);
    if (!candidates.empty())
        while (set.matches.size() < static_cast<std::size_t>(options.n_match) && set.attempts < budget) {
            ++set.attempts;
            const Eigen::Vector2i pa = candidates[uniform_index(rng, candidates.size())];
            const auto hit = reproject(a, b, pa.x(), pa.y());
            if (!hit)
                continue;
            const Eigen::Vector2i pb = nearest_pixel(hit->first);
            if (!b.in_bounds(pb.x(), pb.y()))
                continue;
            const std::size_t ib = b.index(pb.x(), pb.y());
            if (!b.mask[ib] || b.depth[ib] == 0)
                continue;
            if (std::abs(b.depth_meters(pb.x(), pb.y()) - hit->second) > options.depth_tolerance)
                continue;
            set.matches.push_back({pa.cast<double>(), hit->first});
        }
    if (options.n_match > 0 && set.matches.empty())
        fail(ErrorCode::ExhaustedSampling, "no visible correspondences after " + std::to_string(set.attempts) + " attempts");

    // Non-matches cycle over the accepted a-pixels.
    auto sample_non_matches = [&](const std::vector<Eigen::Vector2i>& pool, int count, std::vector<PixelPair>& out) {
        if (pool.empty() || set.matches.empty())
            return;
        const double min_sq = options.min_nonmatch_px * options.min_nonmatch_px;
        for (int i = 0; i < count; ++i) {
            const PixelPair& match = set.matches[static_cast<std::size_t>(i) % set.matches.size()];
            for (int attempt = 0; attempt < 100; ++attempt) {
                const Eigen::Vector2d pb = pool[uniform_index(rng, pool.size())].cast<double>();
                if ((pb - match.b).squaredNorm() >= min_sq) {
                    out.push_back({match.a, pb});
                    break;
                }
            }
        }
    };
    sample_non_matches(object_b, options.n_nonmatch_object, set.non_matches_object);
    sample_non_matches(background_b, options.n_nonmatch_background, set.non_matches_background);
    return set;
}

/// Swaps the roles of the two frames.
inline CorrespondenceSet swapped(const CorrespondenceSet& set)
{
    CorrespondenceSet out = set;
    std::swap(out.frame_a, out.frame_b);
    for (auto* list : {&out.matches, &out.non_matches_object, &out.non_matches_background})
        for (auto& pair : *list)
            std::swap(pair.a, pair.b);
    return out;
}

/// One JSON record per line: {"type", "frame_a", "frame_b", "ua", "va", "ub", "vb"}.
inline void write_correspondences_jsonl(const CorrespondenceSet& set, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(ErrorCode::IoError, "cannot write " + path.string());
    auto emit = [&](const char* type, const std::vector<PixelPair>& pairs) {
        for (const auto& p : pairs) {
            const nlohmann::json record{{"type", type}, {"frame_a", set.frame_a}, {"frame_b", set.frame_b}, {"ua", p.a.x()},
                                        {"va", p.a.y()},  {"ub", p.b.x()},           {"vb", p.b.y()}};
            out << record.dump() << '\n';
        }
    };
    emit("match", set.matches);
    emit("nonmatch_obj", set.non_matches_object);
    emit("nonmatch_bg", set.non_matches_background);
    if (!out)
        fail(ErrorCode::IoError, "write failed for " + path.string());
}

inline CorrespondenceSet read_correspondences_jsonl(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::IoError, "cannot open " + path.string());
    CorrespondenceSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        try {
            const auto record = nlohmann::json::parse(line);
            const std::string type = record.at("type").get<std::string>();
            PixelPair pair{{record.at("ua").get<double>(), record.at("va").get<double>()}, {record.at("ub").get<double>(), record.at("vb").get<double>()}};
            set.frame_a = record.at("frame_a").get<int>();
            set.frame_b = record.at("frame_b").get<int>();
            if (type == "match")
                set.matches.push_back(pair);
            else if (type == "nonmatch_obj")
                set.non_matches_object.push_back(pair);
            else if (type == "nonmatch_bg")
                set.non_matches_background.push_back(pair);
            else
                fail(ErrorCode::ParseError, "unknown correspondence type '" + type + "'");
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return set;
}

} // namespace descforge
