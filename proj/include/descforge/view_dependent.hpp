#pragma once

#include "descforge/error.hpp"
#include "descforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

// View-dependent descriptor channels derived from the object mask of a frame.
// Pixels outside the image count as background in both distance transforms.

namespace descforge {

/// Chessboard distance from each object pixel to the nearest background pixel
/// (0 on background).
inline std::vector<int> chessboard_distance(const DescriptorImage& image)
{
    const int w = image.width, h = image.height;
    const int inf = w + h + 2;
    std::vector<int> dist(image.pixel_count());
    for (std::size_t i = 0; i < dist.size(); ++i)
        dist[i] = image.mask[i] ? inf : 0;
    auto at = [&](int u, int v) { return (u < 0 || v < 0 || u >= w || v >= h) ? 0 : dist[image.index(u, v)]; };

    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            int& d = dist[image.index(u, v)];
            if (d == 0)
                continue;
            d = std::min({d, at(u - 1, v) + 1, at(u - 1, v - 1) + 1, at(u, v - 1) + 1, at(u + 1, v - 1) + 1});
        }
    for (int v = h - 1; v >= 0; --v)
        for (int u = w - 1; u >= 0; --u) {
            int& d = dist[image.index(u, v)];
            if (d == 0)
                continue;
            d = std::min({d, at(u + 1, v) + 1, at(u + 1, v + 1) + 1, at(u, v + 1) + 1, at(u - 1, v + 1) + 1});
        }
    return dist;
}

/// Blends object pixels within `band_px` (chessboard) of the mask boundary
/// toward the background: alpha * object + (1 - alpha) * background with
/// alpha = t / (band_px + 1). Mask and depth are untouched.
inline DescriptorImage blend_edges(const DescriptorImage& image, int band_px)
{
    if (band_px < 1)
        fail(ErrorCode::InvalidArgument, "band width must be >= 1");
    if (image.background.size() != static_cast<std::size_t>(image.channels))
        fail(ErrorCode::MissingBackground, "image has no background descriptor");
    DescriptorImage out = image;
    const std::vector<int> dist = chessboard_distance(image);
    for (int v = 0; v < image.height; ++v)
        for (int u = 0; u < image.width; ++u) {
            const int t = dist[image.index(u, v)];
            if (t == 0 || t > band_px)
                continue;
            const double alpha = static_cast<double>(t) / (band_px + 1);
            auto px = out.descriptor(u, v);
            for (int d = 0; d < image.channels; ++d)
                px[d] = static_cast<float>(alpha * px[d] + (1.0 - alpha) * image.background[static_cast<std::size_t>(d)]);
        }
    return out;
}

namespace detail {

/// 1-D squared distance transform of a sampled function (lower envelope of
/// parabolas). Entries of f must be finite.
inline void squared_distance_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& hull, std::vector<double>& breaks)
{
    const int n = static_cast<int>(f.size());
    hull.assign(static_cast<std::size_t>(n), 0);
    breaks.assign(static_cast<std::size_t>(n) + 1, 0.0);
    d.assign(static_cast<std::size_t>(n), 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    auto at = [&f](int i) { return f[static_cast<std::size_t>(i)]; };
    int k = 0;
    breaks[0] = -inf;
    breaks[1] = inf;
    for (int q = 1; q < n; ++q) {
        double s = 0.0;
        while (true) {
            const int p = hull[static_cast<std::size_t>(k)];
            s = ((at(q) + double(q) * q) - (at(p) + double(p) * p)) / (2.0 * (q - p));
            if (s <= breaks[static_cast<std::size_t>(k)])
                --k;
            else
                break;
        }
        ++k;
        hull[static_cast<std::size_t>(k)] = q;
        breaks[static_cast<std::size_t>(k)] = s;
        breaks[static_cast<std::size_t>(k) + 1] = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (breaks[static_cast<std::size_t>(k) + 1] < q)
            ++k;
        const int p = hull[static_cast<std::size_t>(k)];
        d[static_cast<std::size_t>(q)] = double(q - p) * (q - p) + at(p);
    }
}

} // namespace detail

/// Euclidean distance from each pixel center to the nearest background pixel
/// center (0 on background).
inline std::vector<double> euclidean_distance(const DescriptorImage& image)
{
    const int w = image.width + 2, h = image.height + 2;
    // Larger than any squared distance on the grid; keeps the envelope arithmetic finite.
    const double far = 1e20;
    std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
    for (int v = 0; v < image.height; ++v)
        for (int u = 0; u < image.width; ++u)
            if (image.mask[image.index(u, v)])
                grid[static_cast<std::size_t>(v + 1) * w + (u + 1)] = far;

    std::vector<double> f, d, breaks;
    std::vector<int> hull;
    for (int u = 0; u < w; ++u) {
        f.resize(static_cast<std::size_t>(h));
        for (int v = 0; v < h; ++v)
            f[static_cast<std::size_t>(v)] = grid[static_cast<std::size_t>(v) * w + u];
        detail::squared_distance_1d(f, d, hull, breaks);
        for (int v = 0; v < h; ++v)
            grid[static_cast<std::size_t>(v) * w + u] = d[static_cast<std::size_t>(v)];
    }
    for (int v = 0; v < h; ++v) {
        f.assign(grid.begin() + static_cast<std::ptrdiff_t>(v) * w, grid.begin() + static_cast<std::ptrdiff_t>(v + 1) * w);
        detail::squared_distance_1d(f, d, hull, breaks);
        std::copy(d.begin(), d.end(), grid.begin() + static_cast<std::ptrdiff_t>(v) * w);
    }

    std::vector<double> out(image.pixel_count(), 0.0);
    for (int v = 0; v < image.height; ++v)
        for (int u = 0; u < image.width; ++u)
            out[image.index(u, v)] = std::sqrt(grid[static_cast<std::size_t>(v + 1) * w + (u + 1)]);
    return out;
}

/// Mask ramp: 0 outside the object, rising to exactly 1 at the maximum of the
/// Euclidean distance transform.
inline std::vector<float> mask_ramp(const DescriptorImage& image)
{
    if (std::none_of(image.mask.begin(), image.mask.end(), [](std::uint8_t m) { return m != 0; }))
        fail(ErrorCode::EmptyMask, "mask ramp needs a non-empty object mask");
    const std::vector<double> dist = euclidean_distance(image);
    const double peak = *std::max_element(dist.begin(), dist.end());
    std::vector<float> ramp(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i)
        ramp[i] = static_cast<float>(dist[i] / peak);
    return ramp;
}

/// Writes the mask ramp into descriptor channel `replace_channel`, or appends it
/// as a new last channel when no channel is given. The background descriptor
/// gets 0 in that channel.
inline DescriptorImage with_mask_ramp(const DescriptorImage& image, std::optional<int> replace_channel = std::nullopt)
{
    const std::vector<float> ramp = mask_ramp(image);
    if (replace_channel) {
        if (*replace_channel < 0 || *replace_channel >= image.channels)
            fail(ErrorCode::InvalidArgument, "mask ramp channel out of range");
        DescriptorImage out = image;
        for (std::size_t p = 0; p < image.pixel_count(); ++p)
            out.descriptors[p * image.channels + static_cast<std::size_t>(*replace_channel)] = ramp[p];
        if (out.background.size() == static_cast<std::size_t>(image.channels))
            out.background[static_cast<std::size_t>(*replace_channel)] = 0.0f;
        return out;
    }
    DescriptorImage out = image;
    const int dims = image.channels + 1;
    out.channels = dims;
    out.descriptors.assign(image.pixel_count() * static_cast<std::size_t>(dims), 0.0f);
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
        std::copy_n(image.descriptors.begin() + static_cast<std::ptrdiff_t>(p * image.channels), image.channels,
                    out.descriptors.begin() + static_cast<std::ptrdiff_t>(p * dims));
        out.descriptors[p * dims + static_cast<std::size_t>(image.channels)] = ramp[p];
    }
    out.background.push_back(0.0f);
    return out;
}

} // namespace descforge
