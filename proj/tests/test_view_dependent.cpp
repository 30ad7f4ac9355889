#include "oracles.hpp"
#include "test_helpers.hpp"

#include <cmath>

using namespace descforge;
using Catch::Approx;

namespace {

/// Image with the given mask, constant object descriptor `obj` and background `bg`.
DescriptorImage synthetic(int w, int h, const std::vector<std::uint8_t>& mask, std::vector<float> obj, std::vector<float> bg)
{
    const int dims = static_cast<int>(obj.size());
    DescriptorImage img(w, h, dims);
    img.mask = mask;
    img.background = bg;
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const auto& src = mask[p] ? obj : bg;
        std::copy(src.begin(), src.end(), img.descriptors.begin() + static_cast<std::ptrdiff_t>(p * dims));
        img.depth[p] = mask[p] ? static_cast<std::uint16_t>(1000 + p) : 0;
    }
    return img;
}

std::vector<std::uint8_t> disk_mask(int w, int h, double cx, double cy, double radius)
{
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            mask[static_cast<std::size_t>(v) * w + u] = std::hypot(u - cx, v - cy) <= radius;
    return mask;
}

} // namespace

TEST_CASE("edge blend on a 5x5 full mask with band 2")
{
    const DescriptorImage img = synthetic(5, 5, std::vector<std::uint8_t>(25, 1), {0.9f, 0.3f}, {0.0f, 1.0f});
    const DescriptorImage out = blend_edges(img, 2);
    // Border ring: t = 1, alpha = 1/3.
    CHECK(out.descriptor(0, 2)[0] == Approx(0.3).margin(1e-6));
    CHECK(out.descriptor(0, 2)[1] == Approx(0.3 / 3 + 2.0 / 3).margin(1e-6));
    // Second ring: t = 2, alpha = 2/3.
    CHECK(out.descriptor(1, 1)[0] == Approx(0.6).margin(1e-6));
    // Center: t = 3 > band, unchanged.
    CHECK(out.descriptor(2, 2)[0] == 0.9f);
    CHECK(out.descriptor(2, 2)[1] == 0.3f);
}

TEST_CASE("chessboard distance counts diagonal neighbours")
{
    std::vector<std::uint8_t> mask(49, 1);
    mask[0] = 0; // corner hole
    DescriptorImage img = synthetic(7, 7, mask, {1.0f}, {0.0f});
    const std::vector<int> dist = chessboard_distance(img);
    CHECK(dist[img.index(3, 3)] == 3);
    CHECK(dist[img.index(4, 4)] == 3);
    CHECK(dist[img.index(5, 3)] == 2);
    CHECK(dist[img.index(1, 1)] == 1);
    CHECK(dist[img.index(0, 0)] == 0);
}

TEST_CASE("objects thinner than the band are blended everywhere")
{
    std::vector<std::uint8_t> mask(20 * 20, 0);
    for (int u = 2; u < 18; ++u)
        for (int v = 9; v < 12; ++v)
            mask[static_cast<std::size_t>(v) * 20 + u] = 1;
    const DescriptorImage img = synthetic(20, 20, mask, {1.0f}, {0.0f});
    const DescriptorImage out = blend_edges(img, 4);
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        if (mask[p])
            CHECK(out.descriptors[p] < 1.0f);
}

TEST_CASE("interior pixels beyond the band are untouched")
{
    const auto mask = disk_mask(40, 40, 20, 20, 15);
    const DescriptorImage img = synthetic(40, 40, mask, {0.25f, 0.75f}, {1.0f, 0.0f});
    const DescriptorImage out = blend_edges(img, 3);
    const std::vector<int> dist = chessboard_distance(img);
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        if (dist[p] > 3 || dist[p] == 0) {
            CHECK(out.descriptors[2 * p] == img.descriptors[2 * p]);
            CHECK(out.descriptors[2 * p + 1] == img.descriptors[2 * p + 1]);
        }
}

TEST_CASE("view-dependent ops leave mask and depth bitwise unchanged")
{
    const auto mask = disk_mask(32, 24, 15, 11, 8);
    const DescriptorImage img = synthetic(32, 24, mask, {0.5f, 0.5f, 0.5f}, {1, 1, 1});
    for (const DescriptorImage& out : {blend_edges(img, 2), with_mask_ramp(img), with_mask_ramp(img, 1)}) {
        CHECK(out.mask == img.mask);
        CHECK(out.depth == img.depth);
    }
    CHECK(testing::error_code_of([&] { blend_edges(img, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("mask ramp of a single pixel")
{
    std::vector<std::uint8_t> mask(9 * 9, 0);
    mask[4 * 9 + 4] = 1;
    const std::vector<float> ramp = mask_ramp(synthetic(9, 9, mask, {1.0f}, {0.0f}));
    for (std::size_t p = 0; p < ramp.size(); ++p)
        CHECK(ramp[p] == (mask[p] ? 1.0f : 0.0f));
}

TEST_CASE("mask ramp of a full frame peaks at the center")
{
    const DescriptorImage img = synthetic(21, 15, std::vector<std::uint8_t>(21 * 15, 1), {1.0f}, {0.0f});
    const std::vector<float> ramp = mask_ramp(img);
    CHECK(ramp[img.index(10, 7)] == 1.0f);
    CHECK(ramp[img.index(0, 0)] == Approx(1.0 / 8.0));
    CHECK(*std::max_element(ramp.begin(), ramp.end()) == 1.0f);
}

TEST_CASE("mask ramp of a disk matches the analytic and brute-force transforms")
{
    const int size = 121;
    const double c = 60.0, radius = 50.0;
    const auto mask = disk_mask(size, size, c, c, radius);
    const DescriptorImage img = synthetic(size, size, mask, {1.0f}, {0.0f});
    const std::vector<float> ramp = mask_ramp(img);
    const std::vector<double> edt = euclidean_distance(img);
    const std::vector<double> oracle_edt = oracle::brute_force_edt(mask, size, size);
    double edt_error = 0.0, analytic_error = 0.0;
    for (int v = 0; v < size; ++v)
        for (int u = 0; u < size; ++u) {
            const std::size_t p = img.index(u, v);
            edt_error = std::max(edt_error, std::abs(edt[p] - oracle_edt[p]));
            if (mask[p]) {
                const double r = std::hypot(u - c, v - c);
                analytic_error = std::max(analytic_error, std::abs(ramp[p] - (radius - r) / radius));
            } else {
                CHECK(ramp[p] == 0.0f);
            }
        }
    CHECK(edt_error < 1e-9);
    CHECK(analytic_error <= 1.5 / radius);
    CHECK(ramp[img.index(60, 60)] == 1.0f);
}

TEST_CASE("mask ramp channel placement")
{
    const auto mask = disk_mask(16, 16, 8, 8, 5);
    const DescriptorImage img = synthetic(16, 16, mask, {0.2f, 0.4f}, {0.9f, 0.1f});
    const std::vector<float> ramp = mask_ramp(img);

    const DescriptorImage appended = with_mask_ramp(img);
    REQUIRE(appended.channels == 3);
    CHECK(appended.background == std::vector<float>{0.9f, 0.1f, 0.0f});
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        CHECK(appended.descriptors[3 * p] == img.descriptors[2 * p]);
        CHECK(appended.descriptors[3 * p + 2] == ramp[p]);
    }

    const DescriptorImage replaced = with_mask_ramp(img, 0);
    REQUIRE(replaced.channels == 2);
    CHECK(replaced.background == std::vector<float>{0.0f, 0.1f});
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        CHECK(replaced.descriptors[2 * p] == ramp[p]);
    CHECK(testing::error_code_of([&] { with_mask_ramp(img, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("mask ramp needs a non-empty mask")
{
    const DescriptorImage img = synthetic(8, 8, std::vector<std::uint8_t>(64, 0), {1.0f}, {0.0f});
    CHECK(testing::error_code_of([&] { mask_ramp(img); }) == ErrorCode::EmptyMask);
}
