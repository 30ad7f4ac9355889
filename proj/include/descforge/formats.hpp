#pragma once

#include "descforge/embedding.hpp"
#include "descforge/error.hpp"
#include "descforge/raster.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

// Binary containers (little-endian throughout):
//   .dfld  "DFLD" u32 version=1, u32 N, u32 D, u8 normalized,
//          [D x f32 background if normalized], D*N f32 row-major.
//   .dimg  "DDIF" u32 version=1, u32 h, u32 w, u32 D, h*w*D f32 channel-last.

namespace descforge {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace detail {

class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path) : m_out(path, std::ios::binary), m_path(path)
    {
        if (!m_out)
            fail(ErrorCode::IoError, "cannot write " + path.string());
    }

    template <typename T>
    void put(T value)
    {
        m_out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }

    void bytes(const void* data, std::size_t size) { m_out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size)); }

    void finish()
    {
        m_out.flush();
        if (!m_out)
            fail(ErrorCode::IoError, "write failed for " + m_path.string());
    }

private:
    std::ofstream m_out;
    std::filesystem::path m_path;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path) : m_in(path, std::ios::binary), m_path(path)
    {
        if (!m_in)
            fail(ErrorCode::IoError, "cannot open " + path.string());
    }

    template <typename T>
    T get()
    {
        T value{};
        m_in.read(reinterpret_cast<char*>(&value), sizeof(T));
        if (!m_in)
            fail(ErrorCode::ParseError, "truncated file " + m_path.string());
        return value;
    }

    void bytes(void* data, std::size_t size)
    {
        m_in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
        if (!m_in)
            fail(ErrorCode::ParseError, "truncated file " + m_path.string());
    }

    /// Fails unless exactly `size` payload bytes follow the current position.
    void expect_remaining(std::uintmax_t size)
    {
        const auto here = static_cast<std::uintmax_t>(m_in.tellg());
        if (std::filesystem::file_size(m_path) - here != size)
            fail(ErrorCode::ParseError, m_path.string() + ": payload size does not match the header");
    }

    void expect_magic(const char (&magic)[5])
    {
        char got[4];
        bytes(got, 4);
        if (std::memcmp(got, magic, 4) != 0)
            fail(ErrorCode::ParseError, m_path.string() + " does not start with " + magic);
    }

private:
    std::ifstream m_in;
    std::filesystem::path m_path;
};

} // namespace detail

inline void write_descriptor_field(const DescriptorField& field, const std::filesystem::path& path)
{
    if (field.normalized && !field.background)
        fail(ErrorCode::MissingBackground, "normalized fields are stored with their background descriptor");
    detail::BinaryWriter out(path);
    out.bytes("DFLD", 4);
    out.put<std::uint32_t>(1);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(field.vertex_count()));
    out.put<std::uint32_t>(static_cast<std::uint32_t>(field.dimension()));
    out.put<std::uint8_t>(field.normalized ? 1 : 0);
    if (field.normalized)
        for (Eigen::Index d = 0; d < field.dimension(); ++d)
            out.put<float>(static_cast<float>((*field.background)[d]));
    for (Eigen::Index d = 0; d < field.dimension(); ++d)
        for (Eigen::Index v = 0; v < field.vertex_count(); ++v)
            out.put<float>(static_cast<float>(field.values(d, v)));
    out.finish();
}

inline DescriptorField read_descriptor_field(const std::filesystem::path& path)
{
    detail::BinaryReader in(path);
    in.expect_magic("DFLD");
    if (auto version = in.get<std::uint32_t>(); version != 1)
        fail(ErrorCode::ParseError, "unsupported DFLD version " + std::to_string(version));
    const auto n = in.get<std::uint32_t>();
    const auto dims = in.get<std::uint32_t>();
    DescriptorField field;
    field.normalized = in.get<std::uint8_t>() != 0;
    in.expect_remaining((std::uintmax_t{field.normalized ? 1u : 0u} + std::uintmax_t{n}) * dims * sizeof(float));
    if (field.normalized) {
        Eigen::VectorXd bg(dims);
        for (std::uint32_t d = 0; d < dims; ++d)
            bg[d] = in.get<float>();
        field.background = bg;
    }
    field.values.resize(dims, n);
    for (std::uint32_t d = 0; d < dims; ++d)
        for (std::uint32_t v = 0; v < n; ++v)
            field.values(d, v) = in.get<float>();
    field.sources.assign(dims, DimensionSource::Eigenvector);
    return field;
}

inline void write_descriptor_image(const DescriptorImage& image, const std::filesystem::path& path)
{
    detail::BinaryWriter out(path);
    out.bytes("DDIF", 4);
    out.put<std::uint32_t>(1);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(image.height));
    out.put<std::uint32_t>(static_cast<std::uint32_t>(image.width));
    out.put<std::uint32_t>(static_cast<std::uint32_t>(image.channels));
    out.bytes(image.descriptors.data(), image.descriptors.size() * sizeof(float));
    out.finish();
}

/// Reads descriptors only; mask, depth and metadata are left empty/default.
inline DescriptorImage read_descriptor_image(const std::filesystem::path& path)
{
    detail::BinaryReader in(path);
    in.expect_magic("DDIF");
    if (auto version = in.get<std::uint32_t>(); version != 1)
        fail(ErrorCode::ParseError, "unsupported DDIF version " + std::to_string(version));
    const auto h = in.get<std::uint32_t>();
    const auto w = in.get<std::uint32_t>();
    const auto d = in.get<std::uint32_t>();
    in.expect_remaining(std::uintmax_t{h} * w * d * sizeof(float));
    DescriptorImage image(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d));
    in.bytes(image.descriptors.data(), image.descriptors.size() * sizeof(float));
    return image;
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

/// Interleaved 8- or 16-bit raster; 16-bit samples are stored big-endian in the
/// file but kept native here.
struct PngImage {
    int width = 0;
    int height = 0;
    int channels = 1; // 1 = gray, 3 = RGB
    int bit_depth = 8;
    std::vector<std::uint8_t> data8;
    std::vector<std::uint16_t> data16;
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

/// libpng message sink: errors are kept for the thrown Error, warnings dropped.
using PngMessage = std::array<char, 256>;

inline void png_error_sink(png_structp png, png_const_charp message)
{
    auto* buffer = static_cast<PngMessage*>(png_get_error_ptr(png));
    std::snprintf(buffer->data(), buffer->size(), "%s", message);
    png_longjmp(png, 1);
}

inline void png_warning_sink(png_structp, png_const_charp) {}

} // namespace detail

inline void write_png(const PngImage& image, const std::filesystem::path& path)
{
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.string().c_str(), "wb"));
    if (!file)
        fail(ErrorCode::IoError, "cannot write " + path.string());
    detail::PngMessage message{};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, detail::png_error_sink, detail::png_warning_sink);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::IoError, "libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::IoError, "libpng failed writing " + path.string() + ": " + message.data());
    }
    png_init_io(png, file.get());
    png_set_compression_level(png, 3);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), image.bit_depth,
                 image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t row_samples = static_cast<std::size_t>(image.width) * image.channels;
    std::vector<std::uint8_t> row(row_samples * (image.bit_depth == 16 ? 2 : 1));
    for (int y = 0; y < image.height; ++y) {
        if (image.bit_depth == 16) {
            for (std::size_t i = 0; i < row_samples; ++i) {
                const std::uint16_t s = image.data16[static_cast<std::size_t>(y) * row_samples + i];
                row[2 * i] = static_cast<std::uint8_t>(s >> 8);
                row[2 * i + 1] = static_cast<std::uint8_t>(s & 0xff);
            }
        } else {
            std::memcpy(row.data(), image.data8.data() + static_cast<std::size_t>(y) * row_samples, row_samples);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline PngImage read_png(const std::filesystem::path& path)
{
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.string().c_str(), "rb"));
    if (!file)
        fail(ErrorCode::IoError, "cannot open " + path.string());
    detail::PngMessage message{};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, detail::png_error_sink, detail::png_warning_sink);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::IoError, "libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::ParseError, "libpng failed reading " + path.string() + ": " + message.data());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    PngImage image;
    image.width = static_cast<int>(png_get_image_width(png, info));
    image.height = static_cast<int>(png_get_image_height(png, info));
    image.bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if ((color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB) || (image.bit_depth != 8 && image.bit_depth != 16)) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::ParseError, "only 8/16-bit gray or RGB PNGs are supported: " + path.string());
    }
    image.channels = color == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t row_samples = static_cast<std::size_t>(image.width) * image.channels;
    std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
    if (image.bit_depth == 16)
        image.data16.resize(row_samples * image.height);
    else
        image.data8.resize(row_samples * image.height);
    for (int y = 0; y < image.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        if (image.bit_depth == 16)
            for (std::size_t i = 0; i < row_samples; ++i)
                image.data16[static_cast<std::size_t>(y) * row_samples + i] = static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]);
        else
            std::memcpy(image.data8.data() + static_cast<std::size_t>(y) * row_samples, row.data(), row_samples);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

inline PngImage depth_png(const DescriptorImage& image)
{
    PngImage png{image.width, image.height, 1, 16, {}, image.depth};
    return png;
}

inline PngImage mask_png(const DescriptorImage& image)
{
    PngImage png{image.width, image.height, 1, 8, std::vector<std::uint8_t>(image.pixel_count()), {}};
    for (std::size_t i = 0; i < image.pixel_count(); ++i)
        png.data8[i] = image.mask[i] ? 255 : 0;
    return png;
}

/// RGB preview of the first three descriptor channels (missing channels are 0).
inline PngImage descriptor_preview_png(const DescriptorImage& image)
{
    PngImage png{image.width, image.height, 3, 8, std::vector<std::uint8_t>(image.pixel_count() * 3, 0), {}};
    const int shown = std::min(3, image.channels);
    for (std::size_t p = 0; p < image.pixel_count(); ++p)
        for (int c = 0; c < shown; ++c) {
            const float value = std::clamp(image.descriptors[p * image.channels + static_cast<std::size_t>(c)], 0.0f, 1.0f);
            png.data8[p * 3 + static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::lround(value * 255.0f));
        }
    return png;
}

} // namespace descforge
