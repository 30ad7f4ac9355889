#pragma once

#include "descforge/descforge.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace testing {

/// Fresh scratch directory under the system temp dir, unique per process.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("descforge_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline descforge::TriangleMesh tetrahedron()
{
    descforge::TriangleMesh mesh;
    mesh.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    mesh.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    return mesh;
}

template <typename F>
descforge::ErrorCode error_code_of(F&& f)
{
    try {
        f();
    } catch (const descforge::Error& e) {
        return e.code();
    }
    FAIL("expected a descforge::Error");
    return descforge::ErrorCode::IoError;
}

} // namespace testing
