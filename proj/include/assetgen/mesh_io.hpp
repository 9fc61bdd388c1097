#pragma once

#include <filesystem>
#include <vector>

#include "assetgen/mesh.hpp"

namespace assetgen
{
    // Loads OBJ (v/f records; `v x y z r g b` carries a vertex color) or binary
    // little-endian PLY. Polygons are fan-triangulated. Colors are stored as
    // 8-bit sRGB in files and decoded to linear RGB in memory.
    // Throws DataError with a line number (OBJ) or byte offset (PLY) on malformed input.
    TriangleMesh load_mesh(const std::filesystem::path& path);

    struct SaveOptions
    {
        // Optional per-vertex integer written as a `view_id` PLY property.
        const std::vector<int>* vertex_view_ids = nullptr;
    };

    // Format is chosen by extension (.obj or .ply).
    void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, const SaveOptions& options = {});
} // namespace assetgen
