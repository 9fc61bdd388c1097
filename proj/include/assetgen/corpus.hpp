#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "assetgen/mesh.hpp"

namespace assetgen
{
    // Bundled reference shapes, one OBJ each under data/corpus.
    const std::vector<std::string>& corpus_shapes();

    // Loads <dir>/<name>.obj and normalizes it to the unit box. Throws DataError for an
    // unknown name or a missing file.
    TriangleMesh load_corpus_shape(const std::filesystem::path& dir, const std::string& name);

    // Smooth position-based color field in [0.1, 0.9], for ground-truth colored references.
    TriangleMesh with_procedural_colors(const TriangleMesh& mesh, double frequency = 4.0);
} // namespace assetgen
