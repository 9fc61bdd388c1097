#include "assetgen/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "assetgen/errors.hpp"
#include "assetgen/mesh_io.hpp"

namespace assetgen
{
    const std::vector<std::string>& corpus_shapes()
    {
        static const std::vector<std::string> names = {"cube", "icosphere", "torus", "bunny"};
        return names;
    }

    TriangleMesh load_corpus_shape(const std::filesystem::path& dir, const std::string& name)
    {
        const auto& names = corpus_shapes();
        if (std::find(names.begin(), names.end(), name) == names.end())
        {
            throw DataError("unknown corpus shape '" + name + "'");
        }
        const std::filesystem::path path = dir / (name + ".obj");
        if (!std::filesystem::exists(path))
        {
            throw DataError("corpus file not found: " + path.string());
        }
        return normalize_to_unit(load_mesh(path)).mesh;
    }

    TriangleMesh with_procedural_colors(const TriangleMesh& mesh, double frequency)
    {
        TriangleMesh out = mesh;
        out.colors.resize(mesh.vertex_count());
        const double k = frequency;
        for (size_t i = 0; i < mesh.vertex_count(); ++i)
        {
            const Vec3& p = mesh.vertices[i];
            out.colors[i] = Vec3(0.5 + 0.4 * std::sin(k * p.x() + 0.3), 0.5 + 0.4 * std::cos(k * p.y() - 0.2), 0.5 + 0.4 * std::sin(k * (p.z() + p.x())));
        }
        return out;
    }
} // namespace assetgen
