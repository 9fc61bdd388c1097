#include "assetgen/mesh.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "assetgen/errors.hpp"

namespace assetgen
{
    namespace
    {
        struct DisjointSet
        {
            std::vector<int> parent;

            explicit DisjointSet(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

            int find(int x)
            {
                while (parent[x] != x)
                {
                    parent[x] = parent[parent[x]];
                    x = parent[x];
                }
                return x;
            }

            void unite(int a, int b)
            {
                a = find(a);
                b = find(b);
                if (a != b)
                {
                    parent[std::max(a, b)] = std::min(a, b);
                }
            }
        };
    } // namespace

    MeshAdjacency MeshAdjacency::build(const TriangleMesh& mesh)
    {
        MeshAdjacency adj;
        const size_t nv = mesh.vertices.size();
        adj.neighbors.resize(nv);
        adj.vertex_faces.resize(nv);
        adj.face_edges.resize(mesh.faces.size());

        // (v0, v1, face, corner) sorted gives a deterministic edge table.
        std::vector<std::tuple<int, int, int, int>> half;
        half.reserve(mesh.faces.size() * 3);
        for (size_t f = 0; f < mesh.faces.size(); ++f)
        {
            const Face& face = mesh.faces[f];
            for (int k = 0; k < 3; ++k)
            {
                const int a = face[k];
                const int b = face[(k + 1) % 3];
                half.emplace_back(std::min(a, b), std::max(a, b), static_cast<int>(f), k);
                adj.vertex_faces[a].push_back(static_cast<int>(f));
            }
        }
        std::sort(half.begin(), half.end());

        for (size_t i = 0; i < half.size();)
        {
            const auto [a, b, f, k] = half[i];
            EdgeRecord edge;
            edge.v0 = a;
            edge.v1 = b;
            const int edge_index = static_cast<int>(adj.edges.size());
            size_t j = i;
            while (j < half.size() && std::get<0>(half[j]) == a && std::get<1>(half[j]) == b)
            {
                edge.faces.push_back(std::get<2>(half[j]));
                adj.face_edges[std::get<2>(half[j])][std::get<3>(half[j])] = edge_index;
                ++j;
            }
            if (a != b)
            {
                adj.neighbors[a].push_back(b);
                adj.neighbors[b].push_back(a);
            }
            adj.edges.push_back(std::move(edge));
            i = j;
        }

        for (auto& list : adj.neighbors)
        {
            std::sort(list.begin(), list.end());
            list.erase(std::unique(list.begin(), list.end()), list.end());
        }
        for (auto& list : adj.vertex_faces)
        {
            std::sort(list.begin(), list.end());
            list.erase(std::unique(list.begin(), list.end()), list.end());
        }
        return adj;
    }

    std::string ManifoldReport::summary() const
    {
        std::ostringstream os;
        os << "V=" << vertices << " E=" << edges << " F=" << faces << " chi=" << euler_characteristic
           << " boundary_edges=" << boundary_edges << " non_manifold_edges=" << non_manifold_edges
           << " orientation_conflicts=" << orientation_conflicts << " non_manifold_vertices=" << non_manifold_vertices
           << " isolated_vertices=" << isolated_vertices << " duplicated_faces=" << duplicated_faces
           << " degenerate_faces=" << degenerate_faces;
        return os.str();
    }

    void check_indices(const TriangleMesh& mesh)
    {
        const int nv = static_cast<int>(mesh.vertices.size());
        for (size_t f = 0; f < mesh.faces.size(); ++f)
        {
            for (int idx : mesh.faces[f])
            {
                if (idx < 0 || idx >= nv)
                {
                    std::ostringstream os;
                    os << "face " << f << " references vertex " << idx << " but the mesh has " << nv << " vertices";
                    throw DataError(os.str());
                }
            }
        }
        if (!mesh.colors.empty() && mesh.colors.size() != mesh.vertices.size())
        {
            throw DataError("vertex color count does not match vertex count");
        }
    }

    ManifoldReport validate_manifold(const TriangleMesh& mesh)
    {
        check_indices(mesh);
        ManifoldReport report;
        const size_t nv = mesh.vertices.size();

        std::map<std::array<int, 3>, int> face_sets;
        for (const Face& f : mesh.faces)
        {
            if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
            {
                ++report.degenerate_faces;
            }
            std::array<int, 3> key = f;
            std::sort(key.begin(), key.end());
            if (++face_sets[key] == 2)
            {
                ++report.duplicated_faces;
            }
        }

        const MeshAdjacency adj = MeshAdjacency::build(mesh);
        for (const EdgeRecord& e : adj.edges)
        {
            if (e.faces.size() == 1)
            {
                ++report.boundary_edges;
            }
            else if (e.faces.size() > 2)
            {
                ++report.non_manifold_edges;
            }
            else
            {
                // Consistent orientation: the two faces traverse the edge in opposite directions.
                auto direction = [&](int face) {
                    const Face& f = mesh.faces[face];
                    for (int k = 0; k < 3; ++k)
                    {
                        if (f[k] == e.v0 && f[(k + 1) % 3] == e.v1)
                        {
                            return 1;
                        }
                        if (f[k] == e.v1 && f[(k + 1) % 3] == e.v0)
                        {
                            return -1;
                        }
                    }
                    return 0;
                };
                if (direction(e.faces[0]) == direction(e.faces[1]))
                {
                    ++report.orientation_conflicts;
                }
            }
        }

        for (size_t v = 0; v < nv; ++v)
        {
            const auto& faces = adj.vertex_faces[v];
            if (faces.empty())
            {
                ++report.isolated_vertices;
                continue;
            }
            // The link of v: one edge (b, c) per incident face. It must be a single path or cycle.
            std::map<int, int> local;
            std::vector<std::pair<int, int>> link;
            for (int fi : faces)
            {
                const Face& f = mesh.faces[fi];
                int k = 0;
                while (k < 3 && f[k] != static_cast<int>(v))
                {
                    ++k;
                }
                const int b = f[(k + 1) % 3];
                const int c = f[(k + 2) % 3];
                local.try_emplace(b, static_cast<int>(local.size()));
                local.try_emplace(c, static_cast<int>(local.size()));
                link.emplace_back(local[b], local[c]);
            }
            DisjointSet ds(local.size());
            std::vector<int> degree(local.size(), 0);
            for (auto [b, c] : link)
            {
                ++degree[b];
                ++degree[c];
                ds.unite(b, c);
            }
            bool ok = std::all_of(degree.begin(), degree.end(), [](int d) { return d <= 2; });
            for (size_t i = 0; i < local.size() && ok; ++i)
            {
                ok = ds.find(static_cast<int>(i)) == 0;
            }
            if (!ok)
            {
                ++report.non_manifold_vertices;
            }
        }

        report.vertices = static_cast<long long>(nv);
        report.edges = static_cast<long long>(adj.edges.size());
        report.faces = static_cast<long long>(mesh.faces.size());
        report.euler_characteristic = report.vertices - report.edges + report.faces;
        return report;
    }

    BoundingBox bounding_box(const TriangleMesh& mesh)
    {
        BoundingBox box;
        if (mesh.vertices.empty())
        {
            return box;
        }
        box.min = box.max = mesh.vertices.front();
        for (const Vec3& v : mesh.vertices)
        {
            box.min = box.min.cwiseMin(v);
            box.max = box.max.cwiseMax(v);
        }
        return box;
    }

    NormalizedMesh normalize_to_unit(const TriangleMesh& mesh)
    {
        NormalizedMesh out;
        out.mesh = mesh;
        if (mesh.vertices.empty())
        {
            return out;
        }
        const BoundingBox box = bounding_box(mesh);
        out.center = box.center();
        const double extent = box.extent().maxCoeff();
        out.scale = extent > 0.0 ? extent : 1.0;
        for (Vec3& v : out.mesh.vertices)
        {
            v = (v - out.center) / out.scale;
        }
        return out;
    }

    Vec3 face_normal(const TriangleMesh& mesh, int face)
    {
        const Face& f = mesh.faces[face];
        const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
        const double len = n.norm();
        return len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
    }

    double face_area(const TriangleMesh& mesh, int face)
    {
        const Face& f = mesh.faces[face];
        return 0.5 * (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]).norm();
    }

    double surface_area(const TriangleMesh& mesh)
    {
        double area = 0.0;
        for (size_t f = 0; f < mesh.faces.size(); ++f)
        {
            area += face_area(mesh, static_cast<int>(f));
        }
        return area;
    }

    std::vector<Vec3> compute_vertex_normals(const TriangleMesh& mesh)
    {
        std::vector<Vec3> sums(mesh.vertices.size(), Vec3::Zero());
        for (const Face& f : mesh.faces)
        {
            // The unnormalized cross product carries twice the face area.
            const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
            for (int idx : f)
            {
                sums[idx] += n;
            }
        }
        for (Vec3& n : sums)
        {
            const double len = n.norm();
            n = len > 1e-300 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
        }
        return sums;
    }

    TriangleMesh remove_unreferenced_vertices(const TriangleMesh& mesh)
    {
        std::vector<int> remap(mesh.vertices.size(), -1);
        for (const Face& f : mesh.faces)
        {
            for (int idx : f)
            {
                remap[idx] = 0;
            }
        }
        TriangleMesh out;
        for (size_t v = 0; v < mesh.vertices.size(); ++v)
        {
            if (remap[v] == 0)
            {
                remap[v] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[v]);
                if (mesh.has_colors())
                {
                    out.colors.push_back(mesh.colors[v]);
                }
            }
        }
        out.faces.reserve(mesh.faces.size());
        for (const Face& f : mesh.faces)
        {
            out.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
        }
        return out;
    }

    std::pair<std::vector<int>, int> vertex_components(const TriangleMesh& mesh)
    {
        DisjointSet ds(mesh.vertices.size());
        for (const Face& f : mesh.faces)
        {
            ds.unite(f[0], f[1]);
            ds.unite(f[1], f[2]);
        }
        std::vector<int> label(mesh.vertices.size(), -1);
        std::vector<int> root_label(mesh.vertices.size(), -1);
        int count = 0;
        for (size_t v = 0; v < mesh.vertices.size(); ++v)
        {
            const int r = ds.find(static_cast<int>(v));
            if (root_label[r] < 0)
            {
                root_label[r] = count++;
            }
            label[v] = root_label[r];
        }
        return {label, count};
    }
} // namespace assetgen
