#pragma once

#include <optional>
#include <string>
#include <vector>

#include "assetgen/types.hpp"

namespace assetgen
{
    // Indexed triangle mesh. Faces are counter-clockwise when seen from outside.
    // `colors` is either empty or holds one linear RGB value in [0,1] per vertex.
    struct TriangleMesh
    {
        std::vector<Vec3> vertices;
        std::vector<Face> faces;
        std::vector<Vec3> colors;

        size_t vertex_count() const { return vertices.size(); }
        size_t face_count() const { return faces.size(); }
        bool has_colors() const { return !colors.empty() && colors.size() == vertices.size(); }
        bool empty() const { return vertices.empty(); }
    };

    struct EdgeRecord
    {
        int v0 = 0; // v0 < v1
        int v1 = 0;
        // Incident faces in ascending face index. Manifold interior edges have two.
        std::vector<int> faces;
    };

    // Topology tables derived from a TriangleMesh. Neighbor and incident-face
    // lists are sorted ascending, so the derivation is deterministic.
    struct MeshAdjacency
    {
        std::vector<std::vector<int>> neighbors;
        std::vector<std::vector<int>> vertex_faces;
        std::vector<EdgeRecord> edges;
        // For each face, the index into `edges` of edge (f[k], f[k+1]).
        std::vector<std::array<int, 3>> face_edges;

        static MeshAdjacency build(const TriangleMesh& mesh);
    };

    struct ManifoldReport
    {
        size_t non_manifold_edges = 0;  // edges bounding more than two faces
        size_t boundary_edges = 0;
        size_t orientation_conflicts = 0; // interior edges traversed twice in the same direction
        size_t isolated_vertices = 0;
        size_t duplicated_faces = 0;
        size_t non_manifold_vertices = 0; // incident faces do not form one fan or disk
        size_t degenerate_faces = 0;      // a face repeats a vertex
        long long vertices = 0;
        long long edges = 0;
        long long faces = 0;
        long long euler_characteristic = 0;

        bool is_manifold() const
        {
            return non_manifold_edges == 0 && orientation_conflicts == 0 && non_manifold_vertices == 0 && duplicated_faces == 0 &&
                   degenerate_faces == 0;
        }
        bool is_closed_manifold() const { return is_manifold() && boundary_edges == 0; }
        std::string summary() const;
    };

    // Throws DataError when a face index is out of range.
    void check_indices(const TriangleMesh& mesh);

    ManifoldReport validate_manifold(const TriangleMesh& mesh);

    struct NormalizedMesh
    {
        TriangleMesh mesh;
        double scale = 1.0; // original = normalized * scale + center
        Vec3 center = Vec3::Zero();
    };

    // Centers the bounding box at the origin and scales its largest extent to 1.
    // A mesh with zero extent is only translated and reports scale 1.
    NormalizedMesh normalize_to_unit(const TriangleMesh& mesh);

    Vec3 face_normal(const TriangleMesh& mesh, int face);
    double face_area(const TriangleMesh& mesh, int face);
    double surface_area(const TriangleMesh& mesh);

    // Area-weighted unit vertex normals. Vertices without any non-degenerate face get +Z.
    std::vector<Vec3> compute_vertex_normals(const TriangleMesh& mesh);

    struct BoundingBox
    {
        Vec3 min = Vec3::Constant(0.0);
        Vec3 max = Vec3::Constant(0.0);

        Vec3 center() const { return 0.5 * (min + max); }
        Vec3 extent() const { return max - min; }
    };

    BoundingBox bounding_box(const TriangleMesh& mesh);

    // Removes vertices no face references; keeps relative order.
    TriangleMesh remove_unreferenced_vertices(const TriangleMesh& mesh);

    // Connected components over face adjacency; returns a component id per vertex
    // (isolated vertices get their own component) and the component count.
    std::pair<std::vector<int>, int> vertex_components(const TriangleMesh& mesh);
} // namespace assetgen
