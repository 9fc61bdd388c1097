#pragma once

#include <vector>

#include "assetgen/mesh.hpp"

namespace assetgen::detail
{
    // Half-edge-free mutable triangle mesh for local topology edits. Faces and
    // vertices are tombstoned on removal; compact() renumbers.
    class EditableMesh
    {
    public:
        explicit EditableMesh(const TriangleMesh& mesh);

        std::vector<Vec3> pos;
        std::vector<Face> faces;
        std::vector<char> face_alive;
        std::vector<char> vert_alive;
        std::vector<std::vector<int>> vface;
        std::vector<char> boundary; // vertex touches a boundary edge; fixed at construction
        size_t original_vertices = 0;

        size_t live_faces() const { return live_faces_; }
        size_t live_vertices() const { return live_vertices_; }

        std::vector<int> neighbors(int v) const;
        int valence(int v) const { return static_cast<int>(neighbors(v).size()); }
        // Faces containing both a and b.
        std::vector<int> edge_faces(int a, int b) const;
        bool has_edge(int a, int b) const;
        // Vertex of face f that is neither a nor b.
        int third(int f, int a, int b) const;
        // All live undirected edges (a < b).
        std::vector<std::array<int, 2>> edges() const;
        double length(int a, int b) const { return (pos[a] - pos[b]).norm(); }
        Vec3 normal(int f) const;
        Vec3 vertex_normal(int v) const;

        // Inserts the midpoint of an interior edge; returns the new vertex.
        int split(int a, int b);

        // Legality of merging b into a with a placed at p. max_length <= 0 disables
        // the edge-length bound.
        bool can_collapse(int a, int b, const Vec3& p, double max_length) const;
        void collapse(int a, int b, const Vec3& p);

        // Legality and effect of replacing edge (a,b) by the opposite diagonal.
        // `require_improvement` adds the valence-deviation test.
        bool can_flip(int a, int b, double max_length, bool require_improvement) const;
        void flip(int a, int b);

        // Moves v to p if all incident faces keep orientation and area and no
        // incident edge exceeds max_length.
        bool try_move(int v, const Vec3& p, double max_length);

        // provenance: old vertex -> new index or -1 (only for the first `original_vertices`).
        TriangleMesh compact(std::vector<int>* provenance) const;

    private:
        void remove_face_ref(int v, int f);
        size_t live_faces_ = 0;
        size_t live_vertices_ = 0;
    };
} // namespace assetgen::detail
