#pragma once

#include <map>
#include <vector>

#include "assetgen/mesh.hpp"

namespace assetgen
{
    struct RemeshParams
    {
        double target_edge_length = 0.05;
        double split_factor = 4.0 / 3.0;
        double collapse_factor = 4.0 / 5.0;
        double smoothing_lambda = 0.5;
        size_t max_valence_flips = 1u << 24;

        // Throws ConfigError unless 0 < collapse_factor < 1 < split_factor,
        // target > 0 and 0 < smoothing_lambda < 1.
        void validate() const;
        double split_length() const { return split_factor * target_edge_length; }
        double collapse_length() const { return collapse_factor * target_edge_length; }
    };

    struct RemeshResult
    {
        TriangleMesh mesh;
        // For every input vertex, its index in `mesh`, or -1 if it was collapsed away.
        // Output vertices no input vertex maps to were created by splits.
        std::vector<int> provenance;
    };

    struct RemeshStageCounts
    {
        size_t splits = 0;
        size_t collapses = 0;
        size_t flips = 0;
        size_t relocated = 0;
    };

    // One incremental remeshing pass: split edges longer than split_length (until none
    // remain), collapse edges shorter than collapse_length when the collapse is legal,
    // flip edges that reduce valence deviation from 6, then relax each vertex towards
    // its neighbor centroid within its tangent plane. Boundary vertices and edges are
    // left untouched. Edges are visited in (length, lowest vertex index) order.
    // Throws TopologyError for non-manifold input or if the output fails validation.
    RemeshResult remesh_pass(const TriangleMesh& mesh, const RemeshParams& params, RemeshStageCounts* counts = nullptr);

    // The individual stages, exposed for testing. Each keeps the mesh manifold.
    RemeshResult split_long_edges(const TriangleMesh& mesh, double max_length);
    RemeshResult collapse_short_edges(const TriangleMesh& mesh, double min_length, double max_length);
    RemeshResult equalize_valences(const TriangleMesh& mesh, double max_length, size_t max_flips);
    TriangleMesh tangential_relocation(const TriangleMesh& mesh, double lambda, double max_length);

    // Shortest-edge-first collapse until at most `target_faces` faces remain or no legal
    // collapse is left.
    TriangleMesh decimate(const TriangleMesh& mesh, size_t target_faces);

    struct EdgeStatistics
    {
        size_t edge_count = 0;
        double min = 0.0;
        double max = 0.0;
        double mean = 0.0;
        double stddev = 0.0;
        std::map<int, size_t> valence_histogram; // valence -> vertex count
    };

    EdgeStatistics edge_statistics(const TriangleMesh& mesh);
} // namespace assetgen
