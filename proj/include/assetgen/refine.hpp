#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "assetgen/mesh.hpp"
#include "assetgen/oracle.hpp"

namespace assetgen
{
    enum class OptimizerKind
    {
        Sgd,
        Adam,
    };

    OptimizerKind parse_optimizer(const std::string& name); // throws ConfigError
    std::string to_string(OptimizerKind kind);

    struct RefinementConfig
    {
        int iterations = 20;
        double lambda_mask = 1.0;
        double lambda_lap = 0.5;
        double step_size = 0.01;
        // sgd: x -= step_size * g. adam: per-vertex first moments, one second moment shared
        // by all vertices (mean of their bias-corrected estimates), per-vertex step capped
        // at step_size.
        OptimizerKind optimizer = OptimizerKind::Adam;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
        int inner_steps = 10;
        // Gradients are filtered by solving (I + s L) g' = g with the combinatorial graph
        // Laplacian L before the optimizer step, so updates move whole neighborhoods.
        // 0 uses the raw gradient.
        double gradient_smoothing = 30.0;
        // Target edge length decays geometrically from start to end over the first
        // schedule_iterations outer iterations and stays at end afterwards.
        double edge_length_start = 0.08;
        double edge_length_end = 0.02;
        int schedule_iterations = 20;
        bool remesh = true;
        uint64_t seed = 0;

        // Throws ConfigError on iterations, inner_steps or schedule_iterations < 1, negative weights,
        // negative smoothing, non-positive step or edge lengths, or betas outside [0, 1).
        void validate() const;
        double target_edge_length(int iteration) const;
    };

    struct LossBreakdown
    {
        double l_normal = 0.0;
        double l_mask = 0.0;
        double l_lap = 0.0;
        double l_total = 0.0;
        std::vector<double> per_view_normal;
    };

    // Total loss of `mesh` against the supervision. With `gradient`, also fills
    // d(l_total)/d(vertex). Views are rendered and back-propagated in parallel.
    LossBreakdown evaluate_loss(const TriangleMesh& mesh, const SupervisionSet& supervision, const RefinementConfig& config,
        std::vector<Vec3>* gradient = nullptr);

    struct TraceRow
    {
        int iteration = 0;
        // Losses of the mesh entering this iteration (before its gradient steps).
        LossBreakdown loss;
        // Size and, with a reference, chamfer distance of the mesh leaving it.
        size_t vertex_count = 0;
        size_t face_count = 0;
        double chamfer = -1.0;
    };

    struct RefinementResult
    {
        TriangleMesh mesh;
        std::vector<TraceRow> trace;
    };

    struct RefineOptions
    {
        const TriangleMesh* reference = nullptr;
        size_t chamfer_samples = 16384;
        // Called with every outer iteration's mesh and trace row.
        std::function<void(const TriangleMesh&, const TraceRow&)> on_iteration;
    };

    // Outer iterations of (inner_steps gradient updates, one remesh pass). Vertex
    // colors are dropped. Throws TopologyError when the initial mesh is not a closed
    // manifold or a remesh pass breaks it, NumericError on non-finite losses.
    RefinementResult refine(const TriangleMesh& initial, const SupervisionSet& supervision, const RefinementConfig& config,
        const RefineOptions& options = {});

    // iteration,l_normal,l_mask,l_lap,l_total,vertex_count,face_count[,chamfer]
    std::string trace_csv(const std::vector<TraceRow>& trace, bool with_chamfer);
    void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace, bool with_chamfer);
} // namespace assetgen
