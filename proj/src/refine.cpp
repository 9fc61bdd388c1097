#include "assetgen/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "assetgen/errors.hpp"
#include "assetgen/losses.hpp"
#include "assetgen/metrics.hpp"
#include "assetgen/parallel.hpp"
#include "assetgen/remesh.hpp"
#include "assetgen/render.hpp"

namespace assetgen
{
    OptimizerKind parse_optimizer(const std::string& name)
    {
        if (name == "sgd")
        {
            return OptimizerKind::Sgd;
        }
        if (name == "adam")
        {
            return OptimizerKind::Adam;
        }
        throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
    }

    std::string to_string(OptimizerKind kind)
    {
        return kind == OptimizerKind::Sgd ? "sgd" : "adam";
    }

    void RefinementConfig::validate() const
    {
        if (iterations < 1)
        {
            throw ConfigError("refine.iterations must be at least 1");
        }
        if (inner_steps < 1)
        {
            throw ConfigError("refine.inner_steps must be at least 1");
        }
        if (schedule_iterations < 1)
        {
            throw ConfigError("refine.schedule_iterations must be at least 1");
        }
        if (!(lambda_mask >= 0.0) || !(lambda_lap >= 0.0))
        {
            throw ConfigError("refine loss weights must be non-negative");
        }
        if (!(gradient_smoothing >= 0.0))
        {
            throw ConfigError("refine.gradient_smoothing must be non-negative");
        }
        if (!(step_size > 0.0))
        {
            throw ConfigError("refine.step_size must be positive");
        }
        if (!(edge_length_start > 0.0) || !(edge_length_end > 0.0))
        {
            throw ConfigError("refine edge lengths must be positive");
        }
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
        {
            throw ConfigError("adam betas must lie in [0, 1) and epsilon must be positive");
        }
    }

    double RefinementConfig::target_edge_length(int iteration) const
    {
        if (schedule_iterations <= 1)
        {
            return edge_length_end;
        }
        const double t = std::clamp(static_cast<double>(iteration) / (schedule_iterations - 1), 0.0, 1.0);
        return edge_length_start * std::pow(edge_length_end / edge_length_start, t);
    }

    LossBreakdown evaluate_loss(const TriangleMesh& mesh, const SupervisionSet& supervision, const RefinementConfig& config,
        std::vector<Vec3>* gradient)
    {
        const size_t views = supervision.views.size();
        if (views == 0 || supervision.maps.size() != views)
        {
            throw DataError("refinement needs at least one supervision view with maps");
        }
        const MeshAdjacency adjacency = MeshAdjacency::build(mesh);
        std::vector<ViewMaps> rendered(views);
        parallel_for(views, [&](size_t i) { rendered[i] = rasterize(mesh, supervision.views[i], &adjacency); });

        const ImageLoss ln = normal_loss(rendered, supervision.maps);
        const ImageLoss lm = mask_loss(rendered, supervision.maps);
        const LaplacianLoss ll = laplacian_loss(mesh, adjacency);

        LossBreakdown out;
        out.l_normal = ln.value;
        out.l_mask = lm.value;
        out.l_lap = ll.value;
        out.l_total = out.l_normal + config.lambda_mask * out.l_mask + config.lambda_lap * out.l_lap;
        out.per_view_normal = ln.per_view;
        if (!std::isfinite(out.l_total))
        {
            throw NumericError("refinement loss is not finite");
        }

        if (gradient)
        {
            std::vector<std::vector<Vec3>> per_view(views);
            parallel_for(views, [&](size_t i) {
                ImageF d_mask = lm.d_mask[i];
                for (size_t p = 0; p < d_mask.size(); ++p)
                {
                    d_mask[p] *= config.lambda_mask;
                }
                per_view[i] = backward(mesh, supervision.views[i], rendered[i], ln.d_normal[i], d_mask);
            });
            gradient->assign(mesh.vertex_count(), Vec3::Zero());
            for (size_t v = 0; v < mesh.vertex_count(); ++v)
            {
                Vec3 g = config.lambda_lap * ll.gradient[v];
                for (size_t i = 0; i < views; ++i)
                {
                    g += per_view[i][v];
                }
                (*gradient)[v] = g;
            }
        }
        return out;
    }

    namespace
    {
        struct AdamState
        {
            std::vector<Vec3> m;
            std::vector<Vec3> v;
            std::vector<int> steps; // per vertex, so bias correction restarts for new vertices

            void resize(size_t n)
            {
                m.assign(n, Vec3::Zero());
                v.assign(n, Vec3::Zero());
                steps.assign(n, 0);
            }

            void remap(const std::vector<int>& provenance, size_t new_count)
            {
                AdamState next;
                next.resize(new_count);
                for (size_t old = 0; old < provenance.size(); ++old)
                {
                    const int to = provenance[old];
                    if (to >= 0)
                    {
                        next.m[to] = m[old];
                        next.v[to] = v[old];
                        next.steps[to] = steps[old];
                    }
                }
                *this = std::move(next);
            }
        };

        void apply_step(TriangleMesh& mesh, const std::vector<Vec3>& grad, const RefinementConfig& config, AdamState& adam)
        {
            if (config.optimizer == OptimizerKind::Sgd)
            {
                for (size_t i = 0; i < mesh.vertex_count(); ++i)
                {
                    mesh.vertices[i] -= config.step_size * grad[i];
                }
                return;
            }
            // First moments per vertex. The second moment is shared: the mean over
            // vertices of each vertex's bias-corrected |v|, so the update keeps the
            // relative magnitudes of the filtered gradient. Steps are capped at step_size.
            const size_t n = mesh.vertex_count();
            std::vector<double> c1(n);
            double shared = 0.0;
            for (size_t i = 0; i < n; ++i)
            {
                const Vec3& g = grad[i];
                adam.m[i] = config.beta1 * adam.m[i] + (1.0 - config.beta1) * g;
                adam.v[i] = config.beta2 * adam.v[i] + (1.0 - config.beta2) * g.cwiseProduct(g);
                const int t = ++adam.steps[i];
                c1[i] = 1.0 - std::pow(config.beta1, t);
                shared += adam.v[i].sum() / (1.0 - std::pow(config.beta2, t));
            }
            const double denom = std::sqrt(shared / static_cast<double>(std::max<size_t>(n, 1))) + config.epsilon;
            for (size_t i = 0; i < n; ++i)
            {
                Vec3 d = (config.step_size / (c1[i] * denom)) * adam.m[i];
                const double len = d.norm();
                if (len > config.step_size)
                {
                    d *= config.step_size / len;
                }
                mesh.vertices[i] -= d;
            }
        }

        class GradientFilter
        {
        public:
            GradientFilter(const TriangleMesh& mesh, double strength) : enabled_(strength > 0.0)
            {
                if (!enabled_)
                {
                    return;
                }
                const MeshAdjacency adjacency = MeshAdjacency::build(mesh);
                const int n = static_cast<int>(mesh.vertex_count());
                std::vector<Eigen::Triplet<double>> entries;
                for (int i = 0; i < n; ++i)
                {
                    const auto& nb = adjacency.neighbors[i];
                    entries.emplace_back(i, i, 1.0 + strength * static_cast<double>(nb.size()));
                    for (int j : nb)
                    {
                        entries.emplace_back(i, j, -strength);
                    }
                }
                Eigen::SparseMatrix<double> system(n, n);
                system.setFromTriplets(entries.begin(), entries.end());
                solver_.compute(system);
                if (solver_.info() != Eigen::Success)
                {
                    throw NumericError("gradient filter factorization failed");
                }
            }

            void apply(std::vector<Vec3>& grad) const
            {
                if (!enabled_)
                {
                    return;
                }
                const Eigen::Index n = static_cast<Eigen::Index>(grad.size());
                Eigen::MatrixX3d rhs(n, 3);
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    rhs.row(i) = grad[i].transpose();
                }
                const Eigen::MatrixX3d out = solver_.solve(rhs);
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    grad[i] = out.row(i).transpose();
                }
            }

        private:
            bool enabled_;
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
        };

        void require_closed(const TriangleMesh& mesh, const char* what)
        {
            const ManifoldReport report = validate_manifold(mesh);
            if (!report.is_closed_manifold() || report.isolated_vertices != 0)
            {
                throw TopologyError(std::string(what) + " is not a closed manifold: " + report.summary());
            }
        }
    } // namespace

    RefinementResult refine(const TriangleMesh& initial, const SupervisionSet& supervision, const RefinementConfig& config,
        const RefineOptions& options)
    {
        config.validate();
        supervision.validate();
        check_indices(initial);
        require_closed(initial, "initial mesh");

        RefinementResult result;
        TriangleMesh mesh;
        mesh.vertices = initial.vertices;
        mesh.faces = initial.faces;

        AdamState adam;
        adam.resize(mesh.vertex_count());
        std::vector<Vec3> grad;
        for (int it = 0; it < config.iterations; ++it)
        {
            TraceRow row;
            row.iteration = it;
            const GradientFilter filter(mesh, config.gradient_smoothing);
            for (int step = 0; step < config.inner_steps; ++step)
            {
                const LossBreakdown loss = evaluate_loss(mesh, supervision, config, &grad);
                if (step == 0)
                {
                    row.loss = loss;
                }
                filter.apply(grad);
                apply_step(mesh, grad, config, adam);
            }

            if (config.remesh)
            {
                RemeshParams params;
                params.target_edge_length = config.target_edge_length(it);
                RemeshResult remeshed = remesh_pass(mesh, params);
                adam.remap(remeshed.provenance, remeshed.mesh.vertex_count());
                mesh = std::move(remeshed.mesh);
            }
            require_closed(mesh, "refined mesh");

            row.vertex_count = mesh.vertex_count();
            row.face_count = mesh.face_count();
            if (options.reference)
            {
                row.chamfer = chamfer_distance(mesh, *options.reference, options.chamfer_samples, config.seed);
            }
            if (options.on_iteration)
            {
                options.on_iteration(mesh, row);
            }
            result.trace.push_back(std::move(row));
        }
        result.mesh = std::move(mesh);
        return result;
    }

    std::string trace_csv(const std::vector<TraceRow>& trace, bool with_chamfer)
    {
        std::ostringstream out;
        out << "iteration,l_normal,l_mask,l_lap,l_total,vertex_count,face_count";
        if (with_chamfer)
        {
            out << ",chamfer";
        }
        out << '\n';
        char buf[64];
        const auto num = [&](double x) {
            std::snprintf(buf, sizeof buf, "%.10g", x);
            return std::string(buf);
        };
        for (const TraceRow& r : trace)
        {
            out << r.iteration << ',' << num(r.loss.l_normal) << ',' << num(r.loss.l_mask) << ',' << num(r.loss.l_lap) << ','
                << num(r.loss.l_total) << ',' << r.vertex_count << ',' << r.face_count;
            if (with_chamfer)
            {
                out << ',' << num(r.chamfer);
            }
            out << '\n';
        }
        return out.str();
    }

    void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace, bool with_chamfer)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
            throw DataError("cannot write trace: " + path.string());
        }
        out << trace_csv(trace, with_chamfer);
    }
} // namespace assetgen
