#include "assetgen/remesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "assetgen/errors.hpp"
#include "editable_mesh.hpp"

namespace assetgen
{
    using detail::EditableMesh;

    void RemeshParams::validate() const
    {
        if (!(target_edge_length > 0.0) || !std::isfinite(target_edge_length))
        {
            throw ConfigError("remesh target edge length must be positive");
        }
        if (!(collapse_factor > 0.0 && collapse_factor < 1.0 && split_factor > 1.0))
        {
            throw ConfigError("remesh factors must satisfy 0 < collapse_factor < 1 < split_factor");
        }
        if (!(smoothing_lambda > 0.0 && smoothing_lambda < 1.0))
        {
            throw ConfigError("smoothing_lambda must lie in (0, 1)");
        }
    }

    namespace
    {
        struct EdgeKey
        {
            double length;
            int a;
            int b;
        };

        std::vector<EdgeKey> sorted_edges(const EditableMesh& em, bool descending)
        {
            std::vector<EdgeKey> keys;
            for (const auto& e : em.edges())
            {
                keys.push_back({em.length(e[0], e[1]), e[0], e[1]});
            }
            std::sort(keys.begin(), keys.end(), [descending](const EdgeKey& x, const EdgeKey& y) {
                if (x.length != y.length)
                {
                    return descending ? x.length > y.length : x.length < y.length;
                }
                return std::tie(x.a, x.b) < std::tie(y.a, y.b);
            });
            return keys;
        }

        ManifoldReport require_manifold(const TriangleMesh& mesh)
        {
            check_indices(mesh);
            const ManifoldReport report = validate_manifold(mesh);
            if (!report.is_manifold())
            {
                throw TopologyError("remeshing requires a 2-manifold mesh: " + report.summary());
            }
            return report;
        }

        // Next to a frozen boundary edge longer than max_length, repeated bisection can
        // cycle forever; such splits must not create edges below max_length / 4.
        bool boundary_split_too_fine(const EditableMesh& em, int a, int b, double max_length)
        {
            if (!em.boundary[a] && !em.boundary[b])
            {
                return false;
            }
            const Vec3 mid = 0.5 * (em.pos[a] + em.pos[b]);
            for (int f : em.edge_faces(a, b))
            {
                if ((em.pos[em.third(f, a, b)] - mid).norm() < 0.25 * max_length)
                {
                    return true;
                }
            }
            return false;
        }

        // Always splits the currently longest interior edge above max_length (ties: lowest
        // vertex indices), until none is left.
        size_t run_splits(EditableMesh& em, double max_length)
        {
            using Entry = std::tuple<double, int, int>; // length, -a, -b
            std::priority_queue<Entry> queue;
            auto push = [&](int a, int b) {
                if (a > b)
                {
                    std::swap(a, b);
                }
                const double len = em.length(a, b);
                if (len > max_length)
                {
                    queue.emplace(len, -a, -b);
                }
            };
            for (const auto& e : em.edges())
            {
                push(e[0], e[1]);
            }
            size_t count = 0;
            while (!queue.empty())
            {
                const auto [len, na, nb] = queue.top();
                queue.pop();
                const int a = -na;
                const int b = -nb;
                if (!em.has_edge(a, b) || em.length(a, b) != len || em.edge_faces(a, b).size() != 2 ||
                    boundary_split_too_fine(em, a, b, max_length))
                {
                    continue;
                }
                const int m = em.split(a, b);
                ++count;
                for (int u : em.neighbors(m))
                {
                    push(m, u);
                }
            }
            return count;
        }

        size_t run_collapses(EditableMesh& em, double min_length, double max_length)
        {
            size_t count = 0;
            for (int sweep = 0; sweep < 16; ++sweep)
            {
                size_t round = 0;
                for (const auto& e : sorted_edges(em, false))
                {
                    if (e.length >= min_length)
                    {
                        break;
                    }
                    if (!em.vert_alive[e.a] || !em.vert_alive[e.b] || !em.has_edge(e.a, e.b))
                    {
                        continue;
                    }
                    if (em.length(e.a, e.b) >= min_length)
                    {
                        continue;
                    }
                    const Vec3 mid = 0.5 * (em.pos[e.a] + em.pos[e.b]);
                    if (em.can_collapse(e.a, e.b, mid, max_length))
                    {
                        em.collapse(e.a, e.b, mid);
                        ++round;
                    }
                }
                count += round;
                if (round == 0)
                {
                    break;
                }
            }
            return count;
        }

        size_t run_flips(EditableMesh& em, double max_length, size_t max_flips)
        {
            size_t count = 0;
            for (const auto& e : sorted_edges(em, false))
            {
                if (count >= max_flips)
                {
                    break;
                }
                if (em.has_edge(e.a, e.b) && em.can_flip(e.a, e.b, max_length, true))
                {
                    em.flip(e.a, e.b);
                    ++count;
                }
            }
            return count;
        }

        size_t run_relocation(EditableMesh& em, double lambda, double max_length)
        {
            size_t moved = 0;
            for (size_t v = 0; v < em.pos.size(); ++v)
            {
                const int vi = static_cast<int>(v);
                if (!em.vert_alive[v] || em.boundary[v] || em.vface[v].empty())
                {
                    continue;
                }
                const auto nbrs = em.neighbors(vi);
                Vec3 centroid = Vec3::Zero();
                for (int u : nbrs)
                {
                    centroid += em.pos[u];
                }
                centroid /= static_cast<double>(nbrs.size());
                const Vec3 n = em.vertex_normal(vi);
                Vec3 step = lambda * (centroid - em.pos[v]);
                step -= n * n.dot(step);
                if (step.squaredNorm() > 0.0 && em.try_move(vi, em.pos[v] + step, max_length))
                {
                    ++moved;
                }
            }
            return moved;
        }

        RemeshResult finish(const EditableMesh& em)
        {
            RemeshResult result;
            result.mesh = em.compact(&result.provenance);
            return result;
        }
    } // namespace

    constexpr int kMaxRounds = 4;

    RemeshResult remesh_pass(const TriangleMesh& mesh, const RemeshParams& params, RemeshStageCounts* counts)
    {
        params.validate();
        const ManifoldReport before = require_manifold(mesh);
        const double high = params.split_length();
        EditableMesh em(mesh);
        RemeshStageCounts local;
        // Relocation can make previously illegal collapses legal, so the cycle repeats
        // until a round leaves the connectivity alone.
        for (int round = 0; round < kMaxRounds; ++round)
        {
            const size_t s = run_splits(em, high);
            const size_t c = run_collapses(em, params.collapse_length(), high);
            const size_t f = run_flips(em, high, params.max_valence_flips - local.flips);
            local.splits += s;
            local.collapses += c;
            local.flips += f;
            local.relocated += run_relocation(em, params.smoothing_lambda, high);
            if (s + c + f == 0)
            {
                break;
            }
        }
        RemeshResult result = finish(em);
        const ManifoldReport after = validate_manifold(result.mesh);
        if (!after.is_manifold() || after.boundary_edges != before.boundary_edges || after.isolated_vertices != 0)
        {
            throw TopologyError("remeshing produced an invalid mesh: " + after.summary());
        }
        if (counts)
        {
            *counts = local;
        }
        return result;
    }

    RemeshResult split_long_edges(const TriangleMesh& mesh, double max_length)
    {
        require_manifold(mesh);
        EditableMesh em(mesh);
        run_splits(em, max_length);
        return finish(em);
    }

    RemeshResult collapse_short_edges(const TriangleMesh& mesh, double min_length, double max_length)
    {
        require_manifold(mesh);
        EditableMesh em(mesh);
        run_collapses(em, min_length, max_length);
        return finish(em);
    }

    RemeshResult equalize_valences(const TriangleMesh& mesh, double max_length, size_t max_flips)
    {
        require_manifold(mesh);
        EditableMesh em(mesh);
        run_flips(em, max_length, max_flips);
        return finish(em);
    }

    TriangleMesh tangential_relocation(const TriangleMesh& mesh, double lambda, double max_length)
    {
        require_manifold(mesh);
        EditableMesh em(mesh);
        run_relocation(em, lambda, max_length);
        return finish(em).mesh;
    }

    TriangleMesh decimate(const TriangleMesh& mesh, size_t target_faces)
    {
        require_manifold(mesh);
        EditableMesh em(mesh);
        while (em.live_faces() > target_faces)
        {
            std::vector<char> touched(em.pos.size(), 0);
            size_t round = 0;
            for (const auto& e : sorted_edges(em, false))
            {
                if (em.live_faces() <= target_faces)
                {
                    break;
                }
                if (touched[e.a] || touched[e.b] || !em.has_edge(e.a, e.b))
                {
                    continue;
                }
                const Vec3 mid = 0.5 * (em.pos[e.a] + em.pos[e.b]);
                if (!em.can_collapse(e.a, e.b, mid, 0.0))
                {
                    continue;
                }
                for (int u : em.neighbors(e.a))
                {
                    touched[u] = 1;
                }
                for (int u : em.neighbors(e.b))
                {
                    touched[u] = 1;
                }
                touched[e.a] = touched[e.b] = 1;
                em.collapse(e.a, e.b, mid);
                ++round;
            }
            if (round == 0)
            {
                break;
            }
        }
        return em.compact(nullptr);
    }

    EdgeStatistics edge_statistics(const TriangleMesh& mesh)
    {
        check_indices(mesh);
        const MeshAdjacency adj = MeshAdjacency::build(mesh);
        EdgeStatistics stats;
        stats.edge_count = adj.edges.size();
        for (const auto& nb : adj.neighbors)
        {
            ++stats.valence_histogram[static_cast<int>(nb.size())];
        }
        if (adj.edges.empty())
        {
            return stats;
        }
        stats.min = std::numeric_limits<double>::infinity();
        double sum = 0.0;
        double sum_sq = 0.0;
        for (const auto& e : adj.edges)
        {
            const double len = (mesh.vertices[e.v0] - mesh.vertices[e.v1]).norm();
            stats.min = std::min(stats.min, len);
            stats.max = std::max(stats.max, len);
            sum += len;
            sum_sq += len * len;
        }
        const double n = static_cast<double>(adj.edges.size());
        stats.mean = sum / n;
        stats.stddev = std::sqrt(std::max(0.0, sum_sq / n - stats.mean * stats.mean));
        return stats;
    }
} // namespace assetgen
