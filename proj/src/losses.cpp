#include "assetgen/losses.hpp"

#include <string>

#include "assetgen/errors.hpp"

namespace assetgen
{
    namespace
    {
        void check_pair(const std::vector<ViewMaps>& rendered, const std::vector<ViewMaps>& target)
        {
            if (rendered.size() != target.size())
            {
                throw DataError("loss needs one target per rendered view: " + std::to_string(rendered.size()) + " vs " +
                                std::to_string(target.size()));
            }
            for (size_t i = 0; i < rendered.size(); ++i)
            {
                if (rendered[i].width != target[i].width || rendered[i].height != target[i].height)
                {
                    throw DataError("view " + std::to_string(i) + " resolution differs from its target");
                }
            }
        }
    } // namespace

    ImageLoss normal_loss(const std::vector<ViewMaps>& rendered, const std::vector<ViewMaps>& target)
    {
        check_pair(rendered, target);
        ImageLoss out;
        for (size_t i = 0; i < rendered.size(); ++i)
        {
            const ViewMaps& r = rendered[i];
            const ViewMaps& t = target[i];
            ImageRGB grad(r.width, r.height, Vec3::Zero());
            std::vector<size_t> overlap;
            for (size_t p = 0; p < r.mask.size(); ++p)
            {
                if (r.covered(p) && r.mask[p] >= kMaskThreshold && t.mask[p] >= kMaskThreshold && t.normal[p].squaredNorm() > 0.0)
                {
                    overlap.push_back(p);
                }
            }
            double sum = 0.0;
            if (!overlap.empty())
            {
                const double inv = 1.0 / static_cast<double>(overlap.size());
                for (size_t p : overlap)
                {
                    const Vec3 diff = r.normal[p] - t.normal[p];
                    sum += diff.squaredNorm();
                    grad[p] = 2.0 * inv * diff;
                }
                sum *= inv;
            }
            out.per_view.push_back(sum);
            out.value += sum;
            out.d_normal.push_back(std::move(grad));
        }
        return out;
    }

    ImageLoss mask_loss(const std::vector<ViewMaps>& rendered, const std::vector<ViewMaps>& target)
    {
        check_pair(rendered, target);
        ImageLoss out;
        for (size_t i = 0; i < rendered.size(); ++i)
        {
            const ViewMaps& r = rendered[i];
            const ViewMaps& t = target[i];
            ImageF grad(r.width, r.height, 0.0);
            const double inv = r.mask.empty() ? 0.0 : 1.0 / static_cast<double>(r.mask.size());
            double sum = 0.0;
            for (size_t p = 0; p < r.mask.size(); ++p)
            {
                const double diff = r.mask[p] - t.mask[p];
                sum += diff * diff;
                grad[p] = 2.0 * inv * diff;
            }
            sum *= inv;
            out.per_view.push_back(sum);
            out.value += sum;
            out.d_mask.push_back(std::move(grad));
        }
        return out;
    }

    LaplacianLoss laplacian_loss(const TriangleMesh& mesh, const MeshAdjacency& adjacency)
    {
        if (adjacency.neighbors.size() != mesh.vertices.size())
        {
            throw DataError("adjacency does not match the mesh");
        }
        const size_t n = mesh.vertices.size();
        LaplacianLoss out;
        out.gradient.assign(n, Vec3::Zero());
        std::vector<Vec3> delta(n, Vec3::Zero());
        size_t active = 0;
        for (size_t v = 0; v < n; ++v)
        {
            const auto& nb = adjacency.neighbors[v];
            if (nb.empty())
            {
                continue;
            }
            ++active;
            Vec3 mean = Vec3::Zero();
            for (int u : nb)
            {
                mean += mesh.vertices[u];
            }
            mean /= static_cast<double>(nb.size());
            delta[v] = mesh.vertices[v] - mean;
            out.value += delta[v].squaredNorm();
        }
        if (active == 0)
        {
            return out;
        }
        const double inv = 1.0 / static_cast<double>(active);
        out.value *= inv;
        for (size_t v = 0; v < n; ++v)
        {
            const auto& nb = adjacency.neighbors[v];
            if (nb.empty())
            {
                continue;
            }
            const Vec3 g = 2.0 * inv * delta[v];
            out.gradient[v] += g;
            const Vec3 share = g / static_cast<double>(nb.size());
            for (int u : nb)
            {
                out.gradient[u] -= share;
            }
        }
        return out;
    }
} // namespace assetgen
