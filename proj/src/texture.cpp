#include "assetgen/texture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "assetgen/errors.hpp"
#include "assetgen/parallel.hpp"
#include "assetgen/render.hpp"

namespace assetgen
{
    namespace
    {
        TriangleMesh geometry_only(const TriangleMesh& mesh)
        {
            TriangleMesh out;
            out.vertices = mesh.vertices;
            out.faces = mesh.faces;
            return out;
        }

        void require_colors(const SupervisionSet& supervision)
        {
            if (!supervision.has_colors())
            {
                throw DataError("texturing needs supervision color images");
            }
            if (supervision.colors.size() != supervision.color_views.size())
            {
                throw DataError("color images and color views differ in count");
            }
        }

        bool inside(const Vec2& p, int w, int h)
        {
            return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < w && p.y() < h;
        }

        // Depth map interpolated between pixel centers; any background tap gives +inf.
        double depth_at(const ImageF& depth, const Vec2& pixel)
        {
            const double x = std::clamp(pixel.x() - 0.5, 0.0, depth.width - 1.0);
            const double y = std::clamp(pixel.y() - 0.5, 0.0, depth.height - 1.0);
            const int x0 = std::min(static_cast<int>(x), depth.width - 1);
            const int y0 = std::min(static_cast<int>(y), depth.height - 1);
            const int x1 = std::min(x0 + 1, depth.width - 1);
            const int y1 = std::min(y0 + 1, depth.height - 1);
            const double d00 = depth.at(x0, y0), d10 = depth.at(x1, y0), d01 = depth.at(x0, y1), d11 = depth.at(x1, y1);
            if (!std::isfinite(d00) || !std::isfinite(d10) || !std::isfinite(d01) || !std::isfinite(d11))
            {
                return std::numeric_limits<double>::infinity();
            }
            const double fx = x - x0;
            const double fy = y - y0;
            return (1 - fy) * ((1 - fx) * d00 + fx * d10) + fy * ((1 - fx) * d01 + fx * d11);
        }
    } // namespace

    std::vector<VisibilityMask> compute_visibility(const TriangleMesh& mesh, const std::vector<CameraView>& views,
        const std::vector<ImageF>& depth_maps, double epsilon)
    {
        if (views.size() > kMaxTextureViews)
        {
            throw DataError("at most 64 views are supported for texturing");
        }
        if (depth_maps.size() != views.size())
        {
            throw DataError("need one depth map per view");
        }
        for (size_t i = 0; i < views.size(); ++i)
        {
            if (!depth_maps[i].same_shape(views[i].width, views[i].height))
            {
                throw DataError("depth map " + std::to_string(i) + " does not match its view");
            }
        }
        const std::vector<Vec3> normals = compute_vertex_normals(mesh);
        std::vector<Projector> projectors;
        for (const CameraView& v : views)
        {
            projectors.emplace_back(v);
        }
        std::vector<VisibilityMask> out(mesh.vertex_count(), 0);
        parallel_for(mesh.vertex_count(), [&](size_t vi) {
            const Vec3& p = mesh.vertices[vi];
            VisibilityMask mask = 0;
            for (size_t i = 0; i < views.size(); ++i)
            {
                if (normals[vi].dot(projectors[i].eye() - p) <= 0.0)
                {
                    continue;
                }
                const ProjectedPoint q = projectors[i].project(p);
                if (q.depth <= 0.0 || !inside(q.pixel, views[i].width, views[i].height))
                {
                    continue;
                }
                if (q.depth <= depth_at(depth_maps[i], q.pixel) + epsilon)
                {
                    mask |= VisibilityMask{1} << i;
                }
            }
            out[vi] = mask;
        });
        return out;
    }

    VertexViewAssignment assign_views(const TriangleMesh& mesh, const std::vector<CameraView>& views,
        const std::vector<VisibilityMask>& visibility)
    {
        if (visibility.size() != mesh.vertex_count())
        {
            throw DataError("visibility does not match the mesh");
        }
        const std::vector<Vec3> normals = compute_vertex_normals(mesh);
        std::vector<Vec3> eyes;
        for (const CameraView& v : views)
        {
            eyes.push_back(v.position());
        }
        VertexViewAssignment out;
        out.visible = visibility;
        out.view.assign(mesh.vertex_count(), kNoView);
        out.score.assign(mesh.vertex_count(), -1.0);
        parallel_for(mesh.vertex_count(), [&](size_t vi) {
            for (size_t i = 0; i < views.size(); ++i)
            {
                if (!(visibility[vi] >> i & 1u))
                {
                    continue;
                }
                const Vec3 dir = (eyes[i] - mesh.vertices[vi]).normalized();
                const double c = std::clamp(normals[vi].dot(dir), -1.0, 1.0);
                if (out.view[vi] == kNoView || c > out.score[vi])
                {
                    out.view[vi] = static_cast<int>(i);
                    out.score[vi] = c;
                }
            }
        });
        return out;
    }

    Vec3 sample_bilinear(const ImageRGB& image, const Vec2& pixel)
    {
        const double x = std::clamp(pixel.x() - 0.5, 0.0, image.width - 1.0);
        const double y = std::clamp(pixel.y() - 0.5, 0.0, image.height - 1.0);
        const int x0 = std::min(static_cast<int>(x), image.width - 1);
        const int y0 = std::min(static_cast<int>(y), image.height - 1);
        const int x1 = std::min(x0 + 1, image.width - 1);
        const int y1 = std::min(y0 + 1, image.height - 1);
        const double fx = x - x0;
        const double fy = y - y0;
        return (1 - fy) * ((1 - fx) * image.at(x0, y0) + fx * image.at(x1, y0)) + fy * ((1 - fx) * image.at(x0, y1) + fx * image.at(x1, y1));
    }

    Vec3 sample_bilinear_covered(const ImageRGB& image, const ImageF& covered, const Vec2& pixel)
    {
        const double x = std::clamp(pixel.x() - 0.5, 0.0, image.width - 1.0);
        const double y = std::clamp(pixel.y() - 0.5, 0.0, image.height - 1.0);
        const int x0 = std::min(static_cast<int>(x), image.width - 1);
        const int y0 = std::min(static_cast<int>(y), image.height - 1);
        const double fx = x - x0;
        const double fy = y - y0;
        Vec3 sum = Vec3::Zero();
        double weight = 0.0;
        for (int dy = 0; dy < 2; ++dy)
        {
            for (int dx = 0; dx < 2; ++dx)
            {
                const int px = std::min(x0 + dx, image.width - 1);
                const int py = std::min(y0 + dy, image.height - 1);
                const double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy);
                if (w > 0.0 && std::isfinite(covered.at(px, py)))
                {
                    sum += w * image.at(px, py);
                    weight += w;
                }
            }
        }
        if (weight > 0.0)
        {
            return sum / weight;
        }
        const int nx = std::clamp(static_cast<int>(pixel.x()), 0, image.width - 1);
        const int ny = std::clamp(static_cast<int>(pixel.y()), 0, image.height - 1);
        return image.at(nx, ny);
    }

    VertexColors assign_vertex_colors(const TriangleMesh& mesh, const std::vector<CameraView>& views,
        const std::vector<ImageRGB>& images, const VertexViewAssignment& assignment, const std::vector<ImageF>& depth_maps)
    {
        if (images.size() != views.size())
        {
            throw DataError("need one color image per view");
        }
        if (!depth_maps.empty() && depth_maps.size() != views.size())
        {
            throw DataError("need one depth map per view");
        }
        for (size_t i = 0; i < images.size(); ++i)
        {
            if (!images[i].same_shape(views[i].width, views[i].height) || (!depth_maps.empty() && !depth_maps[i].same_shape(images[i])))
            {
                throw DataError("color image " + std::to_string(i) + " does not match its view");
            }
        }
        std::vector<Projector> projectors;
        for (const CameraView& v : views)
        {
            projectors.emplace_back(v);
        }
        VertexColors out;
        out.color.assign(mesh.vertex_count(), Vec3::Zero());
        out.known.assign(mesh.vertex_count(), 0);
        parallel_for(mesh.vertex_count(), [&](size_t vi) {
            const int view = assignment.view[vi];
            if (view == kNoView)
            {
                return;
            }
            const Vec2 px = projectors[view].project(mesh.vertices[vi]).pixel;
            out.color[vi] = depth_maps.empty() ? sample_bilinear(images[view], px) : sample_bilinear_covered(images[view], depth_maps[view], px);
            out.known[vi] = 1;
        });
        return out;
    }

    VertexColors smooth_seams(const TriangleMesh& mesh, const VertexColors& colors, const VertexViewAssignment& assignment,
        int iterations)
    {
        const MeshAdjacency adj = MeshAdjacency::build(mesh);
        std::vector<int> seam;
        for (size_t v = 0; v < mesh.vertex_count(); ++v)
        {
            if (!colors.known[v])
            {
                continue;
            }
            for (int n : adj.neighbors[v])
            {
                if (colors.known[n] && assignment.view[n] != assignment.view[v])
                {
                    seam.push_back(static_cast<int>(v));
                    break;
                }
            }
        }
        VertexColors out = colors;
        for (int it = 0; it < iterations; ++it)
        {
            std::vector<Vec3> next(seam.size());
            for (size_t k = 0; k < seam.size(); ++k)
            {
                const int v = seam[k];
                Vec3 sum = Vec3::Zero();
                int count = 0;
                for (int n : adj.neighbors[v])
                {
                    if (out.known[n])
                    {
                        sum += out.color[n];
                        ++count;
                    }
                }
                next[k] = 0.5 * out.color[v] + 0.5 * sum / count;
            }
            for (size_t k = 0; k < seam.size(); ++k)
            {
                out.color[seam[k]] = next[k];
            }
        }
        return out;
    }

    VertexColors fill_invisible(const TriangleMesh& mesh, const VertexColors& colors)
    {
        const size_t n = mesh.vertex_count();
        if (std::none_of(colors.known.begin(), colors.known.end(), [](uint8_t k) { return k != 0; }))
        {
            throw DataError("no vertex is visible in any view; nothing to propagate");
        }
        const auto [component, count] = vertex_components(mesh);
        std::vector<uint8_t> seeded(count, 0);
        for (size_t v = 0; v < n; ++v)
        {
            seeded[component[v]] |= colors.known[v];
        }
        for (int c = 0; c < count; ++c)
        {
            if (!seeded[c])
            {
                size_t size = 0;
                int first = -1;
                for (size_t v = 0; v < n; ++v)
                {
                    if (component[v] == c)
                    {
                        first = first < 0 ? static_cast<int>(v) : first;
                        ++size;
                    }
                }
                throw DataError("connected component " + std::to_string(c) + " (" + std::to_string(size) + " vertices, first vertex " +
                                std::to_string(first) + ") has no visible vertex");
            }
        }

        const MeshAdjacency adj = MeshAdjacency::build(mesh);
        VertexColors out = colors;
        std::vector<int> layer;
        for (size_t v = 0; v < n; ++v)
        {
            if (!out.known[v] && std::any_of(adj.neighbors[v].begin(), adj.neighbors[v].end(), [&](int u) { return out.known[u]; }))
            {
                layer.push_back(static_cast<int>(v));
            }
        }
        while (!layer.empty())
        {
            std::vector<Vec3> values(layer.size());
            for (size_t k = 0; k < layer.size(); ++k)
            {
                Vec3 sum = Vec3::Zero();
                int known = 0;
                for (int u : adj.neighbors[layer[k]])
                {
                    if (out.known[u])
                    {
                        sum += out.color[u];
                        ++known;
                    }
                }
                values[k] = sum / known;
            }
            for (size_t k = 0; k < layer.size(); ++k)
            {
                out.color[layer[k]] = values[k];
                out.known[layer[k]] = 1;
            }
            std::vector<int> next;
            for (int v : layer)
            {
                for (int u : adj.neighbors[v])
                {
                    if (!out.known[u])
                    {
                        next.push_back(u);
                    }
                }
            }
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end()), next.end());
            layer = std::move(next);
        }
        return out;
    }

    TextureResult texture_pipeline(const TriangleMesh& mesh, const SupervisionSet& supervision, const TextureParams& params)
    {
        require_colors(supervision);
        if (params.seam_iterations < 0 || !(params.depth_epsilon >= 0.0))
        {
            throw ConfigError("texture.seam_iterations and texture.depth_epsilon must be non-negative");
        }
        const TriangleMesh geometry = geometry_only(mesh);
        const std::vector<CameraView>& views = supervision.color_views;
        std::vector<ImageF> depth(views.size());
        const MeshAdjacency adj = MeshAdjacency::build(geometry);
        parallel_for(views.size(), [&](size_t i) { depth[i] = rasterize(geometry, views[i], &adj).depth; });
        const double epsilon = params.depth_epsilon * bounding_box(geometry).extent().maxCoeff();

        TextureResult result;
        result.assignment = assign_views(geometry, views, compute_visibility(geometry, views, depth, epsilon));
        VertexColors colors = assign_vertex_colors(geometry, views, supervision.colors, result.assignment, depth);
        result.visible_vertices = static_cast<size_t>(std::count(colors.known.begin(), colors.known.end(), 1));
        colors = smooth_seams(geometry, colors, result.assignment, params.seam_iterations);
        colors = fill_invisible(geometry, colors);

        result.mesh = geometry;
        result.mesh.colors = std::move(colors.color);
        for (Vec3& c : result.mesh.colors)
        {
            c = c.cwiseMax(0.0).cwiseMin(1.0);
        }
        return result;
    }

    TriangleMesh naive_average_texture(const TriangleMesh& mesh, const SupervisionSet& supervision)
    {
        require_colors(supervision);
        TriangleMesh out = geometry_only(mesh);
        std::vector<Projector> projectors;
        for (const CameraView& v : supervision.color_views)
        {
            projectors.emplace_back(v);
        }
        out.colors.assign(mesh.vertex_count(), Vec3::Zero());
        parallel_for(mesh.vertex_count(), [&](size_t vi) {
            Vec3 sum = Vec3::Zero();
            int count = 0;
            for (size_t i = 0; i < projectors.size(); ++i)
            {
                const CameraView& view = supervision.color_views[i];
                const ProjectedPoint q = projectors[i].project(mesh.vertices[vi]);
                if (q.depth > 0.0 && inside(q.pixel, view.width, view.height))
                {
                    sum += sample_bilinear(supervision.colors[i], q.pixel);
                    ++count;
                }
            }
            out.colors[vi] = count > 0 ? Vec3(sum / count) : Vec3::Zero();
        });
        return out;
    }

    std::vector<ImageRGB> render_colors(const TriangleMesh& mesh, const SupervisionSet& supervision)
    {
        if (!mesh.has_colors())
        {
            throw DataError("mesh has no vertex colors to render");
        }
        std::vector<ImageRGB> out(supervision.color_views.size());
        const MeshAdjacency adj = MeshAdjacency::build(mesh);
        parallel_for(out.size(), [&](size_t i) { out[i] = rasterize(mesh, supervision.color_views[i], &adj).color; });
        return out;
    }
} // namespace assetgen
