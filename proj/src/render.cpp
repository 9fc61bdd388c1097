#include "assetgen/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "assetgen/errors.hpp"

namespace assetgen
{
    namespace
    {
        constexpr double NearPlane = 1e-3;
        constexpr int TileSize = 8;

        double cross2(const Vec2& a, const Vec2& b)
        {
            return a.x() * b.y() - a.y() * b.x();
        }

        struct SegmentDistance
        {
            double distance = 0.0;
            double t = 0.0; // closest point = a + t (b - a)
            Vec2 closest;
        };

        SegmentDistance point_segment(const Vec2& c, const Vec2& a, const Vec2& b)
        {
            const Vec2 e = b - a;
            const double ee = e.squaredNorm();
            const double t = ee > 0.0 ? std::clamp((c - a).dot(e) / ee, 0.0, 1.0) : 0.0;
            const Vec2 q = a + t * e;
            return {(c - q).norm(), t, q};
        }

        // Smooth minimum (power mean, exponent -SoftMinPower) of the distances from a
        // pixel center to nearby silhouette segments. Keeps coverage differentiable where
        // the nearest segment changes and vanishes exactly when any distance does.
        constexpr double SoftMinPower = 8.0;
        constexpr double TileMargin = 3.0;

        struct SoftDistance
        {
            double distance = std::numeric_limits<double>::infinity();
            int nearest = -1;
            std::vector<std::pair<int, double>> weights; // segment, d(distance)/d(segment distance)
            std::vector<SegmentDistance> parts;
        };

        using Tiles = std::vector<std::vector<int>>;

        Tiles bin_segments(const std::vector<std::array<int, 2>>& segments, const std::vector<Vec2>& pixels, int w, int h)
        {
            const int tiles_x = (w + TileSize - 1) / TileSize;
            const int tiles_y = (h + TileSize - 1) / TileSize;
            Tiles tiles(static_cast<size_t>(tiles_x) * tiles_y);
            for (size_t s = 0; s < segments.size(); ++s)
            {
                const Vec2& a = pixels[segments[s][0]];
                const Vec2& b = pixels[segments[s][1]];
                // pixel centers x + 0.5 within TileMargin of the bounding box
                const double lo_x = std::min(a.x(), b.x()) - TileMargin - 0.5;
                const double hi_x = std::max(a.x(), b.x()) + TileMargin - 0.5;
                const double lo_y = std::min(a.y(), b.y()) - TileMargin - 0.5;
                const double hi_y = std::max(a.y(), b.y()) + TileMargin - 0.5;
                if (hi_x < 0.0 || hi_y < 0.0 || lo_x > w - 1 || lo_y > h - 1)
                {
                    continue;
                }
                const int x0 = std::max(0, static_cast<int>(std::ceil(lo_x)));
                const int x1 = std::min(w - 1, static_cast<int>(std::floor(hi_x)));
                const int y0 = std::max(0, static_cast<int>(std::ceil(lo_y)));
                const int y1 = std::min(h - 1, static_cast<int>(std::floor(hi_y)));
                if (x0 > x1 || y0 > y1)
                {
                    continue;
                }
                for (int ty = y0 / TileSize; ty <= y1 / TileSize; ++ty)
                {
                    for (int tx = x0 / TileSize; tx <= x1 / TileSize; ++tx)
                    {
                        tiles[static_cast<size_t>(ty) * tiles_x + tx].push_back(static_cast<int>(s));
                    }
                }
            }
            return tiles;
        }

        SoftDistance soft_distance(int x, int y, int w, const Tiles& tiles, const std::vector<std::array<int, 2>>& segments,
            const std::vector<Vec2>& pixels, bool with_weights)
        {
            SoftDistance out;
            const Vec2 c(x + 0.5, y + 0.5);
            const int tiles_x = (w + TileSize - 1) / TileSize;
            const auto& candidates = tiles[static_cast<size_t>(y / TileSize) * tiles_x + x / TileSize];
            if (candidates.empty())
            {
                return out;
            }
            std::vector<SegmentDistance> all;
            all.reserve(candidates.size());
            double best = std::numeric_limits<double>::infinity();
            for (int s : candidates)
            {
                all.push_back(point_segment(c, pixels[segments[s][0]], pixels[segments[s][1]]));
                if (all.back().distance < best)
                {
                    best = all.back().distance;
                    out.nearest = s;
                }
            }
            if (best <= 0.0)
            {
                out.distance = 0.0;
                return out;
            }
            double z = 0.0;
            for (const auto& sd : all)
            {
                z += std::pow(best / sd.distance, SoftMinPower);
            }
            out.distance = best * std::pow(z, -1.0 / SoftMinPower);
            if (with_weights)
            {
                for (size_t i = 0; i < all.size(); ++i)
                {
                    const double wgt = std::pow(out.distance / all[i].distance, SoftMinPower + 1.0);
                    if (wgt > 1e-12)
                    {
                        out.weights.emplace_back(candidates[i], wgt);
                        out.parts.push_back(all[i]);
                    }
                }
            }
            return out;
        }

        struct ScreenGeometry
        {
            std::vector<ProjectedPoint> points;
            std::vector<char> in_front;
        };

        ScreenGeometry project_all(const TriangleMesh& mesh, const Projector& projector)
        {
            ScreenGeometry g;
            g.points.resize(mesh.vertices.size());
            g.in_front.resize(mesh.vertices.size());
            for (size_t v = 0; v < mesh.vertices.size(); ++v)
            {
                g.points[v] = projector.project(mesh.vertices[v]);
                g.in_front[v] = g.points[v].depth > NearPlane;
            }
            return g;
        }

        void check_maps(const TriangleMesh& mesh, const CameraView& view, const ViewMaps& maps)
        {
            if (maps.width != view.width || maps.height != view.height || maps.vertex_count != mesh.vertices.size() ||
                maps.face_count != mesh.faces.size())
            {
                std::ostringstream os;
                os << "view maps (" << maps.width << "x" << maps.height << ", " << maps.vertex_count << " vertices, " << maps.face_count
                   << " faces) do not match mesh/view (" << view.width << "x" << view.height << ", " << mesh.vertices.size()
                   << " vertices, " << mesh.faces.size() << " faces)";
                throw DataError(os.str());
            }
        }
    } // namespace

    ViewMaps rasterize(const TriangleMesh& mesh, const CameraView& view, const MeshAdjacency* adjacency)
    {
        view.validate();
        check_indices(mesh);

        const int w = view.width;
        const int h = view.height;
        const double inf = std::numeric_limits<double>::infinity();

        ViewMaps maps;
        maps.width = w;
        maps.height = h;
        maps.normal = ImageRGB(w, h, Vec3::Zero());
        maps.mask = ImageF(w, h, 0.0);
        maps.depth = ImageF(w, h, inf);
        maps.face_id = Image<int>(w, h, -1);
        maps.aa_edge = Image<int>(w, h, -1);
        maps.vertex_count = mesh.vertices.size();
        maps.face_count = mesh.faces.size();
        if (mesh.faces.empty())
        {
            return maps;
        }

        const Projector projector(view);
        const ScreenGeometry screen = project_all(mesh, projector);
        const size_t nf = mesh.faces.size();
        std::vector<double> screen_area(nf, std::numeric_limits<double>::quiet_NaN());

        // Depth pass: closest face per pixel center; ties keep the lower face index.
        for (size_t f = 0; f < nf; ++f)
        {
            const Face& face = mesh.faces[f];
            if (!screen.in_front[face[0]] || !screen.in_front[face[1]] || !screen.in_front[face[2]])
            {
                continue;
            }
            const Vec2& p0 = screen.points[face[0]].pixel;
            const Vec2& p1 = screen.points[face[1]].pixel;
            const Vec2& p2 = screen.points[face[2]].pixel;
            const double area = cross2(p1 - p0, p2 - p0);
            screen_area[f] = area;
            if (std::abs(area) < 1e-14)
            {
                continue;
            }
            const double inv_z0 = 1.0 / screen.points[face[0]].depth;
            const double inv_z1 = 1.0 / screen.points[face[1]].depth;
            const double inv_z2 = 1.0 / screen.points[face[2]].depth;

            const double min_x = std::min({p0.x(), p1.x(), p2.x()});
            const double max_x = std::max({p0.x(), p1.x(), p2.x()});
            const double min_y = std::min({p0.y(), p1.y(), p2.y()});
            const double max_y = std::max({p0.y(), p1.y(), p2.y()});
            const int x0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
            const int x1 = std::min(w - 1, static_cast<int>(std::floor(max_x - 0.5)));
            const int y0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
            const int y1 = std::min(h - 1, static_cast<int>(std::floor(max_y - 0.5)));
            const double inv_area = 1.0 / area;
            for (int y = y0; y <= y1; ++y)
            {
                for (int x = x0; x <= x1; ++x)
                {
                    const Vec2 c(x + 0.5, y + 0.5);
                    const double b0 = cross2(p2 - p1, c - p1) * inv_area;
                    const double b1 = cross2(p0 - p2, c - p2) * inv_area;
                    const double b2 = cross2(p1 - p0, c - p0) * inv_area;
                    if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0)
                    {
                        continue;
                    }
                    const double z = 1.0 / (b0 * inv_z0 + b1 * inv_z1 + b2 * inv_z2);
                    double& depth = maps.depth.at(x, y);
                    if (z < depth)
                    {
                        depth = z;
                        maps.face_id.at(x, y) = static_cast<int>(f);
                    }
                }
            }
        }

        // Attribute pass.
        std::vector<Vec3> normals(nf);
        for (size_t f = 0; f < nf; ++f)
        {
            normals[f] = face_normal(mesh, static_cast<int>(f));
        }
        const bool with_color = mesh.has_colors();
        if (with_color)
        {
            maps.color = ImageRGB(w, h, Vec3::Zero());
        }
        for (int y = 0; y < h; ++y)
        {
            for (int x = 0; x < w; ++x)
            {
                const int f = maps.face_id.at(x, y);
                if (f < 0)
                {
                    continue;
                }
                maps.normal.at(x, y) = normals[f];
                if (with_color)
                {
                    const Face& face = mesh.faces[f];
                    const Vec2& p0 = screen.points[face[0]].pixel;
                    const Vec2& p1 = screen.points[face[1]].pixel;
                    const Vec2& p2 = screen.points[face[2]].pixel;
                    const Vec2 c(x + 0.5, y + 0.5);
                    const double inv_area = 1.0 / screen_area[f];
                    // Perspective-correct barycentrics.
                    Vec3 b(cross2(p2 - p1, c - p1) * inv_area / screen.points[face[0]].depth,
                        cross2(p0 - p2, c - p2) * inv_area / screen.points[face[1]].depth,
                        cross2(p1 - p0, c - p0) * inv_area / screen.points[face[2]].depth);
                    b /= b.sum();
                    maps.color.at(x, y) = b[0] * mesh.colors[face[0]] + b[1] * mesh.colors[face[1]] + b[2] * mesh.colors[face[2]];
                }
            }
        }

        // Silhouette edges: mesh boundary/non-manifold edges and folds, where the two
        // incident faces project with opposite orientation.
        std::optional<MeshAdjacency> local_adjacency;
        if (adjacency == nullptr)
        {
            local_adjacency = MeshAdjacency::build(mesh);
            adjacency = &*local_adjacency;
        }
        auto orientation = [&](int f) { return std::isnan(screen_area[f]) ? 0 : (screen_area[f] >= 0.0 ? 1 : -1); };
        for (const EdgeRecord& e : adjacency->edges)
        {
            if (!screen.in_front[e.v0] || !screen.in_front[e.v1])
            {
                continue;
            }
            bool silhouette = e.faces.size() != 2;
            if (!silhouette)
            {
                const int o0 = orientation(e.faces[0]);
                const int o1 = orientation(e.faces[1]);
                silhouette = o0 == 0 || o1 == 0 || o0 != o1;
            }
            if (silhouette)
            {
                maps.silhouette_edges.push_back({e.v0, e.v1});
            }
        }

        std::vector<Vec2> pixels(screen.points.size());
        for (size_t v = 0; v < pixels.size(); ++v)
        {
            pixels[v] = screen.points[v].pixel;
        }
        const Tiles tiles = bin_segments(maps.silhouette_edges, pixels, w, h);

        // Coverage: binary in the interior, ramped near the silhouette on pixels
        // whose 8-neighborhood mixes covered and uncovered centers.
        for (int y = 0; y < h; ++y)
        {
            for (int x = 0; x < w; ++x)
            {
                const bool covered = maps.face_id.at(x, y) >= 0;
                bool mixed = false;
                for (int dy = -1; dy <= 1 && !mixed; ++dy)
                {
                    for (int dx = -1; dx <= 1 && !mixed; ++dx)
                    {
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if (nx >= 0 && ny >= 0 && nx < w && ny < h && (maps.face_id.at(nx, ny) >= 0) != covered)
                        {
                            mixed = true;
                        }
                    }
                }
                double alpha = covered ? 1.0 : 0.0;
                if (mixed)
                {
                    const SoftDistance sd = soft_distance(x, y, w, tiles, maps.silhouette_edges, pixels, false);
                    if (sd.distance < 0.5)
                    {
                        alpha = coverage_ramp(sd.distance, covered);
                        maps.aa_edge.at(x, y) = sd.nearest;
                    }
                }
                maps.mask.at(x, y) = alpha;
            }
        }
        return maps;
    }

    std::vector<Vec3> backward(const TriangleMesh& mesh, const CameraView& view, const ViewMaps& maps, const ImageRGB& d_normal,
        const ImageF& d_mask)
    {
        check_maps(mesh, view, maps);
        if ((!d_normal.empty() && !d_normal.same_shape(maps.width, maps.height)) ||
            (!d_mask.empty() && !d_mask.same_shape(maps.width, maps.height)))
        {
            throw DataError("loss gradient images do not match the view resolution");
        }

        std::vector<Vec3> grad(mesh.vertices.size(), Vec3::Zero());
        const size_t pixels = static_cast<size_t>(maps.width) * maps.height;

        if (!d_normal.empty())
        {
            std::vector<Vec3> face_grad(mesh.faces.size(), Vec3::Zero());
            for (size_t p = 0; p < pixels; ++p)
            {
                const int f = maps.face_id[p];
                if (f >= 0)
                {
                    face_grad[f] += d_normal[p];
                }
            }
            for (size_t f = 0; f < mesh.faces.size(); ++f)
            {
                const Vec3& g = face_grad[f];
                if (g.isZero(0.0))
                {
                    continue;
                }
                const Face& face = mesh.faces[f];
                const Vec3 e1 = mesh.vertices[face[1]] - mesh.vertices[face[0]];
                const Vec3 e2 = mesh.vertices[face[2]] - mesh.vertices[face[0]];
                const Vec3 cross = e1.cross(e2);
                const double len = cross.norm();
                if (len <= 0.0)
                {
                    continue;
                }
                const Vec3 n = cross / len;
                // d(cross/|cross|) = (I - n n^T) d(cross) / |cross|
                const Vec3 g_cross = (g - n * n.dot(g)) / len;
                const Vec3 g1 = e2.cross(g_cross);
                const Vec3 g2 = g_cross.cross(e1);
                grad[face[1]] += g1;
                grad[face[2]] += g2;
                grad[face[0]] -= g1 + g2;
            }
        }

        if (!d_mask.empty())
        {
            const Projector projector(view);
            std::vector<Vec2> pixels(mesh.vertices.size());
            for (size_t v = 0; v < pixels.size(); ++v)
            {
                pixels[v] = projector.project(mesh.vertices[v]).pixel;
            }
            const Tiles tiles = bin_segments(maps.silhouette_edges, pixels, maps.width, maps.height);
            std::vector<Vec2> screen_grad(mesh.vertices.size(), Vec2::Zero());
            for (int y = 0; y < maps.height; ++y)
            {
                for (int x = 0; x < maps.width; ++x)
                {
                    const size_t p = static_cast<size_t>(y) * maps.width + x;
                    if (maps.aa_edge[p] < 0 || d_mask[p] == 0.0)
                    {
                        continue;
                    }
                    const SoftDistance soft = soft_distance(x, y, maps.width, tiles, maps.silhouette_edges, pixels, true);
                    const double scale = d_mask[p] * coverage_ramp_slope(soft.distance, maps.face_id[p] >= 0);
                    if (scale == 0.0)
                    {
                        continue;
                    }
                    const Vec2 c(x + 0.5, y + 0.5);
                    for (size_t i = 0; i < soft.weights.size(); ++i)
                    {
                        const SegmentDistance& sd = soft.parts[i];
                        if (sd.distance <= 0.0)
                        {
                            continue;
                        }
                        const auto& edge = maps.silhouette_edges[soft.weights[i].first];
                        // d(distance)/d(endpoint) = -(1 - t) u and -t u, u = unit vector from the closest point to c
                        const Vec2 away = (c - sd.closest) / sd.distance;
                        const double s = scale * soft.weights[i].second;
                        screen_grad[edge[0]] -= s * (1.0 - sd.t) * away;
                        screen_grad[edge[1]] -= s * sd.t * away;
                    }
                }
            }
            for (size_t v = 0; v < mesh.vertices.size(); ++v)
            {
                if (!screen_grad[v].isZero(0.0))
                {
                    grad[v] += projector.jacobian(mesh.vertices[v]).transpose() * screen_grad[v];
                }
            }
        }
        return grad;
    }
} // namespace assetgen
