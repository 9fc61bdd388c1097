#include "assetgen/primitives.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace assetgen
{
    TriangleMesh make_icosphere(int level, double radius, const Vec3& center)
    {
        const double t = (1.0 + std::sqrt(5.0)) / 2.0;
        TriangleMesh mesh;
        mesh.vertices = {
            {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
            {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
            {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
        };
        mesh.faces = {
            {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
            {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
            {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
            {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
        };
        for (Vec3& v : mesh.vertices)
        {
            v.normalize();
        }

        for (int l = 0; l < level; ++l)
        {
            std::map<std::pair<int, int>, int> midpoint;
            auto mid = [&](int a, int b) {
                const auto key = std::make_pair(std::min(a, b), std::max(a, b));
                auto it = midpoint.find(key);
                if (it != midpoint.end())
                {
                    return it->second;
                }
                const int idx = static_cast<int>(mesh.vertices.size());
                mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
                midpoint.emplace(key, idx);
                return idx;
            };
            std::vector<Face> faces;
            faces.reserve(mesh.faces.size() * 4);
            for (const Face& f : mesh.faces)
            {
                const int ab = mid(f[0], f[1]);
                const int bc = mid(f[1], f[2]);
                const int ca = mid(f[2], f[0]);
                faces.push_back({f[0], ab, ca});
                faces.push_back({f[1], bc, ab});
                faces.push_back({f[2], ca, bc});
                faces.push_back({ab, bc, ca});
            }
            mesh.faces = std::move(faces);
        }

        for (Vec3& v : mesh.vertices)
        {
            v = center + radius * v;
        }
        return mesh;
    }

    TriangleMesh make_box(const Vec3& half_extents, int divisions)
    {
        const int n = std::max(1, divisions);
        TriangleMesh mesh;
        // Vertices are shared through a lattice key so the box is closed.
        std::map<std::array<int, 3>, int> lattice;
        auto vertex = [&](std::array<int, 3> key) {
            auto it = lattice.find(key);
            if (it != lattice.end())
            {
                return it->second;
            }
            const int idx = static_cast<int>(mesh.vertices.size());
            Vec3 p;
            for (int k = 0; k < 3; ++k)
            {
                p[k] = half_extents[k] * (2.0 * key[k] / n - 1.0);
            }
            mesh.vertices.push_back(p);
            lattice.emplace(key, idx);
            return idx;
        };

        for (int axis = 0; axis < 3; ++axis)
        {
            const int u = (axis + 1) % 3;
            const int w = (axis + 2) % 3;
            for (int side = 0; side < 2; ++side)
            {
                for (int i = 0; i < n; ++i)
                {
                    for (int j = 0; j < n; ++j)
                    {
                        auto key = [&](int di, int dj) {
                            std::array<int, 3> k{};
                            k[axis] = side * n;
                            k[u] = i + di;
                            k[w] = j + dj;
                            return vertex(k);
                        };
                        const int a = key(0, 0);
                        const int b = key(1, 0);
                        const int c = key(1, 1);
                        const int d = key(0, 1);
                        // (u, w, axis) is right-handed, so a->b->c faces +axis.
                        if (side == 1)
                        {
                            mesh.faces.push_back({a, b, c});
                            mesh.faces.push_back({a, c, d});
                        }
                        else
                        {
                            mesh.faces.push_back({a, c, b});
                            mesh.faces.push_back({a, d, c});
                        }
                    }
                }
            }
        }
        return mesh;
    }

    TriangleMesh make_unit_cube()
    {
        return make_box(Vec3::Constant(0.5), 1);
    }

    TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments)
    {
        TriangleMesh mesh;
        const double two_pi = 2.0 * std::numbers::pi;
        for (int i = 0; i < major_segments; ++i)
        {
            const double u = two_pi * i / major_segments;
            for (int j = 0; j < minor_segments; ++j)
            {
                const double v = two_pi * j / minor_segments;
                const double r = major_radius + minor_radius * std::cos(v);
                mesh.vertices.emplace_back(r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v));
            }
        }
        auto idx = [&](int i, int j) { return (i % major_segments) * minor_segments + (j % minor_segments); };
        for (int i = 0; i < major_segments; ++i)
        {
            for (int j = 0; j < minor_segments; ++j)
            {
                const int a = idx(i, j);
                const int b = idx(i + 1, j);
                const int c = idx(i + 1, j + 1);
                const int d = idx(i, j + 1);
                mesh.faces.push_back({a, b, c});
                mesh.faces.push_back({a, c, d});
            }
        }
        return mesh;
    }

    TriangleMesh make_uv_sphere(int rings, int segments, double radius)
    {
        TriangleMesh mesh;
        mesh.vertices.emplace_back(0.0, 0.0, radius);
        for (int r = 0; r < rings; ++r)
        {
            const double theta = std::numbers::pi * (r + 1) / (rings + 1);
            for (int s = 0; s < segments; ++s)
            {
                const double phi = 2.0 * std::numbers::pi * s / segments;
                mesh.vertices.emplace_back(radius * std::sin(theta) * std::cos(phi), radius * std::sin(theta) * std::sin(phi),
                    radius * std::cos(theta));
            }
        }
        const int south = static_cast<int>(mesh.vertices.size());
        mesh.vertices.emplace_back(0.0, 0.0, -radius);

        auto ring = [&](int r, int s) { return 1 + r * segments + (s % segments); };
        for (int s = 0; s < segments; ++s)
        {
            mesh.faces.push_back({0, ring(0, s), ring(0, s + 1)});
        }
        for (int r = 0; r + 1 < rings; ++r)
        {
            for (int s = 0; s < segments; ++s)
            {
                const int a = ring(r, s);
                const int b = ring(r + 1, s);
                const int c = ring(r + 1, s + 1);
                const int d = ring(r, s + 1);
                mesh.faces.push_back({a, b, c});
                mesh.faces.push_back({a, c, d});
            }
        }
        for (int s = 0; s < segments; ++s)
        {
            mesh.faces.push_back({south, ring(rings - 1, s + 1), ring(rings - 1, s)});
        }
        return mesh;
    }

    TriangleMesh make_grid(int nx, int ny, double size_x, double size_y)
    {
        TriangleMesh mesh;
        for (int j = 0; j <= ny; ++j)
        {
            for (int i = 0; i <= nx; ++i)
            {
                mesh.vertices.emplace_back(size_x * (static_cast<double>(i) / nx - 0.5), size_y * (static_cast<double>(j) / ny - 0.5), 0.0);
            }
        }
        auto idx = [&](int i, int j) { return j * (nx + 1) + i; };
        for (int j = 0; j < ny; ++j)
        {
            for (int i = 0; i < nx; ++i)
            {
                mesh.faces.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
                mesh.faces.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
            }
        }
        return mesh;
    }
} // namespace assetgen
