#include "assetgen/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <toml.hpp>

#include "assetgen/errors.hpp"
#include "assetgen/image_io.hpp"
#include "assetgen/metrics.hpp"
#include "assetgen/parallel.hpp"
#include "assetgen/primitives.hpp"
#include "assetgen/remesh.hpp"

namespace fs = std::filesystem;

namespace assetgen
{
    void NoiseSpec::validate() const
    {
        if (!(normal_sigma_deg >= 0.0) || normal_sigma_deg > 90.0)
        {
            throw ConfigError("noise.normal_sigma_deg must be in [0, 90]");
        }
        if (!(color_shift >= 0.0) || color_shift > 1.0)
        {
            throw ConfigError("noise.color_shift must be in [0, 1]");
        }
    }

    void SupervisionSet::validate() const
    {
        if (views.empty() || views.size() != maps.size())
        {
            throw DataError("supervision needs one map set per view (" + std::to_string(views.size()) + " views, " +
                            std::to_string(maps.size()) + " map sets)");
        }
        for (size_t i = 0; i < views.size(); ++i)
        {
            const ViewMaps& m = maps[i];
            if (views[i].width != views[0].width || views[i].height != views[0].height)
            {
                throw DataError("supervision views must share one resolution");
            }
            if (m.width != views[i].width || m.height != views[i].height || !m.normal.same_shape(m.width, m.height) ||
                !m.mask.same_shape(m.width, m.height))
            {
                throw DataError("supervision view " + std::to_string(i) + " has maps of the wrong size");
            }
        }
        if (!colors.empty())
        {
            if (colors.size() != color_views.size())
            {
                throw DataError("supervision color images and color views do not pair up");
            }
            for (size_t i = 0; i < colors.size(); ++i)
            {
                if (!colors[i].same_shape(color_views[i].width, color_views[i].height))
                {
                    throw DataError("supervision color image " + std::to_string(i) + " does not match its view");
                }
            }
        }
    }

    namespace
    {
        std::mt19937_64 view_rng(uint64_t seed, size_t view, uint64_t stream)
        {
            std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(view),
                static_cast<uint32_t>(stream)};
            return std::mt19937_64(seq);
        }

        void jitter_normals(ImageRGB& normals, double sigma_deg, std::mt19937_64& rng)
        {
            const double sigma = sigma_deg * std::numbers::pi / 180.0 / std::sqrt(2.0);
            std::normal_distribution<double> gauss(0.0, sigma);
            for (size_t p = 0; p < normals.size(); ++p)
            {
                Vec3& n = normals[p];
                if (n.squaredNorm() == 0.0)
                {
                    continue;
                }
                const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
                const Vec3 u = n.cross(helper).normalized();
                const Vec3 w = n.cross(u);
                const Vec3 t = gauss(rng) * u + gauss(rng) * w;
                const double angle = t.norm();
                if (angle > 0.0)
                {
                    n = (std::cos(angle) * n + std::sin(angle) * t / angle).normalized();
                }
            }
        }

        ImageF morphology(const ImageF& mask, int radius, bool dilate)
        {
            ImageF out(mask.width, mask.height);
            const int r2 = radius * radius;
            parallel_for(static_cast<size_t>(mask.height), [&](size_t row) {
                const int y = static_cast<int>(row);
                for (int x = 0; x < mask.width; ++x)
                {
                    double v = dilate ? 0.0 : 1.0;
                    for (int dy = -radius; dy <= radius; ++dy)
                    {
                        for (int dx = -radius; dx <= radius; ++dx)
                        {
                            if (dx * dx + dy * dy > r2)
                            {
                                continue;
                            }
                            const int sx = x + dx;
                            const int sy = y + dy;
                            const bool inside = sx >= 0 && sy >= 0 && sx < mask.width && sy < mask.height;
                            const double s = inside ? mask.at(sx, sy) : 0.0;
                            v = dilate ? std::max(v, s) : std::min(v, s);
                        }
                    }
                    out.at(x, y) = v;
                }
            });
            return out;
        }

        void apply_noise(ViewMaps& maps, ImageRGB* color, const NoiseSpec& noise, size_t view)
        {
            if (noise.normal_sigma_deg > 0.0)
            {
                auto rng = view_rng(noise.seed, view, 1);
                jitter_normals(maps.normal, noise.normal_sigma_deg, rng);
            }
            if (noise.mask_radius != 0)
            {
                maps.mask = noise.mask_radius > 0 ? dilate_mask(maps.mask, noise.mask_radius) : erode_mask(maps.mask, -noise.mask_radius);
                for (size_t p = 0; p < maps.mask.size(); ++p)
                {
                    if (maps.mask[p] == 0.0)
                    {
                        maps.normal[p] = Vec3::Zero();
                    }
                }
            }
            if (color != nullptr && noise.color_shift > 0.0)
            {
                auto rng = view_rng(noise.seed, view, 2);
                std::uniform_real_distribution<double> shift(-noise.color_shift, noise.color_shift);
                const Vec3 offset(shift(rng), shift(rng), shift(rng));
                for (size_t p = 0; p < color->size(); ++p)
                {
                    (*color)[p] = ((*color)[p] + offset).cwiseMax(0.0).cwiseMin(1.0);
                }
            }
        }
    } // namespace

    ImageF dilate_mask(const ImageF& mask, int radius)
    {
        return radius <= 0 ? mask : morphology(mask, radius, true);
    }

    ImageF erode_mask(const ImageF& mask, int radius)
    {
        return radius <= 0 ? mask : morphology(mask, radius, false);
    }

    SupervisionSet render_supervision(const TriangleMesh& reference, const std::vector<CameraView>& views, const NoiseSpec& noise,
        int color_scale)
    {
        noise.validate();
        if (views.empty())
        {
            throw ConfigError("supervision needs at least one view");
        }
        if (color_scale < 1)
        {
            throw ConfigError("color scale must be at least 1");
        }
        SupervisionSet set;
        set.views = views;
        set.source = SupervisionSource::Oracle;
        const MeshAdjacency adjacency = MeshAdjacency::build(reference);
        for (size_t i = 0; i < views.size(); ++i)
        {
            set.maps.push_back(rasterize(reference, views[i], &adjacency));
            set.maps.back().color = ImageRGB{};
            ImageRGB* color = nullptr;
            if (reference.has_colors())
            {
                set.color_views.push_back(views[i].scaled(color_scale));
                set.colors.push_back(rasterize(reference, set.color_views.back(), &adjacency).color);
                color = &set.colors.back();
            }
            apply_noise(set.maps.back(), color, noise, i);
        }
        set.validate();
        return set;
    }

    InitMode parse_init_mode(const std::string& name)
    {
        if (name == "sphere")
        {
            return InitMode::Sphere;
        }
        if (name == "decimate")
        {
            return InitMode::Decimate;
        }
        if (name == "blob")
        {
            return InitMode::Blob;
        }
        throw ConfigError("unknown initialization mode '" + name + "' (expected sphere, decimate or blob)");
    }

    std::string to_string(InitMode mode)
    {
        switch (mode)
        {
        case InitMode::Sphere:
            return "sphere";
        case InitMode::Decimate:
            return "decimate";
        case InitMode::Blob:
            return "blob";
        }
        return "?";
    }

    TriangleMesh extract_occupancy_surface(const std::vector<uint8_t>& occupied, int n, const Vec3& lo, const Vec3& cell)
    {
        // Padded lattice of voxel centers; index (i, j, k) in [-1, n].
        const int m = n + 2;
        auto inside = [&](int i, int j, int k) {
            if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
            {
                return false;
            }
            return occupied[static_cast<size_t>(i) + static_cast<size_t>(n) * (j + static_cast<size_t>(n) * k)] != 0;
        };
        auto lattice_id = [&](int i, int j, int k) {
            return static_cast<long long>(i + 1) + static_cast<long long>(m) * ((j + 1) + static_cast<long long>(m) * (k + 1));
        };
        auto position = [&](const std::array<int, 3>& g) {
            return Vec3(lo.x() + (g[0] + 0.5) * cell.x(), lo.y() + (g[1] + 0.5) * cell.y(), lo.z() + (g[2] + 0.5) * cell.z());
        };

        // Six tetrahedra along the main diagonal, one per axis permutation.
        static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

        TriangleMesh out;
        std::map<std::pair<long long, long long>, int> edge_vertex;
        auto vertex_on = [&](const std::array<int, 3>& a, const std::array<int, 3>& b) {
            long long ka = lattice_id(a[0], a[1], a[2]);
            long long kb = lattice_id(b[0], b[1], b[2]);
            if (ka > kb)
            {
                std::swap(ka, kb);
            }
            auto [it, fresh] = edge_vertex.try_emplace({ka, kb}, static_cast<int>(out.vertices.size()));
            if (fresh)
            {
                out.vertices.push_back(0.5 * (position(a) + position(b)));
            }
            return it->second;
        };
        auto emit = [&](int p, int q, int r, const Vec3& outward) {
            const Vec3 nrm = (out.vertices[q] - out.vertices[p]).cross(out.vertices[r] - out.vertices[p]);
            if (nrm.dot(outward) < 0.0)
            {
                std::swap(q, r);
            }
            out.faces.push_back({p, q, r});
        };

        for (int k = -1; k < n; ++k)
        {
            for (int j = -1; j < n; ++j)
            {
                for (int i = -1; i < n; ++i)
                {
                    bool any = false;
                    bool all = true;
                    for (int c = 0; c < 8; ++c)
                    {
                        const bool in = inside(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                        any = any || in;
                        all = all && in;
                    }
                    if (!any || all)
                    {
                        continue;
                    }
                    for (const auto& perm : perms)
                    {
                        std::array<std::array<int, 3>, 4> t;
                        t[0] = {i, j, k};
                        for (int s = 1; s < 4; ++s)
                        {
                            t[s] = t[s - 1];
                            t[s][perm[s - 1]] += 1;
                        }
                        std::vector<int> in;
                        std::vector<int> outside;
                        Vec3 cin = Vec3::Zero();
                        Vec3 cout = Vec3::Zero();
                        for (int s = 0; s < 4; ++s)
                        {
                            if (inside(t[s][0], t[s][1], t[s][2]))
                            {
                                in.push_back(s);
                                cin += position(t[s]);
                            }
                            else
                            {
                                outside.push_back(s);
                                cout += position(t[s]);
                            }
                        }
                        if (in.empty() || outside.empty())
                        {
                            continue;
                        }
                        const Vec3 outward = cout / static_cast<double>(outside.size()) - cin / static_cast<double>(in.size());
                        if (in.size() == 1 || outside.size() == 1)
                        {
                            const bool lone_inside = in.size() == 1;
                            const int lone = lone_inside ? in[0] : outside[0];
                            const std::vector<int>& rest = lone_inside ? outside : in;
                            emit(vertex_on(t[lone], t[rest[0]]), vertex_on(t[lone], t[rest[1]]), vertex_on(t[lone], t[rest[2]]), outward);
                        }
                        else
                        {
                            // Quad through the four crossing edges, in cyclic order.
                            const int a = vertex_on(t[in[0]], t[outside[0]]);
                            const int b = vertex_on(t[in[0]], t[outside[1]]);
                            const int c = vertex_on(t[in[1]], t[outside[1]]);
                            const int d = vertex_on(t[in[1]], t[outside[0]]);
                            emit(a, b, c, outward);
                            emit(a, c, d, outward);
                        }
                    }
                }
            }
        }
        return out;
    }

    namespace
    {
        TriangleMesh largest_component(const TriangleMesh& mesh)
        {
            const auto [component, count] = vertex_components(mesh);
            if (count <= 1)
            {
                return mesh;
            }
            std::vector<size_t> faces_per(count, 0);
            for (const Face& f : mesh.faces)
            {
                faces_per[component[f[0]]]++;
            }
            const int keep = static_cast<int>(std::max_element(faces_per.begin(), faces_per.end()) - faces_per.begin());
            TriangleMesh out;
            out.vertices = mesh.vertices;
            for (const Face& f : mesh.faces)
            {
                if (component[f[0]] == keep)
                {
                    out.faces.push_back(f);
                }
            }
            return remove_unreferenced_vertices(out);
        }

        void uniform_laplacian_steps(TriangleMesh& mesh, int steps, double lambda)
        {
            const MeshAdjacency adj = MeshAdjacency::build(mesh);
            for (int s = 0; s < steps; ++s)
            {
                std::vector<Vec3> next = mesh.vertices;
                for (size_t v = 0; v < mesh.vertices.size(); ++v)
                {
                    if (adj.neighbors[v].empty())
                    {
                        continue;
                    }
                    Vec3 mean = Vec3::Zero();
                    for (int u : adj.neighbors[v])
                    {
                        mean += mesh.vertices[u];
                    }
                    mean /= static_cast<double>(adj.neighbors[v].size());
                    next[v] += lambda * (mean - mesh.vertices[v]);
                }
                mesh.vertices = std::move(next);
            }
        }

        void jitter(TriangleMesh& mesh, double sigma, uint64_t seed)
        {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> gauss(0.0, sigma);
            for (Vec3& v : mesh.vertices)
            {
                v += Vec3(gauss(rng), gauss(rng), gauss(rng));
            }
        }

        constexpr size_t kDecimateFaces = 500;
        constexpr double kJitterSigma = 0.01;
        constexpr int kBlobResolution = 24;
        constexpr int kBlobSmoothingSteps = 10;
    } // namespace

    TriangleMesh make_coarse_initial(const TriangleMesh& reference, InitMode mode, uint64_t seed)
    {
        if (reference.faces.empty())
        {
            throw DataError("cannot initialize from an empty reference mesh");
        }
        TriangleMesh out;
        switch (mode)
        {
        case InitMode::Sphere: {
            const Vec3 center = bounding_box(reference).center();
            double radius = 0.0;
            for (const Vec3& v : reference.vertices)
            {
                radius = std::max(radius, (v - center).norm());
            }
            out = make_icosphere(3, radius, center);
            break;
        }
        case InitMode::Decimate:
            out = reference.faces.size() > kDecimateFaces ? decimate(reference, kDecimateFaces) : reference;
            out.colors.clear();
            jitter(out, kJitterSigma, seed);
            break;
        case InitMode::Blob: {
            const BoundingBox box = bounding_box(reference);
            const double cell = box.extent().maxCoeff() / (kBlobResolution - 2);
            const Vec3 lo = box.center() - Vec3::Constant(0.5 * kBlobResolution * cell);
            const Vec3 hi = lo + Vec3::Constant(kBlobResolution * cell);
            const std::vector<uint8_t> occ = voxelize(reference, lo, hi, kBlobResolution);
            out = largest_component(extract_occupancy_surface(occ, kBlobResolution, lo, Vec3::Constant(cell)));
            if (out.faces.empty())
            {
                throw DataError("reference has no interior at the blob voxel resolution");
            }
            uniform_laplacian_steps(out, kBlobSmoothingSteps, 0.5);
            break;
        }
        }
        const ManifoldReport r = validate_manifold(out);
        if (!r.is_closed_manifold() || r.isolated_vertices != 0)
        {
            throw TopologyError(to_string(mode) + " initialization did not produce a closed manifold: " + r.summary());
        }
        return out;
    }

    namespace
    {
        std::string view_file(size_t i, const char* what, const char* ext)
        {
            std::ostringstream s;
            s << "view_" << (i < 10 ? "0" : "") << i << "_" << what << "." << ext;
            return s.str();
        }

        toml::table view_table(const CameraView& v)
        {
            return toml::table{{"azimuth_deg", v.azimuth_deg}, {"elevation_deg", v.elevation_deg}, {"radius", v.radius},
                {"fov_deg", v.fov_deg}, {"width", v.width}, {"height", v.height},
                {"look_at", toml::array{v.look_at.x(), v.look_at.y(), v.look_at.z()}}};
        }

        template <typename T>
        T required(const toml::table& t, const std::string& key, const std::string& where)
        {
            const auto value = t[key].value<T>();
            if (!value)
            {
                throw DataError(where + ": missing or mistyped '" + key + "'");
            }
            return *value;
        }

        CameraView parse_view(const toml::table& t, const std::string& where)
        {
            CameraView v;
            v.azimuth_deg = required<double>(t, "azimuth_deg", where);
            v.elevation_deg = required<double>(t, "elevation_deg", where);
            v.radius = required<double>(t, "radius", where);
            v.fov_deg = required<double>(t, "fov_deg", where);
            v.width = static_cast<int>(required<int64_t>(t, "width", where));
            v.height = static_cast<int>(required<int64_t>(t, "height", where));
            if (const toml::array* a = t["look_at"].as_array(); a && a->size() == 3)
            {
                for (int k = 0; k < 3; ++k)
                {
                    v.look_at[k] = (*a)[k].value<double>().value_or(0.0);
                }
            }
            try
            {
                v.validate();
            }
            catch (const ConfigError& e)
            {
                throw DataError(where + ": " + e.what());
            }
            return v;
        }

        void require_file(const fs::path& p)
        {
            if (!fs::exists(p))
            {
                throw DataError("missing supervision file: " + p.string());
            }
        }
    } // namespace

    void export_supervision(const SupervisionSet& set, const fs::path& dir)
    {
        set.validate();
        fs::create_directories(dir);
        toml::array views;
        for (size_t i = 0; i < set.views.size(); ++i)
        {
            toml::table t = view_table(set.views[i]);
            t.insert("normal", view_file(i, "normal", "pfm"));
            t.insert("mask", view_file(i, "mask", "pfm"));
            write_pfm(dir / view_file(i, "normal", "pfm"), set.maps[i].normal);
            write_pfm(dir / view_file(i, "mask", "pfm"), set.maps[i].mask);
            if (set.has_colors())
            {
                toml::table c = view_table(set.color_views[i]);
                c.insert("file", view_file(i, "color", "png"));
                t.insert("color", std::move(c));
                write_png_srgb(dir / view_file(i, "color", "png"), set.colors[i]);
            }
            views.push_back(std::move(t));
        }
        toml::table manifest{{"source", set.source == SupervisionSource::Oracle ? "oracle" : "external"}, {"views", std::move(views)}};
        std::ofstream out(dir / "manifest.toml");
        if (!out)
        {
            throw DataError("cannot write " + (dir / "manifest.toml").string());
        }
        out << manifest << "\n";
    }

    SupervisionSet import_supervision(const fs::path& dir)
    {
        const fs::path manifest_path = dir / "manifest.toml";
        require_file(manifest_path);
        toml::table manifest;
        try
        {
            manifest = toml::parse_file(manifest_path.string());
        }
        catch (const toml::parse_error& e)
        {
            std::ostringstream msg;
            msg << manifest_path.string() << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
            throw DataError(msg.str());
        }
        const toml::array* views = manifest["views"].as_array();
        if (views == nullptr || views->empty())
        {
            throw DataError(manifest_path.string() + ": no [[views]] entries");
        }
        SupervisionSet set;
        set.source = SupervisionSource::External;
        bool any_color = false;
        for (size_t i = 0; i < views->size(); ++i)
        {
            const toml::table* t = (*views)[i].as_table();
            const std::string where = manifest_path.string() + ": views[" + std::to_string(i) + "]";
            if (t == nullptr)
            {
                throw DataError(where + " is not a table");
            }
            const CameraView view = parse_view(*t, where);
            ViewMaps maps;
            maps.width = view.width;
            maps.height = view.height;
            const fs::path normal = dir / required<std::string>(*t, "normal", where);
            const fs::path mask = dir / required<std::string>(*t, "mask", where);
            require_file(normal);
            require_file(mask);
            maps.normal = read_pfm_rgb(normal);
            maps.mask = read_pfm_gray(mask);
            set.views.push_back(view);
            set.maps.push_back(std::move(maps));
            if (const toml::table* c = (*t)["color"].as_table())
            {
                const CameraView cv = parse_view(*c, where + ".color");
                const fs::path file = dir / required<std::string>(*c, "file", where + ".color");
                require_file(file);
                set.color_views.push_back(cv);
                set.colors.push_back(read_png_srgb(file));
                any_color = true;
            }
            else if (any_color)
            {
                throw DataError(where + ": color image missing while earlier views have one");
            }
        }
        if (any_color && set.colors.size() != set.views.size())
        {
            throw DataError(manifest_path.string() + ": only some views have color images");
        }
        set.validate();
        return set;
    }
} // namespace assetgen
