#include "assetgen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "assetgen/errors.hpp"
#include "assetgen/parallel.hpp"

using nlohmann::json;

namespace assetgen
{
    namespace
    {
        std::string fmt_xy(const Vec2& p)
        {
            std::ostringstream s;
            s << "(" << p.x() << ", " << p.y() << ")";
            return s.str();
        }

        uint64_t splitmix(uint64_t x)
        {
            x += 0x9e3779b97f4a7c15ull;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
            return x ^ (x >> 31);
        }

        double unit_double(uint64_t bits)
        {
            return static_cast<double>(bits >> 11) * 0x1.0p-53;
        }
    } // namespace

    GroundSurface GroundSurface::plane(const Vec3& point, const Vec3& normal)
    {
        GroundSurface s;
        s.kind = Kind::Plane;
        s.point = point;
        s.normal = normal.normalized();
        if (s.normal.z() < 0.0)
        {
            s.normal = -s.normal;
        }
        return s;
    }

    GroundSurface GroundSurface::heightfield(const Vec2& origin, double cell_size, int rows, int cols, std::vector<double> heights)
    {
        GroundSurface s;
        s.kind = Kind::Heightfield;
        s.origin = origin;
        s.cell_size = cell_size;
        s.rows = rows;
        s.cols = cols;
        s.heights = std::move(heights);
        return s;
    }

    void GroundSurface::validate() const
    {
        if (kind == Kind::Plane)
        {
            if (!point.allFinite() || !normal.allFinite() || std::abs(normal.norm() - 1.0) > 1e-6)
            {
                throw DataError("ground plane needs a finite point and a unit normal");
            }
            if (std::abs(normal.z()) < 1e-6)
            {
                throw DataError("ground plane is vertical");
            }
            return;
        }
        if (rows < 2 || cols < 2)
        {
            throw DataError("heightfield needs at least 2x2 nodes");
        }
        if (!(cell_size > 0.0) || !std::isfinite(cell_size) || !origin.allFinite())
        {
            throw DataError("heightfield cell size must be positive and the origin finite");
        }
        if (heights.size() != static_cast<size_t>(rows) * cols)
        {
            throw DataError("heightfield has " + std::to_string(heights.size()) + " heights for " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " nodes");
        }
        for (size_t i = 0; i < heights.size(); ++i)
        {
            if (!std::isfinite(heights[i]))
            {
                throw DataError("heightfield height " + std::to_string(i) + " is not finite");
            }
        }
    }

    Vec2 GroundSurface::domain_min() const
    {
        if (kind == Kind::Plane)
        {
            return Vec2::Constant(-std::numeric_limits<double>::infinity());
        }
        return origin;
    }

    Vec2 GroundSurface::domain_max() const
    {
        if (kind == Kind::Plane)
        {
            return Vec2::Constant(std::numeric_limits<double>::infinity());
        }
        return origin + cell_size * Vec2(cols - 1, rows - 1);
    }

    bool GroundSurface::contains(const Vec2& xy) const
    {
        if (kind == Kind::Plane)
        {
            return xy.allFinite();
        }
        const Vec2 lo = domain_min();
        const Vec2 hi = domain_max();
        return xy.x() >= lo.x() && xy.y() >= lo.y() && xy.x() <= hi.x() && xy.y() <= hi.y();
    }

    namespace
    {
        struct CellSample
        {
            int i = 0;
            int j = 0;
            double fx = 0.0;
            double fy = 0.0;
        };

        CellSample locate(const GroundSurface& s, const Vec2& xy)
        {
            const double gx = (xy.x() - s.origin.x()) / s.cell_size;
            const double gy = (xy.y() - s.origin.y()) / s.cell_size;
            CellSample c;
            c.j = std::clamp(static_cast<int>(std::floor(gx)), 0, s.cols - 2);
            c.i = std::clamp(static_cast<int>(std::floor(gy)), 0, s.rows - 2);
            c.fx = gx - c.j;
            c.fy = gy - c.i;
            return c;
        }

        double node(const GroundSurface& s, int i, int j)
        {
            return s.heights[static_cast<size_t>(i) * s.cols + j];
        }

        void require_inside(const GroundSurface& s, const Vec2& xy)
        {
            if (!s.contains(xy))
            {
                throw DataError("point " + fmt_xy(xy) + " is outside the ground surface domain");
            }
        }

        Vec2 clamp_to_domain(const GroundSurface& s, const Vec2& xy)
        {
            if (s.kind == GroundSurface::Kind::Plane)
            {
                return xy;
            }
            return xy.cwiseMax(s.domain_min()).cwiseMin(s.domain_max());
        }
    } // namespace

    double GroundSurface::height_at(const Vec2& xy) const
    {
        require_inside(*this, xy);
        if (kind == Kind::Plane)
        {
            return point.z() - (normal.x() * (xy.x() - point.x()) + normal.y() * (xy.y() - point.y())) / normal.z();
        }
        const CellSample c = locate(*this, xy);
        const double h00 = node(*this, c.i, c.j), h10 = node(*this, c.i, c.j + 1);
        const double h01 = node(*this, c.i + 1, c.j), h11 = node(*this, c.i + 1, c.j + 1);
        return (1 - c.fy) * ((1 - c.fx) * h00 + c.fx * h10) + c.fy * ((1 - c.fx) * h01 + c.fx * h11);
    }

    Vec3 GroundSurface::normal_at(const Vec2& xy) const
    {
        require_inside(*this, xy);
        if (kind == Kind::Plane)
        {
            return normal;
        }
        const CellSample c = locate(*this, xy);
        const double h00 = node(*this, c.i, c.j), h10 = node(*this, c.i, c.j + 1);
        const double h01 = node(*this, c.i + 1, c.j), h11 = node(*this, c.i + 1, c.j + 1);
        const double dx = ((1 - c.fy) * (h10 - h00) + c.fy * (h11 - h01)) / cell_size;
        const double dy = ((1 - c.fx) * (h01 - h00) + c.fx * (h11 - h10)) / cell_size;
        return Vec3(-dx, -dy, 1.0).normalized();
    }

    Vec2 OrientedRect::axis_u() const
    {
        return Vec2(std::cos(yaw), std::sin(yaw));
    }

    Vec2 OrientedRect::axis_v() const
    {
        return Vec2(-std::sin(yaw), std::cos(yaw));
    }

    std::array<Vec2, 4> OrientedRect::corners() const
    {
        const Vec2 u = half_extents.x() * axis_u();
        const Vec2 v = half_extents.y() * axis_v();
        return {center - u - v, center + u - v, center + u + v, center - u + v};
    }

    OrientedRect OrientedRect::inflated(double margin) const
    {
        OrientedRect r = *this;
        r.half_extents += Vec2::Constant(margin);
        return r;
    }

    bool rects_intersect(const OrientedRect& a, const OrientedRect& b)
    {
        const Vec2 d = b.center - a.center;
        const Vec2 au = a.axis_u(), av = a.axis_v(), bu = b.axis_u(), bv = b.axis_v();
        for (const Vec2& axis : {au, av, bu, bv})
        {
            const double ra = a.half_extents.x() * std::abs(au.dot(axis)) + a.half_extents.y() * std::abs(av.dot(axis));
            const double rb = b.half_extents.x() * std::abs(bu.dot(axis)) + b.half_extents.y() * std::abs(bv.dot(axis));
            if (std::abs(d.dot(axis)) > ra + rb)
            {
                return false;
            }
        }
        return true;
    }

    void ObstacleTrack::validate() const
    {
        if (footprints.empty())
        {
            throw DataError("obstacle track '" + id + "' has no footprints");
        }
        for (size_t k = 0; k < footprints.size(); ++k)
        {
            const OrientedRect& r = footprints[k];
            if (!(r.half_extents.x() > 0.0) || !(r.half_extents.y() > 0.0) || !r.center.allFinite() || !std::isfinite(r.yaw))
            {
                throw DataError("obstacle track '" + id + "' footprint " + std::to_string(k) + " needs finite values and positive half extents");
            }
        }
    }

    namespace
    {
        Placement snap_points(const std::vector<Vec3>& points, const Vec2& xy, double yaw, const GroundSurface& surface)
        {
            require_inside(surface, xy);
            if (points.empty())
            {
                throw DataError("cannot snap an empty asset");
            }
            const Vec3 n = surface.normal_at(xy);
            const Mat3 align = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), n).toRotationMatrix();
            Placement p;
            p.rotation = align * Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
            p.ground_height = surface.height_at(xy);
            double lift = -std::numeric_limits<double>::infinity();
            for (const Vec3& v : points)
            {
                const Vec3 q = p.rotation * v + Vec3(xy.x(), xy.y(), 0.0);
                const Vec2 below = clamp_to_domain(surface, q.head<2>());
                lift = std::max(lift, surface.height_at(below) - q.z());
            }
            p.translation = Vec3(xy.x(), xy.y(), lift);

            const Vec2 u(std::cos(yaw), std::sin(yaw));
            const Vec2 w(-std::sin(yaw), std::cos(yaw));
            Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
            Vec2 hi = -lo;
            for (const Vec3& v : points)
            {
                const Vec2 g = (p.rotation * v).head<2>();
                const Vec2 c(g.dot(u), g.dot(w));
                lo = lo.cwiseMin(c);
                hi = hi.cwiseMax(c);
            }
            const Vec2 mid = 0.5 * (lo + hi);
            p.footprint.center = xy + mid.x() * u + mid.y() * w;
            p.footprint.yaw = yaw;
            p.footprint.half_extents = (0.5 * (hi - lo)).cwiseMax(Vec2::Constant(1e-9));
            return p;
        }
    } // namespace

    Placement snap_to_ground(const TriangleMesh& asset, const Vec2& xy, double yaw, const GroundSurface& surface,
        const std::string& asset_id)
    {
        surface.validate();
        Placement p = snap_points(asset.vertices, xy, yaw, surface);
        p.asset_id = asset_id;
        return p;
    }

    TriangleMesh posed_mesh(const TriangleMesh& asset, const Placement& placement)
    {
        TriangleMesh out = asset;
        for (Vec3& v : out.vertices)
        {
            v = placement.apply(v);
        }
        return out;
    }

    FootprintFn rigid_footprint(const OrientedRect& local)
    {
        return [local](const Pose2& pose) {
            OrientedRect r = local;
            const Eigen::Rotation2Dd rot(pose.yaw);
            r.center = pose.xy + rot * local.center;
            r.yaw = local.yaw + pose.yaw;
            return r;
        };
    }

    FootprintFn snapped_box_footprint(const TriangleMesh& asset, const GroundSurface& surface)
    {
        surface.validate();
        const BoundingBox box = bounding_box(asset);
        std::vector<Vec3> corners;
        for (int k = 0; k < 8; ++k)
        {
            corners.emplace_back(k & 1 ? box.max.x() : box.min.x(), k & 2 ? box.max.y() : box.min.y(), k & 4 ? box.max.z() : box.min.z());
        }
        return [corners, surface](const Pose2& pose) { return snap_points(corners, pose.xy, pose.yaw, surface).footprint; };
    }

    PlacementSearch find_collision_free(const GroundSurface& surface, const std::vector<ObstacleTrack>& tracks,
        const FootprintFn& footprint, const AxisRect& region, size_t n_poses, uint64_t seed, const PlacementSampler& sampler)
    {
        surface.validate();
        if (!(region.max.x() > region.min.x()) || !(region.max.y() > region.min.y()))
        {
            throw DataError("placement region " + fmt_xy(region.min) + " - " + fmt_xy(region.max) + " is empty");
        }
        if (!surface.contains(region.min) || !surface.contains(region.max))
        {
            throw DataError("placement region " + fmt_xy(region.min) + " - " + fmt_xy(region.max) + " leaves the ground surface");
        }
        if (!(sampler.clearance >= 0.0) || sampler.window == 0 || sampler.batch == 0)
        {
            throw ConfigError("placement clearance must be non-negative and window/batch positive");
        }
        std::vector<OrientedRect> obstacles;
        for (const ObstacleTrack& t : tracks)
        {
            t.validate();
            obstacles.insert(obstacles.end(), t.footprints.begin(), t.footprints.end());
        }

        PlacementSearch out;
        const Vec2 span = region.max - region.min;
        uint64_t next = 0;
        size_t window_attempts = 0;
        size_t window_accepts = 0;
        std::vector<Pose2> cand(sampler.batch);
        std::vector<OrientedRect> rect(sampler.batch);
        std::vector<uint8_t> blocked(sampler.batch);
        while (out.poses.size() < n_poses && !out.saturated)
        {
            parallel_for(sampler.batch, [&](size_t k) {
                const uint64_t stream = splitmix(seed ^ splitmix(next + k));
                const uint64_t r1 = splitmix(stream);
                const uint64_t r2 = splitmix(r1);
                const uint64_t r3 = splitmix(r2);
                cand[k].xy = region.min + Vec2(unit_double(r1) * span.x(), unit_double(r2) * span.y());
                cand[k].yaw = unit_double(r3) * 2.0 * std::numbers::pi;
                rect[k] = footprint(cand[k]);
                const OrientedRect grown = rect[k].inflated(sampler.clearance);
                const double reach = grown.bounding_radius();
                blocked[k] = 0;
                for (const OrientedRect& o : obstacles)
                {
                    if ((o.center - grown.center).norm() <= reach + o.bounding_radius() && rects_intersect(grown, o))
                    {
                        blocked[k] = 1;
                        break;
                    }
                }
            });
            next += sampler.batch;
            for (size_t k = 0; k < sampler.batch && out.poses.size() < n_poses; ++k)
            {
                ++out.attempts;
                ++window_attempts;
                bool ok = !blocked[k];
                if (ok)
                {
                    const OrientedRect grown = rect[k].inflated(sampler.clearance);
                    for (const OrientedRect& a : out.footprints)
                    {
                        if (rects_intersect(grown, a))
                        {
                            ok = false;
                            break;
                        }
                    }
                }
                if (ok)
                {
                    out.poses.push_back(cand[k]);
                    out.footprints.push_back(rect[k]);
                    ++window_accepts;
                }
                if (window_attempts == sampler.window)
                {
                    if (static_cast<double>(window_accepts) < sampler.min_acceptance_rate * static_cast<double>(sampler.window))
                    {
                        out.saturated = true;
                        break;
                    }
                    window_attempts = 0;
                    window_accepts = 0;
                }
            }
        }
        return out;
    }

    ImageRGB composite(const ImageRGB& background, const ImageF& background_depth, const ViewMaps& asset_render)
    {
        const int w = background.width;
        const int h = background.height;
        if (!background_depth.same_shape(w, h) || asset_render.width != w || asset_render.height != h ||
            !asset_render.mask.same_shape(w, h) || !asset_render.depth.same_shape(w, h))
        {
            throw DataError("composite inputs differ in size (background " + std::to_string(w) + "x" + std::to_string(h) + ", depth " +
                            std::to_string(background_depth.width) + "x" + std::to_string(background_depth.height) + ", asset " +
                            std::to_string(asset_render.width) + "x" + std::to_string(asset_render.height) + ")");
        }
        if (!asset_render.color.same_shape(w, h))
        {
            throw DataError("asset render has no color image");
        }
        ImageRGB out = background;
        parallel_for(static_cast<size_t>(h), [&](size_t y) {
            for (int x = 0; x < w; ++x)
            {
                const size_t i = y * static_cast<size_t>(w) + x;
                const double a = std::clamp(asset_render.mask[i], 0.0, 1.0);
                if (a > 0.0 && asset_render.depth[i] < background_depth[i])
                {
                    out[i] = a * asset_render.color[i] + (1.0 - a) * background[i];
                }
            }
        });
        return out;
    }

    int SceneDescription::first_timestep() const
    {
        int t = std::numeric_limits<int>::max();
        for (const ObstacleTrack& tr : tracks)
        {
            t = std::min(t, tr.first_timestep);
        }
        return tracks.empty() ? 0 : t;
    }

    int SceneDescription::last_timestep() const
    {
        int t = std::numeric_limits<int>::min();
        for (const ObstacleTrack& tr : tracks)
        {
            t = std::max(t, tr.last_timestep());
        }
        return tracks.empty() ? 0 : t;
    }

    namespace
    {
        const json& member(const json& obj, const char* key, const std::string& path)
        {
            if (!obj.is_object())
            {
                throw DataError(path + ": expected an object");
            }
            const auto it = obj.find(key);
            if (it == obj.end())
            {
                throw DataError(path + "." + key + ": missing");
            }
            return *it;
        }

        double number(const json& j, const std::string& path)
        {
            if (!j.is_number())
            {
                throw DataError(path + ": expected a number");
            }
            const double v = j.get<double>();
            if (!std::isfinite(v))
            {
                throw DataError(path + ": not finite");
            }
            return v;
        }

        template <int N>
        Eigen::Matrix<double, N, 1> vec(const json& j, const std::string& path)
        {
            if (!j.is_array() || j.size() != N)
            {
                throw DataError(path + ": expected an array of " + std::to_string(N) + " numbers");
            }
            Eigen::Matrix<double, N, 1> v;
            for (int k = 0; k < N; ++k)
            {
                v[k] = number(j[k], path + "[" + std::to_string(k) + "]");
            }
            return v;
        }

        OrientedRect parse_rect(const json& j, const std::string& path)
        {
            OrientedRect r;
            r.center = vec<2>(member(j, "center", path), path + ".center");
            r.yaw = j.contains("yaw") ? number(j["yaw"], path + ".yaw") : 0.0;
            r.half_extents = vec<2>(member(j, "half_extents", path), path + ".half_extents");
            if (!(r.half_extents.minCoeff() > 0.0))
            {
                throw DataError(path + ".half_extents: must be positive");
            }
            return r;
        }

        json rect_json(const OrientedRect& r)
        {
            return {{"center", {r.center.x(), r.center.y()}}, {"yaw", r.yaw}, {"half_extents", {r.half_extents.x(), r.half_extents.y()}}};
        }

        GroundSurface parse_surface(const json& j, const std::string& path)
        {
            const json& type = member(j, "type", path);
            if (type == "plane")
            {
                const Vec3 n = vec<3>(member(j, "normal", path), path + ".normal");
                if (n.norm() < 1e-12)
                {
                    throw DataError(path + ".normal: zero vector");
                }
                GroundSurface s = GroundSurface::plane(vec<3>(member(j, "point", path), path + ".point"), n);
                if (std::abs(s.normal.z()) < 1e-6)
                {
                    throw DataError(path + ".normal: plane is vertical");
                }
                return s;
            }
            if (type == "heightfield")
            {
                const Vec2 origin = vec<2>(member(j, "origin", path), path + ".origin");
                const double cell = number(member(j, "cell_size", path), path + ".cell_size");
                const json& rows = member(j, "heights", path);
                if (!rows.is_array() || rows.size() < 2)
                {
                    throw DataError(path + ".heights: expected at least 2 rows");
                }
                std::vector<double> heights;
                size_t cols = 0;
                for (size_t i = 0; i < rows.size(); ++i)
                {
                    const std::string rp = path + ".heights[" + std::to_string(i) + "]";
                    if (!rows[i].is_array() || rows[i].size() < 2 || (i > 0 && rows[i].size() != cols))
                    {
                        throw DataError(rp + ": expected a row of " + (i > 0 ? std::to_string(cols) : std::string("at least 2")) + " numbers");
                    }
                    cols = rows[i].size();
                    for (size_t k = 0; k < cols; ++k)
                    {
                        heights.push_back(number(rows[i][k], rp + "[" + std::to_string(k) + "]"));
                    }
                }
                if (!(cell > 0.0))
                {
                    throw DataError(path + ".cell_size: must be positive");
                }
                return GroundSurface::heightfield(origin, cell, static_cast<int>(rows.size()), static_cast<int>(cols), std::move(heights));
            }
            throw DataError(path + ".type: expected \"plane\" or \"heightfield\"");
        }

        json surface_json(const GroundSurface& s)
        {
            if (s.kind == GroundSurface::Kind::Plane)
            {
                return {{"type", "plane"}, {"point", {s.point.x(), s.point.y(), s.point.z()}}, {"normal", {s.normal.x(), s.normal.y(), s.normal.z()}}};
            }
            json rows = json::array();
            for (int i = 0; i < s.rows; ++i)
            {
                json row = json::array();
                for (int k = 0; k < s.cols; ++k)
                {
                    row.push_back(node(s, i, k));
                }
                rows.push_back(row);
            }
            return {{"type", "heightfield"}, {"origin", {s.origin.x(), s.origin.y()}}, {"cell_size", s.cell_size}, {"heights", rows}};
        }

        json parse_text(const std::string& text, const char* what)
        {
            try
            {
                return json::parse(text);
            }
            catch (const json::parse_error& e)
            {
                throw DataError(std::string(what) + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
            }
        }
    } // namespace

    SceneDescription parse_scene(const std::string& text)
    {
        const json root = parse_text(text, "scene");
        SceneDescription scene;
        scene.surface = parse_surface(member(root, "surface", "$"), "$.surface");
        scene.surface.validate();
        const json& region = member(root, "region", "$");
        scene.region.min = vec<2>(member(region, "min", "$.region"), "$.region.min");
        scene.region.max = vec<2>(member(region, "max", "$.region"), "$.region.max");
        if (root.contains("tracks"))
        {
            const json& tracks = root["tracks"];
            if (!tracks.is_array())
            {
                throw DataError("$.tracks: expected an array");
            }
            for (size_t t = 0; t < tracks.size(); ++t)
            {
                const std::string tp = "$.tracks[" + std::to_string(t) + "]";
                ObstacleTrack track;
                const json& id = member(tracks[t], "id", tp);
                track.id = id.is_string() ? id.get<std::string>() : id.dump();
                if (tracks[t].contains("first_timestep"))
                {
                    const json& ft = tracks[t]["first_timestep"];
                    if (!ft.is_number_integer())
                    {
                        throw DataError(tp + ".first_timestep: expected an integer");
                    }
                    track.first_timestep = ft.get<int>();
                }
                const json& fps = member(tracks[t], "footprints", tp);
                if (!fps.is_array() || fps.empty())
                {
                    throw DataError(tp + ".footprints: expected a non-empty array");
                }
                for (size_t k = 0; k < fps.size(); ++k)
                {
                    track.footprints.push_back(parse_rect(fps[k], tp + ".footprints[" + std::to_string(k) + "]"));
                }
                scene.tracks.push_back(std::move(track));
            }
        }
        return scene;
    }

    SceneDescription load_scene(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw DataError("cannot open scene file " + path.string());
        }
        std::stringstream ss;
        ss << in.rdbuf();
        try
        {
            return parse_scene(ss.str());
        }
        catch (const DataError& e)
        {
            throw DataError(path.string() + ": " + e.what());
        }
    }

    std::string scene_to_json(const SceneDescription& scene)
    {
        json tracks = json::array();
        for (const ObstacleTrack& t : scene.tracks)
        {
            json fps = json::array();
            for (const OrientedRect& r : t.footprints)
            {
                fps.push_back(rect_json(r));
            }
            tracks.push_back({{"id", t.id}, {"first_timestep", t.first_timestep}, {"footprints", fps}});
        }
        const json root = {{"surface", surface_json(scene.surface)}, {"tracks", tracks},
            {"region", {{"min", {scene.region.min.x(), scene.region.min.y()}}, {"max", {scene.region.max.x(), scene.region.max.y()}}}}};
        return root.dump(2) + "\n";
    }

    std::string placements_to_json(const std::vector<Placement>& placements)
    {
        json list = json::array();
        for (const Placement& p : placements)
        {
            json rot = json::array();
            for (int r = 0; r < 3; ++r)
            {
                rot.push_back({p.rotation(r, 0), p.rotation(r, 1), p.rotation(r, 2)});
            }
            list.push_back({{"asset_id", p.asset_id}, {"rotation", rot}, {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}},
                {"ground_height", p.ground_height}, {"footprint", rect_json(p.footprint)}, {"timesteps", {p.first_timestep, p.last_timestep}}});
        }
        return list.dump(2) + "\n";
    }

    std::vector<Placement> parse_placements(const std::string& text)
    {
        const json root = parse_text(text, "placements");
        if (!root.is_array())
        {
            throw DataError("$: expected an array of placements");
        }
        std::vector<Placement> out;
        for (size_t i = 0; i < root.size(); ++i)
        {
            const std::string p = "$[" + std::to_string(i) + "]";
            Placement pl;
            const json& id = member(root[i], "asset_id", p);
            if (!id.is_string())
            {
                throw DataError(p + ".asset_id: expected a string");
            }
            pl.asset_id = id.get<std::string>();
            const json& rot = member(root[i], "rotation", p);
            if (!rot.is_array() || rot.size() != 3)
            {
                throw DataError(p + ".rotation: expected 3 rows");
            }
            for (int r = 0; r < 3; ++r)
            {
                pl.rotation.row(r) = vec<3>(rot[r], p + ".rotation[" + std::to_string(r) + "]").transpose();
            }
            pl.translation = vec<3>(member(root[i], "translation", p), p + ".translation");
            pl.ground_height = number(member(root[i], "ground_height", p), p + ".ground_height");
            pl.footprint = parse_rect(member(root[i], "footprint", p), p + ".footprint");
            const json& ts = member(root[i], "timesteps", p);
            if (!ts.is_array() || ts.size() != 2 || !ts[0].is_number_integer() || !ts[1].is_number_integer())
            {
                throw DataError(p + ".timesteps: expected [first, last] integers");
            }
            pl.first_timestep = ts[0].get<int>();
            pl.last_timestep = ts[1].get<int>();
            out.push_back(std::move(pl));
        }
        return out;
    }

    TriangleMesh ground_mesh(const GroundSurface& surface, const AxisRect& area, double spacing)
    {
        surface.validate();
        if (!(spacing > 0.0))
        {
            throw ConfigError("ground mesh spacing must be positive");
        }
        const Vec2 lo = clamp_to_domain(surface, area.min);
        const Vec2 hi = clamp_to_domain(surface, area.max);
        if (!(hi.x() > lo.x()) || !(hi.y() > lo.y()))
        {
            throw DataError("ground patch is empty");
        }
        const int nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / spacing)));
        const int ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / spacing)));
        TriangleMesh m;
        for (int i = 0; i <= ny; ++i)
        {
            for (int j = 0; j <= nx; ++j)
            {
                const Vec2 xy(lo.x() + (hi.x() - lo.x()) * j / nx, lo.y() + (hi.y() - lo.y()) * i / ny);
                m.vertices.emplace_back(xy.x(), xy.y(), surface.height_at(xy));
            }
        }
        for (int i = 0; i < ny; ++i)
        {
            for (int j = 0; j < nx; ++j)
            {
                const int a = i * (nx + 1) + j;
                const int b = a + 1;
                const int c = a + nx + 1;
                const int d = c + 1;
                m.faces.push_back({a, b, d});
                m.faces.push_back({a, d, c});
            }
        }
        return m;
    }
} // namespace assetgen
