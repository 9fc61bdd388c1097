#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "assetgen/mesh.hpp"
#include "assetgen/render.hpp"

namespace assetgen
{
    // Ground under the inserted assets: an infinite plane or a heightfield over a
    // regular grid. Heights are z values; the heightfield node (i, j) sits at
    // origin + (j, i) * cell_size and the surface is bilinear inside each cell.
    struct GroundSurface
    {
        enum class Kind
        {
            Plane,
            Heightfield,
        };

        Kind kind = Kind::Plane;
        Vec3 point = Vec3::Zero();
        Vec3 normal = Vec3::UnitZ();
        Vec2 origin = Vec2::Zero();
        double cell_size = 1.0;
        int rows = 0; // along y
        int cols = 0; // along x
        std::vector<double> heights; // row-major rows x cols

        static GroundSurface plane(const Vec3& point, const Vec3& normal);
        static GroundSurface heightfield(const Vec2& origin, double cell_size, int rows, int cols, std::vector<double> heights);

        // Throws DataError: non-unit or vertical plane normal, grid smaller than 2x2,
        // non-positive cell size, non-finite heights.
        void validate() const;
        bool contains(const Vec2& xy) const;
        // Both throw DataError outside a heightfield's domain.
        double height_at(const Vec2& xy) const;
        Vec3 normal_at(const Vec2& xy) const;
        // Lower and upper xy corners of a heightfield's domain.
        Vec2 domain_min() const;
        Vec2 domain_max() const;
    };

    // Rectangle on the ground plane rotated by yaw (radians, counter-clockwise about +Z).
    struct OrientedRect
    {
        Vec2 center = Vec2::Zero();
        double yaw = 0.0;
        Vec2 half_extents = Vec2::Constant(0.5);

        Vec2 axis_u() const;
        Vec2 axis_v() const;
        std::array<Vec2, 4> corners() const; // counter-clockwise
        OrientedRect inflated(double margin) const;
        double bounding_radius() const { return half_extents.norm(); }
    };

    // Separating-axis test on the four edge normals. Touching rectangles intersect.
    bool rects_intersect(const OrientedRect& a, const OrientedRect& b);

    struct AxisRect
    {
        Vec2 min = Vec2::Zero();
        Vec2 max = Vec2::Zero();
    };

    // One tracked obstacle: footprints for the contiguous timesteps first_timestep,
    // first_timestep + 1, ...
    struct ObstacleTrack
    {
        std::string id;
        int first_timestep = 0;
        std::vector<OrientedRect> footprints;

        int last_timestep() const { return first_timestep + static_cast<int>(footprints.size()) - 1; }
        void validate() const; // DataError on an empty track or non-positive half extents
    };

    struct Placement
    {
        std::string asset_id;
        Mat3 rotation = Mat3::Identity();
        Vec3 translation = Vec3::Zero(); // x, y of the snap point and the contact offset in z
        double ground_height = 0.0;      // surface height at the snap point
        OrientedRect footprint;
        int first_timestep = 0;
        int last_timestep = 0;

        Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    };

    // Rotates the asset so +Z follows the surface normal at xy, yaws it about that axis,
    // moves its origin over xy and lifts it until the lowest vertex (relative to the
    // surface below each vertex) touches. Vertices that overhang a heightfield's domain are
    // measured against the nearest domain point. The footprint is the bounding rectangle of
    // the posed vertices in the yawed ground frame. Throws DataError when xy is outside the
    // surface or the asset is empty.
    Placement snap_to_ground(const TriangleMesh& asset, const Vec2& xy, double yaw, const GroundSurface& surface,
        const std::string& asset_id = "asset");

    TriangleMesh posed_mesh(const TriangleMesh& asset, const Placement& placement);

    struct Pose2
    {
        Vec2 xy = Vec2::Zero();
        double yaw = 0.0;
    };

    // Footprint of the asset at a pose. Called from several threads at once.
    using FootprintFn = std::function<OrientedRect(const Pose2&)>;

    // Rigid footprint: `local` is the footprint at the origin with yaw 0.
    FootprintFn rigid_footprint(const OrientedRect& local);

    // Footprint of the asset's bounding box snapped at the pose. It contains the footprint
    // of the snapped asset itself, so poses accepted with it stay valid after snapping.
    FootprintFn snapped_box_footprint(const TriangleMesh& asset, const GroundSurface& surface);

    struct PlacementSearch
    {
        std::vector<Pose2> poses;
        std::vector<OrientedRect> footprints; // not inflated
        bool saturated = false;
        size_t attempts = 0;
    };

    struct PlacementSampler
    {
        double clearance = 0.3;
        // Rejection sampling stops with `saturated` when a window of this many attempts
        // accepts fewer than min_acceptance_rate * window poses.
        size_t window = 100000;
        double min_acceptance_rate = 1e-4;
        size_t batch = 4096;
    };

    // Uniform xy in the region and yaw in [0, 2 pi). A pose is accepted when its footprint
    // inflated by the clearance misses every obstacle footprint at every timestep and every
    // previously accepted footprint. Candidates are drawn from per-index streams of `seed`
    // and accepted in index order, so the result does not depend on the thread count.
    // Throws DataError when the region is empty or leaves the surface domain.
    PlacementSearch find_collision_free(const GroundSurface& surface, const std::vector<ObstacleTrack>& tracks,
        const FootprintFn& footprint, const AxisRect& region, size_t n_poses, uint64_t seed, const PlacementSampler& sampler = {});

    // Alpha-blends the asset render over the background where the asset is nearer:
    // out = a * asset + (1 - a) * background with a the asset mask. Throws DataError on
    // size mismatch or a render without colors.
    ImageRGB composite(const ImageRGB& background, const ImageF& background_depth, const ViewMaps& asset_render);

    struct SceneDescription
    {
        GroundSurface surface;
        std::vector<ObstacleTrack> tracks;
        AxisRect region;

        int first_timestep() const;
        int last_timestep() const;
    };

    // {"surface": {"type": "plane", "point": [x,y,z], "normal": [x,y,z]} or
    //              {"type": "heightfield", "origin": [x,y], "cell_size": c, "heights": [[...], ...]},
    //  "tracks": [{"id": "...", "first_timestep": t, "footprints": [{"center": [x,y], "yaw": r, "half_extents": [a,b]}, ...]}],
    //  "region": {"min": [x,y], "max": [x,y]}}
    // Throws DataError naming the offending JSON path.
    SceneDescription parse_scene(const std::string& text);
    SceneDescription load_scene(const std::filesystem::path& path);
    std::string scene_to_json(const SceneDescription& scene);

    std::string placements_to_json(const std::vector<Placement>& placements);
    std::vector<Placement> parse_placements(const std::string& text);

    // Regular triangulated patch of the surface over an axis rectangle (clipped to the
    // domain), at most `spacing` apart, for rendering backgrounds.
    TriangleMesh ground_mesh(const GroundSurface& surface, const AxisRect& area, double spacing);
} // namespace assetgen
