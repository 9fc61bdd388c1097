#pragma once

#include <vector>

#include "assetgen/types.hpp"

namespace assetgen
{
    // Orbit camera looking at `look_at` from spherical coordinates around it.
    // World is right-handed with +Z up; azimuth 0 lies on +X, elevation is measured
    // from the XY plane. Pixel (x, y) has its center at (x + 0.5, y + 0.5) with
    // y growing downwards.
    struct CameraView
    {
        double azimuth_deg = 0.0;
        double elevation_deg = 0.0;
        double radius = 2.0;
        double fov_deg = 40.0; // vertical field of view
        int width = 256;
        int height = 256;
        Vec3 look_at = Vec3::Zero();

        // Throws ConfigError unless 0 < fov < 180, width/height >= 8 and radius > 0.
        void validate() const;

        Vec3 position() const;
        Vec3 forward() const;
        Vec3 right() const;
        Vec3 up() const;
        double focal_px() const;

        // Same pose and field of view at a scaled image size.
        CameraView scaled(int factor) const;
    };

    struct ProjectedPoint
    {
        Vec2 pixel;
        double depth = 0.0; // distance along the viewing axis
    };

    // Precomputed camera frame for projecting many points.
    class Projector
    {
    public:
        explicit Projector(const CameraView& view);

        ProjectedPoint project(const Vec3& p) const;
        // d(pixel)/d(p): row 0 is d(x)/dp, row 1 is d(y)/dp.
        Eigen::Matrix<double, 2, 3> jacobian(const Vec3& p) const;

        const Vec3& eye() const { return eye_; }

    private:
        Vec3 eye_;
        Vec3 right_;
        Vec3 up_;
        Vec3 forward_;
        double focal_;
        double cx_;
        double cy_;
    };

    // Fixed orbit layouts used for supervision:
    //   n = 4: azimuths 0, 90, 180, 270 at elevation 0;
    //   n = 6 or 8: azimuths evenly spaced from 30 degrees, elevations alternating +20 / -10.
    // Throws ConfigError for other counts.
    std::vector<CameraView> standard_views(int count, double radius = 2.0, double fov_deg = 40.0, int resolution = 256);
} // namespace assetgen
