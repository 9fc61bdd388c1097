#include "assetgen/camera.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "assetgen/errors.hpp"

namespace assetgen
{
    namespace
    {
        double radians(double deg)
        {
            return deg * std::numbers::pi / 180.0;
        }
    } // namespace

    void CameraView::validate() const
    {
        std::ostringstream os;
        if (!(fov_deg > 0.0 && fov_deg < 180.0))
        {
            os << "camera fov must lie in (0, 180), got " << fov_deg;
        }
        else if (width < 8 || height < 8)
        {
            os << "camera image must be at least 8x8, got " << width << "x" << height;
        }
        else if (!(radius > 0.0))
        {
            os << "camera radius must be positive, got " << radius;
        }
        else if (std::abs(std::cos(radians(elevation_deg))) < 1e-9)
        {
            os << "camera elevation of +-90 degrees leaves the roll undefined";
        }
        if (!os.str().empty())
        {
            throw ConfigError(os.str());
        }
    }

    Vec3 CameraView::position() const
    {
        const double az = radians(azimuth_deg);
        const double el = radians(elevation_deg);
        return look_at + radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    }

    Vec3 CameraView::forward() const
    {
        return (look_at - position()).normalized();
    }

    Vec3 CameraView::right() const
    {
        return forward().cross(Vec3::UnitZ()).normalized();
    }

    Vec3 CameraView::up() const
    {
        return right().cross(forward());
    }

    double CameraView::focal_px() const
    {
        return 0.5 * height / std::tan(0.5 * radians(fov_deg));
    }

    CameraView CameraView::scaled(int factor) const
    {
        CameraView v = *this;
        v.width *= factor;
        v.height *= factor;
        return v;
    }

    Projector::Projector(const CameraView& view)
        : eye_(view.position()), right_(view.right()), up_(view.up()), forward_(view.forward()), focal_(view.focal_px()),
          cx_(0.5 * view.width), cy_(0.5 * view.height)
    {
    }

    ProjectedPoint Projector::project(const Vec3& p) const
    {
        const Vec3 c = p - eye_;
        const double xc = c.dot(right_);
        const double yc = c.dot(up_);
        const double zc = c.dot(forward_);
        return {Vec2(cx_ + focal_ * xc / zc, cy_ - focal_ * yc / zc), zc};
    }

    Eigen::Matrix<double, 2, 3> Projector::jacobian(const Vec3& p) const
    {
        const Vec3 c = p - eye_;
        const double xc = c.dot(right_);
        const double yc = c.dot(up_);
        const double zc = c.dot(forward_);
        Eigen::Matrix<double, 2, 3> j;
        j.row(0) = (focal_ / (zc * zc)) * (zc * right_ - xc * forward_).transpose();
        j.row(1) = (-focal_ / (zc * zc)) * (zc * up_ - yc * forward_).transpose();
        return j;
    }

    std::vector<CameraView> standard_views(int count, double radius, double fov_deg, int resolution)
    {
        if (count != 4 && count != 6 && count != 8)
        {
            throw ConfigError("standard_views supports 4, 6 or 8 views, got " + std::to_string(count));
        }
        std::vector<CameraView> views;
        for (int i = 0; i < count; ++i)
        {
            CameraView v;
            v.radius = radius;
            v.fov_deg = fov_deg;
            v.width = resolution;
            v.height = resolution;
            if (count == 4)
            {
                v.azimuth_deg = 90.0 * i;
                v.elevation_deg = 0.0;
            }
            else
            {
                v.azimuth_deg = 30.0 + 360.0 * i / count;
                v.elevation_deg = i % 2 == 0 ? 20.0 : -10.0;
            }
            v.validate();
            views.push_back(v);
        }
        return views;
    }
} // namespace assetgen
