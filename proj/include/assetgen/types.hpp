#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace assetgen
{
    using Vec2 = Eigen::Vector2d;
    using Vec3 = Eigen::Vector3d;
    using Mat3 = Eigen::Matrix3d;

    using Face = std::array<int, 3>;

    // Row-major H x W image with one value of type T per pixel.
    template <typename T>
    struct Image
    {
        int width = 0;
        int height = 0;
        std::vector<T> pixels;

        Image() = default;
        Image(int w, int h, const T& fill = T{}) : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

        T& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
        const T& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
        T& operator[](size_t i) { return pixels[i]; }
        const T& operator[](size_t i) const { return pixels[i]; }
        size_t size() const { return pixels.size(); }
        bool empty() const { return pixels.empty(); }
        bool same_shape(int w, int h) const { return width == w && height == h; }
        template <typename U>
        bool same_shape(const Image<U>& other) const { return width == other.width && height == other.height; }
    };

    using ImageF = Image<double>;
    using ImageRGB = Image<Vec3>;
} // namespace assetgen
