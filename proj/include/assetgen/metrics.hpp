#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "assetgen/mesh.hpp"

namespace assetgen
{
    // Area-uniform surface samples. Deterministic for a given mesh, count and seed.
    std::vector<Vec3> sample_surface(const TriangleMesh& mesh, size_t count, uint64_t seed);

    // Exact nearest-neighbor queries over a fixed point set.
    class PointIndex
    {
    public:
        explicit PointIndex(const std::vector<Vec3>& points);
        ~PointIndex();
        PointIndex(PointIndex&&) noexcept;
        PointIndex& operator=(PointIndex&&) noexcept;

        double nearest_distance(const Vec3& query) const;
        size_t size() const { return size_; }

    private:
        struct Tree;
        std::unique_ptr<Tree> tree_;
        size_t size_ = 0;
    };

    struct GeometryParams
    {
        size_t samples = 16384;
        double tau = 0.05;
        int voxel_resolution = 64;
        uint64_t seed = 0;
    };

    struct GeometryReport
    {
        double chamfer = 0.0;
        double volume_iou = 0.0;
        double f_score = 0.0;
        size_t samples_used = 0;
        double tau = 0.0;
    };

    // 1/2 (mean_a min_b |p - q| + mean_b min_a |p - q|) over `samples` points per mesh.
    // Both meshes are sampled with the same seed, so the result is exactly symmetric
    // and exactly zero for identical meshes. Throws DataError on an empty mesh.
    double chamfer_distance(const TriangleMesh& a, const TriangleMesh& b, size_t samples = 16384, uint64_t seed = 0);

    // Harmonic mean of precision (a-samples within tau of b-samples) and recall.
    double f_score(const TriangleMesh& a, const TriangleMesh& b, double tau = 0.05, size_t samples = 16384, uint64_t seed = 0);

    // Solid occupancy at voxel centers of a resolution^3 grid spanning the joint bounding
    // box. Inside is decided by ray parity along x, y and z with a majority vote.
    // Throws DataError when either mesh has boundary edges.
    double volume_iou(const TriangleMesh& a, const TriangleMesh& b, int resolution = 64);

    // Occupancy of voxel centers of a grid over [lo, hi]; index (i, j, k) -> i + n*(j + n*k).
    std::vector<uint8_t> voxelize(const TriangleMesh& mesh, const Vec3& lo, const Vec3& hi, int resolution);

    // CD, F-score and (for closed meshes) volume IoU from one shared sample set.
    // volume_iou is NaN when either mesh is open.
    GeometryReport evaluate_geometry(const TriangleMesh& a, const TriangleMesh& b, const GeometryParams& params = {});

    struct ImageReport
    {
        double psnr = 0.0;
        double ssim = 0.0;
        size_t views_evaluated = 0;
    };

    // 10 log10(1 / MSE) over all RGB values; +infinity for identical images.
    double psnr(const ImageRGB& a, const ImageRGB& b);

    // Mean SSIM over channels and over all fully contained 11x11 Gaussian windows
    // (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1). Images must be at least 11x11.
    double ssim(const ImageRGB& a, const ImageRGB& b);

    // PSNR of the MSE pooled over all views (infinite only if every view matches
    // exactly) and SSIM averaged over views. Throws DataError on count or size mismatch.
    ImageReport evaluate_images(const std::vector<ImageRGB>& rendered, const std::vector<ImageRGB>& reference);
} // namespace assetgen
