#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "assetgen/camera.hpp"
#include "assetgen/mesh.hpp"
#include "assetgen/render.hpp"

namespace assetgen
{
    // Corruptions applied to rendered supervision. All zero by default.
    struct NoiseSpec
    {
        // RMS angle of the normal perturbation: each covered normal is rotated by an
        // isotropic Gaussian tangent offset with per-axis deviation sigma / sqrt(2).
        double normal_sigma_deg = 0.0;
        // Disk radius in pixels; positive dilates the mask, negative erodes it.
        int mask_radius = 0;
        // Each view's color image is offset by a per-channel shift drawn from U(-s, s).
        double color_shift = 0.0;
        uint64_t seed = 0;

        bool is_zero() const { return normal_sigma_deg == 0.0 && mask_radius == 0 && color_shift == 0.0; }
        void validate() const;
    };

    enum class SupervisionSource
    {
        Oracle,
        External,
    };

    // Multi-view targets: normal + mask per view (ViewMaps; depth and raster buffers
    // may be empty for external data) and optional color images from the same poses.
    struct SupervisionSet
    {
        std::vector<CameraView> views;
        std::vector<ViewMaps> maps;
        std::vector<CameraView> color_views;
        std::vector<ImageRGB> colors;
        SupervisionSource source = SupervisionSource::Oracle;

        bool has_colors() const { return !colors.empty(); }
        // Throws DataError unless views and maps pair up, share one resolution,
        // and color images (if any) match their views.
        void validate() const;
    };

    // Rasterizes the reference from every view. With a colored reference, color images
    // are rendered at `color_scale` times the view resolution from the same poses.
    SupervisionSet render_supervision(const TriangleMesh& reference, const std::vector<CameraView>& views, const NoiseSpec& noise = {},
        int color_scale = 2);

    // Grayscale morphology with a disk of the given radius (max filter / min filter).
    ImageF dilate_mask(const ImageF& mask, int radius);
    ImageF erode_mask(const ImageF& mask, int radius);

    enum class InitMode
    {
        Sphere,
        Decimate,
        Blob,
    };

    InitMode parse_init_mode(const std::string& name); // throws ConfigError
    std::string to_string(InitMode mode);

    // Degraded starting meshes, always closed 2-manifolds:
    //   Sphere:   level-3 icosphere (1280 faces) on the reference bounding sphere;
    //   Decimate: reference collapsed to about 500 faces, then vertex jitter (sigma 0.01);
    //   Blob:     24^3 occupancy of the reference, tetrahedral surface extraction,
    //             largest component, 10 uniform Laplacian steps.
    TriangleMesh make_coarse_initial(const TriangleMesh& reference, InitMode mode, uint64_t seed = 0);

    // Surface of an occupancy grid (layout as `voxelize`) by marching tetrahedra over the
    // six-tetrahedra cube split, with vertices at edge midpoints. Empty cells are assumed
    // outside the grid. `lo` / `cell` place voxel (i, j, k) at lo + (i + 0.5, j + 0.5, k + 0.5) * cell.
    TriangleMesh extract_occupancy_surface(const std::vector<uint8_t>& occupied, int resolution, const Vec3& lo, const Vec3& cell);

    // Writes manifest.toml plus view_XX_normal.pfm, view_XX_mask.pfm and (with colors)
    // view_XX_color.png under `dir`.
    void export_supervision(const SupervisionSet& set, const std::filesystem::path& dir);

    // Reads a directory in the export layout. Normals and masks are PFM; color images
    // are sRGB PNG. The result is tagged External. Throws DataError naming missing files.
    SupervisionSet import_supervision(const std::filesystem::path& dir);
} // namespace assetgen
