#pragma once

#include <algorithm>
#include <vector>

#include "assetgen/camera.hpp"
#include "assetgen/mesh.hpp"

namespace assetgen
{
    // Per-view render outputs. Normals are world-space face normals (flat shading).
    // Where the pixel center is not covered the normal is zero and depth is +inf.
    // The mask is the antialiased coverage: 1 inside, 0 outside, and a smooth
    // coverage ramp within half a pixel of the projected silhouette.
    struct ViewMaps
    {
        int width = 0;
        int height = 0;
        ImageRGB normal;
        ImageF mask;
        ImageF depth;
        ImageRGB color; // empty unless the mesh has vertex colors

        // Raster buffers kept for the backward pass.
        Image<int> face_id;                           // -1 where the center is uncovered
        Image<int> aa_edge;                           // silhouette edge driving a fractional mask value, or -1
        std::vector<std::array<int, 2>> silhouette_edges; // vertex pairs
        size_t vertex_count = 0;
        size_t face_count = 0;

        bool covered(size_t pixel) const { return face_id[pixel] >= 0; }
    };

    // Perspective z-buffered rasterization of every face (no back-face culling).
    // `adjacency` may be passed when rendering the same topology repeatedly.
    ViewMaps rasterize(const TriangleMesh& mesh, const CameraView& view, const MeshAdjacency* adjacency = nullptr);

    // Chain-rule gradient of a scalar loss with respect to vertex positions, given
    // the loss gradient with respect to the normal map and the mask. Either image
    // may be empty to skip that path. Visibility (which face covers which pixel)
    // is treated as fixed; mask gradients arise only from the silhouette coverage ramp.
    // Throws DataError when `maps` was not rendered from this mesh and view.
    std::vector<Vec3> backward(const TriangleMesh& mesh, const CameraView& view, const ViewMaps& maps, const ImageRGB& d_normal,
        const ImageF& d_mask);

    // Coverage of a pixel whose center lies `distance` pixels from the silhouette, on
    // the covered side or not. The pixel footprint is a smooth one-pixel-wide filter:
    // alpha = smoothstep(0.5 + signed distance), so alpha is C1 in the vertex positions.
    inline double coverage_ramp(double distance, bool center_covered)
    {
        const double t = std::clamp(0.5 + (center_covered ? distance : -distance), 0.0, 1.0);
        return t * t * (3.0 - 2.0 * t);
    }

    // d(coverage_ramp)/d(distance).
    inline double coverage_ramp_slope(double distance, bool center_covered)
    {
        const double t = std::clamp(0.5 + (center_covered ? distance : -distance), 0.0, 1.0);
        const double slope = 6.0 * t * (1.0 - t);
        return center_covered ? slope : -slope;
    }
} // namespace assetgen
