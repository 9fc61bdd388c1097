#pragma once

#include <cstdint>
#include <vector>

#include "assetgen/camera.hpp"
#include "assetgen/mesh.hpp"
#include "assetgen/oracle.hpp"

namespace assetgen
{
    inline constexpr int kNoView = -1;
    inline constexpr size_t kMaxTextureViews = 64;

    // Bit i of a vertex's mask is set when the vertex is visible in view i.
    using VisibilityMask = uint64_t;

    struct VertexViewAssignment
    {
        std::vector<int> view;               // chosen view or kNoView
        std::vector<VisibilityMask> visible; // per vertex
        std::vector<double> score;           // cosine for the chosen view, -1 when none
    };

    // A vertex is visible in a view when it projects inside the image, its depth is at
    // most the depth map at its projection (bilinear between pixel centers; a background
    // tap means unoccluded) plus `epsilon`, and its normal faces the camera. Depth maps
    // must come from rendering this mesh from these views.
    // Throws DataError on a count or size mismatch or more than 64 views.
    std::vector<VisibilityMask> compute_visibility(const TriangleMesh& mesh, const std::vector<CameraView>& views,
        const std::vector<ImageF>& depth_maps, double epsilon);

    // Per vertex, the visible view maximizing cos(normal, direction to the camera center).
    // Ties go to the lower view index.
    VertexViewAssignment assign_views(const TriangleMesh& mesh, const std::vector<CameraView>& views,
        const std::vector<VisibilityMask>& visibility);

    struct VertexColors
    {
        std::vector<Vec3> color; // linear RGB
        std::vector<uint8_t> known;
    };

    // Bilinear sample of a linear RGB image at continuous pixel coordinates (pixel
    // centers at +0.5), clamped at the border.
    Vec3 sample_bilinear(const ImageRGB& image, const Vec2& pixel);

    // As above, but only taps where `covered` is finite take part (weights renormalized).
    // Falls back to the nearest pixel when no tap is covered.
    Vec3 sample_bilinear_covered(const ImageRGB& image, const ImageF& covered, const Vec2& pixel);

    // Samples each assigned vertex from its view's image; unassigned vertices stay unknown.
    // With depth maps of the mesh, taps on background pixels (infinite depth) are skipped.
    VertexColors assign_vertex_colors(const TriangleMesh& mesh, const std::vector<CameraView>& views,
        const std::vector<ImageRGB>& images, const VertexViewAssignment& assignment, const std::vector<ImageF>& depth_maps = {});

    // Seam vertices (a known neighbor assigned to another view) are blended halfway
    // towards the mean of their known neighbors, `iterations` times, all at once per step.
    VertexColors smooth_seams(const TriangleMesh& mesh, const VertexColors& colors, const VertexViewAssignment& assignment,
        int iterations = 3);

    // Breadth-first propagation from known vertices: each layer takes the mean of its
    // neighbors known before that layer. Throws DataError when nothing is known or a
    // connected component has no known vertex.
    VertexColors fill_invisible(const TriangleMesh& mesh, const VertexColors& colors);

    struct TextureParams
    {
        int seam_iterations = 3;
        // Depth test slack as a fraction of the mesh bounding-box extent.
        double depth_epsilon = 1e-3;
    };

    struct TextureResult
    {
        TriangleMesh mesh; // with colors in [0,1]
        VertexViewAssignment assignment;
        size_t visible_vertices = 0;
    };

    // Visibility, assignment, seam smoothing and fill against the supervision color images.
    // Throws DataError when the supervision has no color images.
    TextureResult texture_pipeline(const TriangleMesh& mesh, const SupervisionSet& supervision, const TextureParams& params = {});

    // Baseline without fusion: each vertex averages its samples from every view it
    // projects into, with no visibility test.
    TriangleMesh naive_average_texture(const TriangleMesh& mesh, const SupervisionSet& supervision);

    // Renders the colored mesh from the supervision color views.
    std::vector<ImageRGB> render_colors(const TriangleMesh& mesh, const SupervisionSet& supervision);
} // namespace assetgen
