#pragma once

#include <vector>

#include "assetgen/mesh.hpp"
#include "assetgen/render.hpp"

namespace assetgen
{
    struct ImageLoss
    {
        double value = 0.0;
        std::vector<double> per_view;
        std::vector<ImageRGB> d_normal; // filled by normal_loss
        std::vector<ImageF> d_mask;     // filled by mask_loss
    };

    // A pixel counts toward the normal loss when both masks reach this level.
    inline constexpr double kMaskThreshold = 0.5;

    // Sum over views of the mean squared normal difference over pixels covered in
    // both the rendered and target maps (target pixels with a zero normal carry no
    // normal information and are skipped). An empty overlap contributes 0.
    // Throws DataError on view count or resolution mismatch.
    ImageLoss normal_loss(const std::vector<ViewMaps>& rendered, const std::vector<ViewMaps>& target);

    // Sum over views of the mean squared mask difference over all pixels.
    ImageLoss mask_loss(const std::vector<ViewMaps>& rendered, const std::vector<ViewMaps>& target);

    struct LaplacianLoss
    {
        double value = 0.0;
        std::vector<Vec3> gradient;
    };

    // Mean over non-isolated vertices of |v - mean(neighbors(v))|^2, with its exact gradient.
    LaplacianLoss laplacian_loss(const TriangleMesh& mesh, const MeshAdjacency& adjacency);
} // namespace assetgen
