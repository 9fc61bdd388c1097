#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "assetgen/losses.hpp"
#include "assetgen/primitives.hpp"
#include "assetgen/render.hpp"

namespace assetgen::testing
{
    TriangleMesh random_blob(uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> radius(0.35, 0.5);
        std::normal_distribution<double> gauss(0.0, 1.0);
        TriangleMesh mesh = make_uv_sphere(6, 8);
        const Vec3 axis = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        const Mat3 rot = Eigen::AngleAxisd(std::uniform_real_distribution<double>(0.0, 6.28)(rng), axis).toRotationMatrix();
        for (Vec3& v : mesh.vertices)
        {
            v = rot * (v.normalized() * radius(rng));
        }
        return mesh;
    }

    double relative_error(double analytic, double numeric, double floor)
    {
        return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
    }

    GradientErrors check_normal_laplacian(const TriangleMesh& mesh, const CameraView& view, double lambda_lap, uint64_t seed, double tolerance, double h)
    {
        const ViewMaps maps = rasterize(mesh, view);
        ViewMaps target = maps;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (size_t p = 0; p < target.normal.size(); ++p)
        {
            target.mask[p] = 1.0;
            target.normal[p] = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        }
        const ImageLoss nl = normal_loss({maps}, {target});
        std::vector<Vec3> analytic = backward(mesh, view, maps, nl.d_normal[0], ImageF{});
        const MeshAdjacency adj = MeshAdjacency::build(mesh);
        const LaplacianLoss lap = laplacian_loss(mesh, adj);
        for (size_t v = 0; v < analytic.size(); ++v)
        {
            analytic[v] += lambda_lap * lap.gradient[v];
        }

        std::vector<size_t> overlap;
        for (size_t p = 0; p < maps.mask.size(); ++p)
        {
            if (maps.covered(p) && maps.mask[p] >= kMaskThreshold)
            {
                overlap.push_back(p);
            }
        }
        auto frozen_loss = [&](const TriangleMesh& m) {
            double sum = 0.0;
            for (size_t p : overlap)
            {
                sum += (face_normal(m, maps.face_id[p]) - target.normal[p]).squaredNorm();
            }
            return sum / static_cast<double>(overlap.size()) + lambda_lap * laplacian_loss(m, adj).value;
        };

        double max_coord = 0.0;
        for (const Vec3& g : analytic)
        {
            max_coord = std::max(max_coord, g.cwiseAbs().maxCoeff());
        }
        GradientErrors out;
        double diff_sq = 0.0;
        double ref_sq = 0.0;
        TriangleMesh probe = mesh;
        for (size_t v = 0; v < mesh.vertices.size(); ++v)
        {
            for (int k = 0; k < 3; ++k)
            {
                probe.vertices[v][k] = mesh.vertices[v][k] + h;
                const double plus = frozen_loss(probe);
                probe.vertices[v][k] = mesh.vertices[v][k] - h;
                const double minus = frozen_loss(probe);
                probe.vertices[v][k] = mesh.vertices[v][k];
                const double numeric = (plus - minus) / (2.0 * h);
                const double rel = relative_error(analytic[v][k], numeric, 1e-4 * max_coord);
                out.max_relative = std::max(out.max_relative, rel);
                out.outliers += rel > tolerance ? 1 : 0;
                diff_sq += (analytic[v][k] - numeric) * (analytic[v][k] - numeric);
                ref_sq += numeric * numeric;
                ++out.coordinates;
            }
        }
        out.vector_relative = ref_sq > 0.0 ? std::sqrt(diff_sq / ref_sq) : std::sqrt(diff_sq);
        return out;
    }

    GradientErrors check_mask(const TriangleMesh& mesh, const CameraView& view, double tolerance, double h)
    {
        TriangleMesh grown = mesh;
        Vec3 centroid = Vec3::Zero();
        for (const Vec3& v : mesh.vertices)
        {
            centroid += v;
        }
        centroid /= static_cast<double>(mesh.vertices.size());
        for (Vec3& v : grown.vertices)
        {
            v = centroid + 1.05 * (v - centroid);
        }
        const std::vector<ViewMaps> target{rasterize(grown, view)};
        const ViewMaps maps = rasterize(mesh, view);
        const ImageLoss ml = mask_loss({maps}, target);
        const std::vector<Vec3> analytic = backward(mesh, view, maps, ImageRGB{}, ml.d_mask[0]);

        std::set<int> boundary;
        for (size_t p = 0; p < maps.aa_edge.size(); ++p)
        {
            if (maps.aa_edge[p] >= 0)
            {
                boundary.insert(maps.silhouette_edges[maps.aa_edge[p]][0]);
                boundary.insert(maps.silhouette_edges[maps.aa_edge[p]][1]);
            }
        }
        double max_coord = 0.0;
        for (int v : boundary)
        {
            max_coord = std::max(max_coord, analytic[v].cwiseAbs().maxCoeff());
        }
        GradientErrors out;
        double diff_sq = 0.0;
        double ref_sq = 0.0;
        TriangleMesh probe = mesh;
        auto loss = [&](const TriangleMesh& m) { return mask_loss({rasterize(m, view)}, target).value; };
        const double center = ml.value;
        for (int v : boundary)
        {
            for (int k = 0; k < 3; ++k)
            {
                probe.vertices[v][k] = mesh.vertices[v][k] + h;
                const double plus = loss(probe);
                probe.vertices[v][k] = mesh.vertices[v][k] - h;
                const double minus = loss(probe);
                probe.vertices[v][k] = mesh.vertices[v][k];
                // A pixel event (coverage or silhouette change) inside the stencil shows up
                // as disagreeing one-sided slopes; the central difference is no reference there.
                const double forward = (plus - center) / h;
                const double backward_slope = (center - minus) / h;
                if (relative_error(forward, backward_slope, 1e-2 * max_coord) > tolerance)
                {
                    ++out.non_differentiable;
                    continue;
                }
                const double numeric = (plus - minus) / (2.0 * h);
                const double rel = relative_error(analytic[v][k], numeric, 1e-2 * max_coord);
                out.max_relative = std::max(out.max_relative, rel);
                out.outliers += rel > tolerance ? 1 : 0;
                diff_sq += (analytic[v][k] - numeric) * (analytic[v][k] - numeric);
                ref_sq += numeric * numeric;
                ++out.coordinates;
            }
        }
        out.vector_relative = ref_sq > 0.0 ? std::sqrt(diff_sq / ref_sq) : std::sqrt(diff_sq);
        return out;
    }
} // namespace assetgen::testing
