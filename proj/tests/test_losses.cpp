#include <doctest.h>

#include <cmath>
#include <random>

#include "assetgen/errors.hpp"
#include "assetgen/losses.hpp"
#include "assetgen/primitives.hpp"

using namespace assetgen;

namespace
{
    ViewMaps flat_maps(int w, int h, const Vec3& normal, double mask)
    {
        ViewMaps m;
        m.width = w;
        m.height = h;
        m.normal = ImageRGB(w, h, mask > 0.0 ? normal : Vec3(Vec3::Zero()));
        m.mask = ImageF(w, h, mask);
        m.depth = ImageF(w, h, 1.0);
        m.face_id = Image<int>(w, h, mask > 0.0 ? 0 : -1);
        m.aa_edge = Image<int>(w, h, -1);
        return m;
    }

    // Pixels whose centers lie within radius r of the image center.
    ViewMaps disk_maps(int size, double r)
    {
        ViewMaps m = flat_maps(size, size, Vec3::UnitZ(), 0.0);
        for (int y = 0; y < size; ++y)
        {
            for (int x = 0; x < size; ++x)
            {
                const double dx = x + 0.5 - size / 2.0;
                const double dy = y + 0.5 - size / 2.0;
                if (dx * dx + dy * dy <= r * r)
                {
                    m.mask.at(x, y) = 1.0;
                    m.normal.at(x, y) = Vec3::UnitZ();
                    m.face_id.at(x, y) = 0;
                }
            }
        }
        return m;
    }

    ViewMaps complement(const ViewMaps& m)
    {
        ViewMaps c = m;
        for (size_t p = 0; p < c.mask.size(); ++p)
        {
            c.mask[p] = 1.0 - m.mask[p];
            c.face_id[p] = c.mask[p] > 0.0 ? 0 : -1;
            c.normal[p] = c.mask[p] > 0.0 ? Vec3(Vec3::UnitZ()) : Vec3(Vec3::Zero());
        }
        return c;
    }
} // namespace

TEST_CASE("normal loss of identical maps is zero")
{
    const ViewMaps a = disk_maps(32, 10.0);
    const ImageLoss l = normal_loss({a, a}, {a, a});
    CHECK(l.value == 0.0);
    REQUIRE(l.per_view.size() == 2);
    for (const ImageRGB& g : l.d_normal)
    {
        for (size_t p = 0; p < g.size(); ++p)
        {
            CHECK(g[p].isZero(0.0));
        }
    }
}

TEST_CASE("opposite normals give squared distance four")
{
    const ImageLoss l = normal_loss({flat_maps(8, 8, Vec3::UnitZ(), 1.0)}, {flat_maps(8, 8, -Vec3::UnitZ(), 1.0)});
    CHECK(l.value == doctest::Approx(4.0).epsilon(1e-12));
    // d/dn of mean |n - t|^2 over 64 pixels
    CHECK((l.d_normal[0].at(3, 4) - Vec3(0, 0, 4.0 / 64.0)).norm() < 1e-15);
}

TEST_CASE("disjoint masks give zero normal loss and zero gradient")
{
    const ViewMaps a = disk_maps(32, 6.0);
    const ViewMaps b = complement(disk_maps(32, 12.0));
    const ImageLoss l = normal_loss({a}, {b});
    CHECK(l.value == 0.0);
    for (size_t p = 0; p < l.d_normal[0].size(); ++p)
    {
        CHECK(l.d_normal[0][p].isZero(0.0));
    }
}

TEST_CASE("target pixels without a normal are skipped")
{
    ViewMaps target = flat_maps(4, 4, -Vec3::UnitZ(), 1.0);
    for (int x = 0; x < 4; ++x)
    {
        target.normal.at(x, 0) = Vec3::Zero();
    }
    const ImageLoss l = normal_loss({flat_maps(4, 4, Vec3::UnitZ(), 1.0)}, {target});
    CHECK(l.value == doctest::Approx(4.0));
    CHECK(l.d_normal[0].at(1, 0).isZero(0.0));
}

TEST_CASE("mask loss")
{
    const int size = 64;
    const ViewMaps disk = disk_maps(size, 20.0);
    const ViewMaps empty = flat_maps(size, size, Vec3::UnitZ(), 0.0);
    CHECK(mask_loss({disk}, {disk}).value == 0.0);

    double covered = 0.0;
    for (size_t p = 0; p < disk.mask.size(); ++p)
    {
        covered += disk.mask[p];
    }
    const double fraction = covered / (size * size);
    CHECK(fraction == doctest::Approx(std::acos(-1.0) * 400.0 / (size * size)).epsilon(0.02));
    const ImageLoss half = mask_loss({empty}, {disk});
    CHECK(half.value == doctest::Approx(fraction).epsilon(1e-12));
    CHECK(half.d_mask[0].at(size / 2, size / 2) == doctest::Approx(-2.0 / (size * size)));
    CHECK(half.d_mask[0].at(0, 0) == 0.0);

    CHECK(mask_loss({disk}, {complement(disk)}).value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mask_loss({disk, empty}, {complement(disk), disk}).value == doctest::Approx(1.0 + fraction).epsilon(1e-12));
}

TEST_CASE("image losses reject mismatched inputs")
{
    const ViewMaps a = flat_maps(8, 8, Vec3::UnitZ(), 1.0);
    const ViewMaps b = flat_maps(8, 9, Vec3::UnitZ(), 1.0);
    CHECK_THROWS_AS(mask_loss({a}, {b}), DataError);
    CHECK_THROWS_AS(normal_loss({a}, {a, a}), DataError);
}

TEST_CASE("laplacian of a planar grid comes only from the border")
{
    const TriangleMesh grid = make_grid(6, 5);
    const MeshAdjacency adj = MeshAdjacency::build(grid);
    const LaplacianLoss lap = laplacian_loss(grid, adj);

    // Interior vertices of a uniform triangulated grid sit at their neighbor centroid
    // (neighbors come in opposite pairs). Recompute the value from border vertices alone.
    double border_sum = 0.0;
    size_t counted = 0;
    for (size_t v = 0; v < grid.vertices.size(); ++v)
    {
        const Vec3& p = grid.vertices[v];
        const bool border = std::abs(std::abs(p.x()) - 0.5) < 1e-12 || std::abs(std::abs(p.y()) - 0.5) < 1e-12;
        Vec3 mean = Vec3::Zero();
        for (int u : adj.neighbors[v])
        {
            mean += grid.vertices[u];
        }
        mean /= static_cast<double>(adj.neighbors[v].size());
        if (!border)
        {
            CHECK((p - mean).norm() < 1e-12);
        }
        else
        {
            border_sum += (p - mean).squaredNorm();
        }
        ++counted;
    }
    CHECK(lap.value == doctest::Approx(border_sum / counted).epsilon(1e-12));
    for (const Vec3& g : lap.gradient)
    {
        CHECK(std::abs(g.z()) < 1e-15);
    }
}

TEST_CASE("explicit smoothing lowers the laplacian energy")
{
    TriangleMesh m = make_icosphere(2);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 0.02);
    for (Vec3& v : m.vertices)
    {
        v += Vec3(noise(rng), noise(rng), noise(rng));
    }
    const MeshAdjacency adj = MeshAdjacency::build(m);
    const LaplacianLoss before = laplacian_loss(m, adj);
    CHECK(before.value > 0.0);
    for (size_t v = 0; v < m.vertices.size(); ++v)
    {
        m.vertices[v] -= 0.1 * before.gradient[v];
    }
    CHECK(laplacian_loss(m, adj).value < before.value);
}

TEST_CASE("laplacian gradient agrees with central differences")
{
    TriangleMesh m = make_uv_sphere(3, 6);
    REQUIRE(m.vertices.size() == 20);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    for (Vec3& v : m.vertices)
    {
        v += Vec3(jitter(rng), jitter(rng), jitter(rng));
    }
    const MeshAdjacency adj = MeshAdjacency::build(m);
    const LaplacianLoss lap = laplacian_loss(m, adj);
    const double h = 1e-5;
    double worst = 0.0;
    for (size_t v = 0; v < m.vertices.size(); ++v)
    {
        for (int k = 0; k < 3; ++k)
        {
            TriangleMesh probe = m;
            probe.vertices[v][k] += h;
            const double plus = laplacian_loss(probe, adj).value;
            probe.vertices[v][k] -= 2.0 * h;
            const double minus = laplacian_loss(probe, adj).value;
            const double numeric = (plus - minus) / (2.0 * h);
            const double a = lap.gradient[v][k];
            worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8}));
        }
    }
    CHECK(worst <= 1e-4);
}
