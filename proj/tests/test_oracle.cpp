#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "assetgen/errors.hpp"
#include "assetgen/mesh_io.hpp"
#include "assetgen/metrics.hpp"
#include "assetgen/oracle.hpp"
#include "assetgen/primitives.hpp"

using namespace assetgen;
namespace fs = std::filesystem;

namespace
{
    TriangleMesh bunny()
    {
        return normalize_to_unit(load_mesh(fs::path(ASSETGEN_DATA_DIR) / "corpus" / "bunny.obj")).mesh;
    }

    TriangleMesh colored_sphere()
    {
        TriangleMesh m = make_icosphere(3, 0.45);
        for (const Vec3& v : m.vertices)
        {
            m.colors.push_back(Vec3(0.5 + 0.4 * v.x(), 0.5 + 0.4 * v.y(), 0.5 + 0.4 * v.z()));
        }
        return m;
    }

    double mask_area(const ImageF& m)
    {
        double s = 0.0;
        for (double a : m.pixels)
        {
            s += a;
        }
        return s;
    }

    fs::path scratch_dir(const std::string& name)
    {
        const fs::path dir = fs::temp_directory_path() / ("assetgen_test_" + name);
        fs::remove_all(dir);
        return dir;
    }
} // namespace

TEST_CASE("noise-free supervision is the rasterizer output")
{
    const TriangleMesh mesh = make_torus(0.3, 0.1, 24, 12);
    const auto views = standard_views(6, 2.0, 40.0, 64);
    const SupervisionSet set = render_supervision(mesh, views);
    REQUIRE(set.maps.size() == 6);
    CHECK(set.source == SupervisionSource::Oracle);
    CHECK_FALSE(set.has_colors());
    for (size_t i = 0; i < views.size(); ++i)
    {
        const ViewMaps direct = rasterize(mesh, views[i]);
        CHECK(set.maps[i].mask.pixels == direct.mask.pixels);
        CHECK(set.maps[i].normal.pixels == direct.normal.pixels);
        CHECK(set.maps[i].depth.pixels == direct.depth.pixels);
    }
}

TEST_CASE("colored references get color images at twice the resolution")
{
    const SupervisionSet set = render_supervision(colored_sphere(), standard_views(4, 2.0, 40.0, 32));
    REQUIRE(set.has_colors());
    for (size_t i = 0; i < set.colors.size(); ++i)
    {
        CHECK(set.colors[i].width == 64);
        CHECK(set.color_views[i].width == 64);
        CHECK(set.color_views[i].azimuth_deg == set.views[i].azimuth_deg);
    }
}

TEST_CASE("normal jitter has the requested angular spread")
{
    const TriangleMesh mesh = make_icosphere(3, 0.45);
    const auto views = standard_views(6, 2.0, 40.0, 96);
    const SupervisionSet clean = render_supervision(mesh, views);
    const SupervisionSet noisy = render_supervision(mesh, views, NoiseSpec{.normal_sigma_deg = 5.0, .seed = 3});
    double sum = 0.0;
    double sum_sq = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < views.size(); ++i)
    {
        for (size_t p = 0; p < clean.maps[i].normal.size(); ++p)
        {
            const Vec3& a = clean.maps[i].normal[p];
            if (a.squaredNorm() == 0.0)
            {
                continue;
            }
            const Vec3& b = noisy.maps[i].normal[p];
            CHECK(std::abs(b.norm() - 1.0) < 1e-12);
            const double deg = std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / std::numbers::pi;
            sum += deg;
            sum_sq += deg * deg;
            ++n;
        }
    }
    const double mean = sum / n;
    MESSAGE("mean deviation " << mean << " deg, rms " << std::sqrt(sum_sq / n) << " deg over " << n << " pixels");
    CHECK(mean >= 4.0);
    CHECK(mean <= 6.0);
    // Rayleigh with per-axis sigma / sqrt(2): mean sigma * sqrt(pi) / 2
    CHECK(mean == doctest::Approx(5.0 * std::sqrt(std::numbers::pi) / 2.0).epsilon(0.03));
}

TEST_CASE("mask dilation grows and erosion shrinks the silhouette")
{
    const TriangleMesh mesh = make_box(Vec3(0.3, 0.2, 0.25));
    const auto views = standard_views(4, 2.0, 40.0, 64);
    const SupervisionSet clean = render_supervision(mesh, views);
    const SupervisionSet grown = render_supervision(mesh, views, NoiseSpec{.mask_radius = 2});
    const SupervisionSet shrunk = render_supervision(mesh, views, NoiseSpec{.mask_radius = -2});
    for (size_t i = 0; i < views.size(); ++i)
    {
        const double a = mask_area(clean.maps[i].mask);
        CHECK(mask_area(grown.maps[i].mask) > a);
        CHECK(mask_area(shrunk.maps[i].mask) < a);
        for (size_t p = 0; p < shrunk.maps[i].mask.size(); ++p)
        {
            CHECK(shrunk.maps[i].mask[p] <= clean.maps[i].mask[p]);
            CHECK(grown.maps[i].mask[p] >= clean.maps[i].mask[p]);
        }
    }
}

TEST_CASE("disk morphology on a single pixel")
{
    ImageF m(9, 9, 0.0);
    m.at(4, 4) = 1.0;
    const ImageF d = dilate_mask(m, 2);
    CHECK(mask_area(d) == 13.0); // lattice points with x^2 + y^2 <= 4
    CHECK(mask_area(erode_mask(d, 2)) == 1.0);
    CHECK(dilate_mask(m, 0).pixels == m.pixels);
}

TEST_CASE("color shift offsets each view uniformly")
{
    const TriangleMesh mesh = colored_sphere();
    const auto views = standard_views(4, 2.0, 40.0, 32);
    const SupervisionSet clean = render_supervision(mesh, views);
    const SupervisionSet shifted = render_supervision(mesh, views, NoiseSpec{.color_shift = 0.05, .seed = 9});
    for (size_t i = 0; i < views.size(); ++i)
    {
        // any unclamped pixel reveals the offset; all others must agree with it
        const size_t center = static_cast<size_t>(32) * 64 + 32;
        const Vec3 offset = shifted.colors[i][center] - clean.colors[i][center];
        CHECK(offset.cwiseAbs().maxCoeff() <= 0.05);
        CHECK(offset.norm() > 0.0);
        for (size_t p = 0; p < clean.colors[i].size(); ++p)
        {
            const Vec3 expected = (clean.colors[i][p] + offset).cwiseMax(0.0).cwiseMin(1.0);
            CHECK((shifted.colors[i][p] - expected).norm() < 1e-12);
        }
    }
}

TEST_CASE("sphere initialization")
{
    const TriangleMesh ref = bunny();
    const TriangleMesh init = make_coarse_initial(ref, InitMode::Sphere);
    CHECK(init.faces.size() == 1280);
    const ManifoldReport r = validate_manifold(init);
    CHECK(r.is_closed_manifold());
    CHECK(r.euler_characteristic == 2);
    const Vec3 c = bounding_box(ref).center();
    double radius = 0.0;
    for (const Vec3& v : ref.vertices)
    {
        radius = std::max(radius, (v - c).norm());
    }
    for (const Vec3& v : init.vertices)
    {
        CHECK((v - c).norm() == doctest::Approx(radius));
    }
}

TEST_CASE("decimate initialization")
{
    const TriangleMesh ref = bunny();
    const TriangleMesh init = make_coarse_initial(ref, InitMode::Decimate, 4);
    MESSAGE("bunny " << ref.faces.size() << " faces -> " << init.faces.size());
    CHECK(init.faces.size() >= 450);
    CHECK(init.faces.size() <= 550);
    CHECK(validate_manifold(init).is_closed_manifold());
    CHECK(validate_manifold(init).euler_characteristic == validate_manifold(ref).euler_characteristic);
    CHECK(chamfer_distance(init, ref, 4096, 0) > 0.0);

    const TriangleMesh cube = make_unit_cube();
    const TriangleMesh small = make_coarse_initial(cube, InitMode::Decimate, 4);
    CHECK(small.faces == cube.faces);
    double moved = 0.0;
    for (size_t v = 0; v < cube.vertices.size(); ++v)
    {
        moved += (small.vertices[v] - cube.vertices[v]).norm();
    }
    CHECK(moved > 0.0);
    CHECK(moved / cube.vertices.size() < 0.1);
}

TEST_CASE("blob initialization")
{
    const TriangleMesh cube = make_box(Vec3(0.5, 0.5, 0.5));
    const TriangleMesh blob = make_coarse_initial(cube, InitMode::Blob);
    const ManifoldReport r = validate_manifold(blob);
    CHECK(r.is_closed_manifold());
    CHECK(r.euler_characteristic == 2);
    CHECK(chamfer_distance(blob, cube, 4096, 0) < 0.08);

    const TriangleMesh torus = normalize_to_unit(make_torus(0.35, 0.15, 32, 16)).mesh;
    const ManifoldReport rt = validate_manifold(make_coarse_initial(torus, InitMode::Blob));
    CHECK(rt.is_closed_manifold());
    CHECK(rt.euler_characteristic == 0);

    CHECK(validate_manifold(make_coarse_initial(bunny(), InitMode::Blob)).is_closed_manifold());
}

TEST_CASE("occupancy surface of one voxel is a closed sphere")
{
    const int n = 3;
    std::vector<uint8_t> occ(n * n * n, 0);
    occ[1 + n * (1 + n * 1)] = 1;
    const TriangleMesh s = extract_occupancy_surface(occ, n, Vec3::Zero(), Vec3::Ones());
    const ManifoldReport r = validate_manifold(s);
    CHECK(r.is_closed_manifold());
    CHECK(r.euler_characteristic == 2);
    // outward orientation: positive enclosed volume
    double volume = 0.0;
    for (const Face& f : s.faces)
    {
        volume += s.vertices[f[0]].dot(s.vertices[f[1]].cross(s.vertices[f[2]])) / 6.0;
    }
    CHECK(volume > 0.0);
}

TEST_CASE("supervision export and import round trip")
{
    const TriangleMesh mesh = colored_sphere();
    const SupervisionSet set = render_supervision(mesh, standard_views(4, 2.0, 40.0, 32));
    const fs::path dir = scratch_dir("roundtrip");
    export_supervision(set, dir);
    CHECK(fs::exists(dir / "manifest.toml"));
    const SupervisionSet back = import_supervision(dir);
    CHECK(back.source == SupervisionSource::External);
    REQUIRE(back.views.size() == set.views.size());
    REQUIRE(back.has_colors());
    for (size_t i = 0; i < set.views.size(); ++i)
    {
        CHECK(back.views[i].azimuth_deg == set.views[i].azimuth_deg);
        CHECK(back.views[i].elevation_deg == set.views[i].elevation_deg);
        CHECK(back.color_views[i].width == set.color_views[i].width);
        for (size_t p = 0; p < set.maps[i].mask.size(); ++p)
        {
            CHECK(std::abs(back.maps[i].mask[p] - set.maps[i].mask[p]) < 1e-7);
            CHECK((back.maps[i].normal[p] - set.maps[i].normal[p]).norm() < 1e-6);
        }
        double worst = 0.0;
        for (size_t p = 0; p < set.colors[i].size(); ++p)
        {
            worst = std::max(worst, (back.colors[i][p] - set.colors[i][p]).cwiseAbs().maxCoeff());
        }
        // half an 8-bit sRGB step, mapped through the steepest part of the decode curve
        CHECK(worst <= 0.005);
    }
    fs::remove_all(dir);
}

TEST_CASE("import reports missing and malformed files")
{
    const fs::path dir = scratch_dir("broken");
    CHECK_THROWS_WITH_AS(import_supervision(dir), doctest::Contains("manifest.toml"), DataError);

    const SupervisionSet set = render_supervision(make_unit_cube(), standard_views(4, 2.0, 40.0, 16));
    export_supervision(set, dir);
    fs::remove(dir / "view_02_mask.pfm");
    CHECK_THROWS_WITH_AS(import_supervision(dir), doctest::Contains("view_02_mask.pfm"), DataError);

    std::ofstream(dir / "manifest.toml") << "views = [ { azimuth_deg = 1.0 ";
    CHECK_THROWS_AS(import_supervision(dir), DataError);
    std::ofstream(dir / "manifest.toml") << "[[views]]\nazimuth_deg = 0.0\n";
    CHECK_THROWS_WITH_AS(import_supervision(dir), doctest::Contains("elevation_deg"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("initialization mode names")
{
    for (InitMode m : {InitMode::Sphere, InitMode::Decimate, InitMode::Blob})
    {
        CHECK(parse_init_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_init_mode("cube"), ConfigError);
}
