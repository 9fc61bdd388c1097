#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "assetgen/errors.hpp"
#include "assetgen/mesh.hpp"
#include "assetgen/mesh_io.hpp"
#include "assetgen/primitives.hpp"

using namespace assetgen;
namespace fs = std::filesystem;

namespace
{
    fs::path scratch(const std::string& name)
    {
        const fs::path dir = fs::temp_directory_path() / "assetgen_test_mesh_core";
        fs::create_directories(dir);
        return dir / name;
    }

    void write_text(const fs::path& path, const std::string& text)
    {
        std::ofstream(path) << text;
    }

    void require_same(const TriangleMesh& a, const TriangleMesh& b, double tol)
    {
        REQUIRE(a.vertices.size() == b.vertices.size());
        REQUIRE(a.faces == b.faces);
        for (size_t i = 0; i < a.vertices.size(); ++i)
        {
            CHECK((a.vertices[i] - b.vertices[i]).cwiseAbs().maxCoeff() <= tol);
        }
    }
} // namespace

TEST_CASE("minimal OBJ loads one triangle")
{
    const auto path = scratch("tri.obj");
    write_text(path, "# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    const TriangleMesh mesh = load_mesh(path);
    CHECK(mesh.vertex_count() == 3);
    CHECK(mesh.face_count() == 1);
    CHECK(mesh.faces[0] == Face{0, 1, 2});
}

TEST_CASE("quad face is fan triangulated")
{
    const auto path = scratch("quad.obj");
    write_text(path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 -1/1\n");
    const TriangleMesh mesh = load_mesh(path);
    REQUIRE(mesh.face_count() == 2);
    CHECK(mesh.faces[0] == Face{0, 1, 2});
    CHECK(mesh.faces[1] == Face{0, 2, 3});
}

TEST_CASE("malformed OBJ reports the line")
{
    const auto path = scratch("bad.obj");
    write_text(path, "v 0 0 0\nv 1 0 0\nf 1 2\n");
    try
    {
        load_mesh(path);
        FAIL("expected a DataError");
    }
    catch (const DataError& e)
    {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    write_text(path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n");
    CHECK_THROWS_AS(load_mesh(path), DataError);
}

TEST_CASE("truncated PLY reports a byte offset")
{
    const auto path = scratch("bad.ply");
    write_text(path, "ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
                     "element face 1\nproperty list uchar int vertex_indices\nend_header\n");
    try
    {
        load_mesh(path);
        FAIL("expected a DataError");
    }
    catch (const DataError& e)
    {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("round trip through OBJ and PLY")
{
    const TriangleMesh sphere = make_uv_sphere(20, 25);
    CHECK(sphere.face_count() == 1000);
    for (const char* ext : {"obj", "ply"})
    {
        const auto path = scratch(std::string("sphere.") + ext);
        save_mesh(sphere, path);
        require_same(sphere, load_mesh(path), 1e-6);
    }
    const TriangleMesh cube = make_unit_cube();
    for (const char* ext : {"obj", "ply"})
    {
        const auto path = scratch(std::string("cube.") + ext);
        save_mesh(cube, path);
        require_same(cube, load_mesh(path), 1e-6);
    }
}

TEST_CASE("colored mesh writes red/green/blue PLY properties")
{
    TriangleMesh mesh = make_unit_cube();
    for (size_t i = 0; i < mesh.vertex_count(); ++i)
    {
        mesh.colors.push_back(Vec3(i / 8.0, 0.25, 1.0));
    }
    const auto path = scratch("colored.ply");
    save_mesh(mesh, path);
    std::ifstream in(path, std::ios::binary);
    std::string header;
    for (std::string line; std::getline(in, line) && line != "end_header";)
    {
        header += line + "\n";
    }
    CHECK(header.find("property uchar red") != std::string::npos);
    CHECK(header.find("property uchar green") != std::string::npos);
    CHECK(header.find("property uchar blue") != std::string::npos);
    const TriangleMesh back = load_mesh(path);
    REQUIRE(back.has_colors());
    for (size_t i = 0; i < mesh.vertex_count(); ++i)
    {
        // 8-bit sRGB quantisation: worst-case linear error is below 1/255
        CHECK((back.colors[i] - mesh.colors[i]).cwiseAbs().maxCoeff() < 1.0 / 255.0);
    }
}

TEST_CASE("empty mesh round trips")
{
    for (const char* ext : {"obj", "ply"})
    {
        const auto path = scratch(std::string("empty.") + ext);
        save_mesh(TriangleMesh{}, path);
        const TriangleMesh back = load_mesh(path);
        CHECK(back.vertex_count() == 0);
        CHECK(back.face_count() == 0);
    }
}

TEST_CASE("normalize_to_unit")
{
    TriangleMesh cube = make_unit_cube();
    for (auto& v : cube.vertices)
    {
        v = v + Vec3::Constant(1.5); // [1,2]^3 scaled below to [0,2]^3
        v = 2.0 * (v - Vec3::Constant(1.0));
    }
    const NormalizedMesh n = normalize_to_unit(cube);
    CHECK(n.scale == doctest::Approx(2.0));
    CHECK((n.center - Vec3::Constant(1.0)).norm() < 1e-12);
    const BoundingBox box = bounding_box(n.mesh);
    CHECK((box.min - Vec3::Constant(-0.5)).norm() < 1e-12);
    CHECK((box.max - Vec3::Constant(0.5)).norm() < 1e-12);

    const NormalizedMesh again = normalize_to_unit(n.mesh);
    CHECK(again.scale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(again.center.norm() < 1e-12);
    for (size_t i = 0; i < n.mesh.vertex_count(); ++i)
    {
        CHECK((again.mesh.vertices[i] - n.mesh.vertices[i]).norm() < 1e-9);
    }

    TriangleMesh point;
    point.vertices.push_back(Vec3(3, -2, 7));
    const NormalizedMesh p = normalize_to_unit(point);
    CHECK(p.scale == 1.0);
    CHECK(p.mesh.vertices[0].norm() == 0.0);
    CHECK((p.center - Vec3(3, -2, 7)).norm() == 0.0);
}

TEST_CASE("cube corner normals follow the area-weighted triangulation")
{
    const TriangleMesh cube = make_unit_cube();
    const auto normals = compute_vertex_normals(cube);
    for (size_t v = 0; v < cube.vertex_count(); ++v)
    {
        // Hand rule: every triangle of an axis-aligned face contributes area 1/2
        // along that face's outward axis.
        Vec3 expected = Vec3::Zero();
        for (const Face& f : cube.faces)
        {
            if (f[0] != static_cast<int>(v) && f[1] != static_cast<int>(v) && f[2] != static_cast<int>(v))
            {
                continue;
            }
            const Vec3 centroid = (cube.vertices[f[0]] + cube.vertices[f[1]] + cube.vertices[f[2]]) / 3.0;
            int axis = 0;
            centroid.cwiseAbs().maxCoeff(&axis);
            Vec3 dir = Vec3::Zero();
            dir[axis] = centroid[axis] > 0 ? 1.0 : -1.0;
            expected += 0.5 * dir;
        }
        expected.normalize();
        CHECK((normals[v] - expected).norm() < 1e-12);
        // each corner sees all three of its faces
        for (int k = 0; k < 3; ++k)
        {
            CHECK(normals[v][k] * cube.vertices[v][k] > 0.0);
        }
    }
}

TEST_CASE("flat grid and sphere normals")
{
    const TriangleMesh grid = make_grid(6, 6);
    const auto gn = compute_vertex_normals(grid);
    for (const Vec3& n : gn)
    {
        CHECK((n - Vec3::UnitZ()).norm() < 1e-12);
    }
    const TriangleMesh ico = make_icosphere(4);
    const auto in = compute_vertex_normals(ico);
    for (size_t v = 0; v < ico.vertex_count(); ++v)
    {
        CHECK((in[v] - ico.vertices[v].normalized()).norm() < 1e-2);
        CHECK(std::abs(in[v].norm() - 1.0) <= 1e-6);
    }
    TriangleMesh lonely = make_grid(1, 1);
    lonely.vertices.push_back(Vec3(5, 5, 5));
    CHECK((compute_vertex_normals(lonely).back() - Vec3::UnitZ()).norm() == 0.0);
}

TEST_CASE("validate_manifold")
{
    const ManifoldReport ico = validate_manifold(make_icosphere(2));
    CHECK(ico.is_closed_manifold());
    CHECK(ico.euler_characteristic == 2);

    TriangleMesh tri;
    tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    tri.faces = {{0, 1, 2}};
    const ManifoldReport one = validate_manifold(tri);
    CHECK(one.boundary_edges == 3);
    CHECK(one.is_manifold());

    TriangleMesh bad;
    bad.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
    bad.faces = {{0, 1, 2}, {0, 1, 3}}; // edge 0->1 used twice in the same direction
    const ManifoldReport flagged = validate_manifold(bad);
    CHECK(flagged.orientation_conflicts == 1);
    CHECK_FALSE(flagged.is_manifold());

    TriangleMesh fin = make_unit_cube();
    fin.vertices.push_back(Vec3(0, 0, 2));
    const int a = fin.faces[0][0];
    const int b = fin.faces[0][1];
    fin.faces.push_back({a, b, static_cast<int>(fin.vertices.size() - 1)});
    CHECK(validate_manifold(fin).non_manifold_edges == 1);

    TriangleMesh iso = make_unit_cube();
    iso.vertices.push_back(Vec3(9, 9, 9));
    CHECK(validate_manifold(iso).isolated_vertices == 1);

    TriangleMesh dup = make_unit_cube();
    dup.faces.push_back(dup.faces[3]);
    CHECK(validate_manifold(dup).duplicated_faces == 1);
}

TEST_CASE("bowtie vertex is non-manifold")
{
    TriangleMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(-1, 0, 0), Vec3(-1, -1, 0)};
    m.faces = {{0, 1, 2}, {0, 3, 4}};
    CHECK(validate_manifold(m).non_manifold_vertices == 1);
}

TEST_CASE("Euler characteristic survives normalization")
{
    const TriangleMesh torus = make_torus(1.0, 0.3, 24, 12);
    CHECK(validate_manifold(torus).euler_characteristic == 0);
    const TriangleMesh ico = make_icosphere(1, 3.0, Vec3(4, 4, 4));
    CHECK(validate_manifold(normalize_to_unit(ico).mesh).euler_characteristic == 2);
    CHECK(validate_manifold(make_uv_sphere(6, 8)).is_closed_manifold());
}

TEST_CASE("adjacency is symmetric and covers each edge once")
{
    const TriangleMesh mesh = make_icosphere(1);
    const MeshAdjacency adj = MeshAdjacency::build(mesh);
    CHECK(adj.edges.size() == 120);
    for (size_t v = 0; v < adj.neighbors.size(); ++v)
    {
        for (int u : adj.neighbors[v])
        {
            const auto& back = adj.neighbors[u];
            CHECK(std::find(back.begin(), back.end(), static_cast<int>(v)) != back.end());
        }
    }
    for (size_t f = 0; f < mesh.face_count(); ++f)
    {
        for (int k = 0; k < 3; ++k)
        {
            const EdgeRecord& e = adj.edges[adj.face_edges[f][k]];
            const int a = mesh.faces[f][k];
            const int b = mesh.faces[f][(k + 1) % 3];
            CHECK(e.v0 == std::min(a, b));
            CHECK(e.v1 == std::max(a, b));
        }
    }
}
