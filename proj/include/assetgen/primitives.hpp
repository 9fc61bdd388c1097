#pragma once

#include "assetgen/mesh.hpp"

namespace assetgen
{
    // Icosahedron (level 0) refined by 4:1 midpoint subdivision, projected to the sphere.
    // Level L has 20 * 4^L faces.
    TriangleMesh make_icosphere(int level, double radius = 1.0, const Vec3& center = Vec3::Zero());

    // Axis-aligned box [-h, h] split into `divisions` x `divisions` quads per side,
    // two triangles each, with shared vertices along the box edges.
    TriangleMesh make_box(const Vec3& half_extents, int divisions = 1);

    // Unit cube [-0.5, 0.5]^3 with 12 triangles.
    TriangleMesh make_unit_cube();

    // Torus around the z axis.
    TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments);

    // Latitude/longitude sphere: `rings` interior latitude rings of `segments` vertices plus two poles.
    TriangleMesh make_uv_sphere(int rings, int segments, double radius = 1.0);

    // Planar grid in the z = 0 plane over [-sx/2, sx/2] x [-sy/2, sy/2], facing +z.
    TriangleMesh make_grid(int nx, int ny, double size_x = 1.0, double size_y = 1.0);
} // namespace assetgen
