#pragma once

#include <cstdint>

#include "blurrast/geometry.hpp"

namespace blurrast {

// Procedural meshes bundled with the renderer. All are closed, consistently
// oriented (counter-clockwise seen from outside) and carry per-vertex colors.

Mesh make_icosahedron();
// Loop-free midpoint subdivision of the icosahedron projected to the unit
// sphere: 20 * 4^level faces (level 3 -> 1280, level 4 -> 5120).
Mesh make_icosphere(int level);
// Latitude/longitude sphere: `slices` * (`stacks` - 1) + 2 vertices and
// 2 * `slices` * (`stacks` - 1) faces.
Mesh make_uv_sphere(int slices, int stacks);
// Axis-aligned cube [-h, h]^3 with 8 vertices and 12 faces.
Mesh make_cube(double half_extent = 0.5);
// Star-shaped low-poly stand-in for a cow: ellipsoidal body, head, four legs.
// Built on an icosphere so the surface is a single closed manifold.
Mesh make_cow_proxy(int level = 2);

// Resolves "icosahedron", "icosphere:<level>", "uvsphere:<slices>x<stacks>",
// "cube", "cow" / "cow:<level>"; anything else is treated as an OBJ path.
Mesh load_mesh_source(const std::string& source);

// Uniform scale about the origin so that the largest vertex norm is `radius`.
void normalize_max_norm(Mesh& mesh, double radius = 1.0);
void rotate_x(Mesh& mesh, double angle_rad);
void set_uniform_color(Mesh& mesh, const Vec3& color);

}  // namespace blurrast
