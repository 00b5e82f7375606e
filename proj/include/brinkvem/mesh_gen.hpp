// Mesh generation for the built-in families: structured triangles and quads,
// a non-convex quad variant, and Lloyd-relaxed Voronoi tessellations, over
// rectangles, rectangles with a circular hole, and backward-facing-step
// channels.
#pragma once

#include <cstdint>
#include <string>

#include "brinkvem/mesh.hpp"

namespace brinkvem {

/// Computational domain descriptor.
struct Domain {
  enum class Kind { rectangle, rectangle_minus_disk, step };

  Kind kind = Kind::rectangle;
  Vec2 lo = Vec2(0, 0);
  Vec2 hi = Vec2(1, 1);
  Vec2 disk_center = Vec2(0, 0);
  double disk_radius = 0.0;
  /// step: the removed corner is [lo.x, cut.x] x [lo.y, cut.y]
  Vec2 cut = Vec2(0, 0);

  static Domain rectangle(const Vec2& lo, const Vec2& hi);
  static Domain rectangle_minus_disk(const Vec2& lo, const Vec2& hi, const Vec2& centre,
                                     double radius);
  static Domain step(const Vec2& lo, const Vec2& hi, const Vec2& cut);

  void validate() const;
  double area() const;
  bool contains(const Vec2& p) const;
  /// Boundary polyline segments (used for seed mirroring).
  std::vector<std::pair<Vec2, Vec2>> boundary_segments() const;
};

enum class MeshFamily { triangle, quad, voronoi, nonconvex };

MeshFamily family_from_string(const std::string& name);
std::string family_to_string(MeshFamily family);

/// Generate a mesh of the requested family with `n_cells` cells.
///
/// triangle/quad/nonconvex are deterministic structured meshes over
/// rectangles; `seed` is ignored for them.  Counts must tile the grid:
/// quad/nonconvex need a square count n^2, triangle needs 2 a*b over a
/// near-square grid (a = b or a = 2b).  voronoi accepts any count >= 4 and is
/// a seeded Lloyd relaxation (fixed 20 iterations) of random points with
/// boundary-reflection clipping; the same seed reproduces the same mesh
/// bit for bit.
///
/// Generated boundary tags: rectangles get left/right/bottom/top, the disk
/// hole gets circ, step domains get inlet (x = lo.x), outlet (x = hi.x) and
/// wall.
PolygonalMesh generate(MeshFamily family, int n_cells, std::uint64_t seed, const Domain& domain);

} // namespace brinkvem
