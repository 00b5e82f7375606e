// Conforming polygonal meshes: storage, validation, boundary tagging, shape
// quality metrics and JSON file exchange.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brinkvem/quadrature.hpp"

namespace brinkvem {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Boundary edge as stored in mesh files: vertex pair plus condition tag.
struct BoundaryEdge {
  int v0 = -1;
  int v1 = -1;
  std::string tag;
};

/// Edge of the connectivity table.  Endpoints are canonical (a < b);
/// cell_in traverses a->b in its CCW loop, cell_out traverses b->a.
struct MeshEdge {
  int a = -1;
  int b = -1;
  int cell_in = -1;
  int cell_out = -1;
  int boundary_index = -1; ///< into boundary(), -1 for interior edges
  double length = 0.0;
};

/// Cached per-cell geometry.
struct CellGeometry {
  Vec2 centroid = Vec2::Zero();
  double area = 0.0;
  double diameter = 0.0; ///< h_K
  Vec2 star = Vec2::Zero(); ///< kernel point used as quadrature fan centre
};

/// Mesh of simple CCW polygons covering a planar domain.  Interior edges are
/// shared by exactly two cells with opposite orientation, boundary edges by
/// one; every boundary edge carries a tag.  Construction validates all of
/// this and builds the edge table and per-cell caches.
class PolygonalMesh {
 public:
  PolygonalMesh() = default;
  PolygonalMesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells,
                std::vector<BoundaryEdge> boundary);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::vector<int>>& cells() const { return cells_; }
  const std::vector<MeshEdge>& edges() const { return edges_; }
  const std::vector<BoundaryEdge>& boundary() const { return boundary_; }
  const CellGeometry& geometry(int cell) const { return geom_[cell]; }
  /// Global edge indices of cell `c`, aligned with its vertex loop
  /// (entry i is the edge from vertex i to vertex i+1).
  const std::vector<int>& cell_edge_indices(int c) const { return cell_edges_[c]; }
  int edge_index(int a, int b) const;

  /// Mesh size reported in convergence tables: largest edge length.
  double h() const { return h_edge_; }
  /// Largest cell diameter.
  double h_diameter() const { return h_diam_; }
  double total_area() const { return total_area_; }

  /// Vertex loop of a cell as coordinates.
  std::vector<Vec2> cell_vertices(int c) const;

 private:
  void finalize();

  std::vector<Vec2> vertices_;
  std::vector<std::vector<int>> cells_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<int>> cell_edges_;
  std::vector<CellGeometry> geom_;
  double h_edge_ = 0.0;
  double h_diam_ = 0.0;
  double total_area_ = 0.0;
};

/// Geometric predicate for boundary tagging, evaluated at edge midpoints.
struct TagRule {
  enum class Kind { halfplane, box, circle, always };
  std::string tag;
  Kind kind = Kind::always;
  Vec2 a = Vec2::Zero(); ///< halfplane normal / box lower corner / circle centre
  Vec2 b = Vec2::Zero(); ///< box upper corner
  double c = 0.0;        ///< halfplane offset (a.x <= c) / circle radius

  static TagRule halfplane(std::string tag, const Vec2& normal, double offset);
  static TagRule box(std::string tag, const Vec2& lo, const Vec2& hi);
  static TagRule circle(std::string tag, const Vec2& centre, double radius);
  static TagRule always(std::string tag);
};

/// Retag every boundary edge using the first matching rule (midpoint test,
/// tolerance `tol`).  Throws MeshError listing the midpoints of edges no
/// rule matches.
PolygonalMesh tag_boundary(const PolygonalMesh& mesh, const std::vector<TagRule>& rules,
                           double tol = 1e-8);

/// Shape-regularity metrics.
struct QualityReport {
  std::vector<double> edge_ratio;   ///< per cell: shortest edge / h_K
  std::vector<double> kernel_ratio; ///< per cell: kernel inradius / h_K
  double min_edge_ratio = 0.0;
  double min_kernel_ratio = 0.0;
};

QualityReport quality(const PolygonalMesh& mesh);

/// Kernel of a simple polygon (set of points seeing every vertex) via
/// half-plane intersection; empty result means not star-shaped.
std::vector<Vec2> polygon_kernel(const std::vector<Vec2>& poly);

/// Chebyshev centre and inradius of a convex polygon.
std::pair<Vec2, double> chebyshev_center(const std::vector<Vec2>& convex);

// --- JSON exchange --------------------------------------------------------
// Schema: {"vertices": [[x,y],...], "cells": [[v0,v1,...],...],
//          "boundary": [{"edge": [i,j], "tag": "name"},...]}, indices 0-based.

PolygonalMesh mesh_from_json(const std::string& text);
std::string mesh_to_json(const PolygonalMesh& mesh);
PolygonalMesh read_mesh(const std::string& path);
void write_mesh(const PolygonalMesh& mesh, const std::string& path);

/// Edges that belong to exactly one cell, in deterministic order, with empty
/// tags.  Helper for mesh generators.
std::vector<BoundaryEdge> detect_boundary(const std::vector<Vec2>& vertices,
                                          const std::vector<std::vector<int>>& cells);

} // namespace brinkvem
