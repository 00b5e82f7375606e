// Plain-text run configuration: an INI-style format with expression-valued
// fields describing the mesh source, material data, boundary conditions,
// optional exact solution and study/output settings.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "brinkvem/analysis.hpp"

namespace brinkvem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Permeability override applied to every cell whose centroid lies in the
/// region; regions are tested in file order, first match wins, the base
/// value covers the rest.
struct PermRegion {
  enum class Shape { box, disk };
  Shape shape = Shape::box;
  Vec2 a = Vec2::Zero(); ///< box lower corner / disk centre
  Vec2 b = Vec2::Zero(); ///< box upper corner
  double r = 0.0;        ///< disk radius
  Eigen::Matrix2d kinv = Eigen::Matrix2d::Identity();
};

/// One [bc <tag>] section.  Data components default to the zero expression.
struct BCEntry {
  BCondition::Type type = BCondition::Type::dirichlet;
  Expr gx, gy;     // Dirichlet data
  Expr g1x, g1y;   // slip normal data
  Expr g2x, g2y;   // slip traction data
};

/// Parsed configuration.
///
/// Sections and keys:
///   [run]          order, nu, gamma, gamma_n, parallel
///   [mesh]         family, n, seed, domain | file
///   [permeability] kinv (1 or 4 numbers), region (repeatable:
///                  "box x0 y0 x1 y1 <kinv>" or "disk cx cy r <kinv>")
///   [tags]         rule (repeatable: "<tag> halfplane nx ny c" |
///                  "<tag> box x0 y0 x1 y1" | "<tag> circle cx cy r" |
///                  "<tag> always"; first match wins, midpoint test)
///   [bc <tag>]     type = dirichlet | slip | outflow, gx, gy, g1x, g1y,
///                  g2x, g2y (expressions in x, y)
///   [exact]        u1, u2, p   or   phi, p (stream function)
///   [convergence]  levels, nus (whitespace-separated list)
///   [output]       csv, vtk
///
/// Domain values: "rectangle x0 y0 x1 y1",
/// "rectangle-minus-disk x0 y0 x1 y1 cx cy r", "step x0 y0 x1 y1 cutx cuty".
struct RunConfig {
  int order = 2;
  double nu = 1.0;
  NitscheParams nitsche; // zeroed -> defaults(order)
  bool parallel = true;

  bool from_file = false;
  std::string mesh_file;
  MeshFamily family = MeshFamily::voronoi;
  int n_cells = 64;
  std::uint64_t seed = 0;
  Domain domain = Domain::rectangle(Vec2(0, 0), Vec2(1, 1));

  Eigen::Matrix2d kinv_base = Eigen::Matrix2d::Identity();
  std::vector<PermRegion> regions;

  std::vector<TagRule> tag_rules;

  std::map<std::string, BCEntry> bcs;

  bool has_exact = false;
  Expr exact_u1, exact_u2, exact_p;

  int levels = 4;
  std::vector<double> nus;

  std::string csv_path, vtk_path;

  // --- derived objects ----------------------------------------------------
  Material base_material() const;
  MaterialField material_field() const;
  /// Generate or read the mesh, then apply [tags] rules if any.
  PolygonalMesh build_mesh() const;
  /// Conditions from the [bc] sections (throws if none were given).
  BoundarySpec boundary_spec() const;
  /// Condition kinds per tag from the [bc] sections.
  BoundaryPlan boundary_plan() const;
  ManufacturedCase manufactured() const;
};

/// Parse configuration text; errors carry line numbers and key context.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Parse a domain descriptor string (same syntax as the [mesh] domain key).
Domain parse_domain_string(const std::string& text);

} // namespace brinkvem
