// Manufactured solutions with exact derivatives, the mesh-dependent error
// norms, convergence-rate tables and viscosity-robustness sweeps.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "brinkvem/assembly.hpp"
#include "brinkvem/dataexpr.hpp"
#include "brinkvem/mesh_gen.hpp"

namespace brinkvem {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Analytic reference solution (u, p) with all first and second velocity
/// derivatives obtained by exact symbolic differentiation, plus the matching
/// momentum source f = K^-1 u - nu div eps(u) + grad p.  Construction
/// verifies div u = 0 at sampled points.
class ManufacturedCase {
 public:
  ManufacturedCase(Expr u1, Expr u2, Expr p, const Material& mat);

  /// u = (d phi / dy, -d phi / dx): exactly divergence-free by construction.
  static ManufacturedCase stream_function(const Expr& phi, const Expr& p,
                                          const Material& mat);
  /// The high-tangential-flow benchmark solution on the unit square:
  /// phi = -256 x^2 (x-1)^2 y (y-1) (2y-1), p = sin(x-y).
  static ManufacturedCase reference(const Material& mat = {});

  /// Same fields under different material parameters (viscosity sweeps).
  ManufacturedCase with_material(const Material& mat) const;

  const Material& material() const { return mat_; }

  Vec2 velocity(const Vec2& x) const;
  double pressure(const Vec2& x) const;
  /// G(i, j) = d u_i / d x_j.
  Eigen::Matrix2d grad_velocity(const Vec2& x) const;
  Eigen::Matrix2d strain(const Vec2& x) const;
  double divergence(const Vec2& x) const;
  Vec2 pressure_gradient(const Vec2& x) const;
  /// f = K^-1 u - nu div eps(u) + grad p.
  Vec2 source(const Vec2& x) const;

  VectorField velocity_field() const;
  VectorField source_field() const;
  /// Slip traction data for a boundary of constant outward normal n:
  /// g2(x) = nu eps(u(x)) n.
  VectorField traction_field(const Vec2& n) const;

 private:
  ManufacturedCase() = default;

  Expr u1_, u2_, p_;
  Expr u1x_, u1y_, u2x_, u2y_, px_, py_;
  Expr u1xx_, u1yy_, u1xy_, u2xx_, u2yy_, u2xy_;
  Material mat_;
};

enum class BCKind { dirichlet, slip, free_outflow };

/// Boundary-tag -> condition-kind table driving both the boundary data and
/// the boundary part of the energy norm.
using BoundaryPlan = std::map<std::string, BCKind>;

/// Data table for a manufactured case: Dirichlet tags get g = u, slip tags
/// get g1 = u and g2 = nu eps(u) n with the tag's outward normal, outflow
/// tags carry no data.  Throws AnalysisError if the plan misses a mesh tag
/// or a slip tag's edges do not share one normal within 1e-10.
BoundarySpec make_boundary_spec(const ManufacturedCase& mc, const PolygonalMesh& mesh,
                                const BoundaryPlan& plan);

/// Energy error e(u).  `full` adds the h_e^-1-weighted boundary traces on
/// Dirichlet edges (full trace) and slip edges (normal trace) to the volume
/// part; `volume` is the K/eps/div part alone.
struct EnergyError {
  double full = 0.0;
  double volume = 0.0;
};

EnergyError error_energy(const PolygonalMesh& mesh, const DofNumbering& numbering,
                         const DiscreteSolution& sol, const ManufacturedCase& mc,
                         const BoundaryPlan& plan);

/// L2 pressure error; gauges are aligned (means subtracted) when the solve
/// carried the zero-mean constraint.
double error_pressure(const PolygonalMesh& mesh, const DofNumbering& numbering,
                      const DiscreteSolution& sol, const ManufacturedCase& mc);

/// ||div u_h||_{0,Omega} (exact: the discrete divergence is polynomial).
double divergence_norm(const PolygonalMesh& mesh, const DofNumbering& numbering,
                       const DiscreteSolution& sol);

/// Velocity DOF vector of the canonical interpolant of the exact velocity
/// (edge values pointwise, interior moments by quadrature).
Eigen::VectorXd interpolate_velocity(const PolygonalMesh& mesh, int order,
                                     const ManufacturedCase& mc);

/// One row of a convergence table.
struct ConvergenceRecord {
  int cells = 0;
  double h = 0.0;
  double err_u = 0.0;
  double rate_u = 0.0; // NaN on the first row
  double err_p = 0.0;
  double rate_p = 0.0; // NaN on the first row
  double div_norm = 0.0;
  double err_u_volume = 0.0;
};

/// Fill the rate columns: r_i = [log e_i - log e_{i+1}] / [log h_i - log
/// h_{i+1}], attributed to the finer row; the first row gets NaN.  Throws
/// AnalysisError unless h is strictly decreasing.
std::vector<ConvergenceRecord> rates(std::vector<ConvergenceRecord> rows);

/// Mesh ladder for a convergence study: cell counts multiply by 4 per level.
struct StudyOptions {
  MeshFamily family = MeshFamily::triangle;
  int base_cells = 64;
  int levels = 5;
  std::uint64_t seed = 0;
  Domain domain = Domain::rectangle(Vec2(0, 0), Vec2(1, 1));
  int order = 2;
  NitscheParams nitsche;  // zeroed -> defaults(order)
  bool parallel = true;
  BoundaryPlan plan;      // empty -> every boundary tag Dirichlet
};

/// Solve the manufactured case on every level and tabulate errors and rates.
std::vector<ConvergenceRecord> convergence_study(const ManufacturedCase& mc,
                                                 const StudyOptions& opt);

/// Re-run the study for several viscosities on identical meshes (one table
/// per value of nu, in order).  Values must lie in (0, 1].
std::vector<std::vector<ConvergenceRecord>> nu_sweep(const ManufacturedCase& mc,
                                                     const StudyOptions& opt,
                                                     const std::vector<double>& nus);

} // namespace brinkvem
