// Edge-level Nitsche terms for weak imposition of Dirichlet and slip
// boundary conditions, plus the free-outflow no-op, and the boundary
// condition table mapping mesh tags to conditions.
#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "brinkvem/element.hpp"

namespace brinkvem {

class NitscheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Penalty parameters; the defaults follow the gamma = 100 (k+1)^2 choice,
/// comfortably above the coercivity threshold.
struct NitscheParams {
  double gamma_d = 0.0;
  double gamma_n = 0.0;

  static NitscheParams defaults(int order) {
    const double g = 100.0 * (order + 1) * (order + 1);
    return {g, g};
  }
};

/// One boundary condition.  Dirichlet prescribes the full velocity g.
/// Slip prescribes the normal velocity through g1 (u.n = g1.n) and the
/// tangential traction through g2 ((nu eps(u) n).t = g2.t).  FreeOutflow is
/// the natural do-nothing condition (nu eps(u) - p I) n = 0.
struct BCondition {
  enum class Type { dirichlet, slip, free_outflow };
  Type type = Type::dirichlet;
  VectorField g;        // Dirichlet data
  VectorField g1, g2;   // slip data

  static BCondition dirichlet(VectorField g);
  static BCondition slip(VectorField g1, VectorField g2);
  static BCondition free_outflow();
};

/// Tag -> condition table covering every boundary tag of the mesh.
struct BoundarySpec {
  std::map<std::string, BCondition> by_tag;

  bool has(const std::string& tag) const { return by_tag.count(tag) != 0; }
  /// Throws NitscheError naming the missing tag and the known ones.
  const BCondition& condition(const std::string& tag) const;
};

/// Resolution of a global boundary edge to its unique cell and local index.
struct BoundaryEdgeRef {
  int cell = -1;
  int local_edge = -1;
};

/// Throws NitscheError if the edge is interior.
BoundaryEdgeRef locate_boundary_edge(const PolygonalMesh& mesh, int global_edge);

/// Edge contributions in the local DOF numbering of the owning cell.
/// S is the penalty form, Bm the consistency form (rows test v, columns
/// trial u; the assembled velocity block receives Bm + Bm^T), bq the
/// pressure-velocity edge coupling (rows pressure basis, columns velocity).
struct EdgeMatrices {
  Eigen::MatrixXd S;
  Eigen::MatrixXd Bm;
  Eigen::MatrixXd bq;
};

/// Dirichlet edge: S = gamma_D h_e^-1 oint u.v, Bm = -oint (nu eps(Pi_eps u) n).v,
/// bq = oint q n.v.
EdgeMatrices edge_forms_dirichlet(const PolygonalMesh& mesh, const ElementKernel& K,
                                  int global_edge, const NitscheParams& par);

/// Slip edge: the same three forms restricted to normal components.
EdgeMatrices edge_forms_slip(const PolygonalMesh& mesh, const ElementKernel& K,
                             int global_edge, const NitscheParams& par);

/// Right-hand-side contributions of inhomogeneous Dirichlet or slip data.
/// FreeOutflow returns zeros.
struct EdgeRhs {
  Eigen::VectorXd F; // velocity load, size ndof
  Eigen::VectorXd G; // continuity load, size npressure
};

EdgeRhs edge_rhs(const PolygonalMesh& mesh, const ElementKernel& K, int global_edge,
                 const BCondition& cond, const NitscheParams& par);

/// oint_e u.v over the edge trace (for the discrete 1/2-norms and error
/// terms); h_e^-1-weighted sums of these give ||.||_{1/2,h,D}^2.
Eigen::MatrixXd edge_mass(const ElementKernel& K, int local_edge);
/// oint_e (u.n)(v.n).
Eigen::MatrixXd edge_normal_mass(const ElementKernel& K, int local_edge);

} // namespace brinkvem
