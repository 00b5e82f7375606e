// Global DOF numbering, assembly of the saddle-point system (volume forms
// plus Nitsche edge terms), the zero-mean pressure constraint, the sparse
// direct solve, and numerical stability probes.
#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>

#include "brinkvem/nitsche.hpp"

namespace brinkvem {

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cell index + centroid -> material data; lets configs override the
/// permeability region-wise.
using MaterialField = std::function<Material(int cell, const Vec2& centroid)>;

/// Deterministic global numbering: vertex values first (2 per mesh vertex),
/// then edge-interior values (2(k-1) per mesh edge, ordered along the
/// canonical a->b direction of each edge), then cell moments cell-major.
/// Pressure coefficients follow cell-major after all velocity DOFs.
class DofNumbering {
 public:
  DofNumbering() = default;
  DofNumbering(const PolygonalMesh& mesh, int order);

  int order() const { return order_; }
  int velocity_dofs() const { return n_velocity_; }
  int pressure_dofs() const { return n_pressure_; }
  int pressure_per_cell() const { return npc_; }

  /// Global velocity DOF indices of cell `c` in local kernel order.
  const std::vector<int>& cell_dofs(int c) const { return cell_dofs_[c]; }
  /// First global pressure index of cell `c` (within the pressure block).
  int pressure_base(int c) const { return npc_ * c; }

  /// Gather the local velocity DOF vector of a cell from a global vector.
  Eigen::VectorXd gather(int c, const Eigen::VectorXd& u) const;

 private:
  int order_ = 0;
  int n_velocity_ = 0;
  int n_pressure_ = 0;
  int npc_ = 0;
  std::vector<std::vector<int>> cell_dofs_;
};

struct AssemblyOptions {
  NitscheParams nitsche;    // zeroed gammas -> defaults(order)
  bool parallel = true;     // OpenMP element loop (serial path kept for reference)
};

/// Assembled saddle-point system.  A is the full velocity block
/// (m_h + a_h including every Nitsche velocity term), B the coupling block
/// (b^K plus the pressure edge terms), mean_row the vector of pressure-basis
/// cell integrals bordering the system when no free-outflow edge fixes the
/// pressure level.
struct SaddleSystem {
  DofNumbering numbering;
  Eigen::SparseMatrix<double> A;
  Eigen::SparseMatrix<double> B;
  Eigen::VectorXd F, G;
  Eigen::VectorXd mean_row;
  bool mean_constrained = true;
};

SaddleSystem assemble(const PolygonalMesh& mesh, int order, const MaterialField& material,
                      const VectorField& f, const BoundarySpec& bc,
                      const AssemblyOptions& opts = {});

/// Discrete solution: global DOF vectors plus bookkeeping to rebuild
/// per-cell polynomial views on demand.
struct DiscreteSolution {
  Eigen::VectorXd u; // velocity DOFs
  Eigen::VectorXd p; // pressure coefficients (cell-major, scaled monomials)
  double residual = 0.0;
  bool mean_constrained = true;
};

DiscreteSolution solve(const SaddleSystem& sys);

/// Per-cell polynomial views of a solution (coefficient vectors in the
/// cell's scaled monomial bases).
struct CellView {
  Eigen::VectorXd dofs;      // local velocity DOFs
  Eigen::VectorXd u_eps;     // Pi^eps u_h, raw [P_k]^2 coefficients
  Eigen::VectorXd u_zero;    // Pi^{0,k} u_h
  Eigen::VectorXd div;       // div u_h in the order k-1 basis
  Eigen::VectorXd pressure;  // p_h in the order k-1 basis
};

CellView cell_view(const ElementKernel& K, const DofNumbering& numbering,
                   const DiscreteSolution& sol);

/// Mean of the pressure over the mesh (for the zero-mean invariant).
double pressure_mean(const PolygonalMesh& mesh, const DofNumbering& numbering,
                     const Eigen::VectorXd& p);

// --- stability probes -----------------------------------------------------

/// Sampled lower bounds behind the well-posedness lemmas: positivity of
/// m_h + a_h and the coercivity margin of a_h against
/// 0.25 (nu ||eps Pi^eps .||^2 + gamma-weighted boundary terms).
struct CoercivityReport {
  double min_quadratic = 0.0; // min over samples of (m_h + a_h)(v, v)
  double min_margin = 0.0;    // min over samples of a_h(v,v) / reference
};

CoercivityReport coercivity_probe(const PolygonalMesh& mesh, int order,
                                  const MaterialField& material, const BoundarySpec& bc,
                                  const NitscheParams& params, int samples = 100,
                                  unsigned seed = 0x5eed);

/// Discrete inf-sup constant: smallest generalized singular value of the
/// coupling block, velocity normalized by the mesh-dependent norm matrix and
/// pressure by its L2 mass; the constant-pressure kernel mode is skipped
/// when present.
double infsup_probe(const PolygonalMesh& mesh, int order, const MaterialField& material,
                    const BoundarySpec& bc, const NitscheParams& params);

} // namespace brinkvem
