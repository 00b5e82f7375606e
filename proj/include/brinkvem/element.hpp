// Per-cell kernel of the divergence-conforming virtual element method:
// DOF layout of the enhanced velocity space V_h^k(K) and the P_{k-1}
// pressure space, the computable projection matrices, and the stabilized
// local bilinear forms and load vector.
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "brinkvem/mesh.hpp"
#include "brinkvem/polyspace.hpp"

namespace brinkvem {

class ElementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cell-constant material data: inverse permeability tensor and viscosity.
struct Material {
  Eigen::Matrix2d kinv = Eigen::Matrix2d::Identity();
  double nu = 1.0;
};

using VectorField = std::function<Vec2(const Vec2&)>;

/// Ordered local velocity DOFs of one cell:
///   [0, 2 ne)                   x/y values at the ne vertices (CCW),
///   [2 ne, 2 ne k)              x/y values at the k-1 interior Gauss-Lobatto
///                               points of each edge, edges CCW,
///   then  n_comp = dim P_{k-3}  scaled moments (1/|K|) int v . (x_perp m_j),
///   then  n_div  = dim P_{k-1} - 1  scaled moments (h/|K|) int (div v) q_j
///                               against the zero-mean monomials
///                               q_j = m_j - avg(m_j), j >= 1.
struct DofLayout {
  int order = 0;
  int n_edges = 0;
  int n_comp = 0;
  int n_div = 0;
  int n_velocity = 0;
  int n_pressure = 0;

  int vertex_dof(int v, int comp) const { return 2 * v + comp; }
  int edge_dof(int e, int point, int comp) const {
    return 2 * n_edges + 2 * (e * (order - 1) + point) + comp;
  }
  int comp_dof(int j) const { return 2 * n_edges * order + j; }
  int div_dof(int j) const { return 2 * n_edges * order + n_comp + j; }
};

/// All per-cell matrices of the method.  Construction runs the full
/// computability chain (divergence -> grad projector -> enhanced moments ->
/// L2 and strain projectors -> stabilized forms); everything is immutable
/// afterwards and safe to use concurrently.
class ElementKernel {
 public:
  ElementKernel(const PolygonalMesh& mesh, int cell, int order, const Material& mat);

  int cell() const { return cell_; }
  int order() const { return order_; }
  const DofLayout& layout() const { return layout_; }
  int ndof() const { return layout_.n_velocity; }
  int npressure() const { return layout_.n_pressure; }

  double area() const { return area_; }
  double diameter() const { return h_; }
  const Vec2& centroid() const { return centroid_; }

  /// Scaled monomial bases of order k (velocity coefficients) and k-1
  /// (pressure coefficients, divergence coefficients).
  const ScaledMonomials& basis_k() const { return mon_k_; }
  const ScaledMonomials& basis_km1() const { return mon_km1_; }

  // --- projection matrices (raw component-major monomial coordinates) -----
  /// Energy projector onto [P_k]^2 fixed by volume averages.  2 n_k x ndof.
  const Eigen::MatrixXd& p_nabla() const { return p_nabla_; }
  /// Strain projector onto [P_k]^2 fixed against rigid motions.
  const Eigen::MatrixXd& p_eps() const { return p_eps_; }
  /// L2 projector onto [P_k]^2 (uses the enhancement moments).
  const Eigen::MatrixXd& p_zero_k() const { return p_zero_k_; }
  /// L2 projector onto [P_{k-1}]^2.  2 n_{k-1} x ndof.
  const Eigen::MatrixXd& p_zero_km1() const { return p_zero_km1_; }
  /// Exact divergence: coefficients of div v_h in the order k-1 basis.
  const Eigen::MatrixXd& divergence() const { return div_; }
  /// Moments int_K v . (m_b e_c) of every local shape function.  2 n_k x ndof.
  const Eigen::MatrixXd& moments() const { return moments_; }
  /// DOF vectors of the raw polynomial basis.  ndof x 2 n_k.
  const Eigen::MatrixXd& interp() const { return interp_; }
  /// Conditioning estimate (LU pivot spread) of the worst projection saddle
  /// system; a diagnostic for degenerate cell geometry.
  double projection_condition() const { return kkt_condition_; }

  // --- local forms ---------------------------------------------------------
  const Eigen::MatrixXd& Mh() const { return Mh_; }
  const Eigen::MatrixXd& Ah() const { return Ah_; }
  const Eigen::MatrixXd& S0() const { return S0_; }
  const Eigen::MatrixXd& Seps() const { return Seps_; }
  /// Pressure-velocity coupling b^K(phi_j, m_i) = -int m_i div phi_j,
  /// npressure x ndof.
  const Eigen::MatrixXd& B() const { return B_; }
  /// Load F_i = int_K f . (Pi^{0,k-1} phi_i) by cell quadrature.
  Eigen::VectorXd load(const VectorField& f) const;

  /// Gram matrices of the scaled monomials (exact to quadrature degree).
  const Eigen::MatrixXd& gram_k() const { return Hk_; }
  const Eigen::MatrixXd& gram_km1() const { return Hkm1_; }
  /// Unweighted strain stiffness int eps(m_a e_c):eps(m_b e_d).  2 n_k sq.
  const Eigen::MatrixXd& gram_eps() const { return Geps_; }

  const Material& material() const { return mat_; }
  const std::vector<QuadNode>& cell_rule() const { return rule_; }

  // --- edge machinery ------------------------------------------------------
  int num_edges() const { return layout_.n_edges; }
  const Vec2& edge_vertex(int e, int end) const {
    return verts_[(e + end) % verts_.size()];
  }
  double edge_length(int e) const { return edge_len_[e]; }
  /// Outward unit normal of local edge e.
  const Vec2& edge_normal(int e) const { return edge_n_[e]; }
  Vec2 edge_point(int e, double s) const {
    return edge_vertex(e, 0) + s * (edge_vertex(e, 1) - edge_vertex(e, 0));
  }
  /// Local DOF of the Lagrange node `node` (0..k) along edge e, component c.
  int edge_node_dof(int e, int node, int comp) const;
  /// Parameters of the k+1 Gauss-Lobatto trace nodes in [0,1].
  const std::vector<double>& edge_nodes() const { return gl_nodes_; }
  /// Values of the k+1 edge Lagrange polynomials at parameter s.
  Eigen::VectorXd edge_lagrange(double s) const;
  /// Trace matrix at (e, s): row c maps local DOFs to component c of v_h.
  Eigen::MatrixXd edge_trace(int e, double s) const;

  // --- pointwise polynomial evaluation helpers -----------------------------
  /// 2 x 2 n_k matrix evaluating a raw coefficient vector at x.
  Eigen::MatrixXd raw_eval(const Vec2& x) const;
  /// 2 x 2 n_k matrix giving eps(.)n at x of a raw coefficient vector.
  Eigen::MatrixXd raw_eps_n(const Vec2& x, const Vec2& n) const;
  /// 2 x 2 n_k matrix giving the full gradient row [dx v_c, dy v_c] stacked:
  /// returns 4 x 2 n_k (rows: dx vx, dy vx, dx vy, dy vy).
  Eigen::MatrixXd raw_grad(const Vec2& x) const;
  /// Values of the pressure basis at x.
  Eigen::VectorXd pressure_eval(const Vec2& x) const { return mon_km1_.eval_all(x); }

 private:
  void build_edge_integrals(Eigen::MatrixXd& Bn, Eigen::MatrixXd& Bgrad,
                            Eigen::MatrixXd& Beps) const;
  Eigen::MatrixXd solve_kkt(const Eigen::MatrixXd& G, const Eigen::MatrixXd& C,
                            const Eigen::MatrixXd& b, const Eigen::MatrixXd& d,
                            const char* what);

  int cell_;
  int order_;
  Material mat_;
  std::vector<Vec2> verts_;
  Vec2 centroid_;
  double area_;
  double h_;
  DofLayout layout_;

  ScaledMonomials mon_k_;
  ScaledMonomials mon_km1_;
  ScaledMonomials mon_kp1_;
  std::vector<QuadNode> rule_;
  std::vector<double> edge_len_;
  std::vector<Vec2> edge_n_;
  std::vector<double> gl_nodes_;

  Eigen::MatrixXd Hbig_, Hk_, Hkm1_;
  Eigen::MatrixXd Geps_;
  Eigen::MatrixXd div_;
  Eigen::MatrixXd moments_low_; // raw moments up to order k-2
  Eigen::MatrixXd moments_;
  Eigen::MatrixXd p_nabla_, p_eps_, p_zero_k_, p_zero_km1_;
  Eigen::MatrixXd interp_;
  Eigen::MatrixXd Mh_, Ah_, S0_, Seps_, B_;
  double kkt_condition_ = 0.0;
};

} // namespace brinkvem
