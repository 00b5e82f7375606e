#include "brinkvem/nitsche.hpp"

namespace brinkvem {

BCondition BCondition::dirichlet(VectorField g) {
  BCondition c;
  c.type = Type::dirichlet;
  c.g = std::move(g);
  return c;
}

BCondition BCondition::slip(VectorField g1, VectorField g2) {
  BCondition c;
  c.type = Type::slip;
  c.g1 = std::move(g1);
  c.g2 = std::move(g2);
  return c;
}

BCondition BCondition::free_outflow() {
  BCondition c;
  c.type = Type::free_outflow;
  return c;
}

const BCondition& BoundarySpec::condition(const std::string& tag) const {
  auto it = by_tag.find(tag);
  if (it == by_tag.end()) {
    std::string known;
    for (const auto& [name, cond] : by_tag) {
      (void)cond;
      known += known.empty() ? name : ", " + name;
    }
    throw NitscheError("no boundary condition for tag '" + tag + "' (conditions given for: " +
                       (known.empty() ? "<none>" : known) + ")");
  }
  return it->second;
}

BoundaryEdgeRef locate_boundary_edge(const PolygonalMesh& mesh, int global_edge) {
  if (global_edge < 0 || global_edge >= mesh.num_edges())
    throw NitscheError("edge index " + std::to_string(global_edge) + " out of range");
  const MeshEdge& me = mesh.edges()[global_edge];
  if (me.boundary_index < 0)
    throw NitscheError("edge " + std::to_string(global_edge) +
                       " is interior; Nitsche terms apply to boundary edges only");
  // the owning cell may traverse the canonical a->b edge in either direction
  const int cell = me.cell_in >= 0 ? me.cell_in : me.cell_out;
  const auto& loc = mesh.cell_edge_indices(cell);
  for (int e = 0; e < static_cast<int>(loc.size()); ++e)
    if (loc[e] == global_edge) return {cell, e};
  throw NitscheError("edge table inconsistent at edge " + std::to_string(global_edge));
}

namespace {

int resolve_local(const PolygonalMesh& mesh, const ElementKernel& K, int global_edge) {
  const BoundaryEdgeRef ref = locate_boundary_edge(mesh, global_edge);
  if (ref.cell != K.cell())
    throw NitscheError("edge " + std::to_string(global_edge) + " belongs to cell " +
                       std::to_string(ref.cell) + ", kernel is for cell " +
                       std::to_string(K.cell()));
  return ref.local_edge;
}

struct EdgeQuad {
  std::vector<double> s, w; // parameters in [0,1] and weights scaled by length
};

EdgeQuad edge_quadrature(const ElementKernel& K, int e) {
  EdgeQuad q;
  gauss_legendre(K.order() + 2, q.s, q.w);
  for (auto& w : q.w) w *= K.edge_length(e);
  return q;
}

} // namespace

EdgeMatrices edge_forms_dirichlet(const PolygonalMesh& mesh, const ElementKernel& K,
                                  int global_edge, const NitscheParams& par) {
  const int e = resolve_local(mesh, K, global_edge);
  const int n = K.ndof();
  const Vec2& nrm = K.edge_normal(e);
  const double he_inv = 1.0 / K.edge_length(e);
  const double nu = K.material().nu;
  EdgeMatrices out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n),
                   Eigen::MatrixXd::Zero(K.npressure(), n)};
  const EdgeQuad q = edge_quadrature(K, e);
  for (size_t i = 0; i < q.s.size(); ++i) {
    const Vec2 x = K.edge_point(e, q.s[i]);
    const Eigen::MatrixXd Tr = K.edge_trace(e, q.s[i]);
    const Eigen::MatrixXd tr_eps = nu * (K.raw_eps_n(x, nrm) * K.p_eps()); // 2 x ndof
    out.S.noalias() += (par.gamma_d * he_inv * q.w[i]) * Tr.transpose() * Tr;
    out.Bm.noalias() -= q.w[i] * Tr.transpose() * tr_eps;
    out.bq.noalias() += q.w[i] * K.pressure_eval(x) * (nrm.transpose() * Tr);
  }
  return out;
}

EdgeMatrices edge_forms_slip(const PolygonalMesh& mesh, const ElementKernel& K,
                             int global_edge, const NitscheParams& par) {
  const int e = resolve_local(mesh, K, global_edge);
  const int n = K.ndof();
  const Vec2& nrm = K.edge_normal(e);
  const double he_inv = 1.0 / K.edge_length(e);
  const double nu = K.material().nu;
  EdgeMatrices out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n),
                   Eigen::MatrixXd::Zero(K.npressure(), n)};
  const EdgeQuad q = edge_quadrature(K, e);
  for (size_t i = 0; i < q.s.size(); ++i) {
    const Vec2 x = K.edge_point(e, q.s[i]);
    const Eigen::MatrixXd Tr = K.edge_trace(e, q.s[i]);
    const Eigen::RowVectorXd vn = nrm.transpose() * Tr;                     // 1 x ndof
    const Eigen::RowVectorXd tn =
        nu * (nrm.transpose() * (K.raw_eps_n(x, nrm) * K.p_eps()));          // 1 x ndof
    out.S.noalias() += (par.gamma_n * he_inv * q.w[i]) * vn.transpose() * vn;
    out.Bm.noalias() -= q.w[i] * vn.transpose() * tn;
    out.bq.noalias() += q.w[i] * K.pressure_eval(x) * vn;
  }
  return out;
}

EdgeRhs edge_rhs(const PolygonalMesh& mesh, const ElementKernel& K, int global_edge,
                 const BCondition& cond, const NitscheParams& par) {
  const int e = resolve_local(mesh, K, global_edge);
  EdgeRhs out{Eigen::VectorXd::Zero(K.ndof()), Eigen::VectorXd::Zero(K.npressure())};
  if (cond.type == BCondition::Type::free_outflow) return out;

  const Vec2& nrm = K.edge_normal(e);
  const Vec2 tang(-nrm.y(), nrm.x());
  const double he_inv = 1.0 / K.edge_length(e);
  const double nu = K.material().nu;
  const EdgeQuad q = edge_quadrature(K, e);
  for (size_t i = 0; i < q.s.size(); ++i) {
    const Vec2 x = K.edge_point(e, q.s[i]);
    const Eigen::MatrixXd Tr = K.edge_trace(e, q.s[i]);
    const Eigen::MatrixXd tr_eps = nu * (K.raw_eps_n(x, nrm) * K.p_eps());
    if (cond.type == BCondition::Type::dirichlet) {
      const Vec2 g = cond.g(x);
      out.F.noalias() += (par.gamma_d * he_inv * q.w[i]) * Tr.transpose() * g;
      out.F.noalias() -= q.w[i] * tr_eps.transpose() * g;
      out.G.noalias() += (q.w[i] * g.dot(nrm)) * K.pressure_eval(x);
    } else {
      const double g1n = cond.g1(x).dot(nrm);
      const double g2t = cond.g2(x).dot(tang);
      const Eigen::RowVectorXd vn = nrm.transpose() * Tr;
      const Eigen::RowVectorXd vt = tang.transpose() * Tr;
      const Eigen::RowVectorXd tn = nrm.transpose() * tr_eps;
      out.F.noalias() += (par.gamma_n * he_inv * q.w[i] * g1n) * vn.transpose();
      out.F.noalias() -= (q.w[i] * g1n) * tn.transpose();
      out.F.noalias() += (q.w[i] * g2t) * vt.transpose();
      out.G.noalias() += (q.w[i] * g1n) * K.pressure_eval(x);
    }
  }
  return out;
}

Eigen::MatrixXd edge_mass(const ElementKernel& K, int local_edge) {
  const int n = K.ndof();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const EdgeQuad q = edge_quadrature(K, local_edge);
  for (size_t i = 0; i < q.s.size(); ++i) {
    const Eigen::MatrixXd Tr = K.edge_trace(local_edge, q.s[i]);
    M.noalias() += q.w[i] * Tr.transpose() * Tr;
  }
  return M;
}

Eigen::MatrixXd edge_normal_mass(const ElementKernel& K, int local_edge) {
  const int n = K.ndof();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const Vec2& nrm = K.edge_normal(local_edge);
  const EdgeQuad q = edge_quadrature(K, local_edge);
  for (size_t i = 0; i < q.s.size(); ++i) {
    const Eigen::RowVectorXd vn = nrm.transpose() * K.edge_trace(local_edge, q.s[i]);
    M.noalias() += q.w[i] * vn.transpose() * vn;
  }
  return M;
}

} // namespace brinkvem
