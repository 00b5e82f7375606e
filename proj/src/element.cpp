#include "brinkvem/element.hpp"

#include <cmath>

namespace brinkvem {

namespace {

int checked_order(int cell, int order) {
  if (order < 2)
    throw ElementError("cell " + std::to_string(cell) +
                       ": velocity space requires order k >= 2, got k = " +
                       std::to_string(order));
  return order;
}

void check_material(int cell, const Material& mat) {
  const Eigen::Matrix2d& A = mat.kinv;
  const double scale = A.norm();
  if ((A - A.transpose()).norm() > 1e-12 * std::max(scale, 1.0))
    throw ElementError("cell " + std::to_string(cell) + ": permeability tensor not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw ElementError("cell " + std::to_string(cell) + ": permeability tensor not SPD");
  if (!(mat.nu > 0.0) || mat.nu > 1.0)
    throw ElementError("cell " + std::to_string(cell) +
                       ": viscosity must lie in (0, 1], got " + std::to_string(mat.nu));
}

} // namespace

ElementKernel::ElementKernel(const PolygonalMesh& mesh, int cell, int order,
                             const Material& mat)
    : cell_(cell),
      order_(checked_order(cell, order)),
      mat_(mat),
      verts_(mesh.cell_vertices(cell)),
      centroid_(mesh.geometry(cell).centroid),
      area_(mesh.geometry(cell).area),
      h_(mesh.geometry(cell).diameter),
      mon_k_(order_, centroid_, h_),
      mon_km1_(order_ - 1, centroid_, h_),
      mon_kp1_(order_ + 1, centroid_, h_) {
  check_material(cell_, mat_);

  const int k = order_;
  const int ne = static_cast<int>(verts_.size());
  const int nk = ScaledMonomials::dim(k);
  const int nk1 = ScaledMonomials::dim(k - 1);
  const int nkm2 = ScaledMonomials::dim(k - 2);
  const int nkp1 = ScaledMonomials::dim(k + 1);

  layout_.order = k;
  layout_.n_edges = ne;
  layout_.n_comp = ScaledMonomials::dim(k - 3);
  layout_.n_div = nk1 - 1;
  layout_.n_velocity = 2 * ne * k + layout_.n_comp + layout_.n_div;
  layout_.n_pressure = nk1;
  const int ndof = layout_.n_velocity;

  edge_len_.resize(ne);
  edge_n_.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const Vec2 t = verts_[(e + 1) % ne] - verts_[e];
    edge_len_[e] = t.norm();
    edge_n_[e] = Vec2(t.y(), -t.x()) / edge_len_[e];
  }
  gl_nodes_ = gauss_lobatto(k + 1);

  rule_ = polygon_rule(verts_, mesh.geometry(cell).star, 2 * k + 2);

  // Gram matrix of the scaled monomials up to order k+1
  Hbig_.setZero(nkp1, nkp1);
  for (const auto& q : rule_) {
    const Eigen::VectorXd m = mon_kp1_.eval_all(q.x);
    Hbig_.noalias() += q.w * m * m.transpose();
  }
  Hk_ = Hbig_.topLeftCorner(nk, nk);
  Hkm1_ = Hbig_.topLeftCorner(nk1, nk1);

  // boundary integrals of traces against monomial data
  Eigen::MatrixXd Bn, Bgrad, Beps;
  build_edge_integrals(Bn, Bgrad, Beps);

  // --- exact divergence --------------------------------------------------
  // div v in P_{k-1}: the zero-mean moments are DOFs, the mean comes from
  // the boundary flux.
  {
    Eigen::MatrixXd Adiv(nk1, nk1);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(nk1, ndof);
    Adiv.row(0) = Hkm1_.row(0);
    R.row(0) = Bn.row(0);
    for (int i = 1; i < nk1; ++i) {
      const double avg = Hkm1_(0, i) / area_;
      Adiv.row(i) = Hkm1_.col(i).transpose() - avg * Hkm1_.col(0).transpose();
      R(i, layout_.div_dof(i - 1)) = area_ / h_;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Adiv);
    const Eigen::VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
    if (piv.minCoeff() < 1e-12 * piv.maxCoeff())
      throw ElementError("cell " + std::to_string(cell_) +
                         ": singular divergence system (degenerate geometry)");
    div_ = lu.solve(R);
  }
  const Eigen::MatrixXd HD = Hkm1_ * div_; // rows: int (div v) m_g, g < nk1

  // --- raw moments up to order k-2 ---------------------------------------
  // Split basis of [P_{k-2}]^2: moments of the gradient part follow from the
  // divergence theorem, the complement part are DOFs.
  {
    VectorPolySplit split_low(k - 2, centroid_, h_);
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(2 * nkm2, ndof);
    for (int g = 1; g < nk1; ++g)
      mu.row(g - 1) = h_ * (Bn.row(g) - HD.row(g));
    for (int j = 0; j < layout_.n_comp; ++j)
      mu(split_low.dim_grad() + j, layout_.comp_dof(j)) = area_;
    moments_low_ = split_low.to_raw().transpose().partialPivLu().solve(mu);
  }

  // --- energy projector --------------------------------------------------
  const Eigen::MatrixXd Dx = mon_k_.deriv_x();
  const Eigen::MatrixXd Dy = mon_k_.deriv_y();
  {
    const Eigen::MatrixXd Ks =
        Dx.transpose() * Hkm1_ * Dx + Dy.transpose() * Hkm1_ * Dy;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * nk, 2 * nk);
    G.topLeftCorner(nk, nk) = Ks;
    G.bottomRightCorner(nk, nk) = Ks;

    const Eigen::MatrixXd Lap = mon_km1_.deriv_x() * Dx + mon_km1_.deriv_y() * Dy;
    Eigen::MatrixXd b(2 * nk, ndof);
    for (int c = 0; c < 2; ++c)
      b.middleRows(c * nk, nk) =
          Bgrad.middleRows(c * nk, nk) -
          Lap.transpose() * moments_low_.middleRows(c * nkm2, nkm2);

    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, 2 * nk);
    Eigen::MatrixXd d(2, ndof);
    for (int c = 0; c < 2; ++c) {
      C.block(c, c * nk, 1, nk) = Hk_.row(0);
      d.row(c) = moments_low_.row(c * nkm2);
    }
    p_nabla_ = solve_kkt(G, C, b, d, "energy projector");
  }

  // --- full moment matrix (enhancement) ----------------------------------
  VectorPolySplit split_k(k, centroid_, h_);
  {
    const Eigen::MatrixXd Hmix = Hbig_.topLeftCorner(nk1, nkp1);
    const Eigen::MatrixXd HDbig = Hmix.transpose() * div_;
    Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(2 * nk, ndof);
    for (int g = 1; g < nkp1; ++g)
      mu.row(g - 1) = h_ * (Bn.row(g) - HDbig.row(g));
    for (int j = 0; j < nk1; ++j) {
      const int r = split_k.dim_grad() + j;
      if (j < layout_.n_comp) {
        mu(r, layout_.comp_dof(j)) = area_;
      } else {
        // enhancement: moments against the high complement functions are
        // those of the energy projection
        const Eigen::VectorXd rj = split_k.to_raw().col(r);
        Eigen::VectorXd Hr(2 * nk);
        Hr.head(nk) = Hk_ * rj.head(nk);
        Hr.tail(nk) = Hk_ * rj.tail(nk);
        mu.row(r) = Hr.transpose() * p_nabla_;
      }
    }
    moments_ = split_k.to_raw().transpose().partialPivLu().solve(mu);
  }

  // --- L2 projectors ------------------------------------------------------
  {
    Eigen::LDLT<Eigen::MatrixXd> ldlt_k(Hk_);
    p_zero_k_.resize(2 * nk, ndof);
    p_zero_k_.topRows(nk) = ldlt_k.solve(moments_.topRows(nk));
    p_zero_k_.bottomRows(nk) = ldlt_k.solve(moments_.bottomRows(nk));

    Eigen::LDLT<Eigen::MatrixXd> ldlt_km1(Hkm1_);
    p_zero_km1_.resize(2 * nk1, ndof);
    p_zero_km1_.topRows(nk1) = ldlt_km1.solve(moments_.middleRows(0, nk1));
    p_zero_km1_.bottomRows(nk1) = ldlt_km1.solve(moments_.middleRows(nk, nk1));
  }

  // --- strain projector ---------------------------------------------------
  {
    const Eigen::MatrixXd XX = Dx.transpose() * Hkm1_ * Dx;
    const Eigen::MatrixXd YY = Dy.transpose() * Hkm1_ * Dy;
    const Eigen::MatrixXd YX = Dy.transpose() * Hkm1_ * Dx;
    Geps_.resize(2 * nk, 2 * nk);
    Geps_.topLeftCorner(nk, nk) = XX + 0.5 * YY;
    Geps_.topRightCorner(nk, nk) = 0.5 * YX;
    Geps_.bottomLeftCorner(nk, nk) = 0.5 * YX.transpose();
    Geps_.bottomRightCorner(nk, nk) = 0.5 * XX + YY;

    const Eigen::MatrixXd Dxx = mon_km1_.deriv_x() * Dx;
    const Eigen::MatrixXd Dyy = mon_km1_.deriv_y() * Dy;
    const Eigen::MatrixXd Dxy = mon_km1_.deriv_y() * Dx;
    const Eigen::MatrixXd Mx = moments_low_.topRows(nkm2);
    const Eigen::MatrixXd My = moments_low_.bottomRows(nkm2);
    Eigen::MatrixXd b(2 * nk, ndof);
    b.topRows(nk) = Beps.topRows(nk) - (Dxx + 0.5 * Dyy).transpose() * Mx -
                    0.5 * Dxy.transpose() * My;
    b.bottomRows(nk) = Beps.bottomRows(nk) - 0.5 * Dxy.transpose() * Mx -
                       (0.5 * Dxx + Dyy).transpose() * My;

    const int i01 = mon_k_.index(0, 1), i10 = mon_k_.index(1, 0);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3, 2 * nk);
    Eigen::MatrixXd d(3, ndof);
    for (int c = 0; c < 2; ++c) {
      C.block(c, c * nk, 1, nk) = Hk_.row(0);
      d.row(c) = moments_.row(c * nk);
    }
    C.block(2, 0, 1, nk) = Hk_.col(i01).transpose();
    C.block(2, nk, 1, nk) = -Hk_.col(i10).transpose();
    d.row(2) = moments_.row(i01) - moments_.row(nk + i10);
    p_eps_ = solve_kkt(Geps_, C, b, d, "strain projector");
  }

  // --- interpolation matrix (DOFs of raw basis polynomials) ---------------
  {
    interp_.setZero(ndof, 2 * nk);
    auto value_rows = [&](int dofx, int dofy, const Vec2& x) {
      const Eigen::VectorXd m = mon_k_.eval_all(x);
      interp_.block(dofx, 0, 1, nk) = m.transpose();
      interp_.block(dofy, nk, 1, nk) = m.transpose();
    };
    for (int v = 0; v < ne; ++v)
      value_rows(layout_.vertex_dof(v, 0), layout_.vertex_dof(v, 1), verts_[v]);
    for (int e = 0; e < ne; ++e)
      for (int j = 0; j < k - 1; ++j)
        value_rows(layout_.edge_dof(e, j, 0), layout_.edge_dof(e, j, 1),
                   edge_point(e, gl_nodes_[j + 1]));
    for (int j = 0; j < layout_.n_comp; ++j) {
      const Eigen::VectorXd rj = split_k.to_raw().col(split_k.dim_grad() + j);
      interp_.block(layout_.comp_dof(j), 0, 1, nk) =
          (Hk_ * rj.head(nk)).transpose() / area_;
      interp_.block(layout_.comp_dof(j), nk, 1, nk) =
          (Hk_ * rj.tail(nk)).transpose() / area_;
    }
    if (layout_.n_div > 0) {
      Eigen::MatrixXd Q(nk1, layout_.n_div);
      for (int i = 1; i < nk1; ++i)
        Q.col(i - 1) = Hkm1_.col(i) - (Hkm1_(0, i) / area_) * Hkm1_.col(0);
      Eigen::MatrixXd Draw(nk1, 2 * nk);
      Draw.leftCols(nk) = Dx;
      Draw.rightCols(nk) = Dy;
      interp_.middleRows(layout_.div_dof(0), layout_.n_div) =
          (h_ / area_) * Q.transpose() * Draw;
    }
  }

  // --- stabilized local forms ---------------------------------------------
  {
    Eigen::MatrixXd Mpoly(2 * nk, 2 * nk);
    for (int c = 0; c < 2; ++c)
      for (int d2 = 0; d2 < 2; ++d2)
        Mpoly.block(c * nk, d2 * nk, nk, nk) = mat_.kinv(c, d2) * Hk_;
    const double mu_m = area_ * mat_.kinv.trace() / 2.0;
    const Eigen::MatrixXd D0 =
        Eigen::MatrixXd::Identity(ndof, ndof) - interp_ * p_zero_k_;
    S0_ = mu_m * D0.transpose() * D0;
    Mh_ = p_zero_k_.transpose() * Mpoly * p_zero_k_ + S0_;
    Mh_ = 0.5 * (Mh_ + Mh_.transpose()).eval();

    const Eigen::MatrixXd De =
        Eigen::MatrixXd::Identity(ndof, ndof) - interp_ * p_eps_;
    Seps_ = mat_.nu * De.transpose() * De;
    Ah_ = mat_.nu * p_eps_.transpose() * Geps_ * p_eps_ + Seps_;
    Ah_ = 0.5 * (Ah_ + Ah_.transpose()).eval();

    B_ = -(Hkm1_ * div_);
  }
}

void ElementKernel::build_edge_integrals(Eigen::MatrixXd& Bn, Eigen::MatrixXd& Bgrad,
                                         Eigen::MatrixXd& Beps) const {
  const int k = order_;
  const int ne = layout_.n_edges;
  const int nk = ScaledMonomials::dim(k);
  const int nkp1 = ScaledMonomials::dim(k + 1);
  const int ndof = layout_.n_velocity;
  Bn.setZero(nkp1, ndof);
  Bgrad.setZero(2 * nk, ndof);
  Beps.setZero(2 * nk, ndof);

  std::vector<double> gn, gw;
  gauss_legendre(k + 2, gn, gw);

  for (int e = 0; e < ne; ++e) {
    const Vec2& n = edge_n_[e];
    for (size_t q = 0; q < gn.size(); ++q) {
      const double s = gn[q];
      const double w = gw[q] * edge_len_[e];
      const Vec2 x = edge_point(e, s);
      const Eigen::VectorXd m = mon_kp1_.eval_all(x);
      const Eigen::VectorXd L = edge_lagrange(s);
      Eigen::VectorXd gnrm(nk);
      Eigen::MatrixXd tn(2, 2 * nk); // eps(m_b e_c) n as columns (c, b)
      for (int b = 0; b < nk; ++b) {
        const Vec2 g = mon_k_.grad(b, x);
        gnrm[b] = g.dot(n);
        tn(0, b) = g.x() * n.x() + 0.5 * g.y() * n.y();
        tn(1, b) = 0.5 * g.y() * n.x();
        tn(0, nk + b) = 0.5 * g.x() * n.y();
        tn(1, nk + b) = 0.5 * g.x() * n.x() + g.y() * n.y();
      }
      for (int node = 0; node <= k; ++node) {
        const double wl = w * L[node];
        for (int c = 0; c < 2; ++c) {
          const int dof = edge_node_dof(e, node, c);
          Bn.col(dof) += (wl * n[c]) * m;
          Bgrad.block(c * nk, dof, nk, 1) += wl * gnrm;
          for (int cb = 0; cb < 2; ++cb)
            Beps.block(cb * nk, dof, nk, 1) +=
                wl * tn.row(c).segment(cb * nk, nk).transpose();
        }
      }
    }
  }
}

Eigen::MatrixXd ElementKernel::solve_kkt(const Eigen::MatrixXd& G,
                                         const Eigen::MatrixXd& C,
                                         const Eigen::MatrixXd& b,
                                         const Eigen::MatrixXd& d, const char* what) {
  const int N = static_cast<int>(G.rows());
  const int nc = static_cast<int>(C.rows());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N + nc, N + nc);
  M.topLeftCorner(N, N) = G;
  M.topRightCorner(N, nc) = C.transpose();
  M.bottomLeftCorner(nc, N) = C;
  Eigen::MatrixXd rhs(N + nc, b.cols());
  rhs.topRows(N) = b;
  rhs.bottomRows(nc) = d;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const Eigen::VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
  if (piv.minCoeff() < 1e-12 * piv.maxCoeff())
    throw ElementError("cell " + std::to_string(cell_) + ": singular " +
                       std::string(what) + " system (degenerate geometry)");
  // Cheap conditioning estimate from the pivot spread; an exact SVD here
  // would dominate the whole kernel build.
  kkt_condition_ = std::max(kkt_condition_, piv.maxCoeff() / piv.minCoeff());
  return lu.solve(rhs).topRows(N);
}

int ElementKernel::edge_node_dof(int e, int node, int comp) const {
  if (node == 0) return layout_.vertex_dof(e, comp);
  if (node == order_) return layout_.vertex_dof((e + 1) % layout_.n_edges, comp);
  return layout_.edge_dof(e, node - 1, comp);
}

Eigen::VectorXd ElementKernel::edge_lagrange(double s) const {
  const int n = static_cast<int>(gl_nodes_.size());
  Eigen::VectorXd L(n);
  for (int j = 0; j < n; ++j) {
    double v = 1.0;
    for (int i = 0; i < n; ++i)
      if (i != j) v *= (s - gl_nodes_[i]) / (gl_nodes_[j] - gl_nodes_[i]);
    L[j] = v;
  }
  return L;
}

Eigen::MatrixXd ElementKernel::edge_trace(int e, double s) const {
  Eigen::MatrixXd Tr = Eigen::MatrixXd::Zero(2, layout_.n_velocity);
  const Eigen::VectorXd L = edge_lagrange(s);
  for (int node = 0; node <= order_; ++node)
    for (int c = 0; c < 2; ++c) Tr(c, edge_node_dof(e, node, c)) = L[node];
  return Tr;
}

Eigen::MatrixXd ElementKernel::raw_eval(const Vec2& x) const {
  const int nk = mon_k_.size();
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2, 2 * nk);
  const Eigen::VectorXd m = mon_k_.eval_all(x);
  E.block(0, 0, 1, nk) = m.transpose();
  E.block(1, nk, 1, nk) = m.transpose();
  return E;
}

Eigen::MatrixXd ElementKernel::raw_eps_n(const Vec2& x, const Vec2& n) const {
  const int nk = mon_k_.size();
  Eigen::MatrixXd E(2, 2 * nk);
  for (int b = 0; b < nk; ++b) {
    const Vec2 g = mon_k_.grad(b, x);
    E(0, b) = g.x() * n.x() + 0.5 * g.y() * n.y();
    E(1, b) = 0.5 * g.y() * n.x();
    E(0, nk + b) = 0.5 * g.x() * n.y();
    E(1, nk + b) = 0.5 * g.x() * n.x() + g.y() * n.y();
  }
  return E;
}

Eigen::MatrixXd ElementKernel::raw_grad(const Vec2& x) const {
  const int nk = mon_k_.size();
  Eigen::MatrixXd Gr = Eigen::MatrixXd::Zero(4, 2 * nk);
  for (int b = 0; b < nk; ++b) {
    const Vec2 g = mon_k_.grad(b, x);
    Gr(0, b) = g.x();
    Gr(1, b) = g.y();
    Gr(2, nk + b) = g.x();
    Gr(3, nk + b) = g.y();
  }
  return Gr;
}

Eigen::VectorXd ElementKernel::load(const VectorField& f) const {
  const int nk1 = mon_km1_.size();
  Eigen::VectorXd fm = Eigen::VectorXd::Zero(2 * nk1);
  for (const auto& q : rule_) {
    const Vec2 fv = f(q.x);
    const Eigen::VectorXd m = mon_km1_.eval_all(q.x);
    fm.head(nk1) += (q.w * fv.x()) * m;
    fm.tail(nk1) += (q.w * fv.y()) * m;
  }
  return p_zero_km1_.transpose() * fm;
}

} // namespace brinkvem
