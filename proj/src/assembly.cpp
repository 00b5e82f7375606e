#include "brinkvem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#ifdef BRINKVEM_WITH_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

namespace brinkvem {

DofNumbering::DofNumbering(const PolygonalMesh& mesh, int order) : order_(order) {
  const int k = order;
  const int nv = mesh.num_vertices();
  const int nedge = mesh.num_edges();
  const int ncell = mesh.num_cells();
  const int per_edge = 2 * (k - 1);
  const int n_comp = ScaledMonomials::dim(k - 3);
  const int n_div = ScaledMonomials::dim(k - 1) - 1;
  const int edge_base = 2 * nv;
  const int moment_base = edge_base + per_edge * nedge;
  n_velocity_ = moment_base + (n_comp + n_div) * ncell;
  npc_ = ScaledMonomials::dim(k - 1);
  n_pressure_ = npc_ * ncell;

  cell_dofs_.resize(ncell);
  for (int c = 0; c < ncell; ++c) {
    const auto& loop = mesh.cells()[c];
    const auto& eidx = mesh.cell_edge_indices(c);
    const int ne = static_cast<int>(loop.size());
    auto& dofs = cell_dofs_[c];
    dofs.resize(2 * ne * k + n_comp + n_div);
    for (int v = 0; v < ne; ++v) {
      dofs[2 * v] = 2 * loop[v];
      dofs[2 * v + 1] = 2 * loop[v] + 1;
    }
    for (int e = 0; e < ne; ++e) {
      const int ge = eidx[e];
      const bool forward = mesh.edges()[ge].cell_in == c;
      for (int j = 0; j < k - 1; ++j) {
        const int gj = forward ? j : (k - 2 - j);
        for (int comp = 0; comp < 2; ++comp)
          dofs[2 * ne + 2 * (e * (k - 1) + j) + comp] =
              edge_base + per_edge * ge + 2 * gj + comp;
      }
    }
    const int mb = moment_base + (n_comp + n_div) * c;
    for (int j = 0; j < n_comp + n_div; ++j) dofs[2 * ne * k + j] = mb + j;
  }
}

Eigen::VectorXd DofNumbering::gather(int c, const Eigen::VectorXd& u) const {
  const auto& dofs = cell_dofs_[c];
  Eigen::VectorXd out(dofs.size());
  for (size_t i = 0; i < dofs.size(); ++i) out[i] = u[dofs[i]];
  return out;
}

namespace {

struct CellContribution {
  std::vector<Eigen::Triplet<double>> a, b;
  std::vector<std::pair<int, double>> f, g;
  Eigen::VectorXd mean_piece; // pressure-basis integrals of this cell
  bool outflow = false;
};

NitscheParams effective_params(const AssemblyOptions& opts, int order) {
  NitscheParams par = opts.nitsche;
  if (par.gamma_d <= 0.0 || par.gamma_n <= 0.0) {
    const NitscheParams def = NitscheParams::defaults(order);
    if (par.gamma_d <= 0.0) par.gamma_d = def.gamma_d;
    if (par.gamma_n <= 0.0) par.gamma_n = def.gamma_n;
  }
  return par;
}

void check_boundary_tags(const PolygonalMesh& mesh, const BoundarySpec& bc) {
  for (const auto& be : mesh.boundary()) bc.condition(be.tag); // throws if missing
}

CellContribution cell_job(const PolygonalMesh& mesh, int c, int order,
                          const MaterialField& material, const VectorField& f,
                          const BoundarySpec& bc, const NitscheParams& par,
                          const DofNumbering& num) {
  const ElementKernel K(mesh, c, order, material(c, mesh.geometry(c).centroid));
  const int nloc = K.ndof();
  const int npc = K.npressure();

  Eigen::MatrixXd Aloc = K.Mh() + K.Ah();
  Eigen::MatrixXd Bloc = K.B();
  Eigen::VectorXd Floc = K.load(f);
  Eigen::VectorXd Gloc = Eigen::VectorXd::Zero(npc);

  CellContribution out;
  const auto& eidx = mesh.cell_edge_indices(c);
  for (int e = 0; e < static_cast<int>(eidx.size()); ++e) {
    const MeshEdge& me = mesh.edges()[eidx[e]];
    if (me.boundary_index < 0) continue;
    const BCondition& cond = bc.condition(mesh.boundary()[me.boundary_index].tag);
    if (cond.type == BCondition::Type::free_outflow) {
      out.outflow = true;
      continue;
    }
    const EdgeMatrices em = cond.type == BCondition::Type::dirichlet
                                ? edge_forms_dirichlet(mesh, K, eidx[e], par)
                                : edge_forms_slip(mesh, K, eidx[e], par);
    Aloc += em.S + em.Bm + em.Bm.transpose();
    Bloc += em.bq;
    const EdgeRhs rhs = edge_rhs(mesh, K, eidx[e], cond, par);
    Floc += rhs.F;
    Gloc += rhs.G;
  }

  const auto& dofs = num.cell_dofs(c);
  const int pb = num.pressure_base(c);
  out.a.reserve(size_t(nloc) * nloc);
  for (int i = 0; i < nloc; ++i)
    for (int j = 0; j < nloc; ++j)
      if (Aloc(i, j) != 0.0) out.a.emplace_back(dofs[i], dofs[j], Aloc(i, j));
  out.b.reserve(size_t(npc) * nloc);
  for (int i = 0; i < npc; ++i)
    for (int j = 0; j < nloc; ++j)
      if (Bloc(i, j) != 0.0) out.b.emplace_back(pb + i, dofs[j], Bloc(i, j));
  for (int i = 0; i < nloc; ++i)
    if (Floc[i] != 0.0) out.f.emplace_back(dofs[i], Floc[i]);
  for (int i = 0; i < npc; ++i)
    if (Gloc[i] != 0.0) out.g.emplace_back(pb + i, Gloc[i]);
  out.mean_piece = K.gram_km1().row(0).transpose();
  return out;
}

} // namespace

SaddleSystem assemble(const PolygonalMesh& mesh, int order, const MaterialField& material,
                      const VectorField& f, const BoundarySpec& bc,
                      const AssemblyOptions& opts) {
  check_boundary_tags(mesh, bc);
  SaddleSystem sys;
  sys.numbering = DofNumbering(mesh, order);
  const NitscheParams par = effective_params(opts, order);
  const int ncell = mesh.num_cells();

  std::vector<CellContribution> contrib(ncell);
  std::exception_ptr failure = nullptr;

  if (opts.parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int c = 0; c < ncell; ++c) {
      try {
        contrib[c] = cell_job(mesh, c, order, material, f, bc, par, sys.numbering);
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        if (!failure) failure = std::current_exception();
      }
    }
  } else {
    for (int c = 0; c < ncell; ++c)
      contrib[c] = cell_job(mesh, c, order, material, f, bc, par, sys.numbering);
  }
  if (failure) std::rethrow_exception(failure);

  // deterministic merge in cell order, independent of thread count
  const int nv = sys.numbering.velocity_dofs();
  const int np = sys.numbering.pressure_dofs();
  std::vector<Eigen::Triplet<double>> ta, tb;
  sys.F = Eigen::VectorXd::Zero(nv);
  sys.G = Eigen::VectorXd::Zero(np);
  sys.mean_row = Eigen::VectorXd::Zero(np);
  bool outflow = false;
  for (int c = 0; c < ncell; ++c) {
    auto& cc = contrib[c];
    ta.insert(ta.end(), cc.a.begin(), cc.a.end());
    tb.insert(tb.end(), cc.b.begin(), cc.b.end());
    for (const auto& [i, v] : cc.f) sys.F[i] += v;
    for (const auto& [i, v] : cc.g) sys.G[i] += v;
    sys.mean_row.segment(sys.numbering.pressure_base(c), cc.mean_piece.size()) =
        cc.mean_piece;
    outflow = outflow || cc.outflow;
  }
  sys.A.resize(nv, nv);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  sys.B.resize(np, nv);
  sys.B.setFromTriplets(tb.begin(), tb.end());
  sys.mean_constrained = !outflow;
  return sys;
}

namespace {

#ifdef BRINKVEM_WITH_UMFPACK
using DirectSolver = Eigen::UmfPackLU<Eigen::SparseMatrix<double>>;
#else
using DirectSolver = Eigen::SparseLU<Eigen::SparseMatrix<double>>;
#endif

} // namespace

DiscreteSolution solve(const SaddleSystem& sys) {
  const int nv = static_cast<int>(sys.A.rows());
  const int np = static_cast<int>(sys.B.rows());
  const int n = nv + np;
  // Appending the zero-mean constraint as a dense border row ruins the
  // fill-reducing ordering of sparse LU (and UMFPACK rejects it outright).
  // Instead one pressure gauge DOF is pinned in the factored matrix and the
  // bordered system is recovered exactly by block elimination: three solves
  // with the pinned matrix plus a 2x2 Schur system in (pinned DOF, multiplier).
  const int pin = sys.mean_constrained ? nv : -1;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(size_t(sys.A.nonZeros()) + 2 * size_t(sys.B.nonZeros()) + 1);
  for (int j = 0; j < sys.A.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, j); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                        it.value());
  for (int j = 0; j < sys.B.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.B, j); it; ++it) {
      const int r = nv + static_cast<int>(it.row());
      const int cc = static_cast<int>(it.col());
      if (r == pin) continue; // pinned row/column carries a unit diagonal only
      trip.emplace_back(r, cc, it.value());
      trip.emplace_back(cc, r, it.value());
    }
  if (pin >= 0) trip.emplace_back(pin, pin, 1.0);

  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());

  DirectSolver lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success)
    throw AssemblyError(
        "sparse factorization failed: the saddle system is singular or "
        "ill-conditioned (inspect the Nitsche penalty, boundary conditions and "
        "mesh quality)");

  Eigen::VectorXd b(n);
  b.head(nv) = sys.F;
  b.segment(nv, np) = sys.G;

  Eigen::VectorXd z;
  double lambda = 0.0;
  if (!sys.mean_constrained) {
    z = lu.solve(b);
  } else {
    // Bordered system: K0 z + m lambda = b, m'z = 0, with K0 the unpinned
    // saddle matrix and m the mean row embedded in the pressure block.
    // Split z_pin = alpha out of z; every remaining unknown solves against
    // the pinned matrix, and (alpha, lambda) solve a symmetric 2x2 system.
    Eigen::VectorXd bh = b;
    const double bpin = b[pin];
    bh[pin] = 0.0;
    Eigen::VectorXd kcol = Eigen::VectorXd::Zero(n); // column `pin` of K0
    for (int j = 0; j < sys.B.outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.B, j); it; ++it)
        if (nv + static_cast<int>(it.row()) == pin) kcol[it.col()] = it.value();
    Eigen::VectorXd mh = Eigen::VectorXd::Zero(n); // m without the pinned entry
    for (int i = 1; i < np; ++i) mh[nv + i] = sys.mean_row[i];
    const double mu = sys.mean_row[0];

    const Eigen::VectorXd yb = lu.solve(bh);
    const Eigen::VectorXd yk = lu.solve(kcol);
    const Eigen::VectorXd ym = lu.solve(mh);

    const double a11 = kcol.dot(yk);
    const double a12 = kcol.dot(ym) - mu;
    const double a21 = mh.dot(yk) - mu;
    const double a22 = mh.dot(ym);
    const double r1 = kcol.dot(yb) - bpin;
    const double r2 = mh.dot(yb);
    const double det = a11 * a22 - a12 * a21;
    const double scale = std::max({std::abs(a11), std::abs(a12), std::abs(a21),
                                   std::abs(a22), 1e-300});
    if (std::abs(det) <= 1e-100 * scale * scale)
      throw AssemblyError(
          "zero-mean pressure constraint is degenerate: the bordered Schur "
          "system is singular");
    const double alpha = (r1 * a22 - a12 * r2) / det;
    lambda = (a11 * r2 - r1 * a21) / det;
    z = yb - alpha * yk - lambda * ym;
    z[pin] = alpha;
  }

  DiscreteSolution sol;
  sol.u = z.head(nv);
  sol.p = z.segment(nv, np);
  sol.mean_constrained = sys.mean_constrained;
  // residual of the original (bordered) system, reported relative to the load
  Eigen::VectorXd rv = sys.A * sol.u - sys.F;
  rv += sys.B.transpose() * sol.p;
  Eigen::VectorXd rp = sys.B * sol.u - sys.G;
  double rl = 0.0;
  if (sys.mean_constrained) {
    rp += lambda * sys.mean_row;
    rl = sys.mean_row.dot(sol.p);
  }
  const double bn = std::sqrt(sys.F.squaredNorm() + sys.G.squaredNorm());
  sol.residual = std::sqrt(rv.squaredNorm() + rp.squaredNorm() + rl * rl) /
                 (bn > 0.0 ? bn : 1.0);
  return sol;
}

CellView cell_view(const ElementKernel& K, const DofNumbering& numbering,
                   const DiscreteSolution& sol) {
  CellView v;
  v.dofs = numbering.gather(K.cell(), sol.u);
  v.u_eps = K.p_eps() * v.dofs;
  v.u_zero = K.p_zero_k() * v.dofs;
  v.div = K.divergence() * v.dofs;
  v.pressure = sol.p.segment(numbering.pressure_base(K.cell()), K.npressure());
  return v;
}

double pressure_mean(const PolygonalMesh& mesh, const DofNumbering& numbering,
                     const Eigen::VectorXd& p) {
  const int k = numbering.order();
  double total = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& geom = mesh.geometry(c);
    ScaledMonomials mon(k - 1, geom.centroid, geom.diameter);
    const auto rule = polygon_rule(mesh.cell_vertices(c), geom.star, 2 * k + 2);
    const auto pc = p.segment(numbering.pressure_base(c), numbering.pressure_per_cell());
    for (const auto& q : rule) total += q.w * mon.eval_all(q.x).dot(pc);
  }
  return total / mesh.total_area();
}

// --- probes ---------------------------------------------------------------

namespace {

double uniform_pm1(std::mt19937_64& gen) {
  return 2.0 * ((gen() >> 11) * 0x1.0p-53) - 1.0;
}

} // namespace

CoercivityReport coercivity_probe(const PolygonalMesh& mesh, int order,
                                  const MaterialField& material, const BoundarySpec& bc,
                                  const NitscheParams& params, int samples,
                                  unsigned seed) {
  check_boundary_tags(mesh, bc);
  const DofNumbering num(mesh, order);
  const int nv = num.velocity_dofs();
  std::vector<Eigen::Triplet<double>> t_m, t_a, t_ref;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const ElementKernel K(mesh, c, order, material(c, mesh.geometry(c).centroid));
    Eigen::MatrixXd Aloc = K.Ah();
    Eigen::MatrixXd Ref =
        K.material().nu * K.p_eps().transpose() * K.gram_eps() * K.p_eps();
    const auto& eidx = mesh.cell_edge_indices(c);
    for (int e = 0; e < static_cast<int>(eidx.size()); ++e) {
      const MeshEdge& me = mesh.edges()[eidx[e]];
      if (me.boundary_index < 0) continue;
      const BCondition& cond = bc.condition(mesh.boundary()[me.boundary_index].tag);
      if (cond.type == BCondition::Type::free_outflow) continue;
      const bool dir = cond.type == BCondition::Type::dirichlet;
      const EdgeMatrices em = dir ? edge_forms_dirichlet(mesh, K, eidx[e], params)
                                  : edge_forms_slip(mesh, K, eidx[e], params);
      Aloc += em.S + em.Bm + em.Bm.transpose();
      Ref += em.S; // gamma-weighted boundary mass
    }
    const auto& dofs = num.cell_dofs(c);
    for (int i = 0; i < K.ndof(); ++i)
      for (int j = 0; j < K.ndof(); ++j) {
        if (K.Mh()(i, j) != 0.0) t_m.emplace_back(dofs[i], dofs[j], K.Mh()(i, j));
        if (Aloc(i, j) != 0.0) t_a.emplace_back(dofs[i], dofs[j], Aloc(i, j));
        if (Ref(i, j) != 0.0) t_ref.emplace_back(dofs[i], dofs[j], Ref(i, j));
      }
  }
  Eigen::SparseMatrix<double> M(nv, nv), A(nv, nv), Ref(nv, nv);
  M.setFromTriplets(t_m.begin(), t_m.end());
  A.setFromTriplets(t_a.begin(), t_a.end());
  Ref.setFromTriplets(t_ref.begin(), t_ref.end());

  std::mt19937_64 gen(seed);
  CoercivityReport rep;
  rep.min_quadratic = std::numeric_limits<double>::infinity();
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd v(nv);
    for (int i = 0; i < nv; ++i) v[i] = uniform_pm1(gen);
    v /= v.norm();
    const double q = v.dot(M * v) + v.dot(A * v);
    const double a = v.dot(A * v);
    const double ref = 0.25 * v.dot(Ref * v);
    rep.min_quadratic = std::min(rep.min_quadratic, q);
    if (ref > 0.0) rep.min_margin = std::min(rep.min_margin, a / ref);
  }
  return rep;
}

double infsup_probe(const PolygonalMesh& mesh, int order, const MaterialField& material,
                    const BoundarySpec& bc, const NitscheParams& params) {
  check_boundary_tags(mesh, bc);
  const DofNumbering num(mesh, order);
  const int nv = num.velocity_dofs();
  const int np = num.pressure_dofs();

  std::vector<Eigen::Triplet<double>> t_n, t_b, t_mp;
  bool outflow = false;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const ElementKernel K(mesh, c, order, material(c, mesh.geometry(c).centroid));
    const double nu = K.material().nu;
    // mesh-dependent velocity norm: K^{-1/2}, strain and divergence parts
    // (projection + stabilization) plus the 1/2-norm boundary terms
    Eigen::MatrixXd Nloc = K.Mh() + K.Ah() +
                           K.divergence().transpose() * K.gram_km1() * K.divergence();
    (void)nu;
    Eigen::MatrixXd Bloc = K.B();
    const auto& eidx = mesh.cell_edge_indices(c);
    for (int e = 0; e < static_cast<int>(eidx.size()); ++e) {
      const MeshEdge& me = mesh.edges()[eidx[e]];
      if (me.boundary_index < 0) continue;
      const BCondition& cond = bc.condition(mesh.boundary()[me.boundary_index].tag);
      if (cond.type == BCondition::Type::free_outflow) {
        outflow = true;
        continue;
      }
      const double he_inv = 1.0 / K.edge_length(e);
      if (cond.type == BCondition::Type::dirichlet) {
        Nloc += he_inv * edge_mass(K, e);
        Bloc += edge_forms_dirichlet(mesh, K, eidx[e], params).bq;
      } else {
        Nloc += he_inv * edge_normal_mass(K, e);
        Bloc += edge_forms_slip(mesh, K, eidx[e], params).bq;
      }
    }
    const auto& dofs = num.cell_dofs(c);
    const int pb = num.pressure_base(c);
    for (int i = 0; i < K.ndof(); ++i)
      for (int j = 0; j < K.ndof(); ++j)
        if (Nloc(i, j) != 0.0) t_n.emplace_back(dofs[i], dofs[j], Nloc(i, j));
    for (int i = 0; i < K.npressure(); ++i)
      for (int j = 0; j < K.ndof(); ++j)
        if (Bloc(i, j) != 0.0) t_b.emplace_back(pb + i, dofs[j], Bloc(i, j));
    for (int i = 0; i < K.npressure(); ++i)
      for (int j = 0; j < K.npressure(); ++j)
        if (K.gram_km1()(i, j) != 0.0)
          t_mp.emplace_back(pb + i, pb + j, K.gram_km1()(i, j));
  }
  Eigen::SparseMatrix<double> N(nv, nv), B(np, nv), Mp(np, np);
  N.setFromTriplets(t_n.begin(), t_n.end());
  B.setFromTriplets(t_b.begin(), t_b.end());
  Mp.setFromTriplets(t_mp.begin(), t_mp.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(N);
  if (ldlt.info() != Eigen::Success)
    throw AssemblyError("inf-sup probe: velocity norm matrix not SPD");
  const Eigen::MatrixXd X = ldlt.solve(Eigen::MatrixXd(B.transpose()));
  const Eigen::MatrixXd S = Eigen::MatrixXd(B) * X;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::MatrixXd(Mp));
  const auto& ev = es.eigenvalues(); // ascending
  const double lambda = outflow ? ev(0) : ev(1);
  return std::sqrt(std::max(lambda, 0.0));
}

} // namespace brinkvem
