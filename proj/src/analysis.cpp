#include "brinkvem/analysis.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <utility>

namespace brinkvem {

namespace {

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Outward unit normal of boundary edge `b` (v0 -> v1 is the owning cell's
/// CCW traversal direction).
Vec2 boundary_normal(const PolygonalMesh& mesh, const BoundaryEdge& b) {
  const Vec2 t = mesh.vertices()[b.v1] - mesh.vertices()[b.v0];
  const double len = t.norm();
  return Vec2(t.y(), -t.x()) / len;
}

/// plan lookup that reports unknown tags with context.
BCKind plan_kind(const BoundaryPlan& plan, const std::string& tag) {
  const auto it = plan.find(tag);
  if (it == plan.end())
    throw AnalysisError("boundary plan does not cover tag '" + tag + "'");
  return it->second;
}

} // namespace

// --- ManufacturedCase -----------------------------------------------------

ManufacturedCase::ManufacturedCase(Expr u1, Expr u2, Expr p, const Material& mat)
    : u1_(std::move(u1)), u2_(std::move(u2)), p_(std::move(p)), mat_(mat) {
  if (!u1_.valid() || !u2_.valid() || !p_.valid())
    throw AnalysisError("manufactured case requires valid u1, u2 and p expressions");
  u1x_ = u1_.derivative('x');
  u1y_ = u1_.derivative('y');
  u2x_ = u2_.derivative('x');
  u2y_ = u2_.derivative('y');
  px_ = p_.derivative('x');
  py_ = p_.derivative('y');
  u1xx_ = u1x_.derivative('x');
  u1yy_ = u1y_.derivative('y');
  u1xy_ = u1x_.derivative('y');
  u2xx_ = u2x_.derivative('x');
  u2yy_ = u2y_.derivative('y');
  u2xy_ = u2x_.derivative('y');

  std::mt19937_64 gen(0x9e3779b97f4a7c15ULL);
  for (int i = 0; i < 100; ++i) {
    const double x = uniform01(gen);
    const double y = uniform01(gen);
    const double dx = u1x_.eval(x, y);
    const double dy = u2y_.eval(x, y);
    if (std::abs(dx + dy) > 1e-12 * (1.0 + std::abs(dx) + std::abs(dy)))
      throw AnalysisError("manufactured velocity is not divergence-free at (" +
                          std::to_string(x) + ", " + std::to_string(y) + ")");
  }
}

ManufacturedCase ManufacturedCase::stream_function(const Expr& phi, const Expr& p,
                                                   const Material& mat) {
  return ManufacturedCase(phi.derivative('y'), Expr::number(0) - phi.derivative('x'),
                          p, mat);
}

ManufacturedCase ManufacturedCase::reference(const Material& mat) {
  const Expr phi = Expr::parse("-256*x^2*(x-1)^2*y*(y-1)*(2*y-1)");
  const Expr p = Expr::parse("sin(x-y)");
  return stream_function(phi, p, mat);
}

ManufacturedCase ManufacturedCase::with_material(const Material& mat) const {
  ManufacturedCase c = *this;
  c.mat_ = mat;
  return c;
}

Vec2 ManufacturedCase::velocity(const Vec2& x) const {
  return Vec2(u1_.eval(x.x(), x.y()), u2_.eval(x.x(), x.y()));
}

double ManufacturedCase::pressure(const Vec2& x) const { return p_.eval(x.x(), x.y()); }

Eigen::Matrix2d ManufacturedCase::grad_velocity(const Vec2& x) const {
  Eigen::Matrix2d g;
  g(0, 0) = u1x_.eval(x.x(), x.y());
  g(0, 1) = u1y_.eval(x.x(), x.y());
  g(1, 0) = u2x_.eval(x.x(), x.y());
  g(1, 1) = u2y_.eval(x.x(), x.y());
  return g;
}

Eigen::Matrix2d ManufacturedCase::strain(const Vec2& x) const {
  const Eigen::Matrix2d g = grad_velocity(x);
  return 0.5 * (g + g.transpose());
}

double ManufacturedCase::divergence(const Vec2& x) const {
  return u1x_.eval(x.x(), x.y()) + u2y_.eval(x.x(), x.y());
}

Vec2 ManufacturedCase::pressure_gradient(const Vec2& x) const {
  return Vec2(px_.eval(x.x(), x.y()), py_.eval(x.x(), x.y()));
}

Vec2 ManufacturedCase::source(const Vec2& x) const {
  const double X = x.x(), Y = x.y();
  const Vec2 diveps(u1xx_.eval(X, Y) + 0.5 * (u1yy_.eval(X, Y) + u2xy_.eval(X, Y)),
                    0.5 * (u1xy_.eval(X, Y) + u2xx_.eval(X, Y)) + u2yy_.eval(X, Y));
  return mat_.kinv * velocity(x) - mat_.nu * diveps + pressure_gradient(x);
}

VectorField ManufacturedCase::velocity_field() const {
  return [c = *this](const Vec2& x) { return c.velocity(x); };
}

VectorField ManufacturedCase::source_field() const {
  return [c = *this](const Vec2& x) { return c.source(x); };
}

VectorField ManufacturedCase::traction_field(const Vec2& n) const {
  return [c = *this, n](const Vec2& x) -> Vec2 { return c.mat_.nu * (c.strain(x) * n); };
}

// --- boundary spec --------------------------------------------------------

BoundarySpec make_boundary_spec(const ManufacturedCase& mc, const PolygonalMesh& mesh,
                                const BoundaryPlan& plan) {
  std::set<std::string> mesh_tags;
  for (const BoundaryEdge& b : mesh.boundary()) mesh_tags.insert(b.tag);
  for (const auto& [tag, kind] : plan) {
    (void)kind;
    if (mesh_tags.count(tag) == 0)
      throw AnalysisError("boundary plan names tag '" + tag + "' absent from the mesh");
  }

  BoundarySpec spec;
  for (const std::string& tag : mesh_tags) {
    switch (plan_kind(plan, tag)) {
      case BCKind::dirichlet:
        spec.by_tag.emplace(tag, BCondition::dirichlet(mc.velocity_field()));
        break;
      case BCKind::slip: {
        Vec2 n = Vec2::Zero();
        bool first = true;
        for (const BoundaryEdge& b : mesh.boundary()) {
          if (b.tag != tag) continue;
          const Vec2 ne = boundary_normal(mesh, b);
          if (first) {
            n = ne;
            first = false;
          } else if ((ne - n).norm() > 1e-10) {
            throw AnalysisError("slip tag '" + tag +
                                "' spans edges with different outward normals; "
                                "manufactured traction data needs one normal per tag");
          }
        }
        spec.by_tag.emplace(tag,
                            BCondition::slip(mc.velocity_field(), mc.traction_field(n)));
        break;
      }
      case BCKind::free_outflow:
        spec.by_tag.emplace(tag, BCondition::free_outflow());
        break;
    }
  }
  return spec;
}

// --- error norms ----------------------------------------------------------

EnergyError error_energy(const PolygonalMesh& mesh, const DofNumbering& numbering,
                         const DiscreteSolution& sol, const ManufacturedCase& mc,
                         const BoundaryPlan& plan) {
  const int k = numbering.order();
  const Material& mat = mc.material();

  // boundary edges grouped by owning cell, with their norm kind
  std::vector<std::vector<std::pair<int, BCKind>>> cell_bnd(mesh.num_cells());
  for (const BoundaryEdge& b : mesh.boundary()) {
    const BCKind kind = plan_kind(plan, b.tag);
    if (kind == BCKind::free_outflow) continue;
    const BoundaryEdgeRef ref =
        locate_boundary_edge(mesh, mesh.edge_index(b.v0, b.v1));
    cell_bnd[ref.cell].emplace_back(ref.local_edge, kind);
  }

  std::vector<double> enodes, eweights;
  gauss_legendre(k + 4, enodes, eweights);

  double vol = 0.0, bnd = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const ElementKernel K(mesh, c, k, mat);
    const CellView view = cell_view(K, numbering, sol);
    const int nk = K.basis_k().size();

    const std::vector<QuadNode> rule =
        polygon_rule(mesh.cell_vertices(c), mesh.geometry(c).star, 2 * k + 4);
    for (const QuadNode& q : rule) {
      const Eigen::VectorXd mv = K.basis_k().eval_all(q.x);
      const Vec2 uz(mv.dot(view.u_zero.head(nk)), mv.dot(view.u_zero.tail(nk)));
      const Vec2 du = mc.velocity(q.x) - uz;
      vol += q.w * du.dot(mat.kinv * du);

      const Eigen::Vector4d g = K.raw_grad(q.x) * view.u_eps;
      const Eigen::Matrix2d eex = mc.strain(q.x);
      const double dxx = eex(0, 0) - g(0);
      const double dyy = eex(1, 1) - g(3);
      const double dxy = eex(0, 1) - 0.5 * (g(1) + g(2));
      vol += q.w * mat.nu * (dxx * dxx + dyy * dyy + 2.0 * dxy * dxy);

      const double dh = K.pressure_eval(q.x).dot(view.div);
      const double dd = mc.divergence(q.x) - dh;
      vol += q.w * dd * dd;
    }

    for (const auto& [e, kind] : cell_bnd[c]) {
      const double len = K.edge_length(e);
      const Vec2& n = K.edge_normal(e);
      double acc = 0.0;
      for (std::size_t q = 0; q < enodes.size(); ++q) {
        const Vec2 x = K.edge_point(e, enodes[q]);
        const Vec2 uh = K.edge_trace(e, enodes[q]) * view.dofs;
        const Vec2 du = mc.velocity(x) - uh;
        const double val =
            kind == BCKind::dirichlet ? du.squaredNorm() : du.dot(n) * du.dot(n);
        acc += eweights[q] * len * val;
      }
      bnd += acc / len;
    }
  }
  return {std::sqrt(vol + bnd), std::sqrt(vol)};
}

double error_pressure(const PolygonalMesh& mesh, const DofNumbering& numbering,
                      const DiscreteSolution& sol, const ManufacturedCase& mc) {
  const int k = numbering.order();
  const int npc = numbering.pressure_per_cell();
  // single pass accumulating int q^2 and int q for q = p - p_h; the gauge
  // shift (active under the zero-mean constraint) is
  // ||q - mean(q)||^2 = int q^2 - (int q)^2 / |Omega|.
  double sq = 0.0, lin = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellGeometry& geo = mesh.geometry(c);
    const ScaledMonomials mon(k - 1, geo.centroid, geo.diameter);
    const Eigen::VectorXd coeff = sol.p.segment(numbering.pressure_base(c), npc);
    const std::vector<QuadNode> rule =
        polygon_rule(mesh.cell_vertices(c), geo.star, 2 * k + 4);
    for (const QuadNode& q : rule) {
      const double diff = mc.pressure(q.x) - mon.eval_all(q.x).dot(coeff);
      sq += q.w * diff * diff;
      lin += q.w * diff;
    }
  }
  if (sol.mean_constrained) sq -= lin * lin / mesh.total_area();
  return std::sqrt(std::max(sq, 0.0));
}

double divergence_norm(const PolygonalMesh& mesh, const DofNumbering& numbering,
                       const DiscreteSolution& sol) {
  const int k = numbering.order();
  double acc = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const ElementKernel K(mesh, c, k, Material{});
    const Eigen::VectorXd d = K.divergence() * numbering.gather(c, sol.u);
    acc += d.dot(K.gram_km1() * d);
  }
  return std::sqrt(std::max(acc, 0.0));
}

// --- interpolation --------------------------------------------------------

Eigen::VectorXd interpolate_velocity(const PolygonalMesh& mesh, int order,
                                     const ManufacturedCase& mc) {
  const DofNumbering numbering(mesh, order);
  Eigen::VectorXd U = Eigen::VectorXd::Zero(numbering.velocity_dofs());

  for (int c = 0; c < mesh.num_cells(); ++c) {
    const ElementKernel K(mesh, c, order, mc.material());
    const DofLayout& lay = K.layout();
    Eigen::VectorXd loc = Eigen::VectorXd::Zero(K.ndof());

    for (int v = 0; v < lay.n_edges; ++v) {
      const Vec2 val = mc.velocity(K.edge_vertex(v, 0));
      loc[lay.vertex_dof(v, 0)] = val.x();
      loc[lay.vertex_dof(v, 1)] = val.y();
    }
    for (int e = 0; e < lay.n_edges; ++e)
      for (int p = 0; p < order - 1; ++p) {
        const Vec2 val = mc.velocity(K.edge_point(e, K.edge_nodes()[p + 1]));
        loc[lay.edge_dof(e, p, 0)] = val.x();
        loc[lay.edge_dof(e, p, 1)] = val.y();
      }

    if (lay.n_comp > 0 || lay.n_div > 0) {
      const ScaledMonomials& mk = K.basis_k();
      const ScaledMonomials mkm3(std::max(order - 3, 0), K.centroid(), K.diameter());
      const ScaledMonomials& mkm1 = K.basis_km1();
      const std::vector<QuadNode> rule =
          polygon_rule(mesh.cell_vertices(c), mesh.geometry(c).star, 2 * order + 4);
      Eigen::VectorXd comp = Eigen::VectorXd::Zero(lay.n_comp);
      Eigen::VectorXd divm = Eigen::VectorXd::Zero(mkm1.size());
      Eigen::VectorXd mom1 = Eigen::VectorXd::Zero(mkm1.size());
      double divint = 0.0;
      for (const QuadNode& q : rule) {
        const Vec2 u = mc.velocity(q.x);
        const Vec2 xp = Vec2(q.x.y() - mk.center().y(), -(q.x.x() - mk.center().x())) /
                        mk.h();
        for (int j = 0; j < lay.n_comp; ++j)
          comp[j] += q.w * mkm3.eval(j, q.x) * u.dot(xp);
        const double dv = mc.divergence(q.x);
        const Eigen::VectorXd pm = mkm1.eval_all(q.x);
        divm += q.w * dv * pm;
        mom1 += q.w * pm;
        divint += q.w * dv;
      }
      for (int j = 0; j < lay.n_comp; ++j) loc[lay.comp_dof(j)] = comp[j] / K.area();
      for (int i = 1; i < mkm1.size(); ++i)
        loc[lay.div_dof(i - 1)] =
            K.diameter() / K.area() * (divm[i] - mom1[i] / K.area() * divint);
    }

    const std::vector<int>& gdofs = numbering.cell_dofs(c);
    for (int l = 0; l < K.ndof(); ++l) U[gdofs[l]] = loc[l];
  }
  return U;
}

// --- rates and studies ----------------------------------------------------

std::vector<ConvergenceRecord> rates(std::vector<ConvergenceRecord> rows) {
  if (rows.size() < 2)
    throw AnalysisError("rate computation needs at least two table rows");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rows[0].rate_u = rows[0].rate_p = nan;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].h < rows[i - 1].h))
      throw AnalysisError("mesh sizes must decrease strictly down the table (h[" +
                          std::to_string(i - 1) + "] = " + std::to_string(rows[i - 1].h) +
                          ", h[" + std::to_string(i) + "] = " + std::to_string(rows[i].h) +
                          ")");
    const double dh = std::log(rows[i - 1].h) - std::log(rows[i].h);
    const auto rate = [&](double coarse, double fine) {
      if (!(coarse > 0.0) || !(fine > 0.0)) return nan;
      return (std::log(coarse) - std::log(fine)) / dh;
    };
    rows[i].rate_u = rate(rows[i - 1].err_u, rows[i].err_u);
    rows[i].rate_p = rate(rows[i - 1].err_p, rows[i].err_p);
  }
  return rows;
}

namespace {

BoundaryPlan resolve_plan(const BoundaryPlan& plan, const PolygonalMesh& mesh) {
  if (!plan.empty()) return plan;
  BoundaryPlan all;
  for (const BoundaryEdge& b : mesh.boundary()) all[b.tag] = BCKind::dirichlet;
  return all;
}

ConvergenceRecord solve_level(const ManufacturedCase& mc, const PolygonalMesh& mesh,
                              const StudyOptions& opt) {
  const BoundaryPlan plan = resolve_plan(opt.plan, mesh);
  const BoundarySpec bc = make_boundary_spec(mc, mesh, plan);
  const MaterialField mf = [m = mc.material()](int, const Vec2&) { return m; };
  AssemblyOptions aopt;
  aopt.nitsche = opt.nitsche;
  aopt.parallel = opt.parallel;
  const SaddleSystem sys = assemble(mesh, opt.order, mf, mc.source_field(), bc, aopt);
  const DiscreteSolution sol = solve(sys);

  ConvergenceRecord rec;
  rec.cells = mesh.num_cells();
  rec.h = mesh.h();
  const EnergyError eu = error_energy(mesh, sys.numbering, sol, mc, plan);
  rec.err_u = eu.full;
  rec.err_u_volume = eu.volume;
  rec.err_p = error_pressure(mesh, sys.numbering, sol, mc);
  rec.div_norm = divergence_norm(mesh, sys.numbering, sol);
  return rec;
}

} // namespace

std::vector<ConvergenceRecord> convergence_study(const ManufacturedCase& mc,
                                                 const StudyOptions& opt) {
  if (opt.levels < 1) throw AnalysisError("a study needs at least one level");
  std::vector<ConvergenceRecord> rows;
  int n = opt.base_cells;
  for (int level = 0; level < opt.levels; ++level, n *= 4) {
    const PolygonalMesh mesh =
        generate(opt.family, n, opt.seed + static_cast<std::uint64_t>(level), opt.domain);
    rows.push_back(solve_level(mc, mesh, opt));
  }
  return opt.levels >= 2 ? rates(std::move(rows)) : rows;
}

std::vector<std::vector<ConvergenceRecord>> nu_sweep(const ManufacturedCase& mc,
                                                     const StudyOptions& opt,
                                                     const std::vector<double>& nus) {
  if (nus.empty()) throw AnalysisError("viscosity sweep needs at least one value");
  for (const double nu : nus)
    if (!(nu > 0.0) || nu > 1.0)
      throw AnalysisError("viscosity " + std::to_string(nu) + " outside (0, 1]");
  if (opt.levels < 1) throw AnalysisError("a study needs at least one level");

  std::vector<PolygonalMesh> meshes;
  int n = opt.base_cells;
  for (int level = 0; level < opt.levels; ++level, n *= 4)
    meshes.push_back(
        generate(opt.family, n, opt.seed + static_cast<std::uint64_t>(level), opt.domain));

  std::vector<std::vector<ConvergenceRecord>> tables;
  for (const double nu : nus) {
    Material mat = mc.material();
    mat.nu = nu;
    const ManufacturedCase mcv = mc.with_material(mat);
    std::vector<ConvergenceRecord> rows;
    for (const PolygonalMesh& mesh : meshes) rows.push_back(solve_level(mcv, mesh, opt));
    tables.push_back(opt.levels >= 2 ? rates(std::move(rows)) : std::move(rows));
  }
  return tables;
}

} // namespace brinkvem
