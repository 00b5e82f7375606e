#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "brinkvem/assembly.hpp"
#include "brinkvem/mesh_gen.hpp"

using namespace brinkvem;

namespace {

bool bit_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

bool bit_equal_values(const Eigen::SparseMatrix<double>& a,
                      const Eigen::SparseMatrix<double>& b) {
  if (a.nonZeros() != b.nonZeros()) return false;
  return (Eigen::Map<const Eigen::ArrayXd>(a.valuePtr(), a.nonZeros()) ==
          Eigen::Map<const Eigen::ArrayXd>(b.valuePtr(), b.nonZeros()))
      .all();
}

const Domain kUnit = Domain::rectangle(Vec2(0, 0), Vec2(1, 1));

MaterialField unit_material() {
  return [](int, const Vec2&) { return Material{}; };
}

BoundarySpec all_dirichlet(const PolygonalMesh& mesh, const VectorField& g) {
  BoundarySpec spec;
  for (const BoundaryEdge& b : mesh.boundary())
    if (!spec.has(b.tag)) spec.by_tag[b.tag] = BCondition::dirichlet(g);
  return spec;
}

PolygonalMesh unit_square_cell() {
  std::vector<Vec2> verts = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  std::vector<std::vector<int>> cells = {{0, 1, 2, 3}};
  std::vector<BoundaryEdge> bnd = {{0, 1, "bottom"}, {1, 2, "right"}, {2, 3, "top"},
                                   {3, 0, "left"}};
  return PolygonalMesh(std::move(verts), std::move(cells), std::move(bnd));
}

const VectorField kZero = [](const Vec2&) { return Vec2(0, 0); };

} // namespace

TEST_CASE("numbering and system sizes on a single cell") {
  const PolygonalMesh mesh = unit_square_cell();
  const DofNumbering num(mesh, 2);
  CHECK(num.velocity_dofs() == 18);
  CHECK(num.pressure_dofs() == 3);
  CHECK(num.pressure_per_cell() == 3);
  CHECK(num.cell_dofs(0).size() == 18);
  // vertex dofs come first, two per mesh vertex
  for (int v = 0; v < 4; ++v) {
    CHECK(num.cell_dofs(0)[2 * v] == 2 * v);
    CHECK(num.cell_dofs(0)[2 * v + 1] == 2 * v + 1);
  }

  const SaddleSystem sys = assemble(mesh, 2, unit_material(), kZero,
                                    all_dirichlet(mesh, kZero));
  CHECK(sys.A.rows() == 18);
  CHECK(sys.A.cols() == 18);
  CHECK(sys.B.rows() == 3);
  CHECK(sys.B.cols() == 18);
  CHECK(sys.mean_constrained);
  CHECK(sys.mean_row.size() == 3);

  const DiscreteSolution sol = solve(sys);
  CHECK(sol.u.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(sol.p.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(sol.residual <= 1e-12);
}

TEST_CASE("single-cell system equals kernel plus edge forms") {
  const PolygonalMesh mesh = unit_square_cell();
  const NitscheParams par = NitscheParams::defaults(2);
  const SaddleSystem sys = assemble(mesh, 2, unit_material(), kZero,
                                    all_dirichlet(mesh, kZero));

  const ElementKernel K(mesh, 0, 2, Material{});
  Eigen::MatrixXd Aref = K.Mh() + K.Ah();
  Eigen::MatrixXd Bref = K.B();
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const EdgeMatrices E = edge_forms_dirichlet(mesh, K, e, par);
    Aref += E.S + E.Bm + E.Bm.transpose();
    Bref += E.bq;
  }
  const Eigen::MatrixXd A = Eigen::MatrixXd(sys.A);
  const Eigen::MatrixXd B = Eigen::MatrixXd(sys.B);
  CHECK((A - Aref).cwiseAbs().maxCoeff() <= 1e-12 * Aref.cwiseAbs().maxCoeff());
  CHECK((B - Bref).cwiseAbs().maxCoeff() <= 1e-12 * (1 + Bref.cwiseAbs().maxCoeff()));

  // the mean row holds the cell integrals of the pressure basis
  for (int i = 0; i < 3; ++i)
    CHECK(sys.mean_row[i] == doctest::Approx(K.gram_km1()(0, i)).epsilon(1e-13));
}

TEST_CASE("velocity block is symmetric") {
  const PolygonalMesh mesh = generate(MeshFamily::voronoi, 64, 2, kUnit);
  const SaddleSystem sys = assemble(mesh, 2, unit_material(), kZero,
                                    all_dirichlet(mesh, kZero));
  const Eigen::MatrixXd A = Eigen::MatrixXd(sys.A);
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * A.cwiseAbs().maxCoeff());
}

TEST_CASE("patch test: linear velocity and pressure are reproduced") {
  const VectorField uex = [](const Vec2& x) { return Vec2(x.y(), x.x()); };
  const VectorField f = [](const Vec2& x) { return Vec2(x.y() + 1.0, x.x()); };
  for (MeshFamily fam : {MeshFamily::quad, MeshFamily::voronoi}) {
    const PolygonalMesh mesh = generate(fam, 16, 0, kUnit);
    const SaddleSystem sys = assemble(mesh, 2, unit_material(), f,
                                      all_dirichlet(mesh, uex));
    const DiscreteSolution sol = solve(sys);
    CHECK(sol.residual <= 1e-10);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      const Vec2 x = mesh.vertices()[v];
      CHECK(std::abs(sol.u[2 * v] - x.y()) <= 1e-8);
      CHECK(std::abs(sol.u[2 * v + 1] - x.x()) <= 1e-8);
    }
    const DofNumbering& num = sys.numbering;
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const ElementKernel K(mesh, c, 2, Material{});
      const CellView view = cell_view(K, num, sol);
      // pressure basis is centered: coefficient 0 is p_h at the centroid
      const double ph = view.pressure[0];
      CHECK(std::abs(ph - (K.centroid().x() - 0.5)) <= 1e-8);
      // divergence vanishes cellwise
      CHECK(view.div.cwiseAbs().maxCoeff() <= 1e-8);
    }
    CHECK(std::abs(pressure_mean(mesh, num, sol.p)) <= 1e-10);
  }
}

TEST_CASE("patch test with a slip edge") {
  // u = (y, 0), p = x - 1/2; on y = 0: u.n = 0 and nu (eps(u) n).t = -1/2
  const VectorField uex = [](const Vec2& x) { return Vec2(x.y(), 0.0); };
  const VectorField f = [](const Vec2& x) { return Vec2(x.y() + 1.0, 0.0); };
  const VectorField g2 = [](const Vec2&) { return Vec2(-0.5, 0.0); }; // nu eps(u) n on y=0
  const PolygonalMesh mesh = generate(MeshFamily::quad, 16, 0, kUnit);
  BoundarySpec spec = all_dirichlet(mesh, uex);
  spec.by_tag["bottom"] = BCondition::slip(uex, g2);
  const SaddleSystem sys = assemble(mesh, 2, unit_material(), f, spec);
  const DiscreteSolution sol = solve(sys);
  CHECK(sol.residual <= 1e-10);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Vec2 x = mesh.vertices()[v];
    CHECK(std::abs(sol.u[2 * v] - x.y()) <= 1e-8);
    CHECK(std::abs(sol.u[2 * v + 1]) <= 1e-8);
  }
}

TEST_CASE("free outflow drops the mean constraint") {
  const PolygonalMesh mesh = generate(MeshFamily::quad, 16, 0, kUnit);
  BoundarySpec spec = all_dirichlet(mesh, kZero);
  spec.by_tag["right"] = BCondition::free_outflow();
  const SaddleSystem sys = assemble(mesh, 2, unit_material(), kZero, spec);
  CHECK_FALSE(sys.mean_constrained);
  const DiscreteSolution sol = solve(sys);
  CHECK_FALSE(sol.mean_constrained);
  CHECK(sol.u.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(sol.p.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("interface traces agree between the two cells sharing an edge") {
  // order 3 exercises the reversal of edge-interior dofs
  const PolygonalMesh mesh = generate(MeshFamily::quad, 4, 0, kUnit);
  const DofNumbering num(mesh, 3);
  std::mt19937_64 gen(17);
  Eigen::VectorXd u(num.velocity_dofs());
  for (int i = 0; i < u.size(); ++i)
    u[i] = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;

  int checked = 0;
  for (int ge = 0; ge < mesh.num_edges(); ++ge) {
    const MeshEdge& e = mesh.edges()[ge];
    if (e.boundary_index >= 0) continue; // interior edges have both cells
    const ElementKernel Kin(mesh, e.cell_in, 3, Material{});
    const ElementKernel Kout(mesh, e.cell_out, 3, Material{});
    const Eigen::VectorXd uin = num.gather(e.cell_in, u);
    const Eigen::VectorXd uout = num.gather(e.cell_out, u);
    // local edge indices inside each cell
    const std::vector<int>& ein = mesh.cell_edge_indices(e.cell_in);
    const std::vector<int>& eout = mesh.cell_edge_indices(e.cell_out);
    const int lin = static_cast<int>(std::find(ein.begin(), ein.end(), ge) - ein.begin());
    const int lout = static_cast<int>(std::find(eout.begin(), eout.end(), ge) - eout.begin());
    for (double s : {0.2, 0.5, 0.9}) {
      // cell_in traverses a->b at parameter s; cell_out passes the same
      // physical point at parameter 1-s
      const Vec2 xin = Kin.edge_point(lin, s);
      const Vec2 xout = Kout.edge_point(lout, 1.0 - s);
      REQUIRE((xin - xout).norm() <= 1e-13);
      const Eigen::Vector2d vin = Kin.edge_trace(lin, s) * uin;
      const Eigen::Vector2d vout = Kout.edge_trace(lout, 1.0 - s) * uout;
      CHECK((vin - vout).cwiseAbs().maxCoeff() <= 1e-12 * (1 + vin.cwiseAbs().maxCoeff()));
    }
    ++checked;
  }
  CHECK(checked == 4); // the 2x2 grid has four interior edges
}

TEST_CASE("parallel and serial assembly agree bit for bit") {
  const PolygonalMesh mesh = generate(MeshFamily::voronoi, 128, 9, kUnit);
  const VectorField f = [](const Vec2& x) { return Vec2(std::sin(x.y()), x.x() * x.y()); };
  const VectorField g = [](const Vec2& x) { return Vec2(x.y(), 0.0); };
  AssemblyOptions par, ser;
  par.parallel = true;
  ser.parallel = false;
  const SaddleSystem a = assemble(mesh, 2, unit_material(), f, all_dirichlet(mesh, g), par);
  const SaddleSystem b = assemble(mesh, 2, unit_material(), f, all_dirichlet(mesh, g), ser);

  CHECK(bit_equal_values(a.A, b.A));
  CHECK(bit_equal_values(a.B, b.B));
  CHECK(bit_equal(a.F, b.F));
  CHECK(bit_equal(a.G, b.G));

  const DiscreteSolution sa = solve(a);
  const DiscreteSolution sb = solve(b);
  CHECK(bit_equal(sa.u, sb.u));
  CHECK(bit_equal(sa.p, sb.p));

  // and a second parallel run is reproducible too
  const SaddleSystem c = assemble(mesh, 2, unit_material(), f, all_dirichlet(mesh, g), par);
  CHECK(bit_equal_values(a.A, c.A));
}

TEST_CASE("region-dependent material reaches the kernels") {
  // K^-1 jumps across x = 1/2; the assembled A must differ from the uniform one
  const PolygonalMesh mesh = generate(MeshFamily::quad, 16, 0, kUnit);
  const MaterialField split = [](int, const Vec2& xc) {
    Material m;
    if (xc.x() > 0.5) m.kinv = 100.0 * Eigen::Matrix2d::Identity();
    return m;
  };
  const SaddleSystem su = assemble(mesh, 2, unit_material(), kZero, all_dirichlet(mesh, kZero));
  const SaddleSystem ss = assemble(mesh, 2, split, kZero, all_dirichlet(mesh, kZero));
  CHECK((Eigen::MatrixXd(su.A) - Eigen::MatrixXd(ss.A)).cwiseAbs().maxCoeff() > 1.0);
}

TEST_CASE("coercivity probe reports a healthy margin") {
  const PolygonalMesh mesh = generate(MeshFamily::quad, 16, 0, kUnit);
  const BoundarySpec spec = all_dirichlet(mesh, kZero);
  const CoercivityReport rep = coercivity_probe(mesh, 2, unit_material(), spec,
                                                NitscheParams::defaults(2));
  CHECK(rep.min_quadratic > 0.0);
  CHECK(rep.min_margin >= 1.0);
}

TEST_CASE("inf-sup probe stays bounded under refinement") {
  std::vector<double> beta;
  for (int n : {16, 64, 256}) {
    const PolygonalMesh mesh = generate(MeshFamily::quad, n, 0, kUnit);
    const BoundarySpec spec = all_dirichlet(mesh, kZero);
    beta.push_back(infsup_probe(mesh, 2, unit_material(), spec, NitscheParams::defaults(2)));
    CHECK(beta.back() > 0.0);
  }
  const double bmax = *std::max_element(beta.begin(), beta.end());
  const double bmin = *std::min_element(beta.begin(), beta.end());
  CHECK(bmax / bmin < 2.0);
}
