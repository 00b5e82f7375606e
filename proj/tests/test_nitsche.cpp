#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "brinkvem/mesh_gen.hpp"
#include "brinkvem/nitsche.hpp"

using namespace brinkvem;

namespace {

PolygonalMesh unit_square_cell() {
  std::vector<Vec2> verts = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  std::vector<std::vector<int>> cells = {{0, 1, 2, 3}};
  std::vector<BoundaryEdge> bnd = {{0, 1, "bottom"}, {1, 2, "right"}, {2, 3, "top"},
                                   {3, 0, "left"}};
  return PolygonalMesh(std::move(verts), std::move(cells), std::move(bnd));
}

/// Raw coefficients of the affine field a + G (x - xc) in the kernel's
/// scaled monomial basis (a is the value at the centroid).
Eigen::VectorXd linear_raw(const ElementKernel& K, const Vec2& a, const Eigen::Matrix2d& G) {
  const int nk = K.basis_k().size();
  const double h = K.diameter();
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(2 * nk);
  const int ix = K.basis_k().index(1, 0), iy = K.basis_k().index(0, 1);
  raw[0] = a.x();
  raw[ix] = G(0, 0) * h;
  raw[iy] = G(0, 1) * h;
  raw[nk] = a.y();
  raw[nk + ix] = G(1, 0) * h;
  raw[nk + iy] = G(1, 1) * h;
  return raw;
}

} // namespace

TEST_CASE("default penalties follow 100 (k+1)^2") {
  CHECK(NitscheParams::defaults(2).gamma_d == doctest::Approx(900.0));
  CHECK(NitscheParams::defaults(2).gamma_n == doctest::Approx(900.0));
  CHECK(NitscheParams::defaults(3).gamma_d == doctest::Approx(1600.0));
}

TEST_CASE("dirichlet penalty on constants equals gamma") {
  const PolygonalMesh mesh = unit_square_cell();
  const ElementKernel K(mesh, 0, 2, Material{});
  const NitscheParams par = NitscheParams::defaults(2);
  const int ge = mesh.edge_index(0, 1); // bottom, length 1
  const EdgeMatrices E = edge_forms_dirichlet(mesh, K, ge, par);

  const int nk = K.basis_k().size();
  Eigen::VectorXd ex = Eigen::VectorXd::Zero(2 * nk), ey = Eigen::VectorXd::Zero(2 * nk);
  ex[0] = 1.0;
  ey[nk] = 1.0;
  const Eigen::VectorXd ux = K.interp() * ex, uy = K.interp() * ey;

  CHECK(ux.dot(E.S * ux) == doctest::Approx(900.0).epsilon(1e-12));
  CHECK(uy.dot(E.S * uy) == doctest::Approx(900.0).epsilon(1e-12));
  CHECK(ux.dot(E.S * uy) == doctest::Approx(0.0)); // components decouple on constants

  // consistency form vanishes on constants (eps = 0)
  CHECK((E.Bm * ux).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((E.Bm * uy).cwiseAbs().maxCoeff() <= 1e-10);

  // pressure coupling oint q n.v with q = m_0 = 1: v = n gives h_e
  const Eigen::VectorXd un = -uy; // n = (0,-1) on the bottom edge
  CHECK(E.bq.row(0).dot(un) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(E.bq.row(0).dot(ux) == doctest::Approx(0.0)); // tangential field carries no flux
}

TEST_CASE("slip forms act on normal components only") {
  const PolygonalMesh mesh = unit_square_cell();
  const ElementKernel K(mesh, 0, 2, Material{});
  const NitscheParams par = NitscheParams::defaults(2);
  const int ge = mesh.edge_index(0, 1);
  const EdgeMatrices E = edge_forms_slip(mesh, K, ge, par);

  const int nk = K.basis_k().size();
  Eigen::VectorXd ex = Eigen::VectorXd::Zero(2 * nk), ey = Eigen::VectorXd::Zero(2 * nk);
  ex[0] = 1.0;
  ey[nk] = 1.0;
  const Eigen::VectorXd ut = K.interp() * ex;  // tangential on the bottom edge
  const Eigen::VectorXd un = -(K.interp() * ey); // normal direction (0,-1)

  CHECK((E.S * ut).cwiseAbs().maxCoeff() <= 1e-10);        // no penalty on tangential flow
  CHECK(un.dot(E.S * un) == doctest::Approx(900.0).epsilon(1e-12));
  CHECK((E.bq * ut).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(E.bq.row(0).dot(un) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("slip terms vanish on a compatible polynomial flow") {
  // p = (x, -y): divergence free, p.n = 0 on y = 0 and (eps(p) n).t = 0 there
  const PolygonalMesh mesh = unit_square_cell();
  const ElementKernel K(mesh, 0, 2, Material{});
  const NitscheParams par = NitscheParams::defaults(2);
  const int ge = mesh.edge_index(0, 1);
  const EdgeMatrices E = edge_forms_slip(mesh, K, ge, par);

  Eigen::Matrix2d G;
  G << 1, 0, 0, -1;
  const Eigen::VectorXd raw = linear_raw(K, Vec2(K.centroid().x(), -K.centroid().y()), G);
  const Eigen::VectorXd u = K.interp() * raw;

  CHECK((E.S * u).cwiseAbs().maxCoeff() <= 1e-10 * par.gamma_n);
  CHECK((E.bq * u).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("dirichlet data reproducing a discrete trace matches the matrix action") {
  const PolygonalMesh mesh = unit_square_cell();
  const ElementKernel K(mesh, 0, 2, Material{});
  const NitscheParams par = NitscheParams::defaults(2);
  const int ge = mesh.edge_index(1, 2); // right edge

  Eigen::Matrix2d G;
  G << 0.4, 1.1, -0.7, -0.4; // trace-free -> divergence free
  const Eigen::VectorXd raw = linear_raw(K, Vec2(0.3, -0.2), G);
  const Eigen::VectorXd u = K.interp() * raw;

  const ScaledMonomials& mono = K.basis_k();
  const int nk = mono.size();
  const VectorField g = [&](const Vec2& x) {
    const Eigen::VectorXd vals = mono.eval_all(x);
    return Vec2(raw.head(nk).dot(vals), raw.tail(nk).dot(vals));
  };

  const EdgeMatrices E = edge_forms_dirichlet(mesh, K, ge, par);
  const EdgeRhs rhs = edge_rhs(mesh, K, ge, BCondition::dirichlet(g), par);

  const Eigen::VectorXd Fref = E.S * u + E.Bm.transpose() * u;
  const Eigen::VectorXd Gref = E.bq * u;
  CHECK((rhs.F - Fref).cwiseAbs().maxCoeff() <= 1e-10 * (1 + Fref.cwiseAbs().maxCoeff()));
  CHECK((rhs.G - Gref).cwiseAbs().maxCoeff() <= 1e-11 * (1 + Gref.cwiseAbs().maxCoeff()));
}

TEST_CASE("zero data and free outflow produce zero right-hand sides") {
  const PolygonalMesh mesh = unit_square_cell();
  const ElementKernel K(mesh, 0, 2, Material{});
  const NitscheParams par = NitscheParams::defaults(2);
  const VectorField zero = [](const Vec2&) { return Vec2(0, 0); };
  for (int ge : {mesh.edge_index(0, 1), mesh.edge_index(2, 3)}) {
    const EdgeRhs rd = edge_rhs(mesh, K, ge, BCondition::dirichlet(zero), par);
    CHECK(rd.F.cwiseAbs().maxCoeff() == 0.0);
    CHECK(rd.G.cwiseAbs().maxCoeff() == 0.0);
    const EdgeRhs rs = edge_rhs(mesh, K, ge, BCondition::slip(zero, zero), par);
    CHECK(rs.F.cwiseAbs().maxCoeff() == 0.0);
    CHECK(rs.G.cwiseAbs().maxCoeff() == 0.0);
    const EdgeRhs ro = edge_rhs(mesh, K, ge, BCondition::free_outflow(), par);
    CHECK(ro.F.cwiseAbs().maxCoeff() == 0.0);
    CHECK(ro.G.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("poiseuille slip data: continuity load equals the exact influx") {
  const double H = 0.41;
  std::vector<Vec2> verts = {Vec2(0, 0), Vec2(H, 0), Vec2(H, H), Vec2(0, H)};
  std::vector<std::vector<int>> cells = {{0, 1, 2, 3}};
  std::vector<BoundaryEdge> bnd = {{0, 1, "wall"}, {1, 2, "outlet"}, {2, 3, "wall"},
                                   {3, 0, "inlet"}};
  const PolygonalMesh mesh(std::move(verts), std::move(cells), std::move(bnd));
  const ElementKernel K(mesh, 0, 3, Material{}); // k = 3: quadratic data is resolved
  const NitscheParams par = NitscheParams::defaults(3);
  const VectorField g1 = [&](const Vec2& x) {
    return Vec2(12.0 * x.y() * (H - x.y()) / (H * H), 0.0);
  };
  const int ge = mesh.edge_index(3, 0); // inlet x = 0, n = (-1, 0)
  const EdgeRhs rhs = edge_rhs(mesh, K, ge, BCondition::slip(g1, g1), par);
  // row 0 tests against q = m_0 = 1: oint (g1.n) q = -int_0^H g1_x dy = -2H
  CHECK(rhs.G[0] == doctest::Approx(-2.0 * H).epsilon(1e-12));
}

TEST_CASE("penalty against edge length: straight-edge blocks are h-invariant") {
  const Domain unit = Domain::rectangle(Vec2(0, 0), Vec2(1, 1));
  const PolygonalMesh coarse = generate(MeshFamily::quad, 16, 0, unit);
  const PolygonalMesh fine = generate(MeshFamily::quad, 64, 0, unit);
  const NitscheParams par = NitscheParams::defaults(2);

  auto bottom_edge_block = [&](const PolygonalMesh& m, double& h_e) {
    // first boundary edge tagged bottom
    int ge = -1;
    for (const MeshEdge& e : m.edges())
      if (e.boundary_index >= 0 && m.boundary()[e.boundary_index].tag == "bottom") {
        ge = m.edge_index(e.a, e.b);
        break;
      }
    REQUIRE(ge >= 0);
    const BoundaryEdgeRef ref = locate_boundary_edge(m, ge);
    const ElementKernel K(m, ref.cell, 2, Material{});
    h_e = K.edge_length(ref.local_edge);
    const EdgeMatrices E = edge_forms_dirichlet(m, K, ge, par);
    // extract the 6x6 block of the edge's own trace dofs
    Eigen::MatrixXd block(6, 6);
    std::vector<int> id;
    for (int node = 0; node < 3; ++node)
      for (int comp = 0; comp < 2; ++comp)
        id.push_back(K.edge_node_dof(ref.local_edge, node, comp));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) block(i, j) = E.S(id[i], id[j]);
    return block;
  };

  double hc = 0.0, hf = 0.0;
  const Eigen::MatrixXd Sc = bottom_edge_block(coarse, hc);
  const Eigen::MatrixXd Sf = bottom_edge_block(fine, hf);
  CHECK(hc == doctest::Approx(0.25));
  CHECK(hf == doctest::Approx(0.125));
  // gamma h_e^-1 oint(...) is independent of h_e on straight edges ...
  CHECK((Sc - Sf).cwiseAbs().maxCoeff() <= 1e-12 * Sc.cwiseAbs().maxCoeff());
  // ... so the h_e^-1-weighted blocks scale exactly like 1/h: halving h doubles them
  CHECK(((1.0 / hf) * Sf - 2.0 * (1.0 / hc) * Sc).cwiseAbs().maxCoeff() <=
        1e-12 * ((1.0 / hc) * Sc).cwiseAbs().maxCoeff());
}

TEST_CASE("edge mass matrices integrate traces exactly") {
  const PolygonalMesh mesh = unit_square_cell();
  const ElementKernel K(mesh, 0, 2, Material{});
  Eigen::Matrix2d G;
  G << 0, 1, 1, 0; // v = (y, x)
  const Eigen::VectorXd raw = linear_raw(K, Vec2(K.centroid().y(), K.centroid().x()), G);
  const Eigen::VectorXd v = K.interp() * raw;
  // bottom edge is local edge 0: v = (0, x) there
  const Eigen::MatrixXd M = edge_mass(K, 0);
  CHECK(v.dot(M * v) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const Eigen::MatrixXd N = edge_normal_mass(K, 0);
  CHECK(v.dot(N * v) == doctest::Approx(1.0 / 3.0).epsilon(1e-12)); // v.n = -x
  // left edge is local edge 3: v = (y, 0), v.n = -y
  const Eigen::MatrixXd M3 = edge_mass(K, 3);
  CHECK(v.dot(M3 * v) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const Eigen::MatrixXd N3 = edge_normal_mass(K, 3);
  CHECK(v.dot(N3 * v) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("boundary edge resolution") {
  const Domain unit = Domain::rectangle(Vec2(0, 0), Vec2(1, 1));
  const PolygonalMesh mesh = generate(MeshFamily::quad, 4, 0, unit);
  int interior = -1, boundary = -1;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.edges()[e].boundary_index < 0)
      interior = e;
    else
      boundary = e;
  }
  REQUIRE(interior >= 0);
  REQUIRE(boundary >= 0);
  CHECK_THROWS_AS(locate_boundary_edge(mesh, interior), NitscheError);
  const BoundaryEdgeRef ref = locate_boundary_edge(mesh, boundary);
  const MeshEdge& be = mesh.edges()[boundary];
  CHECK(ref.cell == (be.cell_in >= 0 ? be.cell_in : be.cell_out));
  const std::vector<int>& eidx = mesh.cell_edge_indices(ref.cell);
  CHECK(eidx[ref.local_edge] == boundary);
}

TEST_CASE("boundary spec reports missing tags by name") {
  BoundarySpec spec;
  spec.by_tag["wall"] = BCondition::free_outflow();
  CHECK(spec.has("wall"));
  CHECK_FALSE(spec.has("inlet"));
  try {
    (void)spec.condition("inlet");
    FAIL("expected NitscheError");
  } catch (const NitscheError& e) {
    const std::string what = e.what();
    CHECK(what.find("inlet") != std::string::npos);
    CHECK(what.find("wall") != std::string::npos);
  }
}
