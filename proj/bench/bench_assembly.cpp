// Wall-clock comparison of the OpenMP element loop against the serial
// reference path, over a sweep of mesh sizes.  Also re-checks that both
// paths produce bit-identical systems, which is the property that lets the
// test suite run either one.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "brinkvem/assembly.hpp"
#include "brinkvem/mesh_gen.hpp"

using namespace brinkvem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

bool same_values(const Eigen::SparseMatrix<double>& a, const Eigen::SparseMatrix<double>& b) {
  if (a.nonZeros() != b.nonZeros()) return false;
  return (Eigen::Map<const Eigen::ArrayXd>(a.valuePtr(), a.nonZeros()) ==
          Eigen::Map<const Eigen::ArrayXd>(b.valuePtr(), b.nonZeros()))
      .all();
}

} // namespace

int main(int argc, char** argv) {
  int order = 2;
  MeshFamily family = MeshFamily::voronoi;
  std::vector<int> sizes = {1024, 4096, 16384};
  if (argc > 1) order = std::atoi(argv[1]);
  if (argc > 2) family = family_from_string(argv[2]);
  if (argc > 3) {
    sizes.clear();
    for (int i = 3; i < argc; ++i) sizes.push_back(std::atoi(argv[i]));
  }

  const Domain unit = Domain::rectangle(Vec2(0, 0), Vec2(1, 1));
  const MaterialField mat = [](int, const Vec2&) { return Material{}; };
  const VectorField f = [](const Vec2& x) { return Vec2(x.y(), -x.x()); };
  const VectorField g = [](const Vec2&) { return Vec2(0, 0); };

  std::printf("%-10s %8s %10s %12s %12s %8s %6s\n", "family", "cells", "dofs",
              "serial[s]", "parallel[s]", "speedup", "equal");
  for (int n : sizes) {
    const PolygonalMesh mesh = generate(family, n, 0, unit);
    BoundarySpec bc;
    for (const BoundaryEdge& b : mesh.boundary())
      if (!bc.has(b.tag)) bc.by_tag[b.tag] = BCondition::dirichlet(g);

    AssemblyOptions serial, parallel;
    serial.parallel = false;
    parallel.parallel = true;

    auto t0 = clock_type::now();
    const SaddleSystem ss = assemble(mesh, order, mat, f, bc, serial);
    const double ts = seconds_since(t0);

    t0 = clock_type::now();
    const SaddleSystem sp = assemble(mesh, order, mat, f, bc, parallel);
    const double tp = seconds_since(t0);

    const bool equal = same_values(ss.A, sp.A) && same_values(ss.B, sp.B) &&
                       (ss.F.array() == sp.F.array()).all() &&
                       (ss.G.array() == sp.G.array()).all();
    const long dofs = ss.A.rows() + ss.B.rows();
    std::printf("%-10s %8d %10ld %12.3f %12.3f %8.2fx %6s\n",
                family_to_string(family).c_str(), n, dofs, ts, tp, ts / tp,
                equal ? "yes" : "NO");
    if (!equal) return 1;
  }
  return 0;
}
