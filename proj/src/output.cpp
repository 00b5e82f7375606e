#include "brinkvem/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace brinkvem {

namespace {

constexpr const char* kCrlf = "\r\n";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

std::string fmt_rate(double v) { return std::isnan(v) ? "-" : fmt(v); }

void csv_rows(std::string& out, const std::vector<ConvergenceRecord>& rows,
              const std::string& prefix) {
  for (const ConvergenceRecord& r : rows) {
    out += prefix + std::to_string(r.cells) + "," + fmt(r.h) + "," + fmt(r.err_u) + "," +
           fmt_rate(r.rate_u) + "," + fmt(r.err_p) + "," + fmt_rate(r.rate_p) + "," +
           fmt(r.div_norm) + "," + fmt(r.err_u_volume) + kCrlf;
  }
}

} // namespace

std::string csv_convergence(const std::vector<ConvergenceRecord>& rows) {
  std::string out = std::string("N,h,err_u,rate_u,err_p,rate_p,div_norm,err_u_vol") + kCrlf;
  csv_rows(out, rows, "");
  return out;
}

std::string csv_nu_sweep(const std::vector<double>& nus,
                         const std::vector<std::vector<ConvergenceRecord>>& tables) {
  if (nus.size() != tables.size())
    throw AnalysisError("viscosity list and table list differ in length");
  std::string out =
      std::string("nu,N,h,err_u,rate_u,err_p,rate_p,div_norm,err_u_vol") + kCrlf;
  for (std::size_t i = 0; i < nus.size(); ++i)
    csv_rows(out, tables[i], fmt(nus[i]) + ",");
  return out;
}

std::string csv_solution(const DiscreteSolution& sol) {
  std::string out = std::string("field,index,value") + kCrlf;
  for (Eigen::Index i = 0; i < sol.u.size(); ++i)
    out += "u," + std::to_string(i) + "," + fmt(sol.u[i]) + kCrlf;
  for (Eigen::Index i = 0; i < sol.p.size(); ++i)
    out += "p," + std::to_string(i) + "," + fmt(sol.p[i]) + kCrlf;
  return out;
}

std::string vtk_solution(const PolygonalMesh& mesh, const DofNumbering& numbering,
                         const MaterialField& material, const DiscreteSolution& sol) {
  const int nc = mesh.num_cells();
  const int nv = mesh.num_vertices();

  std::string out;
  out += "# vtk DataFile Version 4.2\n";
  out += "brinkman vem cell fields\n";
  out += "ASCII\n";
  out += "DATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(nv) + " double\n";
  for (const Vec2& p : mesh.vertices())
    out += fmt(p.x()) + " " + fmt(p.y()) + " 0\n";

  int list_len = 0;
  for (int c = 0; c < nc; ++c) list_len += 1 + static_cast<int>(mesh.cells()[c].size());
  out += "CELLS " + std::to_string(nc) + " " + std::to_string(list_len) + "\n";
  for (int c = 0; c < nc; ++c) {
    out += std::to_string(mesh.cells()[c].size());
    for (int v : mesh.cells()[c]) out += " " + std::to_string(v);
    out += "\n";
  }
  out += "CELL_TYPES " + std::to_string(nc) + "\n";
  for (int c = 0; c < nc; ++c) out += "7\n"; // VTK_POLYGON

  std::vector<double> ux(nc), uy(nc), dv(nc), pr(nc);
  for (int c = 0; c < nc; ++c) {
    const ElementKernel K(mesh, c, numbering.order(),
                          material(c, mesh.geometry(c).centroid));
    const CellView view = cell_view(K, numbering, sol);
    const int nk = K.basis_k().size();
    const Eigen::RowVectorXd ik = K.gram_k().row(0); // int_K m_j
    const Eigen::RowVectorXd ikm1 = K.gram_km1().row(0);
    ux[c] = ik.dot(view.u_zero.head(nk)) / K.area();
    uy[c] = ik.dot(view.u_zero.tail(nk)) / K.area();
    dv[c] = ikm1.dot(view.div) / K.area();
    pr[c] = ikm1.dot(view.pressure) / K.area();
  }

  out += "CELL_DATA " + std::to_string(nc) + "\n";
  out += "VECTORS velocity double\n";
  for (int c = 0; c < nc; ++c) out += fmt(ux[c]) + " " + fmt(uy[c]) + " 0\n";
  const auto scalars = [&out, nc](const char* name, const std::vector<double>& vals) {
    out += std::string("SCALARS ") + name + " double 1\n";
    out += "LOOKUP_TABLE default\n";
    for (int c = 0; c < nc; ++c) out += fmt(vals[c]) + "\n";
  };
  std::vector<double> speed(nc);
  for (int c = 0; c < nc; ++c) speed[c] = std::hypot(ux[c], uy[c]);
  scalars("speed", speed);
  scalars("divergence", dv);
  scalars("pressure", pr);
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AnalysisError("cannot open output file '" + path + "'");
  out << content;
  if (!out) throw AnalysisError("failed writing output file '" + path + "'");
}

} // namespace brinkvem
