// Result emission: RFC-4180 CSV tables (CRLF, %.16e numbers) and VTK legacy
// ASCII unstructured grids carrying the piecewise-constant cell views of the
// solution.
#pragma once

#include <string>
#include <vector>

#include "brinkvem/analysis.hpp"

namespace brinkvem {

/// Columns N,h,err_u,rate_u,err_p,rate_p,div_norm,err_u_vol; absent rates
/// (first row) print as "-".
std::string csv_convergence(const std::vector<ConvergenceRecord>& rows);

/// Same columns behind a leading nu column, one block per viscosity.
std::string csv_nu_sweep(const std::vector<double>& nus,
                         const std::vector<std::vector<ConvergenceRecord>>& tables);

/// DOF dump: field,index,value with field "u" then "p".
std::string csv_solution(const DiscreteSolution& sol);

/// VTK legacy ASCII 4.2 unstructured grid of polygons with cell data only:
/// velocity (cell averages of Pi^0 u_h), speed, divergence and the P_0
/// pressure view.
std::string vtk_solution(const PolygonalMesh& mesh, const DofNumbering& numbering,
                         const MaterialField& material, const DiscreteSolution& sol);

void write_text(const std::string& path, const std::string& content);

} // namespace brinkvem
