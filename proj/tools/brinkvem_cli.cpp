// Command line driver: mesh generation, single solves and convergence
// studies for the divergence-conforming virtual element Brinkman solver.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
#include <cstdint>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "brinkvem/config.hpp"
#include "brinkvem/output.hpp"

namespace {

using namespace brinkvem;

struct MeshArgs {
  std::string family = "voronoi";
  int n = 64;
  std::uint64_t seed = 0;
  std::string domain = "rectangle 0 0 1 1";
  std::string output;
};

struct RunArgs {
  std::string config;
  std::string csv;
  std::string vtk;
  int levels = 0; // 0 = value from config
};

void run_mesh(const MeshArgs& args) {
  const PolygonalMesh mesh = generate(family_from_string(args.family), args.n, args.seed,
                                      parse_domain_string(args.domain));
  write_mesh(mesh, args.output);
  std::cout << "wrote " << args.output << ": " << mesh.num_cells() << " cells, "
            << mesh.num_vertices() << " vertices, h = " << mesh.h() << "\n";
}

/// Every boundary tag of the mesh must carry a [bc] section.
void check_bc_coverage(const RunConfig& cfg, const PolygonalMesh& mesh) {
  std::set<std::string> missing;
  for (const BoundaryEdge& b : mesh.boundary())
    if (cfg.bcs.count(b.tag) == 0) missing.insert(b.tag);
  if (missing.empty()) return;
  std::string list;
  for (const auto& t : missing) list += (list.empty() ? "" : ", ") + t;
  throw ConfigError("no [bc] section for boundary tag(s): " + list);
}

void run_solve(const RunArgs& args) {
  RunConfig cfg = load_config(args.config);
  if (!args.csv.empty()) cfg.csv_path = args.csv;
  if (!args.vtk.empty()) cfg.vtk_path = args.vtk;

  const PolygonalMesh mesh = cfg.build_mesh();

  BoundarySpec bc;
  BoundaryPlan plan;
  VectorField f = [](const Vec2&) { return Vec2::Zero(); };
  std::optional<ManufacturedCase> mc;
  if (cfg.has_exact) {
    mc.emplace(cfg.manufactured());
    f = mc->source_field();
  }
  if (!cfg.bcs.empty()) {
    check_bc_coverage(cfg, mesh);
    bc = cfg.boundary_spec();
    plan = cfg.boundary_plan();
  } else if (mc) {
    for (const BoundaryEdge& b : mesh.boundary()) plan[b.tag] = BCKind::dirichlet;
    bc = make_boundary_spec(*mc, mesh, plan);
  } else {
    throw ConfigError("a solve needs [bc <tag>] sections or an [exact] section");
  }

  AssemblyOptions opts;
  opts.nitsche = cfg.nitsche;
  opts.parallel = cfg.parallel;
  const SaddleSystem sys = assemble(mesh, cfg.order, cfg.material_field(), f, bc, opts);
  const DiscreteSolution sol = solve(sys);

  std::cout << "cells: " << mesh.num_cells() << "  velocity dofs: "
            << sys.numbering.velocity_dofs() << "  pressure dofs: "
            << sys.numbering.pressure_dofs() << "\n";
  std::cout << "solver residual: " << sol.residual
            << (sol.mean_constrained ? "  (zero-mean pressure)" : "") << "\n";
  if (mc) {
    const EnergyError eu = error_energy(mesh, sys.numbering, sol, *mc, plan);
    std::cout << "err_u: " << eu.full << "  (volume part: " << eu.volume << ")\n"
              << "err_p: " << error_pressure(mesh, sys.numbering, sol, *mc) << "\n"
              << "div_norm: " << divergence_norm(mesh, sys.numbering, sol) << "\n";
  }
  if (!cfg.csv_path.empty()) {
    write_text(cfg.csv_path, csv_solution(sol));
    std::cout << "wrote " << cfg.csv_path << "\n";
  }
  if (!cfg.vtk_path.empty()) {
    write_text(cfg.vtk_path, vtk_solution(mesh, sys.numbering, cfg.material_field(), sol));
    std::cout << "wrote " << cfg.vtk_path << "\n";
  }
}

void run_convergence(const RunArgs& args) {
  RunConfig cfg = load_config(args.config);
  if (!args.csv.empty()) cfg.csv_path = args.csv;
  if (args.levels > 0) cfg.levels = args.levels;
  if (cfg.from_file)
    throw ConfigError("a convergence study needs a generated mesh family, not a file");

  const ManufacturedCase mc = cfg.manufactured();
  StudyOptions opt;
  opt.family = cfg.family;
  opt.base_cells = cfg.n_cells;
  opt.levels = cfg.levels;
  opt.seed = cfg.seed;
  opt.domain = cfg.domain;
  opt.order = cfg.order;
  opt.nitsche = cfg.nitsche;
  opt.parallel = cfg.parallel;
  opt.plan = cfg.boundary_plan();

  std::string text;
  if (!cfg.nus.empty())
    text = csv_nu_sweep(cfg.nus, nu_sweep(mc, opt, cfg.nus));
  else
    text = csv_convergence(convergence_study(mc, opt));

  if (cfg.csv_path.empty()) {
    std::cout << text;
  } else {
    write_text(cfg.csv_path, text);
    std::cout << "wrote " << cfg.csv_path << "\n";
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Divergence-conforming virtual element solver for the 2D Brinkman "
               "equations with Nitsche boundary conditions"};
  app.require_subcommand(1);

  MeshArgs margs;
  CLI::App* cmesh = app.add_subcommand("mesh", "Generate a polygonal mesh (JSON)");
  cmesh->add_option("--family", margs.family, "triangle|quad|voronoi|nonconvex")
      ->capture_default_str();
  cmesh->add_option("--n", margs.n, "number of cells")->required();
  cmesh->add_option("--seed", margs.seed, "random seed (voronoi family)")
      ->capture_default_str();
  cmesh->add_option("--domain", margs.domain,
                    "'rectangle x0 y0 x1 y1', 'rectangle-minus-disk ... cx cy r' "
                    "or 'step ... cutx cuty'")
      ->capture_default_str();
  cmesh->add_option("-o,--output", margs.output, "output mesh file")->required();

  RunArgs sargs;
  CLI::App* csolve = app.add_subcommand("solve", "Solve one problem from a config file");
  csolve->add_option("-c,--config", sargs.config, "config file")->required();
  csolve->add_option("--csv", sargs.csv, "override the CSV output path");
  csolve->add_option("--vtk", sargs.vtk, "override the VTK output path");

  RunArgs cargs;
  CLI::App* cconv =
      app.add_subcommand("convergence", "Run a mesh-refinement study from a config file");
  cconv->add_option("-c,--config", cargs.config, "config file")->required();
  cconv->add_option("--csv", cargs.csv, "override the CSV output path");
  cconv->add_option("--levels", cargs.levels, "override the number of levels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmesh->parsed()) run_mesh(margs);
    if (csolve->parsed()) run_solve(sargs);
    if (cconv->parsed()) run_convergence(cargs);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ExprError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
