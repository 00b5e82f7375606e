#include "brinkvem/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace brinkvem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double num(const std::string& tok, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + tok + "'");
  }
}

int integer(const std::string& tok, int line) {
  const double v = num(tok, line);
  const int i = static_cast<int>(std::lround(v));
  if (std::abs(v - i) > 0) fail(line, "expected an integer, got '" + tok + "'");
  return i;
}

bool boolean(const std::string& tok, int line) {
  if (tok == "true" || tok == "on" || tok == "1") return true;
  if (tok == "false" || tok == "off" || tok == "0") return false;
  fail(line, "expected true/false, got '" + tok + "'");
}

Expr expr(const std::string& text, int line, const std::string& key) {
  try {
    return Expr::parse(text);
  } catch (const ExprError& e) {
    fail(line, "in '" + key + "': " + e.what());
  }
}

/// 1 token -> s*I, 4 tokens -> row-major 2x2; must be symmetric positive
/// definite.
Eigen::Matrix2d kinv_matrix(const std::vector<std::string>& tok, std::size_t first,
                            int line) {
  Eigen::Matrix2d m;
  if (tok.size() - first == 1) {
    m = num(tok[first], line) * Eigen::Matrix2d::Identity();
  } else if (tok.size() - first == 4) {
    m << num(tok[first], line), num(tok[first + 1], line), num(tok[first + 2], line),
        num(tok[first + 3], line);
  } else {
    fail(line, "permeability needs 1 (scalar) or 4 (2x2 row-major) numbers");
  }
  const double scale = m.cwiseAbs().maxCoeff();
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-12 * scale)
    fail(line, "inverse permeability must be symmetric");
  // 2x2 SPD test: positive trace and determinant
  if (!(m.trace() > 0.0) || !(m.determinant() > 0.0))
    fail(line, "inverse permeability must be positive definite");
  return m;
}

Domain parse_domain(const std::vector<std::string>& tok, int line) {
  try {
    if (tok.empty()) fail(line, "empty domain value");
    if (tok[0] == "rectangle" && tok.size() == 5)
      return Domain::rectangle(Vec2(num(tok[1], line), num(tok[2], line)),
                               Vec2(num(tok[3], line), num(tok[4], line)));
    if (tok[0] == "rectangle-minus-disk" && tok.size() == 8)
      return Domain::rectangle_minus_disk(
          Vec2(num(tok[1], line), num(tok[2], line)),
          Vec2(num(tok[3], line), num(tok[4], line)),
          Vec2(num(tok[5], line), num(tok[6], line)), num(tok[7], line));
    if (tok[0] == "step" && tok.size() == 7)
      return Domain::step(Vec2(num(tok[1], line), num(tok[2], line)),
                          Vec2(num(tok[3], line), num(tok[4], line)),
                          Vec2(num(tok[5], line), num(tok[6], line)));
  } catch (const MeshError& e) {
    fail(line, std::string("invalid domain: ") + e.what());
  }
  fail(line, "domain must be 'rectangle x0 y0 x1 y1', "
             "'rectangle-minus-disk x0 y0 x1 y1 cx cy r' or "
             "'step x0 y0 x1 y1 cutx cuty'");
}

TagRule parse_tag_rule(const std::vector<std::string>& tok, int line) {
  if (tok.size() < 2) fail(line, "rule needs '<tag> <kind> [params]'");
  const std::string& tag = tok[0];
  const std::string& kind = tok[1];
  if (kind == "halfplane" && tok.size() == 5)
    return TagRule::halfplane(tag, Vec2(num(tok[2], line), num(tok[3], line)),
                              num(tok[4], line));
  if (kind == "box" && tok.size() == 6)
    return TagRule::box(tag, Vec2(num(tok[2], line), num(tok[3], line)),
                        Vec2(num(tok[4], line), num(tok[5], line)));
  if (kind == "circle" && tok.size() == 5)
    return TagRule::circle(tag, Vec2(num(tok[2], line), num(tok[3], line)),
                           num(tok[4], line));
  if (kind == "always" && tok.size() == 2) return TagRule::always(tag);
  fail(line, "rule kinds: 'halfplane nx ny c', 'box x0 y0 x1 y1', "
             "'circle cx cy r', 'always'");
}

} // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool exact_phi = false;
  Expr phi;
  bool family_set = false;

  std::istringstream is(text);
  std::string raw;
  std::string section;
  std::string bc_tag;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      bc_tag.clear();
      if (section.rfind("bc ", 0) == 0) {
        bc_tag = trim(section.substr(3));
        if (bc_tag.empty()) fail(line, "empty tag in [bc <tag>]");
        if (cfg.bcs.count(bc_tag)) fail(line, "duplicate section [bc " + bc_tag + "]");
        cfg.bcs[bc_tag] = BCEntry{};
        section = "bc";
      } else if (section != "run" && section != "mesh" && section != "permeability" &&
                 section != "tags" && section != "exact" && section != "convergence" &&
                 section != "output") {
        fail(line, "unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (value.empty()) fail(line, "empty value for '" + key + "'");
    const std::vector<std::string> tok = split_ws(value);

    if (section == "run") {
      if (key == "order") cfg.order = integer(value, line);
      else if (key == "nu") cfg.nu = num(value, line);
      else if (key == "gamma") cfg.nitsche.gamma_d = num(value, line);
      else if (key == "gamma_n") cfg.nitsche.gamma_n = num(value, line);
      else if (key == "parallel") cfg.parallel = boolean(value, line);
      else fail(line, "unknown [run] key '" + key + "'");
    } else if (section == "mesh") {
      if (key == "family") {
        try {
          cfg.family = family_from_string(value);
        } catch (const std::exception& e) {
          fail(line, e.what());
        }
        family_set = true;
      } else if (key == "n") {
        cfg.n_cells = integer(value, line);
      } else if (key == "seed") {
        try {
          cfg.seed = std::stoull(value);
        } catch (const std::exception&) {
          fail(line, "invalid seed '" + value + "'");
        }
      } else if (key == "domain") {
        cfg.domain = parse_domain(tok, line);
      } else if (key == "file") {
        cfg.from_file = true;
        cfg.mesh_file = value;
      } else {
        fail(line, "unknown [mesh] key '" + key + "'");
      }
    } else if (section == "permeability") {
      if (key == "kinv") {
        cfg.kinv_base = kinv_matrix(tok, 0, line);
      } else if (key == "region") {
        PermRegion r;
        if (tok.size() >= 5 && tok[0] == "box") {
          r.shape = PermRegion::Shape::box;
          r.a = Vec2(num(tok[1], line), num(tok[2], line));
          r.b = Vec2(num(tok[3], line), num(tok[4], line));
          r.kinv = kinv_matrix(tok, 5, line);
        } else if (tok.size() >= 4 && tok[0] == "disk") {
          r.shape = PermRegion::Shape::disk;
          r.a = Vec2(num(tok[1], line), num(tok[2], line));
          r.r = num(tok[3], line);
          r.kinv = kinv_matrix(tok, 4, line);
        } else {
          fail(line, "region must be 'box x0 y0 x1 y1 <kinv>' or 'disk cx cy r <kinv>'");
        }
        cfg.regions.push_back(r);
      } else {
        fail(line, "unknown [permeability] key '" + key + "'");
      }
    } else if (section == "tags") {
      if (key == "rule") cfg.tag_rules.push_back(parse_tag_rule(tok, line));
      else fail(line, "unknown [tags] key '" + key + "'");
    } else if (section == "bc") {
      BCEntry& e = cfg.bcs[bc_tag];
      if (key == "type") {
        if (value == "dirichlet") e.type = BCondition::Type::dirichlet;
        else if (value == "slip") e.type = BCondition::Type::slip;
        else if (value == "outflow" || value == "free_outflow")
          e.type = BCondition::Type::free_outflow;
        else fail(line, "bc type must be dirichlet, slip or outflow");
      } else if (key == "gx") e.gx = expr(value, line, key);
      else if (key == "gy") e.gy = expr(value, line, key);
      else if (key == "g1x") e.g1x = expr(value, line, key);
      else if (key == "g1y") e.g1y = expr(value, line, key);
      else if (key == "g2x") e.g2x = expr(value, line, key);
      else if (key == "g2y") e.g2y = expr(value, line, key);
      else fail(line, "unknown [bc] key '" + key + "'");
    } else if (section == "exact") {
      if (key == "u1") cfg.exact_u1 = expr(value, line, key);
      else if (key == "u2") cfg.exact_u2 = expr(value, line, key);
      else if (key == "p") cfg.exact_p = expr(value, line, key);
      else if (key == "phi") { phi = expr(value, line, key); exact_phi = true; }
      else fail(line, "unknown [exact] key '" + key + "'");
      cfg.has_exact = true;
    } else if (section == "convergence") {
      if (key == "levels") cfg.levels = integer(value, line);
      else if (key == "nus") {
        for (const auto& t : tok) cfg.nus.push_back(num(t, line));
      } else {
        fail(line, "unknown [convergence] key '" + key + "'");
      }
    } else if (section == "output") {
      if (key == "csv") cfg.csv_path = value;
      else if (key == "vtk") cfg.vtk_path = value;
      else fail(line, "unknown [output] key '" + key + "'");
    } else {
      fail(line, "key '" + key + "' outside any section");
    }
  }

  // --- validation and derived fields --------------------------------------
  if (cfg.order < 2) throw ConfigError("order must be >= 2");
  if (!(cfg.nu > 0.0) || cfg.nu > 1.0) throw ConfigError("nu must lie in (0, 1]");
  if (cfg.levels < 1) throw ConfigError("levels must be >= 1");
  for (const double nu : cfg.nus)
    if (!(nu > 0.0) || nu > 1.0) throw ConfigError("every sweep nu must lie in (0, 1]");
  if (cfg.from_file && family_set)
    throw ConfigError("[mesh] cannot combine 'file' with 'family'");

  if (exact_phi) {
    if (cfg.exact_u1.valid() || cfg.exact_u2.valid())
      throw ConfigError("[exact] gives either phi or u1/u2, not both");
    cfg.exact_u1 = phi.derivative('y');
    cfg.exact_u2 = Expr::number(0) - phi.derivative('x');
  }
  if (cfg.has_exact &&
      (!cfg.exact_u1.valid() || !cfg.exact_u2.valid() || !cfg.exact_p.valid()))
    throw ConfigError("[exact] needs u1, u2 (or phi) and p");

  for (auto& [tag, e] : cfg.bcs) {
    (void)tag;
    if (!e.gx.valid()) e.gx = Expr::number(0);
    if (!e.gy.valid()) e.gy = Expr::number(0);
    if (!e.g1x.valid()) e.g1x = Expr::number(0);
    if (!e.g1y.valid()) e.g1y = Expr::number(0);
    if (!e.g2x.valid()) e.g2x = Expr::number(0);
    if (!e.g2y.valid()) e.g2y = Expr::number(0);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

Domain parse_domain_string(const std::string& text) {
  return parse_domain(split_ws(text), 0);
}

// --- derived objects ------------------------------------------------------

Material RunConfig::base_material() const { return Material{kinv_base, nu}; }

MaterialField RunConfig::material_field() const {
  return [base = kinv_base, nu = nu, regions = regions](int, const Vec2& c) {
    for (const PermRegion& r : regions) {
      const bool inside = r.shape == PermRegion::Shape::box
                              ? (c.x() >= r.a.x() && c.x() <= r.b.x() &&
                                 c.y() >= r.a.y() && c.y() <= r.b.y())
                              : (c - r.a).norm() <= r.r;
      if (inside) return Material{r.kinv, nu};
    }
    return Material{base, nu};
  };
}

PolygonalMesh RunConfig::build_mesh() const {
  PolygonalMesh mesh =
      from_file ? read_mesh(mesh_file) : generate(family, n_cells, seed, domain);
  if (!tag_rules.empty()) mesh = tag_boundary(mesh, tag_rules);
  return mesh;
}

BoundarySpec RunConfig::boundary_spec() const {
  if (bcs.empty()) throw ConfigError("no [bc <tag>] sections given");
  const auto field = [](const Expr& ex, const Expr& ey) -> VectorField {
    return [ex, ey](const Vec2& p) {
      return Vec2(ex.eval(p.x(), p.y()), ey.eval(p.x(), p.y()));
    };
  };
  BoundarySpec spec;
  for (const auto& [tag, e] : bcs) {
    switch (e.type) {
      case BCondition::Type::dirichlet:
        spec.by_tag.emplace(tag, BCondition::dirichlet(field(e.gx, e.gy)));
        break;
      case BCondition::Type::slip:
        spec.by_tag.emplace(tag,
                            BCondition::slip(field(e.g1x, e.g1y), field(e.g2x, e.g2y)));
        break;
      case BCondition::Type::free_outflow:
        spec.by_tag.emplace(tag, BCondition::free_outflow());
        break;
    }
  }
  return spec;
}

BoundaryPlan RunConfig::boundary_plan() const {
  BoundaryPlan plan;
  for (const auto& [tag, e] : bcs) {
    switch (e.type) {
      case BCondition::Type::dirichlet: plan[tag] = BCKind::dirichlet; break;
      case BCondition::Type::slip: plan[tag] = BCKind::slip; break;
      case BCondition::Type::free_outflow: plan[tag] = BCKind::free_outflow; break;
    }
  }
  return plan;
}

ManufacturedCase RunConfig::manufactured() const {
  if (!has_exact) throw ConfigError("this run needs an [exact] section");
  try {
    return ManufacturedCase(exact_u1, exact_u2, exact_p, base_material());
  } catch (const AnalysisError& e) {
    throw ConfigError(std::string("[exact] rejected: ") + e.what());
  }
}

} // namespace brinkvem
