#include "brinkvem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace brinkvem {

namespace {

double cross2(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }

double signed_area(const std::vector<Vec2>& poly) {
  double s = 0.0;
  const int m = static_cast<int>(poly.size());
  for (int i = 0; i < m; ++i) s += cross2(poly[i], poly[(i + 1) % m]);
  return 0.5 * s;
}

Vec2 polygon_centroid(const std::vector<Vec2>& poly, double area) {
  Vec2 c = Vec2::Zero();
  const int m = static_cast<int>(poly.size());
  for (int i = 0; i < m; ++i) {
    const Vec2 &p = poly[i], &q = poly[(i + 1) % m];
    c += (p + q) * cross2(p, q);
  }
  return c / (6.0 * area);
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  // proper intersection test for non-adjacent polygon sides
  const double d1 = cross2(b - a, c - a);
  const double d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c);
  const double d4 = cross2(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// clip a polygon by the half-plane {x : n.(x - p) >= 0}
std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& p, const Vec2& n) {
  std::vector<Vec2> out;
  const int m = static_cast<int>(poly.size());
  if (m == 0) return out;
  out.reserve(m + 2);
  for (int i = 0; i < m; ++i) {
    const Vec2 &a = poly[i], &b = poly[(i + 1) % m];
    const double fa = n.dot(a - p), fb = n.dot(b - p);
    if (fa >= 0.0) out.push_back(a);
    if ((fa > 0.0 && fb < 0.0) || (fa < 0.0 && fb > 0.0)) {
      const double t = fa / (fa - fb);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

} // namespace

PolygonalMesh::PolygonalMesh(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells,
                             std::vector<BoundaryEdge> boundary)
    : vertices_(std::move(vertices)), cells_(std::move(cells)), boundary_(std::move(boundary)) {
  finalize();
}

void PolygonalMesh::finalize() {
  const int nv = num_vertices();
  if (nv < 3) throw MeshError("mesh has fewer than 3 vertices");
  if (cells_.empty()) throw MeshError("mesh has no cells");

  geom_.resize(cells_.size());
  cell_edges_.assign(cells_.size(), {});
  h_edge_ = 0.0;
  h_diam_ = 0.0;
  total_area_ = 0.0;

  std::map<std::pair<int, int>, int> edge_of;
  edges_.clear();

  for (int c = 0; c < num_cells(); ++c) {
    const auto& loop = cells_[c];
    const int m = static_cast<int>(loop.size());
    if (m < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    std::vector<Vec2> poly(m);
    for (int i = 0; i < m; ++i) {
      if (loop[i] < 0 || loop[i] >= nv)
        throw MeshError("cell " + std::to_string(c) + " references vertex " +
                        std::to_string(loop[i]) + " out of range [0," + std::to_string(nv) + ")");
      poly[i] = vertices_[loop[i]];
    }
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        if (loop[i] == loop[j])
          throw MeshError("cell " + std::to_string(c) + " repeats vertex " +
                          std::to_string(loop[i]));
    // simplicity: no two non-adjacent sides may cross
    for (int i = 0; i < m; ++i)
      for (int j = i + 2; j < m; ++j) {
        if (i == 0 && j == m - 1) continue;
        if (segments_cross(poly[i], poly[(i + 1) % m], poly[j], poly[(j + 1) % m]))
          throw MeshError("cell " + std::to_string(c) + " is not a simple polygon");
      }

    const double area = signed_area(poly);
    if (area <= 0.0)
      throw MeshError("cell " + std::to_string(c) +
                      " is not counter-clockwise or has nonpositive area (area=" +
                      std::to_string(area) + ")");

    CellGeometry g;
    g.area = area;
    g.centroid = polygon_centroid(poly, area);
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) g.diameter = std::max(g.diameter, (poly[i] - poly[j]).norm());

    // star point for the quadrature fan: centroid when it sees all vertices,
    // otherwise the Chebyshev centre of the polygon kernel
    bool convex = true;
    for (int i = 0; i < m; ++i) {
      const Vec2 e0 = poly[(i + 1) % m] - poly[i];
      const Vec2 e1 = poly[(i + 2) % m] - poly[(i + 1) % m];
      if (cross2(e0, e1) < 0.0) convex = false;
    }
    if (convex) {
      g.star = g.centroid;
    } else {
      const auto kernel = polygon_kernel(poly);
      if (kernel.size() < 3)
        throw MeshError("cell " + std::to_string(c) + " is not star-shaped (empty kernel)");
      const auto [centre, radius] = chebyshev_center(kernel);
      if (radius <= 0.0)
        throw MeshError("cell " + std::to_string(c) + " has a degenerate kernel");
      // prefer the centroid when it lies well inside the kernel
      bool centroid_ok = true;
      const int km = static_cast<int>(kernel.size());
      for (int i = 0; i < km && centroid_ok; ++i) {
        const Vec2 &a = kernel[i], &b = kernel[(i + 1) % km];
        if (cross2(b - a, g.centroid - a) < 0.1 * radius * (b - a).norm()) centroid_ok = false;
      }
      g.star = centroid_ok ? g.centroid : centre;
    }
    geom_[c] = g;
    h_diam_ = std::max(h_diam_, g.diameter);
    total_area_ += area;

    cell_edges_[c].resize(m);
    for (int i = 0; i < m; ++i) {
      const int va = loop[i], vb = loop[(i + 1) % m];
      const double len = (vertices_[va] - vertices_[vb]).norm();
      if (len <= 0.0)
        throw MeshError("cell " + std::to_string(c) + " has a zero-length edge at vertex " +
                        std::to_string(va));
      const auto key = std::minmax(va, vb);
      auto it = edge_of.find(key);
      int ei;
      if (it == edge_of.end()) {
        MeshEdge e;
        e.a = key.first;
        e.b = key.second;
        e.length = len;
        ei = static_cast<int>(edges_.size());
        edges_.push_back(e);
        edge_of.emplace(key, ei);
        h_edge_ = std::max(h_edge_, len);
      } else {
        ei = it->second;
      }
      MeshEdge& e = edges_[ei];
      if (va == e.a) {
        if (e.cell_in >= 0)
          throw MeshError("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                          ") traversed twice in the same direction: mesh is not conforming");
        e.cell_in = c;
      } else {
        if (e.cell_out >= 0)
          throw MeshError("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                          ") traversed twice in the same direction: mesh is not conforming");
        e.cell_out = c;
      }
      cell_edges_[c][i] = ei;
    }
  }

  // boundary bookkeeping
  std::map<std::pair<int, int>, int> boundary_of;
  for (int i = 0; i < static_cast<int>(boundary_.size()); ++i) {
    const auto& be = boundary_[i];
    if (be.v0 < 0 || be.v0 >= nv || be.v1 < 0 || be.v1 >= nv)
      throw MeshError("boundary entry " + std::to_string(i) + " references vertex out of range");
    if (be.tag.empty())
      throw MeshError("boundary entry " + std::to_string(i) + " has an empty tag");
    const auto key = std::minmax(be.v0, be.v1);
    if (!boundary_of.emplace(key, i).second)
      throw MeshError("boundary entry " + std::to_string(i) + " duplicates edge (" +
                      std::to_string(be.v0) + "," + std::to_string(be.v1) + ")");
  }
  for (int ei = 0; ei < num_edges(); ++ei) {
    MeshEdge& e = edges_[ei];
    const int ncells = (e.cell_in >= 0 ? 1 : 0) + (e.cell_out >= 0 ? 1 : 0);
    const auto it = boundary_of.find({e.a, e.b});
    if (ncells == 1) {
      if (it == boundary_of.end())
        throw MeshError("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                        ") lies on the boundary but is missing from the boundary list");
      e.boundary_index = it->second;
    } else {
      if (it != boundary_of.end())
        throw MeshError("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                        ") is interior but listed as boundary");
    }
  }
  if (boundary_of.size() + 0u !=
      static_cast<size_t>(std::count_if(edges_.begin(), edges_.end(),
                                        [](const MeshEdge& e) { return e.boundary_index >= 0; })))
    throw MeshError("boundary list contains edges that do not exist in the mesh");
}

int PolygonalMesh::edge_index(int a, int b) const {
  const auto key = std::minmax(a, b);
  for (int ei = 0; ei < num_edges(); ++ei)
    if (edges_[ei].a == key.first && edges_[ei].b == key.second) return ei;
  return -1;
}

std::vector<Vec2> PolygonalMesh::cell_vertices(int c) const {
  std::vector<Vec2> poly;
  poly.reserve(cells_[c].size());
  for (int v : cells_[c]) poly.push_back(vertices_[v]);
  return poly;
}

// --- tagging --------------------------------------------------------------

TagRule TagRule::halfplane(std::string tag, const Vec2& normal, double offset) {
  TagRule r;
  r.tag = std::move(tag);
  r.kind = Kind::halfplane;
  r.a = normal;
  r.c = offset;
  return r;
}

TagRule TagRule::box(std::string tag, const Vec2& lo, const Vec2& hi) {
  TagRule r;
  r.tag = std::move(tag);
  r.kind = Kind::box;
  r.a = lo;
  r.b = hi;
  return r;
}

TagRule TagRule::circle(std::string tag, const Vec2& centre, double radius) {
  TagRule r;
  r.tag = std::move(tag);
  r.kind = Kind::circle;
  r.a = centre;
  r.c = radius;
  return r;
}

TagRule TagRule::always(std::string tag) {
  TagRule r;
  r.tag = std::move(tag);
  r.kind = Kind::always;
  return r;
}

static bool rule_matches(const TagRule& r, const Vec2& m, double tol) {
  switch (r.kind) {
    case TagRule::Kind::halfplane:
      return r.a.dot(m) <= r.c + tol;
    case TagRule::Kind::box:
      return m.x() >= r.a.x() - tol && m.x() <= r.b.x() + tol && m.y() >= r.a.y() - tol &&
             m.y() <= r.b.y() + tol;
    case TagRule::Kind::circle:
      return (m - r.a).norm() <= r.c + tol;
    case TagRule::Kind::always:
      return true;
  }
  return false;
}

PolygonalMesh tag_boundary(const PolygonalMesh& mesh, const std::vector<TagRule>& rules,
                           double tol) {
  std::vector<BoundaryEdge> tagged = mesh.boundary();
  std::vector<Vec2> unmatched;
  for (auto& be : tagged) {
    const Vec2 m = 0.5 * (mesh.vertices()[be.v0] + mesh.vertices()[be.v1]);
    bool found = false;
    for (const auto& r : rules) {
      if (rule_matches(r, m, tol)) {
        be.tag = r.tag;
        found = true;
        break;
      }
    }
    if (!found) unmatched.push_back(m);
  }
  if (!unmatched.empty()) {
    std::ostringstream os;
    os << "tag_boundary: no rule matches " << unmatched.size() << " boundary edge(s); midpoints:";
    for (size_t i = 0; i < unmatched.size() && i < 8; ++i)
      os << " (" << unmatched[i].x() << "," << unmatched[i].y() << ")";
    if (unmatched.size() > 8) os << " ...";
    throw MeshError(os.str());
  }
  return PolygonalMesh(mesh.vertices(), mesh.cells(), std::move(tagged));
}

// --- kernel and quality ---------------------------------------------------

std::vector<Vec2> polygon_kernel(const std::vector<Vec2>& poly) {
  Vec2 lo = poly.front(), hi = poly.front();
  for (const auto& p : poly) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 pad = 0.1 * (hi - lo) + Vec2(1e-12, 1e-12);
  std::vector<Vec2> kernel = {lo - pad, Vec2(hi.x() + pad.x(), lo.y() - pad.y()), hi + pad,
                              Vec2(lo.x() - pad.x(), hi.y() + pad.y())};
  const int m = static_cast<int>(poly.size());
  for (int i = 0; i < m && !kernel.empty(); ++i) {
    const Vec2 &a = poly[i], &b = poly[(i + 1) % m];
    const Vec2 t = b - a;
    const Vec2 n(-t.y(), t.x()); // inward for CCW polygons
    kernel = clip_halfplane(kernel, a, n);
  }
  return kernel;
}

std::pair<Vec2, double> chebyshev_center(const std::vector<Vec2>& convex) {
  const int m = static_cast<int>(convex.size());
  if (m < 3) return {Vec2::Zero(), 0.0};
  // constraints n_i . x - b_i >= r with unit inward normals
  std::vector<Vec2> n(m);
  std::vector<double> b(m);
  for (int i = 0; i < m; ++i) {
    const Vec2 t = convex[(i + 1) % m] - convex[i];
    const double len = t.norm();
    if (len <= 0.0) continue;
    n[i] = Vec2(-t.y(), t.x()) / len;
    b[i] = n[i].dot(convex[i]);
  }
  Vec2 best = Vec2::Zero();
  double best_r = -1.0;
  Eigen::Matrix3d A;
  Eigen::Vector3d rhs;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int l = j + 1; l < m; ++l) {
        A << n[i].x(), n[i].y(), -1.0, n[j].x(), n[j].y(), -1.0, n[l].x(), n[l].y(), -1.0;
        if (std::abs(A.determinant()) < 1e-14) continue;
        rhs << b[i], b[j], b[l];
        const Eigen::Vector3d sol = A.partialPivLu().solve(rhs);
        const Vec2 x(sol[0], sol[1]);
        const double r = sol[2];
        if (r <= best_r) continue;
        bool feasible = true;
        for (int q = 0; q < m && feasible; ++q)
          if (n[q].dot(x) - b[q] < r - 1e-12) feasible = false;
        if (feasible) {
          best = x;
          best_r = r;
        }
      }
  if (best_r < 0.0) return {Vec2::Zero(), 0.0};
  return {best, best_r};
}

QualityReport quality(const PolygonalMesh& mesh) {
  QualityReport rep;
  rep.edge_ratio.resize(mesh.num_cells());
  rep.kernel_ratio.resize(mesh.num_cells());
  rep.min_edge_ratio = 1.0;
  rep.min_kernel_ratio = 1.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto poly = mesh.cell_vertices(c);
    const double hK = mesh.geometry(c).diameter;
    double min_edge = std::numeric_limits<double>::max();
    const int m = static_cast<int>(poly.size());
    for (int i = 0; i < m; ++i) min_edge = std::min(min_edge, (poly[(i + 1) % m] - poly[i]).norm());
    rep.edge_ratio[c] = min_edge / hK;
    const auto kernel = polygon_kernel(poly);
    double radius = 0.0;
    if (kernel.size() >= 3) radius = chebyshev_center(kernel).second;
    rep.kernel_ratio[c] = radius / hK;
    rep.min_edge_ratio = std::min(rep.min_edge_ratio, rep.edge_ratio[c]);
    rep.min_kernel_ratio = std::min(rep.min_kernel_ratio, rep.kernel_ratio[c]);
  }
  return rep;
}

// --- JSON -----------------------------------------------------------------

using nlohmann::json;

PolygonalMesh mesh_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MeshError(std::string("mesh json: ") + e.what());
  }
  for (const char* key : {"vertices", "cells", "boundary"})
    if (!j.contains(key)) throw MeshError(std::string("mesh json: missing key '") + key + "'");
  try {
    std::vector<Vec2> vertices;
    for (const auto& v : j.at("vertices")) {
      if (!v.is_array() || v.size() != 2)
        throw MeshError("mesh json: each vertex must be a [x, y] pair");
      vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    }
    std::vector<std::vector<int>> cells;
    for (const auto& cj : j.at("cells")) {
      std::vector<int> loop;
      for (const auto& v : cj) loop.push_back(v.get<int>());
      cells.push_back(std::move(loop));
    }
    std::vector<BoundaryEdge> boundary;
    for (const auto& bj : j.at("boundary")) {
      BoundaryEdge be;
      if (!bj.contains("edge") || !bj.contains("tag"))
        throw MeshError("mesh json: boundary entries need 'edge' and 'tag'");
      be.v0 = bj.at("edge").at(0).get<int>();
      be.v1 = bj.at("edge").at(1).get<int>();
      be.tag = bj.at("tag").get<std::string>();
      boundary.push_back(std::move(be));
    }
    return PolygonalMesh(std::move(vertices), std::move(cells), std::move(boundary));
  } catch (const json::exception& e) {
    throw MeshError(std::string("mesh json: ") + e.what());
  }
}

std::string mesh_to_json(const PolygonalMesh& mesh) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : mesh.vertices()) j["vertices"].push_back({v.x(), v.y()});
  j["cells"] = mesh.cells();
  j["boundary"] = json::array();
  for (const auto& be : mesh.boundary())
    j["boundary"].push_back({{"edge", {be.v0, be.v1}}, {"tag", be.tag}});
  return j.dump(2);
}

PolygonalMesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return mesh_from_json(buf.str());
}

void write_mesh(const PolygonalMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file: " + path);
  out << mesh_to_json(mesh) << "\n";
}

std::vector<BoundaryEdge> detect_boundary(const std::vector<Vec2>& vertices,
                                          const std::vector<std::vector<int>>& cells) {
  (void)vertices;
  std::map<std::pair<int, int>, int> count;
  std::map<std::pair<int, int>, std::pair<int, int>> oriented;
  for (const auto& loop : cells) {
    const int m = static_cast<int>(loop.size());
    for (int i = 0; i < m; ++i) {
      const int a = loop[i], b = loop[(i + 1) % m];
      const auto key = std::minmax(a, b);
      count[key]++;
      oriented[key] = {a, b};
    }
  }
  std::vector<BoundaryEdge> out;
  for (const auto& [key, c] : count)
    if (c == 1) out.push_back({oriented[key].first, oriented[key].second, ""});
  return out;
}

} // namespace brinkvem
