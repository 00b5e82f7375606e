#include "brinkvem/mesh_gen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_map>

namespace brinkvem {

// --- domains --------------------------------------------------------------

Domain Domain::rectangle(const Vec2& lo, const Vec2& hi) {
  Domain d;
  d.kind = Kind::rectangle;
  d.lo = lo;
  d.hi = hi;
  d.validate();
  return d;
}

Domain Domain::rectangle_minus_disk(const Vec2& lo, const Vec2& hi, const Vec2& centre,
                                    double radius) {
  Domain d;
  d.kind = Kind::rectangle_minus_disk;
  d.lo = lo;
  d.hi = hi;
  d.disk_center = centre;
  d.disk_radius = radius;
  d.validate();
  return d;
}

Domain Domain::step(const Vec2& lo, const Vec2& hi, const Vec2& cut) {
  Domain d;
  d.kind = Kind::step;
  d.lo = lo;
  d.hi = hi;
  d.cut = cut;
  d.validate();
  return d;
}

void Domain::validate() const {
  if (!(hi.x() > lo.x()) || !(hi.y() > lo.y()))
    throw MeshError("domain: bounding rectangle is degenerate");
  if (kind == Kind::rectangle_minus_disk) {
    if (!(disk_radius > 0.0)) throw MeshError("domain: disk radius must be positive");
    if (disk_center.x() - disk_radius <= lo.x() || disk_center.x() + disk_radius >= hi.x() ||
        disk_center.y() - disk_radius <= lo.y() || disk_center.y() + disk_radius >= hi.y())
      throw MeshError("domain: disk must lie strictly inside the rectangle");
  }
  if (kind == Kind::step) {
    if (!(cut.x() > lo.x()) || !(cut.x() < hi.x()) || !(cut.y() > lo.y()) || !(cut.y() < hi.y()))
      throw MeshError("domain: step corner must lie strictly inside the rectangle");
  }
}

double Domain::area() const {
  const double rect = (hi.x() - lo.x()) * (hi.y() - lo.y());
  switch (kind) {
    case Kind::rectangle:
      return rect;
    case Kind::rectangle_minus_disk:
      return rect - M_PI * disk_radius * disk_radius;
    case Kind::step:
      return rect - (cut.x() - lo.x()) * (cut.y() - lo.y());
  }
  return rect;
}

bool Domain::contains(const Vec2& p) const {
  if (p.x() <= lo.x() || p.x() >= hi.x() || p.y() <= lo.y() || p.y() >= hi.y()) return false;
  if (kind == Kind::rectangle_minus_disk && (p - disk_center).norm() <= disk_radius) return false;
  if (kind == Kind::step && p.x() < cut.x() && p.y() < cut.y()) return false;
  return true;
}

std::vector<std::pair<Vec2, Vec2>> Domain::boundary_segments() const {
  const double x0 = lo.x(), y0 = lo.y(), x1 = hi.x(), y1 = hi.y();
  if (kind == Kind::step) {
    const double cx = cut.x(), cy = cut.y();
    return {{{cx, y0}, {x1, y0}}, {{x1, y0}, {x1, y1}}, {{x1, y1}, {x0, y1}},
            {{x0, y1}, {x0, cy}}, {{x0, cy}, {cx, cy}}, {{cx, cy}, {cx, y0}}};
  }
  return {{{x0, y0}, {x1, y0}}, {{x1, y0}, {x1, y1}}, {{x1, y1}, {x0, y1}}, {{x0, y1}, {x0, y0}}};
}

MeshFamily family_from_string(const std::string& name) {
  if (name == "triangle") return MeshFamily::triangle;
  if (name == "quad") return MeshFamily::quad;
  if (name == "voronoi") return MeshFamily::voronoi;
  if (name == "nonconvex") return MeshFamily::nonconvex;
  throw MeshError("unknown mesh family '" + name +
                  "' (expected triangle, quad, voronoi or nonconvex)");
}

std::string family_to_string(MeshFamily family) {
  switch (family) {
    case MeshFamily::triangle: return "triangle";
    case MeshFamily::quad: return "quad";
    case MeshFamily::voronoi: return "voronoi";
    case MeshFamily::nonconvex: return "nonconvex";
  }
  return "?";
}

namespace {

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

// --- structured rectangle grids -------------------------------------------

struct Grid {
  int nx, ny;
  std::vector<double> x, y; // coordinate lines, endpoints exact

  Grid(int nx_, int ny_, const Domain& d) : nx(nx_), ny(ny_), x(nx_ + 1), y(ny_ + 1) {
    const double w = d.hi.x() - d.lo.x(), h = d.hi.y() - d.lo.y();
    for (int i = 0; i <= nx; ++i) x[i] = i == nx ? d.hi.x() : d.lo.x() + i * (w / nx);
    for (int j = 0; j <= ny; ++j) y[j] = j == ny ? d.hi.y() : d.lo.y() + j * (h / ny);
  }
  int vid(int i, int j) const { return j * (nx + 1) + i; }
};

void require_rectangle(MeshFamily family, const Domain& d) {
  if (d.kind != Domain::Kind::rectangle)
    throw MeshError("mesh family '" + family_to_string(family) +
                    "' is only available on rectangle domains");
}

std::vector<TagRule> rectangle_rules(const Domain& d) {
  return {TagRule::halfplane("left", Vec2(1, 0), d.lo.x()),
          TagRule::halfplane("right", Vec2(-1, 0), -d.hi.x()),
          TagRule::halfplane("bottom", Vec2(0, 1), d.lo.y()),
          TagRule::halfplane("top", Vec2(0, -1), -d.hi.y())};
}

PolygonalMesh build_tagged(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells,
                           const std::vector<TagRule>& rules) {
  auto boundary = detect_boundary(vertices, cells);
  for (auto& be : boundary) be.tag = "untagged";
  PolygonalMesh mesh(std::move(vertices), std::move(cells), std::move(boundary));
  return tag_boundary(mesh, rules);
}

PolygonalMesh generate_quad(int n_cells, const Domain& d) {
  const int n = static_cast<int>(std::lround(std::sqrt(double(n_cells))));
  if (n < 1 || n * n != n_cells)
    throw MeshError("quad family needs a perfect-square cell count, got " +
                    std::to_string(n_cells));
  Grid g(n, n, d);
  std::vector<Vec2> vertices((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) vertices[g.vid(i, j)] = Vec2(g.x[i], g.y[j]);
  std::vector<std::vector<int>> cells;
  cells.reserve(n_cells);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      cells.push_back({g.vid(i, j), g.vid(i + 1, j), g.vid(i + 1, j + 1), g.vid(i, j + 1)});
  return build_tagged(std::move(vertices), std::move(cells), rectangle_rules(d));
}

PolygonalMesh generate_triangle(int n_cells, const Domain& d) {
  // n_cells = 2 a b over an a x b grid, each quad split along a diagonal;
  // accepted grid shapes stay near square: a = b or a = 2b.
  int a = -1, b = -1;
  if (n_cells % 2 == 0) {
    const int half = n_cells / 2;
    const int r = static_cast<int>(std::lround(std::sqrt(double(half))));
    if (r >= 1 && r * r == half) {
      a = b = r;
    } else if (half % 2 == 0) {
      const int s = static_cast<int>(std::lround(std::sqrt(half / 2.0)));
      if (s >= 1 && 2 * s * s == half) {
        a = 2 * s;
        b = s;
      }
    }
  }
  if (a < 0)
    throw MeshError("triangle family needs a cell count of the form 2n^2 or 4n^2, got " +
                    std::to_string(n_cells));
  Grid g(a, b, d);
  std::vector<Vec2> vertices((a + 1) * (b + 1));
  for (int j = 0; j <= b; ++j)
    for (int i = 0; i <= a; ++i) vertices[g.vid(i, j)] = Vec2(g.x[i], g.y[j]);
  std::vector<std::vector<int>> cells;
  cells.reserve(n_cells);
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < a; ++i) {
      cells.push_back({g.vid(i, j), g.vid(i + 1, j), g.vid(i + 1, j + 1)});
      cells.push_back({g.vid(i, j), g.vid(i + 1, j + 1), g.vid(i, j + 1)});
    }
  return build_tagged(std::move(vertices), std::move(cells), rectangle_rules(d));
}

// Non-convex family: quad grid where every cell has one edge midpoint
// displaced into it by 0.3 of the cell extent.  The owner of each displaced
// midpoint is chosen so that every cell gets its own notch while the mesh
// still tiles the rectangle exactly:
//   rows j >= 1 except cell (n-1,1): bottom edge midpoint moved up;
//   cell (n-1,1):                    left edge midpoint moved right;
//   row 0 cells i <= n-2:            right edge midpoint moved left;
//   cell (n-1,0):                    top edge midpoint moved down.
PolygonalMesh generate_nonconvex(int n_cells, const Domain& d) {
  const int n = static_cast<int>(std::lround(std::sqrt(double(n_cells))));
  if (n < 2 || n * n != n_cells)
    throw MeshError("nonconvex family needs a perfect-square cell count >= 4, got " +
                    std::to_string(n_cells));
  Grid g(n, n, d);
  std::vector<Vec2> vertices((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) vertices[g.vid(i, j)] = Vec2(g.x[i], g.y[j]);

  const double dx = (d.hi.x() - d.lo.x()) / n, dy = (d.hi.y() - d.lo.y()) / n;

  std::unordered_map<long, int> hmid, vmid; // horizontal/vertical edge midpoint vertex ids
  auto key = [n](int i, int j) { return long(j) * (n + 1) + i; };
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double shift = (i == n - 1 && j == 1) ? -0.3 * dy : 0.3 * dy;
      hmid[key(i, j)] = static_cast<int>(vertices.size());
      vertices.emplace_back(0.5 * (g.x[i] + g.x[i + 1]), g.y[j] + shift);
    }
  auto add_vmid = [&](int i, int j, double shift) {
    vmid[key(i, j)] = static_cast<int>(vertices.size());
    vertices.emplace_back(g.x[i] + shift, 0.5 * (g.y[j] + g.y[j + 1]));
  };
  for (int i = 0; i < n - 1; ++i) add_vmid(i + 1, 0, -0.3 * dx);
  add_vmid(n - 1, 1, 0.3 * dx);

  auto hm = [&](int i, int j) {
    auto it = hmid.find(key(i, j));
    return it == hmid.end() ? -1 : it->second;
  };
  auto vm = [&](int i, int j) {
    auto it = vmid.find(key(i, j));
    return it == vmid.end() ? -1 : it->second;
  };

  std::vector<std::vector<int>> cells;
  cells.reserve(n_cells);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      std::vector<int> loop;
      auto push_edge = [&loop](int v_from, int mid) {
        loop.push_back(v_from);
        if (mid >= 0) loop.push_back(mid);
      };
      push_edge(g.vid(i, j), hm(i, j));             // bottom
      push_edge(g.vid(i + 1, j), vm(i + 1, j));     // right
      push_edge(g.vid(i + 1, j + 1), hm(i, j + 1)); // top, traversed right to left
      push_edge(g.vid(i, j + 1), vm(i, j));         // left
      cells.push_back(std::move(loop));
    }
  return build_tagged(std::move(vertices), std::move(cells), rectangle_rules(d));
}

// --- Lloyd-relaxed Voronoi ------------------------------------------------

// Uniform doubles from the raw mt19937_64 stream, kept explicit so generated
// meshes are reproducible bit for bit.
struct SeededUniform {
  std::mt19937_64 gen;
  explicit SeededUniform(std::uint64_t seed) : gen(seed) {}
  double next() { return (gen() >> 11) * 0x1.0p-53; }
};

// flat bucket grid for nearest-candidate sweeps
struct CandidateIndex {
  Vec2 lo;
  double cell = 1.0;
  int nx = 1, ny = 1;
  std::vector<std::vector<int>> buckets;

  void build(const std::vector<Vec2>& pts, const Vec2& blo, const Vec2& bhi, int target) {
    lo = blo;
    const double w = bhi.x() - blo.x(), h = bhi.y() - blo.y();
    const int n = std::max(1, static_cast<int>(std::sqrt(double(target))));
    cell = std::max(w, h) / n;
    nx = std::max(1, static_cast<int>(std::ceil(w / cell)));
    ny = std::max(1, static_cast<int>(std::ceil(h / cell)));
    buckets.assign(size_t(nx) * ny, {});
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      const int bx = std::clamp(static_cast<int>((pts[i].x() - lo.x()) / cell), 0, nx - 1);
      const int by = std::clamp(static_cast<int>((pts[i].y() - lo.y()) / cell), 0, ny - 1);
      buckets[size_t(by) * nx + bx].push_back(i);
    }
  }

  void ring(const Vec2& p, int r, std::vector<int>& out) const {
    out.clear();
    const int bx = std::clamp(static_cast<int>((p.x() - lo.x()) / cell), 0, nx - 1);
    const int by = std::clamp(static_cast<int>((p.y() - lo.y()) / cell), 0, ny - 1);
    for (int j = by - r; j <= by + r; ++j) {
      if (j < 0 || j >= ny) continue;
      for (int i = bx - r; i <= bx + r; ++i) {
        if (i < 0 || i >= nx) continue;
        if (std::max(std::abs(i - bx), std::abs(j - by)) != r) continue;
        const auto& b = buckets[size_t(j) * nx + i];
        out.insert(out.end(), b.begin(), b.end());
      }
    }
  }

  int max_ring(const Vec2& p) const {
    const int bx = std::clamp(static_cast<int>((p.x() - lo.x()) / cell), 0, nx - 1);
    const int by = std::clamp(static_cast<int>((p.y() - lo.y()) / cell), 0, ny - 1);
    return std::max({bx, nx - 1 - bx, by, ny - 1 - by});
  }
};

std::vector<Vec2> domain_polygon(const Domain& d) {
  std::vector<Vec2> poly;
  for (const auto& s : d.boundary_segments()) poly.push_back(s.first);
  return poly;
}

double polygon_area2(const std::vector<Vec2>& P) {
  double a = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const Vec2 &p = P[i], &q = P[(i + 1) % P.size()];
    a += p.x() * q.y() - p.y() * q.x();
  }
  return a;
}

// C \ {x < cr.x, y < cr.y} for a convex CCW polygon C.  Convexity means the
// boundary meets the quadrant in at most one arc whenever the difference is
// connected, so the bite can be replaced by a detour through the corner.
// When the bite disconnects the cell no simple polygon exists: strict mode
// throws, non-strict (Lloyd smoothing) keeps the larger piece.
std::vector<Vec2> subtract_quadrant(const std::vector<Vec2>& C, const Vec2& cr,
                                    bool strict) {
  const double cx = cr.x(), cy = cr.y();
  double scale = 1.0;
  for (const auto& v : C) scale = std::max(scale, (v - cr).norm());
  const double tol = 1e-12 * scale;

  const std::vector<Vec2> A = clip_halfplane(C, cr, Vec2(1, 0));
  const std::vector<Vec2> B =
      clip_halfplane(clip_halfplane(C, cr, Vec2(0, 1)), cr, Vec2(-1, 0));
  const double atol = 2.0 * tol * scale;
  const bool has_a = A.size() >= 3 && polygon_area2(A) > atol;
  const bool has_b = B.size() >= 3 && polygon_area2(B) > atol;
  if (!has_a && !has_b) return {};
  if (!has_a) return clip_halfplane(C, cr, Vec2(0, 1));
  if (!has_b) return A;

  // both pieces present; they join along x = cx iff the chord of C on that
  // line reaches above the corner
  double chord_top = -1e300;
  bool crossed = false;
  for (std::size_t i = 0; i < C.size(); ++i) {
    const Vec2 &p = C[i], &q = C[(i + 1) % C.size()];
    if (std::abs(q.x() - p.x()) < tol) continue;
    const double t = (cx - p.x()) / (q.x() - p.x());
    if (t < -tol || t > 1.0 + tol) continue;
    chord_top = std::max(chord_top, p.y() + t * (q.y() - p.y()));
    crossed = true;
  }
  if (!crossed || chord_top <= cy + tol) {
    if (strict)
      throw MeshError("voronoi cell straddles the cut corner; try a different seed");
    return std::abs(polygon_area2(A)) >= std::abs(polygon_area2(B)) ? A : B;
  }

  // open parameter interval of the segment p->q inside the quadrant
  const auto interval_in_q = [&](const Vec2& p, const Vec2& q, double& ta, double& tb) {
    ta = 0.0;
    tb = 1.0;
    const double dx = q.x() - p.x(), dy = q.y() - p.y();
    if (std::abs(dx) < tol) {
      if (p.x() >= cx) return false;
    } else {
      const double t = (cx - p.x()) / dx;
      if (dx > 0) tb = std::min(tb, t);
      else ta = std::max(ta, t);
    }
    if (std::abs(dy) < tol) {
      if (p.y() >= cy) return false;
    } else {
      const double t = (cy - p.y()) / dy;
      if (dy > 0) tb = std::min(tb, t);
      else ta = std::max(ta, t);
    }
    return tb - ta > tol;
  };
  const auto in_q = [&](const Vec2& v) {
    return v.x() < cx - tol && v.y() < cy - tol;
  };

  // walk the loop from a vertex outside the quadrant, replacing the single
  // excursion (entering across y = cy, leaving across x = cx) by the corner
  std::vector<Vec2> V = C;
  std::size_t start = 0;
  while (start < V.size() && in_q(V[start])) ++start;
  std::rotate(V.begin(), V.begin() + static_cast<std::ptrdiff_t>(start), V.end());

  std::vector<Vec2> out;
  out.reserve(V.size() + 3);
  bool excursion = false;
  for (std::size_t i = 0; i < V.size(); ++i) {
    const Vec2 &p = V[i], &q = V[(i + 1) % V.size()];
    if (!in_q(p) && !excursion) out.push_back(p);
    double ta, tb;
    if (!interval_in_q(p, q, ta, tb)) continue;
    if (ta > tol) {
      out.push_back(p + ta * (q - p));
      excursion = true;
    } else if (in_q(p)) {
      excursion = true;
    }
    if (excursion && tb < 1.0 - tol) {
      const Vec2 exit = p + tb * (q - p);
      // detour along the quadrant boundary: straight for a scoop through
      // y = cy, via the corner when leaving across x = cx
      if (std::abs(exit.x() - cx) < std::abs(exit.y() - cy)) out.push_back(cr);
      out.push_back(exit);
      excursion = false;
    }
  }
  return out;
}

// Cells of the bounded Voronoi diagram of `seeds` clipped to the domain.
// Seeds near the boundary are mirrored across it so that boundary (and
// circular-hole) facets come out as clean bisector cuts.
std::vector<std::vector<Vec2>> voronoi_cells(const std::vector<Vec2>& seeds, const Domain& d,
                                             double band, bool strict) {
  const int n = static_cast<int>(seeds.size());
  std::vector<Vec2> pts = seeds; // seeds first, mirror images appended
  const auto segs = d.boundary_segments();
  for (const auto& s : seeds) {
    for (const auto& [p0, p1] : segs) {
      const Vec2 t = p1 - p0;
      const double u = (s - p0).dot(t) / t.squaredNorm();
      if (u <= 1e-12 || u >= 1.0 - 1e-12) continue;
      const Vec2 foot = p0 + u * t;
      const double dist = (s - foot).norm();
      if (dist >= band || dist <= 0.0) continue;
      // only keep images that stay clear of the fluid: a reflection across a
      // re-entrant (cut) face can land where its Voronoi region would own
      // fluid area near the corner, leaving that area covered by no cell
      const Vec2 img = s + 2.0 * (foot - s);
      if (img.x() < d.lo.x() || img.x() > d.hi.x() || img.y() < d.lo.y() ||
          img.y() > d.hi.y())
        pts.push_back(img);
    }
    if (d.kind == Domain::Kind::rectangle_minus_disk) {
      const Vec2 rad = s - d.disk_center;
      const double dist = rad.norm() - d.disk_radius;
      // dist < radius keeps the image on the seed's side of the centre and
      // strictly inside the hole, making the bisector the exact tangent at
      // the nearest circle point; farther images land back in the fluid and
      // steal area from real cells
      if (dist > 0.0 && dist < std::min(band, d.disk_radius))
        pts.push_back(s - 2.0 * dist * rad.normalized());
    }
  }

  CandidateIndex index;
  index.build(pts, d.lo - Vec2(band, band), d.hi + Vec2(band, band), std::max(16, n));

  // bisector clipping needs a convex base, so the step starts from its
  // bounding rectangle and the cut quadrant is subtracted per finished cell
  std::vector<Vec2> base;
  if (d.kind == Domain::Kind::step)
    base = {d.lo, Vec2(d.hi.x(), d.lo.y()), d.hi, Vec2(d.lo.x(), d.hi.y())};
  else
    base = domain_polygon(d);
  std::vector<std::vector<Vec2>> cells(n);
  std::vector<int> ring_ids;
  std::vector<std::pair<double, int>> batch;

  for (int i = 0; i < n; ++i) {
    std::vector<Vec2> poly = base;
    const Vec2 s = seeds[i];
    auto recompute_rmax = [&]() {
      double r = 0.0;
      for (const auto& v : poly) r = std::max(r, (v - s).norm());
      return r;
    };
    double rmax = recompute_rmax();
    const int rings = index.max_ring(s);
    for (int r = 0; r <= rings && !poly.empty(); ++r) {
      if (r >= 1 && (r - 1) * index.cell > 2.0 * rmax) break;
      index.ring(s, r, ring_ids);
      batch.clear();
      for (int id : ring_ids) {
        if (id == i) continue;
        const double dist = (pts[id] - s).norm();
        if (dist * dist < 1e-24) continue;
        batch.emplace_back(dist, id);
      }
      std::sort(batch.begin(), batch.end());
      for (const auto& [dist, id] : batch) {
        if (dist > 2.0 * rmax) break;
        const Vec2 mid = 0.5 * (s + pts[id]);
        poly = clip_halfplane(poly, mid, s - pts[id]);
        if (poly.empty()) break;
        rmax = recompute_rmax();
      }
    }
    if (d.kind == Domain::Kind::step && poly.size() >= 3)
      poly = subtract_quadrant(poly, d.cut, strict);
    cells[i] = std::move(poly);
  }
  return cells;
}

Vec2 poly_centroid(const std::vector<Vec2>& poly) {
  double area2 = 0.0;
  Vec2 c = Vec2::Zero();
  const int m = static_cast<int>(poly.size());
  for (int i = 0; i < m; ++i) {
    const Vec2 &p = poly[i], &q = poly[(i + 1) % m];
    const double cr = p.x() * q.y() - p.y() * q.x();
    area2 += cr;
    c += (p + q) * cr;
  }
  return c / (3.0 * area2);
}

PolygonalMesh generate_voronoi(int n_cells, std::uint64_t seed, const Domain& d) {
  if (n_cells < 4) throw MeshError("voronoi family needs at least 4 cells");
  if (d.kind == Domain::Kind::rectangle_minus_disk && n_cells < 64)
    throw MeshError("voronoi family needs at least 64 cells on disk domains");

  SeededUniform rng(seed);
  std::vector<Vec2> seeds;
  seeds.reserve(n_cells);
  while (static_cast<int>(seeds.size()) < n_cells) {
    const Vec2 p(d.lo.x() + rng.next() * (d.hi.x() - d.lo.x()),
                 d.lo.y() + rng.next() * (d.hi.y() - d.lo.y()));
    if (d.contains(p)) seeds.push_back(p);
  }

  const double band =
      std::max(6.0 * std::sqrt(d.area() / n_cells), 0.05 * (d.hi - d.lo).norm());

  // fixed 20 Lloyd iterations: move every seed to its cell centroid
  for (int iter = 0; iter < 20; ++iter) {
    auto cells = voronoi_cells(seeds, d, band, /*strict=*/false);
    for (int i = 0; i < n_cells; ++i) {
      if (cells[i].size() < 3) continue;
      const Vec2 c = poly_centroid(cells[i]);
      if (d.contains(c)) seeds[i] = c;
    }
  }
  auto cells = voronoi_cells(seeds, d, band, /*strict=*/true);

  // weld per-cell polygons into one conforming vertex set: vertices closer
  // than tol are identified (both incident cells compute the same Voronoi
  // vertex up to roundoff)
  const double tol = 1e-9 * (d.hi - d.lo).norm();
  std::vector<Vec2> vertices;
  std::unordered_map<long, std::vector<int>> grid;
  auto bucket_key = [&](const Vec2& p, int sx, int sy) {
    const long bx = static_cast<long>(std::floor(p.x() / tol)) + sx;
    const long by = static_cast<long>(std::floor(p.y() / tol)) + sy;
    return bx * 2654435761L + by;
  };
  auto find_or_add = [&](const Vec2& p) {
    for (int sx = -1; sx <= 1; ++sx)
      for (int sy = -1; sy <= 1; ++sy) {
        auto it = grid.find(bucket_key(p, sx, sy));
        if (it == grid.end()) continue;
        for (int id : it->second)
          if ((vertices[id] - p).norm() <= tol) return id;
      }
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(p);
    grid[bucket_key(p, 0, 0)].push_back(id);
    return id;
  };

  std::vector<std::vector<int>> loops(n_cells);
  for (int i = 0; i < n_cells; ++i) {
    if (cells[i].size() < 3)
      throw MeshError("voronoi generation collapsed cell " + std::to_string(i) +
                      "; try a different seed");
    auto& loop = loops[i];
    for (const auto& p : cells[i]) {
      const int id = find_or_add(p);
      if (loop.empty() || loop.back() != id) loop.push_back(id);
    }
    while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
    if (loop.size() < 3)
      throw MeshError("voronoi generation produced a degenerate cell; try a different seed");
  }

  std::vector<TagRule> rules;
  if (d.kind == Domain::Kind::step) {
    rules = {TagRule::halfplane("inlet", Vec2(1, 0), d.lo.x()),
             TagRule::halfplane("outlet", Vec2(-1, 0), -d.hi.x()), TagRule::always("wall")};
  } else {
    rules = rectangle_rules(d);
    if (d.kind == Domain::Kind::rectangle_minus_disk) rules.push_back(TagRule::always("circ"));
  }
  return build_tagged(std::move(vertices), std::move(loops), rules);
}

} // namespace

PolygonalMesh generate(MeshFamily family, int n_cells, std::uint64_t seed, const Domain& domain) {
  domain.validate();
  if (n_cells < 1) throw MeshError("cell count must be positive");
  switch (family) {
    case MeshFamily::quad:
      require_rectangle(family, domain);
      return generate_quad(n_cells, domain);
    case MeshFamily::triangle:
      require_rectangle(family, domain);
      return generate_triangle(n_cells, domain);
    case MeshFamily::nonconvex:
      require_rectangle(family, domain);
      return generate_nonconvex(n_cells, domain);
    case MeshFamily::voronoi:
      return generate_voronoi(n_cells, seed, domain);
  }
  throw MeshError("unknown mesh family");
}

} // namespace brinkvem
