#include "brinkvem/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace brinkvem {

// Legendre polynomial value and derivative at t in [-1,1].
static void legendre_pair(int n, double t, double& p, double& dp) {
  double p0 = 1.0, p1 = t;
  if (n == 0) { p = p0; dp = 0.0; return; }
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (t * p1 - p0) / (t * t - 1.0);
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-style initial guess, then Newton on P_n.
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p, dp;
    for (int it = 0; it < 100; ++it) {
      legendre_pair(n, t, p, dp);
      const double dt = -p / dp;
      t += dt;
      if (std::abs(dt) < 1e-15) break;
    }
    legendre_pair(n, t, p, dp);
    const double w = 2.0 / ((1.0 - t * t) * dp * dp);
    // map [-1,1] -> [0,1]; symmetric partner
    nodes[i] = 0.5 * (1.0 - t);
    nodes[n - 1 - i] = 0.5 * (1.0 + t);
    weights[i] = 0.5 * w;
    weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) {
    nodes[n / 2] = 0.5;
    double p, dp;
    legendre_pair(n, 0.0, p, dp);
    weights[n / 2] = 0.5 * 2.0 / (dp * dp);
  }
}

std::vector<double> gauss_lobatto(int n) {
  if (n < 2) throw std::invalid_argument("gauss_lobatto: need n >= 2");
  std::vector<double> pts(n);
  pts.front() = 0.0;
  pts.back() = 1.0;
  const int m = n - 1; // interior nodes are roots of P'_m
  for (int i = 1; i < n - 1; ++i) {
    // initial guess: Chebyshev-Lobatto abscissa
    double t = std::cos(M_PI * (n - 1 - i) / (n - 1.0));
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre_pair(m, t, p, dp);
      // d2p from Legendre ODE: (1-t^2) p'' = 2 t p' - m(m+1) p
      const double d2p = (2.0 * t * dp - m * (m + 1.0) * p) / (1.0 - t * t);
      const double dt = -dp / d2p;
      t += dt;
      if (std::abs(dt) < 1e-15) break;
    }
    pts[i] = 0.5 * (1.0 + t);
  }
  return pts;
}

std::vector<QuadNode> edge_rule(const Vec2& a, const Vec2& b, int degree) {
  const int n = degree / 2 + 1;
  std::vector<double> t, w;
  gauss_legendre(n, t, w);
  const double len = (b - a).norm();
  std::vector<QuadNode> rule(n);
  for (int i = 0; i < n; ++i) rule[i] = {a + t[i] * (b - a), w[i] * len};
  return rule;
}

std::vector<QuadNode> triangle_rule(const Vec2& a, const Vec2& b, const Vec2& c, int degree) {
  // Collapsed map p(u,v) = (1-u) a + u(1-v) b + u v c, Jacobian 2|T| u.
  // For total degree d the integrand is degree d+1 in u and d in v.
  const int n = (degree + 3) / 2;
  std::vector<double> t, w;
  gauss_legendre(n, t, w);
  const double area2 = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  std::vector<QuadNode> rule;
  rule.reserve(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = t[i], v = t[j];
      QuadNode q;
      q.x = (1.0 - u) * a + u * (1.0 - v) * b + u * v * c;
      q.w = w[i] * w[j] * area2 * u;
      rule.push_back(q);
    }
  }
  return rule;
}

std::vector<QuadNode> polygon_rule(const std::vector<Vec2>& verts, const Vec2& star, int degree) {
  std::vector<QuadNode> rule;
  const int m = static_cast<int>(verts.size());
  for (int i = 0; i < m; ++i) {
    auto tri = triangle_rule(star, verts[i], verts[(i + 1) % m], degree);
    rule.insert(rule.end(), tri.begin(), tri.end());
  }
  return rule;
}

} // namespace brinkvem
