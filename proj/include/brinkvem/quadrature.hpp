// Quadrature rules used throughout the solver: Gauss-Legendre on segments,
// Gauss-Lobatto point sets for edge degrees of freedom, and triangle rules
// assembled into polygon rules by fanning from a star point.
#pragma once

#include <vector>

#include <Eigen/Dense>

namespace brinkvem {

using Vec2 = Eigen::Vector2d;

/// One quadrature node in the plane.
struct QuadNode {
  Vec2 x;
  double w;
};

/// Gauss-Legendre nodes/weights on [0,1], exact for polynomials of degree
/// 2n-1.  Computed by Newton iteration on the Legendre recurrence; nodes are
/// accurate to machine precision for the orders used here (n <= 24).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Gauss-Lobatto nodes on [0,1] (endpoints included), n >= 2 points.
/// Interior nodes are the roots of P'_{n-1}.
std::vector<double> gauss_lobatto(int n);

/// Rule on the segment [a,b] exact for polynomials of degree `degree` along
/// the segment.  Weights sum to |b-a|.
std::vector<QuadNode> edge_rule(const Vec2& a, const Vec2& b, int degree);

/// Rule on the triangle (a,b,c) exact for bivariate polynomials of total
/// degree `degree`.  Conical-product construction (Duffy map with the Jacobian
/// absorbed into the weights); all weights positive.
std::vector<QuadNode> triangle_rule(const Vec2& a, const Vec2& b, const Vec2& c, int degree);

/// Rule over a simple polygon obtained by fanning triangles from `star`,
/// which must see every vertex (star point of the polygon kernel).
std::vector<QuadNode> polygon_rule(const std::vector<Vec2>& verts, const Vec2& star, int degree);

} // namespace brinkvem
