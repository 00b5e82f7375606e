#include "brinkvem/polyspace.hpp"

#include <cmath>
#include <stdexcept>

namespace brinkvem {

ScaledMonomials::ScaledMonomials(int order, const Vec2& center, double h)
    : order_(order), center_(center), h_(h) {
  if (order < 0) throw std::invalid_argument("ScaledMonomials: negative order");
  if (h <= 0.0) throw std::invalid_argument("ScaledMonomials: nonpositive scale");
  exp_.reserve(dim(order));
  for (int d = 0; d <= order; ++d)
    for (int ay = 0; ay <= d; ++ay) exp_.emplace_back(d - ay, ay);
}

int ScaledMonomials::index(int ax, int ay) const {
  if (ax < 0 || ay < 0 || ax + ay > order_) return -1;
  const int d = ax + ay;
  return d * (d + 1) / 2 + ay;
}

double ScaledMonomials::eval(int i, const Vec2& x) const {
  const auto [ax, ay] = exp_[i];
  const double sx = (x.x() - center_.x()) / h_;
  const double sy = (x.y() - center_.y()) / h_;
  double v = 1.0;
  for (int p = 0; p < ax; ++p) v *= sx;
  for (int p = 0; p < ay; ++p) v *= sy;
  return v;
}

Vec2 ScaledMonomials::grad(int i, const Vec2& x) const {
  const auto [ax, ay] = exp_[i];
  const double sx = (x.x() - center_.x()) / h_;
  const double sy = (x.y() - center_.y()) / h_;
  auto ipow = [](double b, int p) {
    double v = 1.0;
    for (int q = 0; q < p; ++q) v *= b;
    return v;
  };
  Vec2 g = Vec2::Zero();
  if (ax > 0) g.x() = ax * ipow(sx, ax - 1) * ipow(sy, ay) / h_;
  if (ay > 0) g.y() = ay * ipow(sx, ax) * ipow(sy, ay - 1) / h_;
  return g;
}

Eigen::VectorXd ScaledMonomials::eval_all(const Vec2& x) const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = eval(i, x);
  return v;
}

Eigen::MatrixXd ScaledMonomials::deriv_x() const {
  ScaledMonomials lower(order_ > 0 ? order_ - 1 : 0, center_, h_);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(lower.size(), size());
  for (int i = 0; i < size(); ++i) {
    const auto [ax, ay] = exp_[i];
    if (ax > 0) D(lower.index(ax - 1, ay), i) = ax / h_;
  }
  return D;
}

Eigen::MatrixXd ScaledMonomials::deriv_y() const {
  ScaledMonomials lower(order_ > 0 ? order_ - 1 : 0, center_, h_);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(lower.size(), size());
  for (int i = 0; i < size(); ++i) {
    const auto [ax, ay] = exp_[i];
    if (ay > 0) D(lower.index(ax, ay - 1), i) = ay / h_;
  }
  return D;
}

VectorPolySplit::VectorPolySplit(int order, const Vec2& center, double h) : order_(order) {
  if (order < 0) throw std::invalid_argument("VectorPolySplit: negative order");
  const ScaledMonomials mk(order, center, h);
  const ScaledMonomials mk1(order + 1, center, h);
  const int nk = mk.size();
  T_ = Eigen::MatrixXd::Zero(2 * nk, dim_grad() + dim_comp());
  int col = 0;
  // gradient part: h * grad m_a for the non-constant monomials of P_{k+1};
  // h grad ((x-xc)/h)^a = (ax m_{a-e1}, ay m_{a-e2}) in scaled monomials.
  for (int i = 1; i < mk1.size(); ++i, ++col) {
    const auto [ax, ay] = mk1.exponents(i);
    if (ax > 0) T_(mk.index(ax - 1, ay), col) = ax;
    if (ay > 0) T_(nk + mk.index(ax, ay - 1), col) = ay;
  }
  // complement part: x_perp m_b = (m_{b+e2}, -m_{b+e1}) for b in P_{k-1}.
  if (order >= 1) {
    const ScaledMonomials mkm1(order - 1, center, h);
    for (int i = 0; i < mkm1.size(); ++i, ++col) {
      const auto [bx, by] = mkm1.exponents(i);
      T_(mk.index(bx, by + 1), col) = 1.0;
      T_(nk + mk.index(bx + 1, by), col) = -1.0;
    }
  }
  if (col != 2 * nk)
    throw std::logic_error("VectorPolySplit: split dimensions do not add up");
  lu_.compute(T_);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(T_);
  cond_ = svd.singularValues()(0) / svd.singularValues().tail(1)(0);
}

} // namespace brinkvem
