// Scaled monomial bases on polygonal cells and the splitting of vector
// polynomials into gradients plus a rotational complement.  These are the
// computable polynomial spaces behind every projector in the element kernel.
#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "brinkvem/quadrature.hpp"

namespace brinkvem {

/// Basis of P_k on a cell: m_a(x) = ((x - xc)/h)^a, ordered by total degree,
/// x-power descending within a degree (1, x, y, x^2, xy, y^2, ...).
class ScaledMonomials {
 public:
  ScaledMonomials(int order, const Vec2& center, double h);

  static int dim(int order) { return order < 0 ? 0 : (order + 1) * (order + 2) / 2; }

  int order() const { return order_; }
  int size() const { return static_cast<int>(exp_.size()); }
  const Vec2& center() const { return center_; }
  double h() const { return h_; }

  std::pair<int, int> exponents(int i) const { return exp_[i]; }
  /// Index of x^ax y^ay, or -1 if outside the basis.
  int index(int ax, int ay) const;

  double eval(int i, const Vec2& x) const;
  Vec2 grad(int i, const Vec2& x) const;
  Eigen::VectorXd eval_all(const Vec2& x) const;

  /// Exact first-derivative operators mapping coefficients in this basis to
  /// coefficients in the basis one order lower (the 1/h factor is included).
  Eigen::MatrixXd deriv_x() const;
  Eigen::MatrixXd deriv_y() const;

 private:
  int order_;
  Vec2 center_;
  double h_;
  std::vector<std::pair<int, int>> exp_;
};

/// Decomposition [P_k]^2 = grad P_{k+1}  (+)  x_perp P_{k-1} on a cell,
/// where x_perp = ((y-yc), -(x-xc))/h.  The gradient part is spanned by
/// h*grad m for the non-constant monomials of P_{k+1}; the complement spans
/// the rotational remainder.  Raw coordinates are component-major monomial
/// coefficients: [(m_i, 0) ... (0, m_i) ...].
class VectorPolySplit {
 public:
  VectorPolySplit(int order, const Vec2& center, double h);

  int order() const { return order_; }
  int dim() const { return 2 * ScaledMonomials::dim(order_); }
  int dim_grad() const { return ScaledMonomials::dim(order_ + 1) - 1; }
  int dim_comp() const { return ScaledMonomials::dim(order_ - 1); }

  /// Change of basis: column j holds the raw coefficients of split element j
  /// (gradient elements first, then complement elements).
  const Eigen::MatrixXd& to_raw() const { return T_; }
  /// Solve T z = raw, i.e. express a raw coefficient vector in the split basis.
  Eigen::VectorXd raw_to_split(const Eigen::VectorXd& raw) const { return lu_.solve(raw); }
  Eigen::MatrixXd raw_to_split(const Eigen::MatrixXd& raw) const { return lu_.solve(raw); }

  /// 2-norm condition number of the change-of-basis matrix.
  double condition() const { return cond_; }

 private:
  int order_;
  Eigen::MatrixXd T_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double cond_;
};

} // namespace brinkvem
