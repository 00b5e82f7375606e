#include "brinkvem/dataexpr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace brinkvem {

enum class Op { num, var_x, var_y, neg, add, sub, mul, div, pow, sin, cos, exp, sqrt };

struct Expr::Node {
  Op op;
  double value = 0.0;   // num
  int exponent = 0;     // pow
  NodePtr a, b;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr mk(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr mk_num(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::num;
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::num && n->value == v; }

// Constructors with light algebraic simplification so that derivative trees
// stay small (zero/one absorption and constant folding only).
NodePtr mk_add(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  if (a->op == Op::num && b->op == Op::num) return mk_num(a->value + b->value);
  return mk(Op::add, std::move(a), std::move(b));
}

NodePtr mk_sub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  if (a->op == Op::num && b->op == Op::num) return mk_num(a->value - b->value);
  if (is_const(a, 0.0)) return mk(Op::neg, std::move(b));
  return mk(Op::sub, std::move(a), std::move(b));
}

NodePtr mk_mul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return mk_num(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (a->op == Op::num && b->op == Op::num) return mk_num(a->value * b->value);
  return mk(Op::mul, std::move(a), std::move(b));
}

NodePtr mk_div(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return mk_num(0.0);
  if (is_const(b, 1.0)) return a;
  return mk(Op::div, std::move(a), std::move(b));
}

NodePtr mk_pow(NodePtr a, int n) {
  if (n == 0) return mk_num(1.0);
  if (n == 1) return a;
  auto p = std::make_shared<Node>();
  p->op = Op::pow;
  p->exponent = n;
  p->a = std::move(a);
  return p;
}

NodePtr mk_neg(NodePtr a) {
  if (a->op == Op::num) return mk_num(-a->value);
  if (a->op == Op::neg) return a->a;
  return mk(Op::neg, std::move(a));
}

// ----- parser -------------------------------------------------------------

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr run() {
    auto e = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "syntax error at offset " << pos_ << ": " << msg << " in \"" << s_ << "\"";
    throw ExprError(os.str(), static_cast<long>(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr parse_sum() {
    auto e = parse_term();
    for (;;) {
      if (consume('+'))
        e = mk(Op::add, e, parse_term());
      else if (consume('-'))
        e = mk(Op::sub, e, parse_term());
      else
        return e;
    }
  }

  NodePtr parse_term() {
    auto e = parse_unary();
    for (;;) {
      if (consume('*'))
        e = mk(Op::mul, e, parse_unary());
      else if (consume('/'))
        e = mk(Op::div, e, parse_unary());
      else
        return e;
    }
  }

  NodePtr parse_unary() {
    if (consume('-')) return mk_neg(parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_atom();
    if (consume('^')) return mk_pow(base, parse_exponent());
    return base;
  }

  int parse_exponent() {
    skip_ws();
    bool negative = consume('-');
    skip_ws();
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_])))
      fail("expected integer exponent after '^'");
    long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = 10 * v + (s_[pos_] - '0');
      if (v > 1000) fail("exponent too large");
      ++pos_;
    }
    return static_cast<int>(negative ? -v : v);
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = parse_sum();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
    fail("unexpected character");
  }

  NodePtr parse_number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<size_t>(end - begin);
    return mk_num(v);
  }

  NodePtr parse_name() {
    const size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    if (name == "x") return mk(Op::var_x);
    if (name == "y") return mk(Op::var_y);
    if (name == "pi") return mk_num(M_PI);
    Op fn;
    if (name == "sin")
      fn = Op::sin;
    else if (name == "cos")
      fn = Op::cos;
    else if (name == "exp")
      fn = Op::exp;
    else if (name == "sqrt")
      fn = Op::sqrt;
    else {
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    if (!consume('(')) fail("expected '(' after function name");
    auto arg = parse_sum();
    if (!consume(')')) fail("expected ')'");
    return mk(fn, arg);
  }

  const std::string& s_;
  size_t pos_ = 0;
};

// ----- printing -----------------------------------------------------------

int precedence(Op op) {
  switch (op) {
    case Op::add:
    case Op::sub:
      return 1;
    case Op::mul:
    case Op::div:
      return 2;
    case Op::neg:
      return 3;
    case Op::pow:
      return 4;
    default:
      return 5;
  }
}

void print_node(std::ostream& os, const NodePtr& n, int parent_prec) {
  const int prec = precedence(n->op);
  const bool parens = prec < parent_prec;
  if (parens) os << '(';
  switch (n->op) {
    case Op::num: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n->value;
      os << tmp.str();
      break;
    }
    case Op::var_x: os << 'x'; break;
    case Op::var_y: os << 'y'; break;
    case Op::neg:
      os << '-';
      print_node(os, n->a, 3);
      break;
    case Op::add:
      print_node(os, n->a, 1);
      os << '+';
      print_node(os, n->b, 2);
      break;
    case Op::sub:
      print_node(os, n->a, 1);
      os << '-';
      print_node(os, n->b, 2);
      break;
    case Op::mul:
      print_node(os, n->a, 2);
      os << '*';
      print_node(os, n->b, 3);
      break;
    case Op::div:
      print_node(os, n->a, 2);
      os << '/';
      print_node(os, n->b, 3);
      break;
    case Op::pow: {
      const bool base_parens = n->a->op == Op::num && n->a->value < 0.0;
      if (base_parens) os << '(';
      print_node(os, n->a, 5);
      if (base_parens) os << ')';
      os << '^';
      if (n->exponent < 0) os << '-';
      os << std::abs(n->exponent);
      break;
    }
    case Op::sin: os << "sin("; print_node(os, n->a, 0); os << ')'; break;
    case Op::cos: os << "cos("; print_node(os, n->a, 0); os << ')'; break;
    case Op::exp: os << "exp("; print_node(os, n->a, 0); os << ')'; break;
    case Op::sqrt: os << "sqrt("; print_node(os, n->a, 0); os << ')'; break;
  }
  if (parens) os << ')';
}

[[noreturn]] void eval_domain_error(const NodePtr& n, const char* what, double x, double y) {
  std::ostringstream os;
  print_node(os, n, 0);
  std::ostringstream msg;
  msg << "evaluation error: " << what << " in '" << os.str() << "' at (x,y)=(" << x << "," << y
      << ")";
  throw ExprError(msg.str());
}

double eval_node(const NodePtr& n, double x, double y) {
  switch (n->op) {
    case Op::num: return n->value;
    case Op::var_x: return x;
    case Op::var_y: return y;
    case Op::neg: return -eval_node(n->a, x, y);
    case Op::add: return eval_node(n->a, x, y) + eval_node(n->b, x, y);
    case Op::sub: return eval_node(n->a, x, y) - eval_node(n->b, x, y);
    case Op::mul: return eval_node(n->a, x, y) * eval_node(n->b, x, y);
    case Op::div: {
      const double den = eval_node(n->b, x, y);
      if (den == 0.0) eval_domain_error(n, "division by zero", x, y);
      return eval_node(n->a, x, y) / den;
    }
    case Op::pow: {
      const double base = eval_node(n->a, x, y);
      int e = std::abs(n->exponent);
      double v = 1.0, b = base;
      for (; e > 0; e >>= 1, b *= b)
        if (e & 1) v *= b;
      if (n->exponent < 0) {
        if (v == 0.0) eval_domain_error(n, "zero raised to a negative power", x, y);
        v = 1.0 / v;
      }
      return v;
    }
    case Op::sin: return std::sin(eval_node(n->a, x, y));
    case Op::cos: return std::cos(eval_node(n->a, x, y));
    case Op::exp: return std::exp(eval_node(n->a, x, y));
    case Op::sqrt: {
      const double a = eval_node(n->a, x, y);
      if (a < 0.0) eval_domain_error(n, "square root of a negative value", x, y);
      return std::sqrt(a);
    }
  }
  throw ExprError("evaluation error: corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, Op var) {
  switch (n->op) {
    case Op::num: return mk_num(0.0);
    case Op::var_x: return mk_num(var == Op::var_x ? 1.0 : 0.0);
    case Op::var_y: return mk_num(var == Op::var_y ? 1.0 : 0.0);
    case Op::neg: return mk_neg(diff_node(n->a, var));
    case Op::add: return mk_add(diff_node(n->a, var), diff_node(n->b, var));
    case Op::sub: return mk_sub(diff_node(n->a, var), diff_node(n->b, var));
    case Op::mul:
      return mk_add(mk_mul(diff_node(n->a, var), n->b), mk_mul(n->a, diff_node(n->b, var)));
    case Op::div:
      return mk_div(mk_sub(mk_mul(diff_node(n->a, var), n->b), mk_mul(n->a, diff_node(n->b, var))),
                    mk_pow(n->b, 2));
    case Op::pow:
      return mk_mul(mk_num(n->exponent),
                    mk_mul(mk_pow(n->a, n->exponent - 1), diff_node(n->a, var)));
    case Op::sin: return mk_mul(mk(Op::cos, n->a), diff_node(n->a, var));
    case Op::cos: return mk_neg(mk_mul(mk(Op::sin, n->a), diff_node(n->a, var)));
    case Op::exp: return mk_mul(mk(Op::exp, n->a), diff_node(n->a, var));
    case Op::sqrt:
      return mk_div(diff_node(n->a, var), mk_mul(mk_num(2.0), mk(Op::sqrt, n->a)));
  }
  throw ExprError("derivative: corrupt expression node");
}

} // namespace

Expr Expr::parse(const std::string& text) { return Expr(Parser(text).run()); }

Expr Expr::number(double v) { return Expr(mk_num(v)); }

double Expr::eval(double x, double y) const {
  if (!node_) throw ExprError("evaluation of empty expression");
  return eval_node(node_, x, y);
}

Expr Expr::derivative(char var) const {
  if (!node_) throw ExprError("derivative of empty expression");
  if (var != 'x' && var != 'y') throw ExprError("derivative variable must be 'x' or 'y'");
  return Expr(diff_node(node_, var == 'x' ? Op::var_x : Op::var_y));
}

std::string Expr::str() const {
  if (!node_) return "<empty>";
  std::ostringstream os;
  print_node(os, node_, 0);
  return os.str();
}

Expr Expr::operator+(const Expr& o) const { return Expr(mk_add(node_, o.node_)); }
Expr Expr::operator-(const Expr& o) const { return Expr(mk_sub(node_, o.node_)); }
Expr Expr::operator*(const Expr& o) const { return Expr(mk_mul(node_, o.node_)); }

} // namespace brinkvem
