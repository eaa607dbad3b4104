#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tforms/common.hpp"

// Real-valued scalar expressions on the circle coordinate z in [0,1):
// polynomials in z, |.|, sin/cos, sqrt, products, integer powers, and
// piecewise definitions pw(b, f, g) switching at a declared breakpoint.
namespace tforms::expr {

class Node;
using NodePtr = std::shared_ptr<const Node>;

class ScalarExpr {
 public:
  ScalarExpr() = default;
  explicit ScalarExpr(NodePtr root) : root_(std::move(root)) {}

  bool empty() const { return root_ == nullptr; }
  double eval(double z) const;
  std::string to_string() const;

  friend ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b);
  ScalarExpr operator-() const;

  NodePtr root() const { return root_; }

 private:
  NodePtr root_;
};

ScalarExpr constant(double v);
ScalarExpr coordinate();  // z
ScalarExpr pow_int(const ScalarExpr& base, int exponent);
ScalarExpr abs(const ScalarExpr& x);
ScalarExpr sqrt(const ScalarExpr& x);
ScalarExpr sin(const ScalarExpr& x);
ScalarExpr cos(const ScalarExpr& x);
// value of `below` for z < breakpoint, of `from` for z >= breakpoint
ScalarExpr piecewise(double breakpoint, const ScalarExpr& below, const ScalarExpr& from);

// Throws Err::ParseError with a character offset in the message.
ScalarExpr parse(const std::string& text);

// breakpoints of every pw(...) in the tree, unsorted, with repeats
void collect_breakpoints(const ScalarExpr& e, std::vector<double>& out);

}  // namespace tforms::expr
