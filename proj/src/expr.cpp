#include "tforms/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

namespace tforms::expr {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Abs, Sqrt, Sin, Cos, Piecewise };

class Node {
 public:
  Op op;
  double value = 0.0;   // Const payload, Piecewise breakpoint
  int exponent = 1;     // Pow payload
  NodePtr lhs, rhs;

  static std::shared_ptr<Node> make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
  }
};

namespace {

double eval_node(const Node& n, double z) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return z;
    case Op::Add: return eval_node(*n.lhs, z) + eval_node(*n.rhs, z);
    case Op::Sub: return eval_node(*n.lhs, z) - eval_node(*n.rhs, z);
    case Op::Mul: return eval_node(*n.lhs, z) * eval_node(*n.rhs, z);
    case Op::Div: return eval_node(*n.lhs, z) / eval_node(*n.rhs, z);
    case Op::Neg: return -eval_node(*n.lhs, z);
    case Op::Pow: {
      double base = eval_node(*n.lhs, z);
      int e = n.exponent;
      bool invert = e < 0;
      if (invert) e = -e;
      double acc = 1.0;
      double cur = base;
      while (e > 0) {
        if (e & 1) acc *= cur;
        cur *= cur;
        e >>= 1;
      }
      return invert ? 1.0 / acc : acc;
    }
    case Op::Abs: return std::fabs(eval_node(*n.lhs, z));
    case Op::Sqrt: return std::sqrt(eval_node(*n.lhs, z));
    case Op::Sin: return std::sin(eval_node(*n.lhs, z));
    case Op::Cos: return std::cos(eval_node(*n.lhs, z));
    case Op::Piecewise:
      return z < n.value ? eval_node(*n.lhs, z) : eval_node(*n.rhs, z);
  }
  return 0.0;
}

void print_node(const Node& n, std::ostream& os);

void print_paren(const Node& n, std::ostream& os) {
  os << '(';
  print_node(n, os);
  os << ')';
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void print_node(const Node& n, std::ostream& os) {
  switch (n.op) {
    case Op::Const: os << format_double(n.value); return;
    case Op::Var: os << 'z'; return;
    case Op::Add:
      print_paren(*n.lhs, os);
      os << '+';
      print_paren(*n.rhs, os);
      return;
    case Op::Sub:
      print_paren(*n.lhs, os);
      os << '-';
      print_paren(*n.rhs, os);
      return;
    case Op::Mul:
      print_paren(*n.lhs, os);
      os << '*';
      print_paren(*n.rhs, os);
      return;
    case Op::Div:
      print_paren(*n.lhs, os);
      os << '/';
      print_paren(*n.rhs, os);
      return;
    case Op::Neg:
      os << '-';
      print_paren(*n.lhs, os);
      return;
    case Op::Pow:
      print_paren(*n.lhs, os);
      os << '^' << n.exponent;
      return;
    case Op::Abs:
      os << "abs";
      print_paren(*n.lhs, os);
      return;
    case Op::Sqrt:
      os << "sqrt";
      print_paren(*n.lhs, os);
      return;
    case Op::Sin:
      os << "sin";
      print_paren(*n.lhs, os);
      return;
    case Op::Cos:
      os << "cos";
      print_paren(*n.lhs, os);
      return;
    case Op::Piecewise:
      os << "pw(" << format_double(n.value) << ',';
      print_node(*n.lhs, os);
      os << ',';
      print_node(*n.rhs, os);
      os << ')';
      return;
  }
}

}  // namespace

double ScalarExpr::eval(double z) const {
  if (!root_) fail(Err::ValidationError, "empty expression");
  return eval_node(*root_, z);
}

std::string ScalarExpr::to_string() const {
  if (!root_) return "";
  std::ostringstream os;
  print_node(*root_, os);
  return os.str();
}

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) {
  return ScalarExpr(Node::make(Op::Add, a.root_, b.root_));
}
ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) {
  return ScalarExpr(Node::make(Op::Sub, a.root_, b.root_));
}
ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) {
  return ScalarExpr(Node::make(Op::Mul, a.root_, b.root_));
}
ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b) {
  return ScalarExpr(Node::make(Op::Div, a.root_, b.root_));
}
ScalarExpr ScalarExpr::operator-() const { return ScalarExpr(Node::make(Op::Neg, root_)); }

ScalarExpr constant(double v) {
  auto n = Node::make(Op::Const);
  n->value = v;
  return ScalarExpr(n);
}

ScalarExpr coordinate() { return ScalarExpr(Node::make(Op::Var)); }

ScalarExpr pow_int(const ScalarExpr& base, int exponent) {
  auto n = Node::make(Op::Pow, base.root());
  n->exponent = exponent;
  return ScalarExpr(n);
}

ScalarExpr abs(const ScalarExpr& x) { return ScalarExpr(Node::make(Op::Abs, x.root())); }
ScalarExpr sqrt(const ScalarExpr& x) { return ScalarExpr(Node::make(Op::Sqrt, x.root())); }
ScalarExpr sin(const ScalarExpr& x) { return ScalarExpr(Node::make(Op::Sin, x.root())); }
ScalarExpr cos(const ScalarExpr& x) { return ScalarExpr(Node::make(Op::Cos, x.root())); }

ScalarExpr piecewise(double breakpoint, const ScalarExpr& below, const ScalarExpr& from) {
  auto n = Node::make(Op::Piecewise, below.root(), from.root());
  n->value = breakpoint;
  return ScalarExpr(n);
}

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  ScalarExpr run() {
    ScalarExpr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) error("trailing input");
    return e;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;

  [[noreturn]] void error(const std::string& what) {
    fail(Err::ParseError, what + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ScalarExpr parse_expr() {
    ScalarExpr acc = parse_term();
    for (;;) {
      if (eat('+'))
        acc = acc + parse_term();
      else if (eat('-'))
        acc = acc - parse_term();
      else
        return acc;
    }
  }

  ScalarExpr parse_term() {
    ScalarExpr acc = parse_unary();
    for (;;) {
      if (eat('*'))
        acc = acc * parse_unary();
      else if (eat('/'))
        acc = acc / parse_unary();
      else
        return acc;
    }
  }

  ScalarExpr parse_unary() {
    if (eat('-')) return -parse_unary();
    return parse_power();
  }

  ScalarExpr parse_power() {
    ScalarExpr base = parse_primary();
    if (eat('^')) {
      skip_ws();
      bool neg = eat('-');
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == start) error("integer exponent expected");
      int e = std::stoi(text_.substr(start, pos_ - start));
      return pow_int(base, neg ? -e : e);
    }
    return base;
  }

  double parse_number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
      ++pos_;
    if (pos_ == start) error("number expected");
    try {
      return std::stod(text_.substr(start, pos_ - start));
    } catch (const std::exception&) {
      pos_ = start;
      error("malformed number");
    }
  }

  std::string parse_ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  ScalarExpr parse_primary() {
    const char c = peek();
    if (c == '(') {
      eat('(');
      ScalarExpr inner = parse_expr();
      if (!eat(')')) error("')' expected");
      return inner;
    }
    if (c == '|') {
      eat('|');
      ScalarExpr inner = parse_expr();
      if (!eat('|')) error("closing '|' expected");
      return abs(inner);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return constant(parse_number());
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string name = parse_ident();
      if (name == "z") return coordinate();
      if (name == "pi") return constant(3.14159265358979323846);
      if (name == "pw") {
        if (!eat('(')) error("'(' expected after pw");
        double breakpoint = parse_number();
        if (!eat(',')) error("',' expected in pw");
        ScalarExpr below = parse_expr();
        if (!eat(',')) error("',' expected in pw");
        ScalarExpr from = parse_expr();
        if (!eat(')')) error("')' expected in pw");
        return piecewise(breakpoint, below, from);
      }
      if (!eat('(')) error("'(' expected after function name");
      ScalarExpr arg = parse_expr();
      if (!eat(')')) error("')' expected");
      if (name == "abs") return abs(arg);
      if (name == "sqrt") return sqrt(arg);
      if (name == "sin") return sin(arg);
      if (name == "cos") return cos(arg);
      error("unknown function '" + name + "'");
    }
    error("unexpected character");
  }
};

}  // namespace

ScalarExpr parse(const std::string& text) { return Parser(text).run(); }

namespace {

void collect_node(const Node& n, std::vector<double>& out) {
  if (n.op == Op::Piecewise) out.push_back(n.value);
  if (n.lhs) collect_node(*n.lhs, out);
  if (n.rhs) collect_node(*n.rhs, out);
}

}  // namespace

void collect_breakpoints(const ScalarExpr& e, std::vector<double>& out) {
  if (e.root()) collect_node(*e.root(), out);
}

}  // namespace tforms::expr
