#include "wellprobe/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wellprobe/error.hpp"

namespace wellprobe {

enum class Op { Const, X, Eps, Add, Sub, Mul, Div, Neg, Pow, Exp, Sin, Cos, Log };

struct Expr::Node {
  Op op;
  double value = 0.0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  return std::make_shared<const Expr::Node>(Expr::Node{op, 0.0, std::move(lhs), std::move(rhs)});
}

NodePtr make_const(double v) {
  return std::make_shared<const Expr::Node>(Expr::Node{Op::Const, v, nullptr, nullptr});
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

double eval(const Expr::Node& n, double x, double eps) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::X: return x;
    case Op::Eps: return eps;
    case Op::Add: return eval(*n.lhs, x, eps) + eval(*n.rhs, x, eps);
    case Op::Sub: return eval(*n.lhs, x, eps) - eval(*n.rhs, x, eps);
    case Op::Mul: return eval(*n.lhs, x, eps) * eval(*n.rhs, x, eps);
    case Op::Div: return eval(*n.lhs, x, eps) / eval(*n.rhs, x, eps);
    case Op::Neg: return -eval(*n.lhs, x, eps);
    case Op::Pow: {
      const double b = eval(*n.lhs, x, eps);
      if (n.rhs->op == Op::Const && n.rhs->value == 2.0) return b * b;
      return std::pow(b, eval(*n.rhs, x, eps));
    }
    case Op::Exp: return std::exp(eval(*n.lhs, x, eps));
    case Op::Sin: return std::sin(eval(*n.lhs, x, eps));
    case Op::Cos: return std::cos(eval(*n.lhs, x, eps));
    case Op::Log: return std::log(eval(*n.lhs, x, eps));
  }
  return 0.0;
}

bool depends(const Expr::Node& n, Op var) {
  if (n.op == var) return true;
  if (n.lhs && depends(*n.lhs, var)) return true;
  if (n.rhs && depends(*n.rhs, var)) return true;
  return false;
}

void print(const Expr::Node& n, std::ostream& os) {
  auto bin = [&](const char* sym) {
    os << '(';
    print(*n.lhs, os);
    os << sym;
    print(*n.rhs, os);
    os << ')';
  };
  auto fn = [&](const char* name) {
    os << name << '(';
    print(*n.lhs, os);
    os << ')';
  };
  switch (n.op) {
    case Op::Const: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n.value;
      os << tmp.str();
      break;
    }
    case Op::X: os << 'x'; break;
    case Op::Eps: os << "eps"; break;
    case Op::Add: bin("+"); break;
    case Op::Sub: bin("-"); break;
    case Op::Mul: bin("*"); break;
    case Op::Div: bin("/"); break;
    case Op::Pow: bin("^"); break;
    case Op::Neg:
      os << "(-";
      print(*n.lhs, os);
      os << ')';
      break;
    case Op::Exp: fn("exp"); break;
    case Op::Sin: fn("sin"); break;
    case Op::Cos: fn("cos"); break;
    case Op::Log: fn("log"); break;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    NodePtr n = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    return n;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCode::ParseError,
         "expression '" + std::string(text_) + "' at column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) error(std::string("expected '") + c + "'");
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Op::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make(Op::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make(Op::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make(Op::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) error("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    if (accept('(')) {
      NodePtr inner = parse_expr();
      expect(')');
      return inner;
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc()) error("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return make_const(v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view id = text_.substr(start, pos_ - start);
    if (id == "x") return make(Op::X);
    if (id == "eps") return make(Op::Eps);
    if (id == "pi") return make_const(std::numbers::pi);
    if (id == "pow") {
      expect('(');
      NodePtr base = parse_expr();
      expect(',');
      NodePtr exponent = parse_expr();
      expect(')');
      return make(Op::Pow, base, exponent);
    }
    Op op;
    if (id == "exp") {
      op = Op::Exp;
    } else if (id == "sin") {
      op = Op::Sin;
    } else if (id == "cos") {
      op = Op::Cos;
    } else {
      pos_ = start;
      error("unknown identifier '" + std::string(id) + "'");
    }
    expect('(');
    NodePtr arg = parse_expr();
    expect(')');
    return make(op, arg);
  }
};

}  // namespace

Expr::Expr() : node_(make_const(0.0)) {}

Expr Expr::parse(std::string_view text) { return Expr(Parser(text).parse_all()); }
Expr Expr::constant(double value) { return Expr(make_const(value)); }
Expr Expr::variable_x() { return Expr(make(Op::X)); }
Expr Expr::variable_eps() { return Expr(make(Op::Eps)); }

double Expr::operator()(double x, double eps) const { return eval(*node_, x, eps); }

bool Expr::depends_on_x() const { return depends(*node_, Op::X); }
bool Expr::depends_on_eps() const { return depends(*node_, Op::Eps); }
bool Expr::is_constant() const { return !depends_on_x() && !depends_on_eps(); }

std::string Expr::to_string() const {
  std::ostringstream os;
  print(*node_, os);
  return os.str();
}

Expr operator+(const Expr& a, const Expr& b) {
  if (is_const(a.node_, 0.0)) return b;
  if (is_const(b.node_, 0.0)) return a;
  if (a.node_->op == Op::Const && b.node_->op == Op::Const) return Expr::constant(a.node_->value + b.node_->value);
  return Expr(make(Op::Add, a.node_, b.node_));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (is_const(b.node_, 0.0)) return a;
  if (is_const(a.node_, 0.0)) return -b;
  if (a.node_->op == Op::Const && b.node_->op == Op::Const) return Expr::constant(a.node_->value - b.node_->value);
  return Expr(make(Op::Sub, a.node_, b.node_));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (is_const(a.node_, 0.0) || is_const(b.node_, 0.0)) return Expr::constant(0.0);
  if (is_const(a.node_, 1.0)) return b;
  if (is_const(b.node_, 1.0)) return a;
  if (a.node_->op == Op::Const && b.node_->op == Op::Const) return Expr::constant(a.node_->value * b.node_->value);
  return Expr(make(Op::Mul, a.node_, b.node_));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (is_const(a.node_, 0.0)) return Expr::constant(0.0);
  if (is_const(b.node_, 1.0)) return a;
  return Expr(make(Op::Div, a.node_, b.node_));
}

Expr operator-(const Expr& a) {
  if (a.node_->op == Op::Const) return Expr::constant(-a.node_->value);
  if (a.node_->op == Op::Neg) return Expr(a.node_->lhs);
  return Expr(make(Op::Neg, a.node_));
}

Expr pow(const Expr& base, const Expr& exponent) {
  if (is_const(exponent.node_, 1.0)) return base;
  if (is_const(exponent.node_, 0.0)) return Expr::constant(1.0);
  return Expr(make(Op::Pow, base.node_, exponent.node_));
}

Expr exp(const Expr& a) { return Expr(make(Op::Exp, a.node_)); }
Expr sin(const Expr& a) { return Expr(make(Op::Sin, a.node_)); }
Expr cos(const Expr& a) { return Expr(make(Op::Cos, a.node_)); }
Expr log(const Expr& a) { return Expr(make(Op::Log, a.node_)); }

Expr Expr::derivative() const {
  const Node& n = *node_;
  auto sub = [](const NodePtr& p) { return Expr(p); };
  switch (n.op) {
    case Op::Const:
    case Op::Eps:
      return constant(0.0);
    case Op::X:
      return constant(1.0);
    case Op::Add:
      return sub(n.lhs).derivative() + sub(n.rhs).derivative();
    case Op::Sub:
      return sub(n.lhs).derivative() - sub(n.rhs).derivative();
    case Op::Mul: {
      const Expr a = sub(n.lhs), b = sub(n.rhs);
      return a.derivative() * b + a * b.derivative();
    }
    case Op::Div: {
      const Expr a = sub(n.lhs), b = sub(n.rhs);
      return (a.derivative() * b - a * b.derivative()) / (b * b);
    }
    case Op::Neg:
      return -sub(n.lhs).derivative();
    case Op::Pow: {
      const Expr a = sub(n.lhs), b = sub(n.rhs);
      if (!b.depends_on_x()) {
        return b * wellprobe::pow(a, b - constant(1.0)) * a.derivative();
      }
      // a^b (b' ln a + b a'/a)
      return *this * (b.derivative() * wellprobe::log(a) + b * a.derivative() / a);
    }
    case Op::Exp:
      return *this * sub(n.lhs).derivative();
    case Op::Sin: {
      const Expr a = sub(n.lhs);
      return wellprobe::cos(a) * a.derivative();
    }
    case Op::Cos: {
      const Expr a = sub(n.lhs);
      return -(wellprobe::sin(a) * a.derivative());
    }
    case Op::Log: {
      const Expr a = sub(n.lhs);
      return a.derivative() / a;
    }
  }
  return constant(0.0);
}

}  // namespace wellprobe
