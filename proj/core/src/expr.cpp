#include "varorbit/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace varorbit {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sqrt, Sin, Cos, Tan, Tanh, Cosh, Sinh, Abs };

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = -1;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodePtr make_var(int i) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Var;
  n->index = i;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

double apply_unary(Op op, double x) {
  switch (op) {
    case Op::Neg: return -x;
    case Op::Exp: return std::exp(x);
    case Op::Log: return std::log(x);
    case Op::Sqrt: return std::sqrt(x);
    case Op::Sin: return std::sin(x);
    case Op::Cos: return std::cos(x);
    case Op::Tan: return std::tan(x);
    case Op::Tanh: return std::tanh(x);
    case Op::Cosh: return std::cosh(x);
    case Op::Sinh: return std::sinh(x);
    case Op::Abs: return std::abs(x);
    default: return x;
  }
}

double apply_binary(Op op, double x, double y) {
  switch (op) {
    case Op::Add: return x + y;
    case Op::Sub: return x - y;
    case Op::Mul: return x * y;
    case Op::Div: return x / y;
    case Op::Pow: return std::pow(x, y);
    default: return 0.0;
  }
}

// Builders with local simplification (constant folding and identities).
NodePtr unary(Op op, NodePtr a) {
  if (a->op == Op::Const) return make_const(apply_unary(op, a->value));
  if (op == Op::Neg && a->op == Op::Neg) return a->a;
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  return n;
}

NodePtr binary(Op op, NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) return make_const(apply_binary(op, a->value, b->value));
  switch (op) {
    case Op::Add:
      if (is_const(a, 0)) return b;
      if (is_const(b, 0)) return a;
      break;
    case Op::Sub:
      if (is_const(b, 0)) return a;
      if (is_const(a, 0)) return unary(Op::Neg, b);
      break;
    case Op::Mul:
      if (is_const(a, 0) || is_const(b, 0)) return make_const(0.0);
      if (is_const(a, 1)) return b;
      if (is_const(b, 1)) return a;
      if (is_const(a, -1)) return unary(Op::Neg, b);
      if (is_const(b, -1)) return unary(Op::Neg, a);
      break;
    case Op::Div:
      if (is_const(a, 0)) return make_const(0.0);
      if (is_const(b, 1)) return a;
      break;
    case Op::Pow:
      if (is_const(b, 0)) return make_const(1.0);
      if (is_const(b, 1)) return a;
      break;
    default: break;
  }
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

double eval(const Expr::Node& n, std::span<const double> x) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[static_cast<std::size_t>(n.index)];
    case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
    case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
    case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
    case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
    case Op::Pow: {
      const double base = eval(*n.a, x);
      if (n.b->op == Op::Const) {
        const double e = n.b->value;
        if (e == 2.0) return base * base;
        if (e == 3.0) return base * base * base;
      }
      return std::pow(base, eval(*n.b, x));
    }
    default: return apply_unary(n.op, eval(*n.a, x));
  }
}

NodePtr diff(const NodePtr& n, int v) {
  switch (n->op) {
    case Op::Const: return make_const(0.0);
    case Op::Var: return make_const(n->index == v ? 1.0 : 0.0);
    case Op::Add: return binary(Op::Add, diff(n->a, v), diff(n->b, v));
    case Op::Sub: return binary(Op::Sub, diff(n->a, v), diff(n->b, v));
    case Op::Mul:
      return binary(Op::Add, binary(Op::Mul, diff(n->a, v), n->b), binary(Op::Mul, n->a, diff(n->b, v)));
    case Op::Div: {
      // (a/b)' = a'/b - a b' / b^2
      auto t1 = binary(Op::Div, diff(n->a, v), n->b);
      auto t2 = binary(Op::Div, binary(Op::Mul, n->a, diff(n->b, v)), binary(Op::Mul, n->b, n->b));
      return binary(Op::Sub, t1, t2);
    }
    case Op::Pow: {
      auto da = diff(n->a, v);
      auto db = diff(n->b, v);
      NodePtr result = make_const(0.0);
      if (!is_const(da, 0)) {
        // b a^(b-1) a'
        auto expo = binary(Op::Sub, n->b, make_const(1.0));
        result = binary(Op::Mul, binary(Op::Mul, n->b, binary(Op::Pow, n->a, expo)), da);
      }
      if (!is_const(db, 0)) {
        // a^b log(a) b'
        auto t = binary(Op::Mul, binary(Op::Mul, n, unary(Op::Log, n->a)), db);
        result = binary(Op::Add, result, t);
      }
      return result;
    }
    case Op::Neg: return unary(Op::Neg, diff(n->a, v));
    default: break;
  }
  auto da = diff(n->a, v);
  if (is_const(da, 0)) return da;
  NodePtr outer;
  switch (n->op) {
    case Op::Exp: outer = n; break;
    case Op::Log: outer = binary(Op::Div, make_const(1.0), n->a); break;
    case Op::Sqrt: outer = binary(Op::Div, make_const(0.5), n); break;
    case Op::Sin: outer = unary(Op::Cos, n->a); break;
    case Op::Cos: outer = unary(Op::Neg, unary(Op::Sin, n->a)); break;
    case Op::Tan: {
      auto c = unary(Op::Cos, n->a);
      outer = binary(Op::Div, make_const(1.0), binary(Op::Mul, c, c));
      break;
    }
    case Op::Tanh: outer = binary(Op::Sub, make_const(1.0), binary(Op::Mul, n, n)); break;
    case Op::Cosh: outer = unary(Op::Sinh, n->a); break;
    case Op::Sinh: outer = unary(Op::Cosh, n->a); break;
    case Op::Abs: outer = binary(Op::Div, n->a, n); break;
    default: outer = make_const(0.0); break;
  }
  return binary(Op::Mul, outer, da);
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Tanh: return "tanh";
    case Op::Cosh: return "cosh";
    case Op::Sinh: return "sinh";
    case Op::Abs: return "abs";
    default: return "?";
  }
}

void print(std::ostream& os, const Expr::Node& n) {
  switch (n.op) {
    case Op::Const: {
      std::ostringstream s;
      s.precision(17);
      s << n.value;
      os << (n.value < 0 ? "(" + s.str() + ")" : s.str());
      return;
    }
    case Op::Var: os << "x" << n.index; return;
    case Op::Add: os << "("; print(os, *n.a); os << " + "; print(os, *n.b); os << ")"; return;
    case Op::Sub: os << "("; print(os, *n.a); os << " - "; print(os, *n.b); os << ")"; return;
    case Op::Mul: os << "("; print(os, *n.a); os << " * "; print(os, *n.b); os << ")"; return;
    case Op::Div: os << "("; print(os, *n.a); os << " / "; print(os, *n.b); os << ")"; return;
    case Op::Pow: os << "("; print(os, *n.a); os << " ^ "; print(os, *n.b); os << ")"; return;
    case Op::Neg: os << "(-"; print(os, *n.a); os << ")"; return;
    default: os << op_name(n.op) << "("; print(os, *n.a); os << ")"; return;
  }
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars, const std::map<std::string, double>& params)
      : text_(text), vars_(vars), params_(params) {}

  NodePtr parse() {
    auto n = expression();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExprError("expression '" + text_ + "': " + what + " at offset " + std::to_string(pos_));
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

  NodePtr expression() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = binary(Op::Add, lhs, term());
      else if (accept('-')) lhs = binary(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    auto lhs = signed_factor();
    for (;;) {
      if (accept('*')) lhs = binary(Op::Mul, lhs, signed_factor());
      else if (accept('/')) lhs = binary(Op::Div, lhs, signed_factor());
      else return lhs;
    }
  }

  NodePtr signed_factor() {
    if (accept('-')) return unary(Op::Neg, signed_factor());
    if (accept('+')) return signed_factor();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return binary(Op::Pow, base, signed_factor());
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = expression();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(text_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      static const std::map<std::string, Op> functions = {
          {"exp", Op::Exp}, {"log", Op::Log},   {"sqrt", Op::Sqrt}, {"sin", Op::Sin},   {"cos", Op::Cos},
          {"tan", Op::Tan}, {"tanh", Op::Tanh}, {"cosh", Op::Cosh}, {"sinh", Op::Sinh}, {"abs", Op::Abs}};
      if (auto f = functions.find(name); f != functions.end()) {
        if (!accept('(')) fail("expected '(' after " + name);
        auto arg = expression();
        if (!accept(')')) fail("expected ')'");
        return unary(f->second, arg);
      }
      for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == name) return make_var(static_cast<int>(i));
      if (auto p = params_.find(name); p != params_.end()) return make_const(p->second);
      if (name == "pi") return make_const(std::numbers::pi);
      if (name == "e") return make_const(std::numbers::e);
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& text_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& params_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr::Expr() : root_(make_const(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> root, int arity) : root_(std::move(root)), arity_(arity) {}

Expr Expr::parse(const std::string& text, const std::vector<std::string>& variables,
                 const std::map<std::string, double>& parameters) {
  Parser p(text, variables, parameters);
  return Expr(p.parse(), static_cast<int>(variables.size()));
}

Expr Expr::constant(double value) { return Expr(make_const(value), 0); }

Expr Expr::variable(int index, int arity) { return Expr(make_var(index), arity); }

double Expr::operator()(std::span<const double> x) const { return eval(*root_, x); }

Expr Expr::derivative(int variable_index) const { return Expr(diff(root_, variable_index), arity_); }

bool Expr::is_constant() const { return root_->op == Op::Const; }

bool Expr::is_zero() const { return is_const(root_, 0.0); }

std::string Expr::to_string() const {
  std::ostringstream os;
  print(os, *root_);
  return os.str();
}

}  // namespace varorbit
