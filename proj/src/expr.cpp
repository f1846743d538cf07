#include "poisat/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "poisat/errors.hpp"

namespace poisat::expr {

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp };

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = 0;  // variable index, or exponent for Pow
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

double eval_node(const Node& n, std::span<const double> p) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return p[n.index];
    case Op::Neg: return -eval_node(*n.a, p);
    case Op::Add: return eval_node(*n.a, p) + eval_node(*n.b, p);
    case Op::Sub: return eval_node(*n.a, p) - eval_node(*n.b, p);
    case Op::Mul: return eval_node(*n.a, p) * eval_node(*n.b, p);
    case Op::Div: return eval_node(*n.a, p) / eval_node(*n.b, p);
    case Op::Pow: return std::pow(eval_node(*n.a, p), n.index);
    case Op::Sin: return std::sin(eval_node(*n.a, p));
    case Op::Cos: return std::cos(eval_node(*n.a, p));
    case Op::Exp: return std::exp(eval_node(*n.a, p));
  }
  return 0.0;
}

// Smart constructors with constant folding and 0/1 rules.
NodePtr add(NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value + b->value);
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  return make(Op::Add, a, b);
}

NodePtr neg(NodePtr a) {
  if (a->op == Op::Const) return make_const(-a->value);
  if (a->op == Op::Neg) return a->a;
  return make(Op::Neg, a);
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value - b->value);
  if (is_const(b, 0)) return a;
  if (is_const(a, 0)) return neg(b);
  return make(Op::Sub, a, b);
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const) return make_const(a->value * b->value);
  if (is_const(a, 0) || is_const(b, 0)) return make_const(0.0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  if (is_const(a, -1)) return neg(b);
  if (is_const(b, -1)) return neg(a);
  return make(Op::Mul, a, b);
}

NodePtr div(NodePtr a, NodePtr b) {
  if (a->op == Op::Const && b->op == Op::Const && b->value != 0.0) return make_const(a->value / b->value);
  if (is_const(a, 0) && !is_const(b, 0)) return make_const(0.0);
  if (is_const(b, 1)) return a;
  return make(Op::Div, a, b);
}

NodePtr powi(NodePtr a, int k) {
  if (k == 0) return make_const(1.0);
  if (k == 1) return a;
  if (a->op == Op::Const) return make_const(std::pow(a->value, k));
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->a = std::move(a);
  n->index = k;
  return n;
}

NodePtr unary(Op op, NodePtr a) {
  if (a->op == Op::Const) {
    double v = op == Op::Sin ? std::sin(a->value) : op == Op::Cos ? std::cos(a->value) : std::exp(a->value);
    return make_const(v);
  }
  return make(op, a);
}

NodePtr derive_node(const NodePtr& n, int i) {
  switch (n->op) {
    case Op::Const: return make_const(0.0);
    case Op::Var: return make_const(n->index == i ? 1.0 : 0.0);
    case Op::Neg: return neg(derive_node(n->a, i));
    case Op::Add: return add(derive_node(n->a, i), derive_node(n->b, i));
    case Op::Sub: return sub(derive_node(n->a, i), derive_node(n->b, i));
    case Op::Mul:
      return add(mul(derive_node(n->a, i), n->b), mul(n->a, derive_node(n->b, i)));
    case Op::Div: {
      auto da = derive_node(n->a, i);
      auto db = derive_node(n->b, i);
      if (is_const(db, 0)) return div(da, n->b);
      return div(sub(mul(da, n->b), mul(n->a, db)), powi(n->b, 2));
    }
    case Op::Pow:
      return mul(mul(make_const(n->index), powi(n->a, n->index - 1)), derive_node(n->a, i));
    case Op::Sin: return mul(unary(Op::Cos, n->a), derive_node(n->a, i));
    case Op::Cos: return mul(neg(unary(Op::Sin, n->a)), derive_node(n->a, i));
    case Op::Exp: return mul(n, derive_node(n->a, i));
  }
  return make_const(0.0);
}

std::string number_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  return v < 0 ? "(" + s + ")" : s;
}

std::string print_node(const Node& n, const std::string& prefix) {
  auto p = [&](const NodePtr& c) { return print_node(*c, prefix); };
  switch (n.op) {
    case Op::Const: return number_text(n.value);
    case Op::Var: return prefix + std::to_string(n.index + 1);
    case Op::Neg: return "(-" + p(n.a) + ")";
    case Op::Add: return "(" + p(n.a) + "+" + p(n.b) + ")";
    case Op::Sub: return "(" + p(n.a) + "-" + p(n.b) + ")";
    case Op::Mul: return "(" + p(n.a) + "*" + p(n.b) + ")";
    case Op::Div: return "(" + p(n.a) + "/" + p(n.b) + ")";
    case Op::Pow: return "(" + p(n.a) + "^" + std::to_string(n.index) + ")";
    case Op::Sin: return "sin(" + p(n.a) + ")";
    case Op::Cos: return "cos(" + p(n.a) + ")";
    case Op::Exp: return "exp(" + p(n.a) + ")";
  }
  return "0";
}

class Parser {
 public:
  Parser(std::string_view text, const Variables& vars) : text_(text), vars_(vars) {}

  NodePtr run() {
    auto e = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::Add, lhs, term());
      else if (accept('-')) lhs = make(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    auto lhs = factor();
    for (;;) {
      if (accept('*')) lhs = make(Op::Mul, lhs, factor());
      else if (accept('/')) lhs = make(Op::Div, lhs, factor());
      else return lhs;
    }
  }

  NodePtr factor() {
    if (accept('-')) return make(Op::Neg, factor());
    if (accept('+')) return factor();
    auto b = base();
    if (accept('^')) {
      skip();
      std::size_t start = pos_;
      bool negative = false;
      if (accept('-')) negative = true;
      else accept('+');
      skip();
      std::size_t digits = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == digits) {
        pos_ = start;
        fail("exponent must be an integer");
      }
      long k = std::strtol(std::string(text_.substr(digits, pos_ - digits)).c_str(), nullptr, 10);
      if (k > 64) {
        pos_ = start;
        fail("exponent too large");
      }
      auto n = std::make_shared<Node>();
      n->op = Op::Pow;
      n->a = b;
      n->index = static_cast<int>(negative ? -k : k);
      return n;
    }
    return b;
  }

  static bool ident_char(char c, bool first) {
    auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalpha(u) || c == '_') return true;
    return !first && std::isdigit(u);
  }

  NodePtr base() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.data() + pos_;
      std::string buf(text_.substr(pos_));
      char* end = nullptr;
      double v = std::strtod(buf.c_str(), &end);
      if (end == buf.c_str()) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - buf.c_str());
      (void)begin;
      return make_const(v);
    }
    if (ident_char(c, true)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_], false)) ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      if (name == "sin" || name == "cos" || name == "exp") {
        if (!accept('(')) fail("expected '(' after " + name);
        auto arg = expr();
        expect(')');
        return make(name == "sin" ? Op::Sin : name == "cos" ? Op::Cos : Op::Exp, arg);
      }
      if (name == "pi") return make_const(std::numbers::pi);
      int idx = vars_.lookup(name);
      if (idx < 0) {
        pos_ = start;
        // Indexed name beyond the declared arity is an arity mismatch.
        if (name.size() > vars_.prefix.size() && name.compare(0, vars_.prefix.size(), vars_.prefix) == 0 &&
            std::isdigit(static_cast<unsigned char>(name[vars_.prefix.size()])))
          fail("variable '" + name + "' exceeds arity " + std::to_string(vars_.count));
        fail("unknown identifier '" + name + "'");
      }
      auto n = std::make_shared<Node>();
      n->op = Op::Var;
      n->index = idx;
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  const Variables& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(make_const(0.0)), arity_(0) {}

Expression Expression::constant(double value, int arity) { return Expression(make_const(value), arity); }

Expression Expression::variable(int index, int arity) {
  if (index < 0 || index >= arity) throw Error("variable index out of range");
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  return Expression(n, arity);
}

bool Expression::is_constant() const { return root_->op == Op::Const; }
bool Expression::is_zero() const { return is_const(root_, 0.0); }
double Expression::constant_value() const { return root_->value; }

double Expression::eval(std::span<const double> point) const {
  if (static_cast<int>(point.size()) < arity_)
    throw EvalError("point has fewer coordinates than the expression arity",
                    std::vector<double>(point.begin(), point.end()));
  double v = eval_node(*root_, point);
  if (!std::isfinite(v)) throw EvalError("non-finite value", std::vector<double>(point.begin(), point.end()));
  return v;
}

double Expression::eval(const Vector& point) const {
  return eval(std::span<const double>(point.data(), static_cast<std::size_t>(point.size())));
}

Expression Expression::derive(int index) const {
  if (index < 0 || index >= arity_) throw Error("derivative index out of range");
  return Expression(derive_node(root_, index), arity_);
}

std::string Expression::str(const std::string& prefix) const { return print_node(*root_, prefix); }

namespace {
int joint_arity(const Expression& a, const Expression& b) { return std::max(a.arity(), b.arity()); }
}  // namespace

Expression operator+(const Expression& a, const Expression& b) { return Expression(add(a.root_, b.root_), joint_arity(a, b)); }
Expression operator-(const Expression& a, const Expression& b) { return Expression(sub(a.root_, b.root_), joint_arity(a, b)); }
Expression operator*(const Expression& a, const Expression& b) { return Expression(mul(a.root_, b.root_), joint_arity(a, b)); }
Expression operator/(const Expression& a, const Expression& b) { return Expression(div(a.root_, b.root_), joint_arity(a, b)); }
Expression operator-(const Expression& a) { return Expression(neg(a.root_), a.arity_); }
Expression pow(const Expression& a, int k) { return Expression(powi(a.root_, k), a.arity_); }
Expression sin(const Expression& a) { return Expression(unary(Op::Sin, a.root_), a.arity_); }
Expression cos(const Expression& a) { return Expression(unary(Op::Cos, a.root_), a.arity_); }
Expression exp(const Expression& a) { return Expression(unary(Op::Exp, a.root_), a.arity_); }

Variables Variables::ambient(int n) {
  Variables v;
  v.count = n;
  v.prefix = "x";
  if (n <= 4) {
    const char* names[] = {"x", "y", "z", "th"};
    for (int i = 0; i < n; ++i) v.aliases.emplace_back(names[i], i);
    if (n == 4) v.aliases.emplace_back("\xce\xb8", 3);  // θ
  }
  return v;
}

Variables Variables::parameters(int k, const std::vector<std::string>& names) {
  Variables v;
  v.count = k;
  v.prefix = "u";
  if (!names.empty()) {
    if (static_cast<int>(names.size()) != k) throw Error("parameter name count does not match dimension");
    for (int i = 0; i < k; ++i) v.aliases.emplace_back(names[i], i);
  } else if (k <= 3) {
    const char* defaults[] = {"u", "v", "w"};
    for (int i = 0; i < k; ++i) v.aliases.emplace_back(defaults[i], i);
  }
  return v;
}

int Variables::lookup(std::string_view name) const {
  for (const auto& [alias, idx] : aliases)
    if (alias == name) return idx;
  if (name.size() > prefix.size() && name.substr(0, prefix.size()) == prefix) {
    auto digits = name.substr(prefix.size());
    if (digits[0] == '0') return -1;
    int idx = 0;
    for (char c : digits) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return -1;
      idx = idx * 10 + (c - '0');
      if (idx > 100000) return -1;
    }
    if (idx >= 1 && idx <= count) return idx - 1;
  }
  return -1;
}

Expression parse(std::string_view text, int arity) { return parse(text, Variables::ambient(arity)); }

Expression parse(std::string_view text, const Variables& vars) {
  Parser p(text, vars);
  return Expression(p.run(), vars.count);
}

}  // namespace poisat::expr
