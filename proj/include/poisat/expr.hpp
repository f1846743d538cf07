#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poisat/types.hpp"

namespace poisat::expr {

struct Node;
struct Variables;

// Immutable scalar expression in variables 0..arity-1.
class Expression {
 public:
  Expression();  // constant 0 of arity 0

  static Expression constant(double value, int arity);
  static Expression variable(int index, int arity);

  int arity() const { return arity_; }
  bool is_constant() const;
  bool is_zero() const;
  double constant_value() const;  // only valid when is_constant()

  double eval(std::span<const double> point) const;
  double eval(const Vector& point) const;
  Expression derive(int index) const;

  // Fully parenthesized text; reparses to the same values under `prefix`
  // indexed names (x1.., u1..).
  std::string str(const std::string& prefix = "x") const;

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  friend Expression pow(const Expression& a, int exponent);
  friend Expression sin(const Expression& a);
  friend Expression cos(const Expression& a);
  friend Expression exp(const Expression& a);
  friend Expression parse(std::string_view text, const Variables& vars);

 private:
  Expression(std::shared_ptr<const Node> root, int arity) : root_(std::move(root)), arity_(arity) {}
  std::shared_ptr<const Node> root_;
  int arity_ = 0;
};

// Identifier table for parsing. Indexed names `<prefix>1..<prefix>n` are always
// accepted; aliases map extra names to indices.
struct Variables {
  int count = 0;
  std::string prefix = "x";
  std::vector<std::pair<std::string, int>> aliases;

  // x1..xn plus x,y,z,th,θ for n <= 4.
  static Variables ambient(int n);
  // u1..uk plus the given names (or u,v,w when none are given and k <= 3).
  static Variables parameters(int k, const std::vector<std::string>& names = {});

  int lookup(std::string_view name) const;  // -1 if unknown
};

Expression parse(std::string_view text, int arity);
Expression parse(std::string_view text, const Variables& vars);

// Free-function forms of the member operations.
inline double eval(const Expression& e, const Vector& p) { return e.eval(p); }
inline Expression derive(const Expression& e, int i) { return e.derive(i); }

}  // namespace poisat::expr
