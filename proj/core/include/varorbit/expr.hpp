#pragma once

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace varorbit {

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Small arithmetic expression language used by scenario files.
///
/// Grammar: numbers, named variables, named parameters (folded to constants at
/// parse time), `pi`, `+ - * / ^`, unary minus, parentheses and the functions
/// exp, log, sqrt, sin, cos, tan, tanh, cosh, sinh, abs.  Expressions are
/// immutable and can be differentiated symbolically.
class Expr {
 public:
  struct Node;

  Expr();  // the constant 0

  /// Parses `text`. Identifiers found in `variables` become variable slots in
  /// that order; identifiers found in `parameters` are substituted by value.
  static Expr parse(const std::string& text, const std::vector<std::string>& variables,
                    const std::map<std::string, double>& parameters = {});
  static Expr constant(double value);
  static Expr variable(int index, int arity);

  double operator()(std::span<const double> x) const;
  Expr derivative(int variable_index) const;

  bool is_constant() const;
  /// True when the expression is the literal constant 0 after simplification.
  bool is_zero() const;
  int arity() const { return arity_; }
  std::string to_string() const;

 private:
  Expr(std::shared_ptr<const Node> root, int arity);
  std::shared_ptr<const Node> root_;
  int arity_ = 0;
};

}  // namespace varorbit
