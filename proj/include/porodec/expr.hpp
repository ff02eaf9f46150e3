#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace porodec {

class ExpressionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arithmetic expression in the variables x, y, t.
///
/// Grammar: numbers, the constants pi and e, binary + - * / ^ (right
/// associative), unary minus, comparisons < <= > >= == != (yielding 0 or 1),
/// and the functions sin cos tan exp log sqrt abs min max pow if(c, a, b).
class Expression {
 public:
  Expression();  ///< the constant 0
  static Expression parse(const std::string& text);
  static Expression constant(double v);

  double operator()(double x, double y, double t) const;
  double eval(double x = 0.0, double y = 0.0, double t = 0.0) const { return (*this)(x, y, t); }

  bool uses_space() const { return uses_space_; }
  bool uses_time() const { return uses_time_; }
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  bool uses_space_ = false;
  bool uses_time_ = false;
};

}  // namespace porodec
