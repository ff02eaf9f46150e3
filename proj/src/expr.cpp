#include "porodec/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <vector>

namespace porodec {

struct Expression::Node {
  enum class Kind { number, var_x, var_y, var_t, unary_minus, binary, call };
  Kind kind = Kind::number;
  double value = 0.0;
  char op = 0;  // binary: + - * / ^ < > l(<=) g(>=) = (==) ! (!=)
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(double x, double y, double t) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::var_x: return x;
      case Kind::var_y: return y;
      case Kind::var_t: return t;
      case Kind::unary_minus: return -args[0]->eval(x, y, t);
      case Kind::binary: {
        const double a = args[0]->eval(x, y, t);
        const double b = args[1]->eval(x, y, t);
        switch (op) {
          case '+': return a + b;
          case '-': return a - b;
          case '*': return a * b;
          case '/': return a / b;
          case '^': return std::pow(a, b);
          case '<': return a < b ? 1.0 : 0.0;
          case '>': return a > b ? 1.0 : 0.0;
          case 'l': return a <= b ? 1.0 : 0.0;
          case 'g': return a >= b ? 1.0 : 0.0;
          case '=': return a == b ? 1.0 : 0.0;
          case '!': return a != b ? 1.0 : 0.0;
        }
        return 0.0;
      }
      case Kind::call: {
        if (fn == "if") return args[0]->eval(x, y, t) != 0.0 ? args[1]->eval(x, y, t) : args[2]->eval(x, y, t);
        const double a = args[0]->eval(x, y, t);
        if (fn == "sin") return std::sin(a);
        if (fn == "cos") return std::cos(a);
        if (fn == "tan") return std::tan(a);
        if (fn == "exp") return std::exp(a);
        if (fn == "log") return std::log(a);
        if (fn == "sqrt") return std::sqrt(a);
        if (fn == "abs") return std::abs(a);
        const double b = args[1]->eval(x, y, t);
        if (fn == "min") return std::min(a, b);
        if (fn == "max") return std::max(a, b);
        if (fn == "pow") return std::pow(a, b);
        return 0.0;
      }
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = comparison();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

  bool uses_space = false;
  bool uses_time = false;

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("expression \"" + s_ + "\": " + what + " at position " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(const char* tok) {
    skip();
    const std::size_t n = std::char_traits<char>::length(tok);
    if (s_.compare(pos_, n, tok) == 0) {
      pos_ += n;
      return true;
    }
    return false;
  }

  static NodePtr binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::binary;
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr comparison() {
    NodePtr a = additive();
    while (true) {
      if (eat("<=")) a = binary('l', a, additive());
      else if (eat(">=")) a = binary('g', a, additive());
      else if (eat("==")) a = binary('=', a, additive());
      else if (eat("!=")) a = binary('!', a, additive());
      else if (eat("<")) a = binary('<', a, additive());
      else if (eat(">")) a = binary('>', a, additive());
      else return a;
    }
  }

  NodePtr additive() {
    NodePtr a = term();
    while (true) {
      if (eat("+")) a = binary('+', a, term());
      else if (eat("-")) a = binary('-', a, term());
      else return a;
    }
  }

  NodePtr term() {
    NodePtr a = unary();
    while (true) {
      if (eat("*")) a = binary('*', a, unary());
      else if (eat("/")) a = binary('/', a, unary());
      else return a;
    }
  }

  NodePtr unary() {
    if (eat("-")) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::unary_minus;
      n->args = {unary()};
      return n;
    }
    if (eat("+")) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (eat("^")) return binary('^', base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (eat("(")) {
      NodePtr n = comparison();
      if (!eat(")")) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) ++end;
      const std::string name = s_.substr(pos_, end - pos_);
      pos_ = end;
      auto n = std::make_shared<Node>();
      if (name == "x" || name == "y" || name == "t") {
        n->kind = name == "x" ? Node::Kind::var_x : (name == "y" ? Node::Kind::var_y : Node::Kind::var_t);
        (name == "t" ? uses_time : uses_space) = true;
        return n;
      }
      if (name == "pi") {
        n->value = std::numbers::pi;
        return n;
      }
      if (name == "e") {
        n->value = std::numbers::e;
        return n;
      }
      std::size_t arity = 0;
      if (name == "sin" || name == "cos" || name == "tan" || name == "exp" || name == "log" || name == "sqrt" ||
          name == "abs") {
        arity = 1;
      } else if (name == "min" || name == "max" || name == "pow") {
        arity = 2;
      } else if (name == "if") {
        arity = 3;
      } else {
        fail("unknown name '" + name + "'");
      }
      if (!eat("(")) fail("expected '(' after " + name);
      n->kind = Node::Kind::call;
      n->fn = name;
      for (std::size_t i = 0; i < arity; ++i) {
        if (i > 0 && !eat(",")) fail(name + " takes " + std::to_string(arity) + " arguments");
        n->args.push_back(comparison());
      }
      if (!eat(")")) fail("expected ')' closing " + name);
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(std::make_shared<Node>()), text_("0") {}

Expression Expression::constant(double v) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->value = v;
  e.root_ = n;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  e.text_ = buf;
  return e;
}

Expression Expression::parse(const std::string& text) {
  Parser p(text);
  Expression e;
  e.root_ = p.parse();
  e.text_ = text;
  e.uses_space_ = p.uses_space;
  e.uses_time_ = p.uses_time;
  return e;
}

double Expression::operator()(double x, double y, double t) const { return root_->eval(x, y, t); }

}  // namespace porodec
