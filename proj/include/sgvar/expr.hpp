#pragma once

#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgvar/errors.hpp"

namespace sgvar {

// Small total expression language for coefficient functions a(x), g(x) and
// nonlinearities f(u).
//
// Grammar (top to bottom = loosest to tightest):
//   expr    := mul (('+'|'-') mul)*            left-assoc
//   mul     := unary (('*'|'/') unary)*        left-assoc
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?            right-assoc, binds above unary '-'
//   primary := NUMBER | 'u' | 'x'<digits> | fn '(' expr [',' expr] ')' | '(' expr ')'
// Functions: exp log sin cos abs sqrt (one argument), min max (two).
//
// Evaluation is IEEE double and never silently produces NaN: domain
// violations (log of a non-positive value, division by zero, sqrt of a
// negative, fractional powers of negatives, overflow) throw DomainError.

enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Pow };
enum class FnKind : std::uint8_t { Exp, Log, Sin, Cos, Abs, Sqrt, Min, Max };

struct ExprNode;
using ExprNodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind : std::uint8_t { Number, VarX, VarU, Neg, Binary, Call } kind;
  double number = 0;
  int var_index = 0;  // 1-based index of x variables
  BinOp op{};
  FnKind fn{};
  ExprNodePtr lhs, rhs;
  std::size_t offset = 0;  // byte position in the source text
};

struct EvalBindings {
  std::span<const double> x;  // x1..x_{N-1}
  std::optional<double> u;
};

class Expr {
 public:
  Expr() = default;

  // max_x_var: largest admissible x index (0 forbids spatial variables);
  // pass a negative value to accept any index.
  static Expr parse(std::string_view text, int max_x_var = -1, bool allow_u = true);

  bool valid() const { return root_ != nullptr; }
  double eval(const EvalBindings& b) const;
  double operator()(double u) const { return eval({{}, u}); }

  std::string str() const;

  bool depends_on_u() const;
  int max_x_index() const;
  // Value of a closed expression (no free variables), if it evaluates.
  std::optional<double> constant_value() const;
  bool is_exp_of_u() const;

  const ExprNodePtr& root() const { return root_; }

 private:
  explicit Expr(ExprNodePtr r) : root_(std::move(r)) {}
  ExprNodePtr root_;
};

// Adaptive-Simpson antiderivative F(xi) = integral of f from 0 to xi with
// F(0) = 0 exactly.
double antiderivative(const Expr& f, double xi, double tol = 1e-12);

// F backed either by a user-supplied closed form (which must vanish at zero)
// or by a memoized quadrature grid (step 1e-3, cubic interpolation between
// nodes).  Immutable once built except for the grid, which grows under a
// writer lock; concurrent readers are safe.
class Antiderivative {
 public:
  Antiderivative() = default;
  explicit Antiderivative(Expr f, std::optional<Expr> closed_form = std::nullopt);
  Antiderivative(const Antiderivative& other);
  Antiderivative& operator=(const Antiderivative& other);

  double operator()(double xi) const;
  bool closed_form() const { return closed_.has_value(); }

 private:
  double node(long k) const;  // F(k * step), grid must already cover k
  void ensure(long lo, long hi) const;

  Expr f_;
  std::optional<Expr> closed_;
  double step_ = 1e-3;
  mutable std::vector<double> pos_{0.0};  // pos_[k] = F(k * step)
  mutable std::vector<double> neg_{0.0};  // neg_[k] = F(-k * step)
  mutable std::shared_mutex mutex_;
};

}  // namespace sgvar
