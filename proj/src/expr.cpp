#include "sgvar/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <mutex>

namespace sgvar {

namespace {

struct Token {
  enum class Kind { Number, Ident, Op, LParen, RParen, Comma, End } kind;
  std::string_view text;
  double number = 0;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : src_(s) { advance(); }
  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    tok_.offset = pos_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::Kind::End;
      tok_.text = {};
      return;
    }
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      const char* begin = src_.data() + pos_;
      const char* end = src_.data() + src_.size();
      double value = 0;
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc())
        throw ExprParseError("malformed number", pos_);
      tok_.kind = Token::Kind::Number;
      tok_.number = value;
      tok_.text = src_.substr(pos_, ptr - begin);
      pos_ += ptr - begin;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t e = pos_;
      while (e < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[e])) || src_[e] == '_'))
        ++e;
      tok_.kind = Token::Kind::Ident;
      tok_.text = src_.substr(pos_, e - pos_);
      pos_ = e;
      return;
    }
    switch (c) {
      case '(': tok_.kind = Token::Kind::LParen; break;
      case ')': tok_.kind = Token::Kind::RParen; break;
      case ',': tok_.kind = Token::Kind::Comma; break;
      case '+': case '-': case '*': case '/': case '^':
        tok_.kind = Token::Kind::Op;
        break;
      default:
        throw ExprParseError(std::string("unexpected character '") + c + "'", pos_);
    }
    tok_.text = src_.substr(pos_, 1);
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

ExprNodePtr make_node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

struct FnInfo {
  std::string_view name;
  FnKind kind;
  int arity;
};

constexpr FnInfo kFunctions[] = {
    {"exp", FnKind::Exp, 1}, {"log", FnKind::Log, 1}, {"sin", FnKind::Sin, 1},
    {"cos", FnKind::Cos, 1}, {"abs", FnKind::Abs, 1}, {"sqrt", FnKind::Sqrt, 1},
    {"min", FnKind::Min, 2}, {"max", FnKind::Max, 2},
};

class Parser {
 public:
  Parser(std::string_view text, int max_x, bool allow_u)
      : lex_(text), max_x_(max_x), allow_u_(allow_u) {}

  ExprNodePtr parse() {
    ExprNodePtr e = sum();
    const Token& t = lex_.peek();
    if (t.kind != Token::Kind::End)
      throw ExprParseError("unexpected trailing input '" + std::string(t.text) + "'", t.offset);
    return e;
  }

 private:
  ExprNodePtr sum() {
    ExprNodePtr lhs = product();
    while (lex_.peek().kind == Token::Kind::Op &&
           (lex_.peek().text == "+" || lex_.peek().text == "-")) {
      Token op = lex_.next();
      ExprNodePtr rhs = product();
      lhs = make_node({ExprNode::Kind::Binary, 0, 0,
                       op.text == "+" ? BinOp::Add : BinOp::Sub, {}, lhs, rhs, op.offset});
    }
    return lhs;
  }

  ExprNodePtr product() {
    ExprNodePtr lhs = unary();
    while (lex_.peek().kind == Token::Kind::Op &&
           (lex_.peek().text == "*" || lex_.peek().text == "/")) {
      Token op = lex_.next();
      ExprNodePtr rhs = unary();
      lhs = make_node({ExprNode::Kind::Binary, 0, 0,
                       op.text == "*" ? BinOp::Mul : BinOp::Div, {}, lhs, rhs, op.offset});
    }
    return lhs;
  }

  ExprNodePtr unary() {
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "-") {
      Token op = lex_.next();
      ExprNodePtr inner = unary();
      return make_node({ExprNode::Kind::Neg, 0, 0, {}, {}, inner, nullptr, op.offset});
    }
    return power();
  }

  ExprNodePtr power() {
    ExprNodePtr base = primary();
    if (lex_.peek().kind == Token::Kind::Op && lex_.peek().text == "^") {
      Token op = lex_.next();
      ExprNodePtr exponent = unary();  // right-assoc; allows x^-2
      return make_node(
          {ExprNode::Kind::Binary, 0, 0, BinOp::Pow, {}, base, exponent, op.offset});
    }
    return base;
  }

  ExprNodePtr primary() {
    Token t = lex_.next();
    switch (t.kind) {
      case Token::Kind::Number:
        return make_node({ExprNode::Kind::Number, t.number, 0, {}, {}, nullptr, nullptr, t.offset});
      case Token::Kind::LParen: {
        ExprNodePtr e = sum();
        expect_rparen(t.offset);
        return e;
      }
      case Token::Kind::Ident:
        return identifier(t);
      default:
        throw ExprParseError("expected a value, variable or '('", t.offset);
    }
  }

  void expect_rparen(std::size_t open_offset) {
    Token t = lex_.next();
    if (t.kind != Token::Kind::RParen)
      throw ExprParseError("missing ')' for '(' ", open_offset);
  }

  ExprNodePtr identifier(const Token& t) {
    if (t.text == "u") {
      if (!allow_u_)
        throw ExprParseError("variable 'u' is not allowed in this expression", t.offset);
      return make_node({ExprNode::Kind::VarU, 0, 0, {}, {}, nullptr, nullptr, t.offset});
    }
    if (t.text.size() >= 2 && t.text[0] == 'x') {
      int idx = 0;
      auto [ptr, ec] =
          std::from_chars(t.text.data() + 1, t.text.data() + t.text.size(), idx);
      if (ec == std::errc() && ptr == t.text.data() + t.text.size() && idx >= 1) {
        if (max_x_ >= 0 && idx > max_x_)
          throw ExprParseError("variable '" + std::string(t.text) + "' exceeds x1..x" +
                                   std::to_string(max_x_),
                               t.offset);
        return make_node(
            {ExprNode::Kind::VarX, 0, idx, {}, {}, nullptr, nullptr, t.offset});
      }
    }
    for (const FnInfo& fn : kFunctions) {
      if (t.text != fn.name) continue;
      Token open = lex_.next();
      if (open.kind != Token::Kind::LParen)
        throw ExprParseError("'" + std::string(fn.name) + "' must be called with '('",
                             open.offset);
      ExprNodePtr first = sum();
      ExprNodePtr second;
      if (fn.arity == 2) {
        Token comma = lex_.next();
        if (comma.kind != Token::Kind::Comma)
          throw ExprParseError("'" + std::string(fn.name) + "' takes two arguments",
                               comma.offset);
        second = sum();
      }
      expect_rparen(open.offset);
      return make_node({ExprNode::Kind::Call, 0, 0, {}, fn.kind, first, second, t.offset});
    }
    throw ExprParseError("unknown identifier '" + std::string(t.text) + "'", t.offset);
  }

  Lexer lex_;
  int max_x_;
  bool allow_u_;
};

[[noreturn]] void domain_fail(const char* what, std::size_t offset) {
  throw DomainError(std::string(what) + " (at byte " + std::to_string(offset) + ")");
}

double eval_node(const ExprNode& n, const EvalBindings& b) {
  switch (n.kind) {
    case ExprNode::Kind::Number:
      return n.number;
    case ExprNode::Kind::VarU:
      if (!b.u) throw ConfigError("variable 'u' is unbound");
      return *b.u;
    case ExprNode::Kind::VarX:
      if (n.var_index > static_cast<int>(b.x.size()))
        throw ConfigError("variable 'x" + std::to_string(n.var_index) + "' is unbound");
      return b.x[n.var_index - 1];
    case ExprNode::Kind::Neg:
      return -eval_node(*n.lhs, b);
    case ExprNode::Kind::Binary: {
      const double l = eval_node(*n.lhs, b);
      const double r = eval_node(*n.rhs, b);
      double v = 0;
      switch (n.op) {
        case BinOp::Add: v = l + r; break;
        case BinOp::Sub: v = l - r; break;
        case BinOp::Mul: v = l * r; break;
        case BinOp::Div:
          if (r == 0.0) domain_fail("division by zero", n.offset);
          v = l / r;
          break;
        case BinOp::Pow: {
          if (l == 0.0 && r < 0.0) domain_fail("zero raised to a negative power", n.offset);
          if (l < 0.0 && r != std::nearbyint(r))
            domain_fail("negative base with a fractional exponent", n.offset);
          v = std::pow(l, r);
          break;
        }
      }
      if (!std::isfinite(v)) domain_fail("non-finite result", n.offset);
      return v;
    }
    case ExprNode::Kind::Call: {
      const double a = eval_node(*n.lhs, b);
      double v = 0;
      switch (n.fn) {
        case FnKind::Exp: v = std::exp(a); break;
        case FnKind::Log:
          if (a <= 0.0) domain_fail("log of a non-positive value", n.offset);
          v = std::log(a);
          break;
        case FnKind::Sin: v = std::sin(a); break;
        case FnKind::Cos: v = std::cos(a); break;
        case FnKind::Abs: v = std::abs(a); break;
        case FnKind::Sqrt:
          if (a < 0.0) domain_fail("sqrt of a negative value", n.offset);
          v = std::sqrt(a);
          break;
        case FnKind::Min: v = std::min(a, eval_node(*n.rhs, b)); break;
        case FnKind::Max: v = std::max(a, eval_node(*n.rhs, b)); break;
      }
      if (!std::isfinite(v)) domain_fail("non-finite result", n.offset);
      return v;
    }
  }
  throw NumericalError("corrupt expression node");
}

int precedence(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::Kind::Binary:
      switch (n.op) {
        case BinOp::Add: case BinOp::Sub: return 1;
        case BinOp::Mul: case BinOp::Div: return 2;
        case BinOp::Pow: return 4;
      }
      return 0;
    case ExprNode::Kind::Neg:
      return 3;
    default:
      return 5;
  }
}

void print_node(const ExprNode& n, std::string& out);

void print_child(const ExprNode& child, int parent_prec, bool tight, std::string& out) {
  const bool parens = tight ? precedence(child) <= parent_prec : precedence(child) < parent_prec;
  if (parens) out += '(';
  print_node(child, out);
  if (parens) out += ')';
}

void print_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::Number: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.number);
      out += buf;
      return;
    }
    case ExprNode::Kind::VarU: out += 'u'; return;
    case ExprNode::Kind::VarX: out += 'x' + std::to_string(n.var_index); return;
    case ExprNode::Kind::Neg:
      out += '-';
      print_child(*n.lhs, 3, false, out);
      return;
    case ExprNode::Kind::Binary: {
      const int p = precedence(n);
      const char* op = "";
      switch (n.op) {
        case BinOp::Add: op = "+"; break;
        case BinOp::Sub: op = "-"; break;
        case BinOp::Mul: op = "*"; break;
        case BinOp::Div: op = "/"; break;
        case BinOp::Pow: op = "^"; break;
      }
      if (n.op == BinOp::Pow) {
        print_child(*n.lhs, p, true, out);   // left operand of ^ binds tighter
        out += op;
        print_child(*n.rhs, p - 1, false, out);  // exponent may be a unary chain
      } else {
        print_child(*n.lhs, p, false, out);
        out += op;
        print_child(*n.rhs, p, true, out);  // left-assoc
      }
      return;
    }
    case ExprNode::Kind::Call: {
      const char* name = "";
      switch (n.fn) {
        case FnKind::Exp: name = "exp"; break;
        case FnKind::Log: name = "log"; break;
        case FnKind::Sin: name = "sin"; break;
        case FnKind::Cos: name = "cos"; break;
        case FnKind::Abs: name = "abs"; break;
        case FnKind::Sqrt: name = "sqrt"; break;
        case FnKind::Min: name = "min"; break;
        case FnKind::Max: name = "max"; break;
      }
      out += name;
      out += '(';
      print_node(*n.lhs, out);
      if (n.rhs) {
        out += ',';
        print_node(*n.rhs, out);
      }
      out += ')';
      return;
    }
  }
}

void walk(const ExprNode& n, bool& uses_u, int& max_x) {
  switch (n.kind) {
    case ExprNode::Kind::VarU: uses_u = true; return;
    case ExprNode::Kind::VarX: max_x = std::max(max_x, n.var_index); return;
    default:
      if (n.lhs) walk(*n.lhs, uses_u, max_x);
      if (n.rhs) walk(*n.rhs, uses_u, max_x);
  }
}

}  // namespace

Expr Expr::parse(std::string_view text, int max_x_var, bool allow_u) {
  if (text.empty()) throw ExprParseError("empty expression", 0);
  Parser p(text, max_x_var, allow_u);
  return Expr(p.parse());
}

double Expr::eval(const EvalBindings& b) const {
  if (!root_) throw ConfigError("evaluating an empty expression");
  return eval_node(*root_, b);
}

std::string Expr::str() const {
  if (!root_) return {};
  std::string out;
  print_node(*root_, out);
  return out;
}

bool Expr::depends_on_u() const {
  if (!root_) return false;
  bool u = false;
  int mx = 0;
  walk(*root_, u, mx);
  return u;
}

int Expr::max_x_index() const {
  if (!root_) return 0;
  bool u = false;
  int mx = 0;
  walk(*root_, u, mx);
  return mx;
}

std::optional<double> Expr::constant_value() const {
  if (!root_) return std::nullopt;
  bool u = false;
  int mx = 0;
  walk(*root_, u, mx);
  if (u || mx > 0) return std::nullopt;
  try {
    return eval({});
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

bool Expr::is_exp_of_u() const {
  return root_ && root_->kind == ExprNode::Kind::Call && root_->fn == FnKind::Exp &&
         root_->lhs && root_->lhs->kind == ExprNode::Kind::VarU;
}

namespace {

double simpson_slice(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const Expr& f, double a, double fa, double b, double fb, double m,
                     double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_slice(a, fa, m, fm, flm);
  const double right = simpson_slice(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
}

double integrate_interval(const Expr& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = simpson_slice(a, fa, b, fb, fm);
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

}  // namespace

double antiderivative(const Expr& f, double xi, double tol) {
  if (xi == 0.0) return 0.0;
  if (xi > 0.0) return integrate_interval(f, 0.0, xi, tol);
  return -integrate_interval(f, xi, 0.0, tol);
}

Antiderivative::Antiderivative(Expr f, std::optional<Expr> closed_form)
    : f_(std::move(f)), closed_(std::move(closed_form)) {
  if (closed_ && closed_->eval({{}, 0.0}) != 0.0)
    throw ConfigError("closed-form antiderivative must vanish at zero");
}

Antiderivative::Antiderivative(const Antiderivative& other) {
  std::shared_lock lk(other.mutex_);
  f_ = other.f_;
  closed_ = other.closed_;
  step_ = other.step_;
  pos_ = other.pos_;
  neg_ = other.neg_;
}

Antiderivative& Antiderivative::operator=(const Antiderivative& other) {
  if (this == &other) return *this;
  Antiderivative tmp(other);
  std::unique_lock lk(mutex_);
  f_ = std::move(tmp.f_);
  closed_ = std::move(tmp.closed_);
  step_ = tmp.step_;
  pos_ = std::move(tmp.pos_);
  neg_ = std::move(tmp.neg_);
  return *this;
}

double Antiderivative::node(long k) const {
  return k >= 0 ? pos_[static_cast<std::size_t>(k)] : neg_[static_cast<std::size_t>(-k)];
}

void Antiderivative::ensure(long lo, long hi) const {
  {
    std::shared_lock lk(mutex_);
    if (hi < static_cast<long>(pos_.size()) && -lo < static_cast<long>(neg_.size())) return;
  }
  std::unique_lock lk(mutex_);
  while (static_cast<long>(pos_.size()) <= hi) {
    const long k = static_cast<long>(pos_.size()) - 1;
    pos_.push_back(pos_.back() +
                   integrate_interval(f_, k * step_, (k + 1) * step_, 1e-14));
  }
  while (static_cast<long>(neg_.size()) <= -lo) {
    const long k = static_cast<long>(neg_.size()) - 1;
    neg_.push_back(neg_.back() +
                   integrate_interval(f_, -(k + 1) * step_, -k * step_, 1e-14) * -1.0);
  }
}

double Antiderivative::operator()(double xi) const {
  if (closed_) return closed_->eval({{}, xi});
  if (!f_.valid()) throw ConfigError("antiderivative has no integrand");
  if (xi == 0.0) return 0.0;
  const double t = xi / step_;
  const long k = static_cast<long>(std::floor(t));
  ensure(k - 1, k + 2);
  std::shared_lock lk(mutex_);
  const double s = t - k;  // in [0, 1)
  const double ym = node(k - 1), y0 = node(k), y1 = node(k + 1), y2 = node(k + 2);
  // cubic Lagrange on four equally spaced nodes around the target segment
  return ym * (-s * (s - 1.0) * (s - 2.0) / 6.0) +
         y0 * ((s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0) +
         y1 * (-(s + 1.0) * s * (s - 2.0) / 2.0) +
         y2 * ((s + 1.0) * s * (s - 1.0) / 6.0);
}

}  // namespace sgvar
