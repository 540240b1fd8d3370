#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "sgvar/energy.hpp"
#include "sgvar/expr.hpp"
#include "sgvar/field.hpp"
#include "sgvar/gasket.hpp"
#include "sgvar/measure.hpp"

namespace sgvar {

// Data of the parametric Dirichlet problem: coefficients a(x), g(x), the
// nonlinearity f(u) with antiderivative F, the coupling lambda, and the
// hypothesis flags
//   (h1) a <= 0 on V,
//   (h2) g <= 0 on V and g not identically zero on any open subset.
struct ProblemSpec {
  int ambient = 3;
  int level = 4;
  Expr a, g, f;
  std::optional<Expr> F;       // must vanish at zero when supplied
  std::optional<Expr> fprime;  // central differences otherwise
  double lambda = 0.0;
  bool assert_h1 = true;
  bool assert_h2 = true;
};

ProblemSpec parse_problem(int N, int m, const std::string& a, const std::string& g,
                          const std::string& f, const std::optional<std::string>& F,
                          const std::optional<std::string>& fprime, double lambda);

// A ProblemSpec sampled on a concrete LevelGraph: per-vertex coefficient
// tables plus callable f, f', F.  Hypotheses are validated on construction;
// (h2) uses the discrete surrogate "g <= 0 everywhere and g nonzero on at
// least one vertex of every level-ceil(m/2) cell".
class BoundProblem {
 public:
  BoundProblem(ProblemSpec spec, const LevelGraph& g, const QuadratureWeights& w);

  const ProblemSpec& spec() const { return spec_; }
  const LevelGraph& graph() const { return *graph_; }
  const QuadratureWeights& weights() const { return *weights_; }

  const Eigen::VectorXd& a_values() const { return a_values_; }
  const Eigen::VectorXd& g_values() const { return g_values_; }
  double integral_g() const { return integral_g_; }
  double f_at_zero() const { return f_at_zero_; }

  double f(double u) const { return spec_.f.eval({{}, u}); }
  double f_prime(double u) const;
  double F(double u) const { return F_(u); }

  double lambda() const { return spec_.lambda; }
  int ambient() const { return graph_->ambient(); }
  int level() const { return graph_->level(); }
  // (2N+3), the embedding constant of the sup-norm inequality.
  double embedding_constant() const { return 2.0 * graph_->ambient() + 3.0; }

 private:
  ProblemSpec spec_;
  const LevelGraph* graph_;
  const QuadratureWeights* weights_;
  Eigen::VectorXd a_values_, g_values_;
  double integral_g_ = 0;
  double f_at_zero_ = 0;
  Antiderivative F_;
};

// Sample an expression in x1..x_{N-1} at every vertex.
Eigen::VectorXd sample_on_vertices(const Expr& e, const LevelGraph& g);

}  // namespace sgvar
