#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sgvar/problem.hpp"

namespace sgvar {

// Energy functional on the Dirichlet subspace:
//   Phi(u) = 1/2 W_m(u) - 1/2 sum w a u^2      (= 1/2 ||u||_*^2)
//   Psi(u) = -sum w g F(u)
//   I_lambda(u) = Phi(u) - lambda Psi(u)
double phi(const BoundProblem& p, const EnergyForm& e, const QuadratureWeights& w,
           const Field& u);
double psi(const BoundProblem& p, const QuadratureWeights& w, const Field& u);
double i_lambda(const BoundProblem& p, const EnergyForm& e, const QuadratureWeights& w,
                const Field& u, double lambda);

// Euclidean representer of I_lambda'(u) on interior vertices:
//   G(x) = (K u)(x) - w_x a(x) u(x) + lambda w_x g(x) f(u(x)),  G = 0 on V_0.
Field gradient(const BoundProblem& p, const EnergyForm& e, const QuadratureWeights& w,
               const Field& u, double lambda);

// max over interior vertices of |(N+2)^m (H_m u)(x) + a(x) u(x) - lambda g(x) f(u(x))|.
// Diagnostic only: (N+2)^m H_m is a pointwise estimate, not the discrete
// weak operator, so this does not vanish at the discrete minimizer.
double strong_residual(const BoundProblem& p, const Field& u, double lambda);

struct GammaRow {
  double gamma = 0;
  double f_max = 0;        // max of F over [-gamma, gamma]
  double lambda_star = 0;  // +inf when f_max == 0
};

struct LambdaStarResult {
  std::vector<GammaRow> table;
  double lambda_star = 0;  // sup over the grid, refined; may be +inf
  double gamma_star = 0;   // argmax (grid boundary when the sup is unbounded)
  bool finite = true;
  std::string status;
  double integral_g = 0;
  // Analytic envelope when f = exp(u): F <= e^gamma gives the closed-form
  // bound 2 e^{-2} / ((2N+3)^2 |integral g|) at gamma = 2.
  std::optional<double> exp_envelope = std::nullopt;
};

// lambda_star(gamma) = -gamma^2 / (2 (2N+3)^2 (integral g) max_{|xi|<=gamma} F(xi))
LambdaStarResult lambda_star(const BoundProblem& p, const EnergyForm& e,
                             const QuadratureWeights& w, const std::vector<double>& gamma_grid,
                             int f_samples = 10000);

std::vector<double> default_gamma_grid(double gamma_max = 8.0, int steps = 256);

struct SolveOptions {
  double grad_tol = 1e-9;        // converged when ||G|| <= grad_tol * max(1, |I|)
  double newton_tol = 1e-13;
  long max_iters = 50000;
  int newton_max_steps = 60;
  bool newton_polish = true;
  double phi_margin = 1e-9;      // iterates keep Phi(u) <= r (1 - phi_margin)
  std::vector<double> seed_scales = {1e-3, 1e-2, 0.1, 0.5};
  bool keep_trace = true;
};

struct SolveResult {
  Field u;
  double lambda = 0;
  double phi_value = 0;
  double psi_value = 0;
  double i_value = 0;
  double grad_norm = 0;
  long iterations = 0;
  bool converged = false;
  double residual = 0;      // strong-form estimate, reported but never enforced
  double norm_u = 0;        // sqrt(W_m(u))
  double sup_u = 0;
  double r = std::numeric_limits<double>::infinity();
  double gamma_bar = 0;
  double phi_max_iterate = 0;
  std::vector<std::array<double, 2>> trace;  // (I_lambda, grad_norm)
  std::string note;
};

// Restricted minimization of I_lambda over {Phi < r}: multi-start projected
// nonlinear conjugate gradient (seeds: zero plus small multiples of the unit
// truncation bump), optional damped-Newton polish.
SolveResult minimize_restricted(const BoundProblem& p, const EnergyForm& e,
                                const QuadratureWeights& w, double r, double lambda,
                                const SolveOptions& opts = {});

// Damped Newton on the gradient system with Hessian
// K - diag(w a) + lambda diag(w g f'(u)) on interior unknowns.
SolveResult newton_refine(const BoundProblem& p, const EnergyForm& e,
                          const QuadratureWeights& w, const Field& u0, double lambda,
                          double r = std::numeric_limits<double>::infinity(),
                          const SolveOptions& opts = {});

struct SweepRow {
  double lambda = 0;
  double norm_u = 0;
  double i_value = 0;
  bool nontrivial = false;
  double grad_norm = 0;
  double residual = 0;
  bool converged = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double r = 0;
  double gamma_bar = 0;
};

// Ascending lambda grid; each solve warm-starts from the previous solution.
// Per-lambda failures are recorded in the row, never propagated.
SweepResult sweep(const BoundProblem& p, const EnergyForm& e, const QuadratureWeights& w,
                  const std::vector<double>& lambdas, double r, double gamma_bar,
                  const SolveOptions& opts = {}, bool warm_start = true);

}  // namespace sgvar
