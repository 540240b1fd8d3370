#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sgvar/field.hpp"
#include "sgvar/gasket.hpp"
#include "sgvar/measure.hpp"

namespace sgvar {

// Level-m renormalized Dirichlet form
//   W_m(u) = ((N+2)/N)^m * sum over edges (u(x) - u(y))^2,
// together with its stiffness matrix K (K[x][x] = deg(x)*factor,
// K[x][y] = -factor on edges), so that u^T K u = W_m(u).
struct EnergyForm {
  const LevelGraph* graph = nullptr;
  double factor = 1.0;                     // ((N+2)/N)^m
  Eigen::SparseMatrix<double> stiffness;   // full vertex set
};

// `corrupt_base` scales the renormalization base (N+2)/N and exists only for
// fault-injection in the verification suites.
EnergyForm make_energy_form(const LevelGraph& g, double corrupt_base = 1.0);

double energy(const EnergyForm& e, const Field& u);
double energy_inner(const EnergyForm& e, const Field& u, const Field& v);

// (H_m u)(x) = sum over neighbors y of (u(y) - u(x)).
double graph_laplacian(const LevelGraph& g, const Field& u, VertexId x);
Eigen::VectorXd graph_laplacian_all(const LevelGraph& g, const Field& u);
// (N+2)^m (H_m u)(x), the pointwise renormalized estimate.
double standard_laplacian(const LevelGraph& g, const Field& u, VertexId x);

// Unique extension of u to level m+1 minimizing W_{m+1}; preserves W_m.
// One symmetric N(N-1)/2-unknown solve per cell (the system depends on N only).
Field harmonic_extension(const LevelGraph& g, const Refinement& r, const Field& u);

// sigma = log((N+2)/N) / (2 log 2)
double holder_exponent(int N);

struct HolderReport {
  double quotient = 0;    // max over vertex pairs of |u(x)-u(y)| / |x-y|^sigma
  double bound = 0;       // (2N+3) sqrt(W_m(u))
  bool ok = true;
  double sup_norm = 0;    // max |u|
  double sup_bound = 0;   // (2N+3) sqrt(W_m(u)), binding for Dirichlet fields
  bool sup_ok = true;
};

HolderReport holder_check(const EnergyForm& e, const Field& u);

// Scalar Lipschitz map with its declared constant; h(0) = 0 is required when
// composing with Dirichlet fields.
struct LipschitzFn {
  std::function<double(double)> h;
  double constant = 1.0;
  std::string name;
};

LipschitzFn lipschitz_identity();
LipschitzFn lipschitz_unit_truncation();   // h(t) = |min(t, 1)|, L = 1
LipschitzFn lipschitz_scale(double c);     // h(t) = c t, L = |c|
LipschitzFn lipschitz_clamp(double lo, double hi);  // L = 1

// Pointwise composition h o u; W_m(h o u) <= L^2 W_m(u).
Field truncate(const Field& u, const LipschitzFn& h);

// sqrt(W_m(u) - sum_x w_x a(x) u(x)^2), defined for a <= 0.
double starred_norm(const EnergyForm& e, const QuadratureWeights& w, const Field& u,
                    const Field& a, bool require_nonpositive = true);

}  // namespace sgvar
