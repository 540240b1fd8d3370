#include "sgvar/solver.hpp"

#include <algorithm>
#include <cmath>

namespace sgvar {

namespace {

void require_dirichlet(const LevelGraph& g, const Field& u, const char* what) {
  require_aligned(g, u, what);
  if (!u.dirichlet)
    throw ConfigError(std::string(what) + " expects a Dirichlet field");
  if (!dirichlet_consistent(g, u))
    throw ConfigError(std::string(what) + ": Dirichlet flag set but boundary values differ from 0");
}

}  // namespace

double phi(const BoundProblem& p, const EnergyForm& e, const QuadratureWeights& w,
           const Field& u) {
  require_dirichlet(p.graph(), u, "phi");
  double quad = 0;
  for (Eigen::Index i = 0; i < u.values.size(); ++i)
    quad += w.w[i] * p.a_values()[i] * u.values[i] * u.values[i];
  return 0.5 * energy(e, u) - 0.5 * quad;
}

double psi(const BoundProblem& p, const QuadratureWeights& w, const Field& u) {
  require_dirichlet(p.graph(), u, "psi");
  double s = 0;
  for (Eigen::Index i = 0; i < u.values.size(); ++i)
    s += w.w[i] * p.g_values()[i] * p.F(u.values[i]);
  return -s;
}

double i_lambda(const BoundProblem& p, const EnergyForm& e, const QuadratureWeights& w,
                const Field& u, double lambda) {
  return phi(p, e, w, u) - lambda * psi(p, w, u);
}

Field gradient(const BoundProblem& p, const EnergyForm& e, const QuadratureWeights& w,
               const Field& u, double lambda) {
  require_dirichlet(p.graph(), u, "gradient");
  Field g = zero_field(p.graph(), true);
  g.values = e.stiffness * u.values;
  for (Eigen::Index i = 0; i < u.values.size(); ++i)
    g.values[i] += -w.w[i] * p.a_values()[i] * u.values[i] +
                   lambda * w.w[i] * p.g_values()[i] * p.f(u.values[i]);
  for (VertexId v : p.graph().boundary()) g.values[v] = 0.0;
  return g;
}

double strong_residual(const BoundProblem& p, const Field& u, double lambda) {
  const LevelGraph& g = p.graph();
  require_aligned(g, u, "strong_residual");
  const double scale = std::pow(static_cast<double>(g.ambient() + 2), g.level());
  double worst = 0;
  for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
    if (g.is_boundary(static_cast<VertexId>(v))) continue;
    double h = 0;
    for (VertexId y : g.neighbors(static_cast<VertexId>(v))) h += u.values[y] - u.values[v];
    const double res = scale * h + p.a_values()[v] * u.values[v] -
                       lambda * p.g_values()[v] * p.f(u.values[v]);
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

std::vector<double> default_gamma_grid(double gamma_max, int steps) {
  if (gamma_max <= 0 || steps < 2) throw ConfigError("gamma grid needs gamma_max > 0, steps >= 2");
  std::vector<double> grid(steps);
  for (int i = 0; i < steps; ++i) grid[i] = gamma_max * (i + 1) / steps;
  return grid;
}

namespace {

// max of F over [-gamma, gamma]: dense scan plus golden-section refinement
// around the best sample.  F is continuous with F(0) = 0, so the max is >= 0.
double max_F_on_box(const BoundProblem& p, double gamma, int samples) {
  double best = 0.0, best_xi = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double xi = -gamma + 2.0 * gamma * i / (samples - 1);
    const double v = p.F(xi);
    if (v > best) {
      best = v;
      best_xi = xi;
    }
  }
  const double delta = 2.0 * gamma / (samples - 1);
  double lo = std::max(-gamma, best_xi - delta);
  double hi = std::min(gamma, best_xi + delta);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = p.F(x1), f2 = p.F(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-13 * std::max(1.0, gamma); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = p.F(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = p.F(x1);
    }
  }
  return std::max({best, f1, f2, 0.0});
}

}  // namespace

LambdaStarResult lambda_star(const BoundProblem& p, const EnergyForm& e,
                             const QuadratureWeights& w, const std::vector<double>& gamma_grid,
                             int f_samples) {
  (void)e;
  (void)w;
  if (gamma_grid.empty()) throw ConfigError("lambda_star: empty gamma grid");
  LambdaStarResult res;
  res.integral_g = p.integral_g();
  if (res.integral_g >= 0)
    throw ConfigError("lambda_star requires integral of g to be negative; got " +
                      std::to_string(res.integral_g));

  const double c = p.embedding_constant();
  const double denom_scale = -2.0 * c * c * res.integral_g;  // > 0
  auto value_at = [&](double gamma) {
    const double fmax = max_F_on_box(p, gamma, f_samples);
    return std::pair<double, double>(
        fmax, fmax > 0 ? gamma * gamma / (denom_scale * fmax)
                       : std::numeric_limits<double>::infinity());
  };

  res.table.reserve(gamma_grid.size());
  std::size_t best_idx = 0;
  bool any_finite = false;
  for (std::size_t i = 0; i < gamma_grid.size(); ++i) {
    auto [fmax, lam] = value_at(gamma_grid[i]);
    res.table.push_back({gamma_grid[i], fmax, lam});
    if (lam > res.table[best_idx].lambda_star ||
        (std::isinf(lam) && !std::isinf(res.table[best_idx].lambda_star)))
      best_idx = i;
    if (std::isfinite(lam)) any_finite = true;
  }

  if (p.spec().f.is_exp_of_u())
    res.exp_envelope = 2.0 * std::exp(-2.0) / (c * c * (-res.integral_g));

  const GammaRow& best = res.table[best_idx];
  res.gamma_star = best.gamma;

  if (std::isinf(best.lambda_star)) {
    res.lambda_star = std::numeric_limits<double>::infinity();
    res.finite = false;
    res.status = any_finite
                     ? "max F vanishes on some box; every positive coupling is admissible there"
                     : "max F vanishes on every box; every positive coupling is admissible";
    return res;
  }

  if (best_idx + 1 == res.table.size()) {
    // Still increasing at the grid boundary: the sup over gamma > 0 is not
    // attained on the grid, so the threshold is effectively unrestricted.
    res.lambda_star = std::numeric_limits<double>::infinity();
    res.finite = false;
    res.status = "lambda_star(gamma) is largest at the gamma cap and still growing; "
                 "sup over gamma > 0 is unbounded at this resolution";
    return res;
  }

  // Golden-section refinement of the interior maximum.
  double lo = best_idx == 0 ? gamma_grid[0] * 0.5 : gamma_grid[best_idx - 1];
  double hi = gamma_grid[best_idx + 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = value_at(x1).second, f2 = value_at(x2).second;
  for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = value_at(x2).second;
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = value_at(x1).second;
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double refined = value_at(mid).second;
  if (refined >= best.lambda_star) {
    res.lambda_star = refined;
    res.gamma_star = mid;
  } else {
    res.lambda_star = best.lambda_star;
  }
  res.finite = true;
  res.status = "ok";
  return res;
}

namespace {

// Quadratic part of the functional: Q u = K u - diag(w a) u on interior
// vertices; Phi(u) = 1/2 u^T Q u for Dirichlet fields.
struct Quadratic {
  const EnergyForm* e;
  Eigen::VectorXd wa;  // w .* a, zeroed on the boundary

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = e->stiffness * v;
    out -= wa.cwiseProduct(v);
    return out;
  }
};

struct Workspace {
  const BoundProblem* p;
  const EnergyForm* e;
  const QuadratureWeights* w;
  double lambda;
  Quadratic q;
  std::vector<VertexId> interior;
  Eigen::VectorXd wg;  // w .* g

  explicit Workspace(const BoundProblem& prob, const EnergyForm& form,
                     const QuadratureWeights& quad, double lam)
      : p(&prob), e(&form), w(&quad), lambda(lam) {
    const LevelGraph& g = prob.graph();
    q.e = &form;
    q.wa = quad.w.cwiseProduct(prob.a_values());
    wg = quad.w.cwiseProduct(prob.g_values());
    for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
      if (g.is_boundary(static_cast<VertexId>(v))) {
        q.wa[v] = 0.0;
        wg[v] = 0.0;
      } else {
        interior.push_back(static_cast<VertexId>(v));
      }
    }
  }

  double phi_of(const Eigen::VectorXd& v) const { return 0.5 * v.dot(q.apply(v)); }

  double value(const Eigen::VectorXd& v) const {
    double s = 0.5 * v.dot(q.apply(v));
    for (VertexId i : interior) s += lambda * wg[i] * p->F(v[i]);
    return s;
  }

  Eigen::VectorXd grad(const Eigen::VectorXd& v) const {
    Eigen::VectorXd g = q.apply(v);
    for (VertexId i : interior) g[i] += lambda * wg[i] * p->f(v[i]);
    for (VertexId b : p->graph().boundary()) g[b] = 0.0;
    return g;
  }

  // Largest step t >= 0 with Phi(v + t d) <= cap (Phi is quadratic in t).
  double step_cap(const Eigen::VectorXd& v, const Eigen::VectorXd& d, double cap) const {
    const Eigen::VectorXd qd = q.apply(d);
    const double a2 = 0.5 * d.dot(qd);
    const double a1 = v.dot(qd);
    const double a0 = phi_of(v) - cap;
    if (a2 <= 0) return std::numeric_limits<double>::infinity();
    const double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc <= 0) return 0.0;
    return (-a1 + std::sqrt(disc)) / (2.0 * a2);
  }
};

struct CgOutcome {
  Eigen::VectorXd u;
  double value = 0;
  double grad_norm = 0;
  long iterations = 0;
  bool converged = false;
  double phi_max = 0;
};

CgOutcome run_cg(const Workspace& ws, Eigen::VectorXd u, double phi_cap, const SolveOptions& opts,
                 std::vector<std::array<double, 2>>* trace) {
  CgOutcome out;
  double value = ws.value(u);
  Eigen::VectorXd grad = ws.grad(u);
  Eigen::VectorXd dir = -grad;
  double alpha_prev = 1.0;
  out.phi_max = ws.phi_of(u);

  long it = 0;
  for (; it < opts.max_iters; ++it) {
    const double gnorm = grad.norm();
    if (trace && trace->size() < 200000) trace->push_back({value, gnorm});
    if (gnorm <= opts.grad_tol * std::max(1.0, std::abs(value))) {
      out.converged = true;
      break;
    }
    double slope = grad.dot(dir);
    if (slope >= 0) {  // restart on a non-descent direction
      dir = -grad;
      slope = grad.dot(dir);
      if (slope >= 0) break;
    }
    const double cap = ws.step_cap(u, dir, phi_cap);
    if (cap <= 0) {  // pressed against the sublevel boundary
      dir = -grad;
      if (ws.step_cap(u, dir, phi_cap) <= 0) break;
      continue;
    }
    double alpha = std::min(alpha_prev * 2.0, cap);
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd cand = u + alpha * dir;
      double cand_value;
      try {
        cand_value = ws.value(cand);
      } catch (const DomainError&) {
        alpha *= 0.5;
        continue;
      }
      if (cand_value <= value + 1e-4 * alpha * slope) {
        u = cand;
        value = cand_value;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      const bool was_steepest = (dir + grad).norm() <= 1e-300;
      if (!was_steepest) {  // try a fresh steepest-descent direction once
        dir = -grad;
        alpha_prev = 1.0;
        continue;
      }
      break;
    }
    alpha_prev = alpha;
    out.phi_max = std::max(out.phi_max, ws.phi_of(u));
    Eigen::VectorXd grad_new = ws.grad(u);
    const double beta =
        std::max(0.0, grad_new.dot(grad_new - grad) / std::max(grad.dot(grad), 1e-300));
    dir = -grad_new + beta * dir;
    grad = std::move(grad_new);
  }
  out.u = std::move(u);
  out.value = value;
  out.grad_norm = grad.norm();
  out.iterations = it;
  return out;
}

SolveResult finish_result(const Workspace& ws, Eigen::VectorXd u, double lambda, double r,
                          double gamma_bar, const SolveOptions& opts) {
  SolveResult res;
  for (VertexId b : ws.p->graph().boundary()) u[b] = 0.0;
  res.u = Field{std::move(u), true};
  res.lambda = lambda;
  res.phi_value = phi(*ws.p, *ws.e, *ws.w, res.u);
  res.psi_value = psi(*ws.p, *ws.w, res.u);
  res.i_value = i_lambda(*ws.p, *ws.e, *ws.w, res.u, lambda);
  res.grad_norm = gradient(*ws.p, *ws.e, *ws.w, res.u, lambda).values.norm();
  res.converged = res.grad_norm <= opts.grad_tol * std::max(1.0, std::abs(res.i_value));
  res.residual = strong_residual(*ws.p, res.u, lambda);
  res.norm_u = std::sqrt(std::max(energy(*ws.e, res.u), 0.0));
  res.sup_u = res.u.sup_norm();
  res.r = r;
  res.gamma_bar = gamma_bar;
  return res;
}

}  // namespace

SolveResult minimize_restricted(const BoundProblem& p, const EnergyForm& e,
                                const QuadratureWeights& w, double r, double lambda,
                                const SolveOptions& opts) {
  if (!(r > 0)) throw ConfigError("minimize_restricted needs r > 0");
  Workspace ws(p, e, w, lambda);
  const double phi_cap = std::isfinite(r) ? r * (1.0 - opts.phi_margin) : r;

  // Seeds: zero plus small multiples of the unit-truncation bump (1 on the
  // interior, 0 on the boundary), rescaled into the sublevel set.
  std::vector<Eigen::VectorXd> seeds;
  seeds.emplace_back(Eigen::VectorXd::Zero(p.graph().vertex_count()));
  {
    Eigen::VectorXd bump = Eigen::VectorXd::Zero(p.graph().vertex_count());
    for (VertexId v : ws.interior) bump[v] = 1.0;
    const double phi_bump = ws.phi_of(bump);
    for (double s : opts.seed_scales) {
      double scale = s;
      if (phi_bump * scale * scale > 0.9 * phi_cap)
        scale = std::sqrt(0.9 * phi_cap / phi_bump);
      seeds.emplace_back(scale * bump);
    }
  }

  std::optional<CgOutcome> best;
  long total_iters = 0;
  std::vector<std::array<double, 2>> trace;
  for (const Eigen::VectorXd& seed : seeds) {
    CgOutcome got = run_cg(ws, seed, phi_cap, opts, opts.keep_trace ? &trace : nullptr);
    total_iters += got.iterations;
    const double norm_got = std::sqrt(std::max(2.0 * ws.phi_of(got.u), 0.0));
    if (!best) {
      best = std::move(got);
      continue;
    }
    const double norm_best = std::sqrt(std::max(2.0 * ws.phi_of(best->u), 0.0));
    if (got.value < best->value - 1e-12 ||
        (std::abs(got.value - best->value) <= 1e-12 && norm_got < norm_best))
      best = std::move(got);
  }

  SolveResult res = finish_result(ws, std::move(best->u), lambda, r, 0.0, opts);
  res.iterations = total_iters;
  res.phi_max_iterate = best->phi_max;
  res.trace = std::move(trace);
  if (!best->converged && !res.converged) res.note = "conjugate-gradient stage hit its caps";

  if (opts.newton_polish) {
    SolveResult polished = newton_refine(p, e, w, res.u, lambda, r, opts);
    polished.iterations += res.iterations;
    polished.phi_max_iterate = std::max(polished.phi_max_iterate, res.phi_max_iterate);
    polished.trace = std::move(res.trace);
    polished.gamma_bar = res.gamma_bar;
    return polished;
  }
  return res;
}

SolveResult newton_refine(const BoundProblem& p, const EnergyForm& e,
                          const QuadratureWeights& w, const Field& u0, double lambda, double r,
                          const SolveOptions& opts) {
  require_aligned(p.graph(), u0, "newton_refine");
  Workspace ws(p, e, w, lambda);
  const double phi_cap = std::isfinite(r) ? r * (1.0 - opts.phi_margin) : r;
  const std::size_t n = ws.interior.size();

  Eigen::VectorXd u = u0.values;
  for (VertexId b : p.graph().boundary()) u[b] = 0.0;

  // Interior block of the stiffness matrix, densified once.
  Eigen::MatrixXd k_int(n, n);
  {
    Eigen::VectorXi pos = Eigen::VectorXi::Constant(p.graph().vertex_count(), -1);
    for (std::size_t i = 0; i < n; ++i) pos[ws.interior[i]] = static_cast<int>(i);
    k_int.setZero();
    for (int col = 0; col < e.stiffness.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(e.stiffness, col); it; ++it)
        if (pos[it.row()] >= 0 && pos[it.col()] >= 0)
          k_int(pos[it.row()], pos[it.col()]) = it.value();
  }

  std::string note;
  double phi_max = ws.phi_of(u);
  double gnorm = ws.grad(u).norm();
  int step = 0;
  for (; step < opts.newton_max_steps; ++step) {
    Eigen::VectorXd grad = ws.grad(u);
    gnorm = grad.norm();
    if (gnorm <= opts.newton_tol) break;

    Eigen::MatrixXd h = k_int;
    Eigen::VectorXd g_int(n), delta_full = Eigen::VectorXd::Zero(u.size());
    for (std::size_t i = 0; i < n; ++i) {
      const VertexId v = ws.interior[i];
      h(i, i) += -ws.q.wa[v] + lambda * ws.wg[v] * p.f_prime(u[v]);
      g_int[i] = grad[v];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(h);
    Eigen::VectorXd delta_int;
    bool fallback = false;
    if (lu.isInvertible()) {
      delta_int = lu.solve(-g_int);
    } else {
      delta_int = -g_int;
      fallback = true;
      note = "singular Hessian at step " + std::to_string(step) + "; gradient fallback";
    }
    for (std::size_t i = 0; i < n; ++i) delta_full[ws.interior[i]] = delta_int[i];

    double t = 1.0;
    if (std::isfinite(phi_cap)) t = std::min(t, ws.step_cap(u, delta_full, phi_cap));
    if (t <= 0) break;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd cand = u + t * delta_full;
      double cand_gnorm;
      try {
        cand_gnorm = ws.grad(cand).norm();
      } catch (const DomainError&) {
        t *= 0.5;
        continue;
      }
      if (cand_gnorm < gnorm || (!fallback && t == 1.0 && cand_gnorm < 10.0 * opts.newton_tol)) {
        u = std::move(cand);
        gnorm = cand_gnorm;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    phi_max = std::max(phi_max, ws.phi_of(u));
  }

  SolveResult res = finish_result(ws, std::move(u), lambda, r, 0.0, opts);
  res.iterations = step;
  res.phi_max_iterate = phi_max;
  res.note = note;
  return res;
}

SweepResult sweep(const BoundProblem& p, const EnergyForm& e, const QuadratureWeights& w,
                  const std::vector<double>& lambdas, double r, double gamma_bar,
                  const SolveOptions& opts, bool warm_start) {
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (lambdas[i] <= lambdas[i - 1]) throw ConfigError("sweep grid must ascend");

  SweepResult out;
  out.r = r;
  out.gamma_bar = gamma_bar;
  std::optional<Field> prev;
  for (double lam : lambdas) {
    SweepRow row;
    row.lambda = lam;
    try {
      SolveResult sol;
      if (warm_start && prev) {
        SolveOptions o = opts;
        o.keep_trace = false;
        // Warm path: polish the previous minimizer, fall back to a fresh
        // multi-start if the polished point is not a genuine minimum.
        sol = newton_refine(p, e, w, *prev, lam, r, o);
        if (!sol.converged) sol = minimize_restricted(p, e, w, r, lam, o);
      } else {
        sol = minimize_restricted(p, e, w, r, lam, opts);
      }
      row.norm_u = sol.norm_u;
      row.i_value = sol.i_value;
      row.nontrivial = sol.norm_u > 1e-8;
      row.grad_norm = sol.grad_norm;
      row.residual = sol.residual;
      row.converged = sol.converged;
      prev = sol.u;
    } catch (const std::exception& ex) {
      row.error = ex.what();
      row.converged = false;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace sgvar
