#include "sgvar/verify.hpp"

#include <cmath>
#include <random>

#include "sgvar/energy.hpp"
#include "sgvar/expr.hpp"
#include "sgvar/gasket.hpp"
#include "sgvar/measure.hpp"

namespace sgvar {

namespace {

Field random_dirichlet(const LevelGraph& g, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Field u = zero_field(g, true);
  for (std::int64_t v = 0; v < g.vertex_count(); ++v)
    if (!g.is_boundary(static_cast<VertexId>(v))) u.values[v] = dist(rng);
  return u;
}

Field random_full(const LevelGraph& g, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Field u{Eigen::VectorXd(g.vertex_count()), false};
  for (std::int64_t v = 0; v < g.vertex_count(); ++v) u.values[v] = dist(rng);
  return u;
}

}  // namespace

VerifyReport run_verify(const VerifyConfig& cfg) {
  VerifyReport rep;
  rep.config = cfg;
  rep.sigma = holder_exponent(cfg.ambient);

  const LevelGraph g = build_gasket(cfg.ambient, cfg.level);
  const QuadratureWeights w = vertex_weights(g);
  const EnergyForm e = make_energy_form(g, cfg.corrupt_energy_factor);
  std::mt19937_64 rng(cfg.seed);

  auto push = [&](CheckResult c) {
    rep.all_pass = rep.all_pass && c.pass;
    rep.checks.push_back(std::move(c));
  };

  {  // mu(V) = 1 and positivity
    const double total = w.w.sum();
    push({"measure_total", std::abs(total - 1.0) <= 1e-14, std::abs(total - 1.0), 1e-14,
          "quadrature weights sum to one"});
    push({"measure_positive", w.w.minCoeff() > 0.0, w.w.minCoeff(), 0.0,
          "every vertex carries positive mass"});
  }

  {  // renormalization scale self check
    const double expected = std::pow((cfg.ambient + 2.0) / cfg.ambient, cfg.level);
    const double err = std::abs(e.factor - expected) / expected;
    push({"energy_scale", err <= 1e-13, err, 1e-13,
          "energy factor equals ((N+2)/N)^m"});
  }

  {  // Holder quotient and sup-norm embedding over seeded fields
    double worst_quotient_margin = 0, worst_sup_margin = 0;
    bool ok = true, sup_ok = true;
    for (int t = 0; t < cfg.trials; ++t) {
      const Field u = random_dirichlet(g, rng);
      const HolderReport h = holder_check(e, u);
      ok = ok && h.ok;
      sup_ok = sup_ok && h.sup_ok;
      if (h.bound > 0) {
        worst_quotient_margin = std::max(worst_quotient_margin, h.quotient / h.bound);
        worst_sup_margin = std::max(worst_sup_margin, h.sup_norm / h.sup_bound);
      }
    }
    push({"sobolev_holder", ok, worst_quotient_margin, 1.0,
          "pair quotient <= (2N+3) sqrt(W_m(u))"});
    push({"supnorm_embedding", sup_ok, worst_sup_margin, 1.0,
          "sup |u| <= (2N+3) sqrt(W_m(u))"});
  }

  {  // harmonic extension: exact energy preservation and minimality
    const Refinement r = refine(g);
    const EnergyForm e_fine = make_energy_form(r.graph, cfg.corrupt_energy_factor);
    double worst = 0;
    double worst_min = 0;
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int t = 0; t < std::max(1, cfg.trials / 10); ++t) {
      const Field u = random_full(g, rng);
      const Field ext = harmonic_extension(g, r, u);
      const double w0 = energy(e, u);
      const double w1 = energy(e_fine, ext);
      worst = std::max(worst, std::abs(w1 - w0) / std::max(1.0, std::abs(w0)));
      // any perturbed extension of the same trace costs at least as much
      Field pert = ext;
      for (std::int64_t v = 0; v < r.graph.vertex_count(); ++v) pert.values[v] += 0.1 * dist(rng);
      for (std::int64_t v = 0; v < g.vertex_count(); ++v)
        pert.values[r.old_to_new[v]] = u.values[v];
      worst_min = std::max(worst_min, w1 - energy(e_fine, pert));
    }
    push({"extension_energy", worst <= 1e-12, worst, 1e-12,
          "W_{m+1} of the harmonic extension equals W_m"});
    push({"extension_minimal", worst_min <= 1e-9, worst_min, 1e-9,
          "random competing extensions never beat the harmonic one"});
  }

  {  // Lipschitz truncation bound
    const LipschitzFn catalog[] = {lipschitz_identity(), lipschitz_unit_truncation(),
                                   lipschitz_scale(2.0), lipschitz_clamp(-1.0, 1.0)};
    double worst = 0;
    bool ok = true;
    for (int t = 0; t < std::max(1, cfg.trials / 4); ++t) {
      const Field u = random_dirichlet(g, rng);
      const double wu = energy(e, u);
      for (const LipschitzFn& h : catalog) {
        const double wh = energy(e, truncate(u, h));
        const double margin = wh - h.constant * h.constant * wu;
        worst = std::max(worst, margin);
        ok = ok && margin <= 1e-12 * std::max(1.0, wu);
      }
    }
    push({"truncation_lipschitz", ok, worst, 0.0, "W_m(h o u) <= L^2 W_m(u)"});
  }

  {  // summation by parts: factor * sum_x (H_m u)(x) v(x) = -W_m(u, v)
    double worst = 0;
    for (int t = 0; t < std::max(1, cfg.trials / 10); ++t) {
      const Field u = random_dirichlet(g, rng);
      const Field v = random_full(g, rng);
      const Eigen::VectorXd h = graph_laplacian_all(g, u);
      const double lhs = e.factor * h.dot(v.values);
      const double rhs = -energy_inner(e, u, v);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    push({"summation_by_parts", worst <= 1e-10, worst, 1e-10,
          "discrete integration by parts against the bilinear form"});
  }

  {  // polarization and quadratic-form consistency
    double worst_pol = 0, worst_quad = 0;
    for (int t = 0; t < std::max(1, cfg.trials / 10); ++t) {
      const Field u = random_dirichlet(g, rng);
      const Field v = random_dirichlet(g, rng);
      Field sum = u, diff = u;
      sum.values += v.values;
      diff.values -= v.values;
      const double pol = (energy(e, sum) - energy(e, diff)) / 4.0;
      worst_pol = std::max(worst_pol,
                           std::abs(pol - energy_inner(e, u, v)) / std::max(1.0, std::abs(pol)));
      const double quad = u.values.dot(e.stiffness * u.values);
      worst_quad =
          std::max(worst_quad, std::abs(quad - energy(e, u)) / std::max(1.0, std::abs(quad)));
    }
    push({"polarization", worst_pol <= 1e-12, worst_pol, 1e-12,
          "W_m(u,v) = (W_m(u+v) - W_m(u-v)) / 4"});
    push({"quadratic_form", worst_quad <= 1e-12, worst_quad, 1e-12,
          "u^T K u matches the edge sum"});
  }

  if (cfg.level >= 1) {  // self-similar integral identity on 1 and coordinates
    const LevelGraph g_coarse = build_gasket(cfg.ambient, cfg.level - 1);
    const QuadratureWeights w_coarse = vertex_weights(g_coarse);
    double worst = 0;
    const int ncoord = cfg.ambient - 1;
    for (int c = -1; c < ncoord; ++c) {
      auto sample = [&](const LevelGraph& gr, VertexId v) {
        return c < 0 ? 1.0 : gr.euclidean(v)[c];
      };
      Field u{Eigen::VectorXd(g.vertex_count()), false};
      for (std::int64_t v = 0; v < g.vertex_count(); ++v)
        u.values[v] = sample(g, static_cast<VertexId>(v));
      const double direct = integrate(g, w, u);
      // pullbacks u o S_i live on the coarse graph
      double pulled = 0;
      std::vector<std::int64_t> shifted(cfg.ambient);
      for (int i = 0; i < cfg.ambient; ++i) {
        Field ui{Eigen::VectorXd(g_coarse.vertex_count()), false};
        for (std::int64_t v = 0; v < g_coarse.vertex_count(); ++v) {
          auto b = g_coarse.bary(static_cast<VertexId>(v));
          for (int q = 0; q < cfg.ambient; ++q) shifted[q] = b[q];
          shifted[i] += g_coarse.scale();  // S_i at the fine scale
          const VertexId fine_v = g.find_vertex(shifted);
          ui.values[v] = u.values[fine_v];
        }
        pulled += integrate(g_coarse, w_coarse, ui);
      }
      pulled /= cfg.ambient;
      worst = std::max(worst, std::abs(direct - pulled));
    }
    push({"self_similar_integral", worst <= 1e-12, worst, 1e-12,
          "integral at level m equals the averaged pullback at level m-1"});
  }

  {  // support positivity of the measure
    Field u = zero_field(g, false);
    u.values[g.vertex_count() / 2] = 1.0;
    const double val = integrate(g, w, u);
    push({"integral_positivity", val > 0.0, val, 0.0,
          "nonnegative fields with a positive vertex integrate positively"});
  }

  return rep;
}

}  // namespace sgvar
