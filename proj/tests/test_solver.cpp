#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "sgvar/solver.hpp"

using namespace sgvar;
using sgvar::test::Instance;
using sgvar::test::random_dirichlet;

namespace {

struct Fixture {
  Instance inst;
  BoundProblem problem;

  Fixture(int N, int m, const std::string& a, const std::string& g, const std::string& f,
          double lambda, std::optional<std::string> F = std::nullopt)
      : inst(N, m),
        problem(parse_problem(N, m, a, g, f, F, std::nullopt, lambda), inst.graph,
                inst.weights) {}
};

// independent threshold oracle for f = exp: maximize g(t) = t^2 / (e^t - 1)
double exp_threshold_oracle(double embedding_constant) {
  auto val = [](double t) { return t * t / (std::expm1(t)); };
  double best_t = 1.0;
  for (int i = 1; i <= 4000; ++i) {
    const double t = 8.0 * i / 4000;
    if (val(t) > val(best_t)) best_t = t;
  }
  double lo = best_t - 8.0 / 4000, hi = best_t + 8.0 / 4000;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (val(m1) < val(m2))
      lo = m1;
    else
      hi = m2;
  }
  return val(0.5 * (lo + hi)) / (2.0 * embedding_constant * embedding_constant);
}

}  // namespace

TEST_CASE("phi on basic data") {
  Fixture fx(3, 2, "-1", "-1", "exp(u)", 1e-3);
  SUBCASE("zero field") {
    CHECK(phi(fx.problem, fx.inst.form, fx.inst.weights, zero_field(fx.inst.graph)) == 0.0);
  }
  SUBCASE("a = 0 halves the energy") {
    Fixture f0(3, 2, "0", "-1", "exp(u)", 1e-3);
    std::mt19937_64 rng(1);
    const Field u = random_dirichlet(f0.inst.graph, rng);
    CHECK(phi(f0.problem, f0.inst.form, f0.inst.weights, u) ==
          doctest::Approx(0.5 * energy(f0.inst.form, u)).epsilon(1e-14));
  }
  SUBCASE("a = -1 adds the weighted square sum") {
    std::mt19937_64 rng(2);
    const Field u = random_dirichlet(fx.inst.graph, rng);
    double expect = 0.5 * energy(fx.inst.form, u);
    for (std::int64_t v = 0; v < fx.inst.graph.vertex_count(); ++v)
      expect += 0.5 * fx.inst.weights.w[v] * u.values[v] * u.values[v];
    CHECK(phi(fx.problem, fx.inst.form, fx.inst.weights, u) ==
          doctest::Approx(expect).epsilon(1e-13));
    // (h1) makes Phi dominate half the squared norm
    CHECK(phi(fx.problem, fx.inst.form, fx.inst.weights, u) >=
          0.5 * energy(fx.inst.form, u));
  }
  SUBCASE("non-Dirichlet input is rejected") {
    Field u = constant_field(fx.inst.graph, 1.0);
    u.dirichlet = false;
    CHECK_THROWS_AS(phi(fx.problem, fx.inst.form, fx.inst.weights, u), ConfigError);
  }
}

TEST_CASE("psi on basic data") {
  SUBCASE("zero field gives zero through F(0) = 0") {
    Fixture fx(3, 2, "-1", "-1", "exp(u)", 1e-3);
    CHECK(psi(fx.problem, fx.inst.weights, zero_field(fx.inst.graph)) == 0.0);
  }
  SUBCASE("f = 1 turns psi into the plain integral") {
    Fixture fx(3, 2, "-1", "-1", "1", 1e-3);
    std::mt19937_64 rng(3);
    const Field u = random_dirichlet(fx.inst.graph, rng);
    CHECK(psi(fx.problem, fx.inst.weights, u) ==
          doctest::Approx(integrate(fx.inst.graph, fx.inst.weights, u)).epsilon(1e-12));
  }
  SUBCASE("constant interior field against the exponential") {
    Fixture fx(3, 1, "-1", "-1", "exp(u)", 1e-3);
    const double c = 0.37;
    Field u = zero_field(fx.inst.graph);
    double interior_mass = 0;
    for (std::int64_t v = 0; v < fx.inst.graph.vertex_count(); ++v)
      if (!fx.inst.graph.is_boundary(static_cast<VertexId>(v))) {
        u.values[v] = c;
        interior_mass += fx.inst.weights.w[v];
      }
    CHECK(psi(fx.problem, fx.inst.weights, u) ==
          doctest::Approx((std::exp(c) - 1.0) * interior_mass).epsilon(1e-9));
  }
}

TEST_CASE("i_lambda ties the two formulas together") {
  Fixture fx(3, 3, "-1", "-1", "exp(u)", 2e-3);
  std::mt19937_64 rng(4);
  SUBCASE("zero field and zero coupling") {
    CHECK(i_lambda(fx.problem, fx.inst.form, fx.inst.weights, zero_field(fx.inst.graph),
                   2e-3) == 0.0);
    const Field u = random_dirichlet(fx.inst.graph, rng, 0.3);
    CHECK(i_lambda(fx.problem, fx.inst.form, fx.inst.weights, u, 0.0) ==
          doctest::Approx(phi(fx.problem, fx.inst.form, fx.inst.weights, u)).epsilon(1e-14));
  }
  SUBCASE("direct sum agrees with Phi - lambda Psi") {
    for (int t = 0; t < 20; ++t) {
      const Field u = random_dirichlet(fx.inst.graph, rng, 0.4);
      double direct = 0.5 * energy(fx.inst.form, u);
      for (std::int64_t v = 0; v < fx.inst.graph.vertex_count(); ++v) {
        direct -= 0.5 * fx.inst.weights.w[v] * fx.problem.a_values()[v] * u.values[v] *
                  u.values[v];
        direct += 2e-3 * fx.inst.weights.w[v] * fx.problem.g_values()[v] *
                  fx.problem.F(u.values[v]);
      }
      const double split = phi(fx.problem, fx.inst.form, fx.inst.weights, u) -
                           2e-3 * psi(fx.problem, fx.inst.weights, u);
      CHECK(direct == doctest::Approx(split).epsilon(1e-12));
      CHECK(i_lambda(fx.problem, fx.inst.form, fx.inst.weights, u, 2e-3) ==
            doctest::Approx(split).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient") {
  SUBCASE("vanishes at zero when f(0) = 0") {
    Fixture fx(3, 2, "-1", "-1", "u", 1e-2);
    const Field g = gradient(fx.problem, fx.inst.form, fx.inst.weights,
                             zero_field(fx.inst.graph), 1e-2);
    CHECK(g.values.norm() == 0.0);
  }
  SUBCASE("reduces to K u for the pure quadratic") {
    Fixture fx(3, 2, "0", "-1", "1", 0.0);
    std::mt19937_64 rng(5);
    const Field u = random_dirichlet(fx.inst.graph, rng);
    const Field g = gradient(fx.problem, fx.inst.form, fx.inst.weights, u, 0.0);
    const Eigen::VectorXd ku = fx.inst.form.stiffness * u.values;
    for (std::int64_t v = 0; v < fx.inst.graph.vertex_count(); ++v) {
      if (fx.inst.graph.is_boundary(static_cast<VertexId>(v)))
        CHECK(g.values[v] == 0.0);
      else
        CHECK(g.values[v] == doctest::Approx(ku[v]).epsilon(1e-13));
    }
  }
  SUBCASE("matches central differences of the functional") {
    const std::vector<std::array<std::string, 3>> problems = {
        {"-1", "-1", "exp(u)"},
        {"0", "-1", "1"},
        {"-x1", "-1-x1", "u"},
        {"-1", "-abs(sin(1+3*x1))-0.1", "u*exp(-u)"},
        {"-2", "-1", "min(u,1)"},
    };
    std::mt19937_64 rng(6);
    int pairs = 0;
    for (const auto& [a, g, f] : problems) {
      Fixture fx(3, 2, a, g, f, 1.7e-3);
      for (int t = 0; t < 4; ++t) {
        const Field u = random_dirichlet(fx.inst.graph, rng, 0.3);
        const Field grad = gradient(fx.problem, fx.inst.form, fx.inst.weights, u, 1.7e-3);
        const double eps = 1e-6;
        for (std::int64_t v = 0; v < fx.inst.graph.vertex_count(); ++v) {
          if (fx.inst.graph.is_boundary(static_cast<VertexId>(v))) continue;
          Field up = u, dn = u;
          up.values[v] += eps;
          dn.values[v] -= eps;
          const double fd = (i_lambda(fx.problem, fx.inst.form, fx.inst.weights, up, 1.7e-3) -
                             i_lambda(fx.problem, fx.inst.form, fx.inst.weights, dn, 1.7e-3)) /
                            (2.0 * eps);
          CHECK(std::abs(fd - grad.values[v]) <= 1e-6 * std::max(1.0, std::abs(grad.values[v])));
        }
        ++pairs;
      }
    }
    CHECK(pairs == 20);
  }
}

TEST_CASE("lambda_star on the exponential model problem") {
  Fixture fx(3, 4, "-1", "-1", "exp(u)", 1e-3);
  const LambdaStarResult ls = lambda_star(fx.problem, fx.inst.form, fx.inst.weights,
                                          default_gamma_grid(8.0, 256));
  REQUIRE(ls.finite);
  SUBCASE("the envelope bound is the closed form 2 e^{-2} / 81") {
    REQUIRE(ls.exp_envelope.has_value());
    CHECK(*ls.exp_envelope ==
          doctest::Approx(2.0 * std::exp(-2.0) / 81.0).epsilon(1e-12));
  }
  SUBCASE("the exact value matches the one-dimensional oracle") {
    const double oracle = exp_threshold_oracle(9.0);
    CHECK(ls.lambda_star == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(ls.lambda_star == doctest::Approx(3.9976e-3).epsilon(1e-3));
    CHECK(ls.gamma_star == doctest::Approx(1.5936).epsilon(1e-3));
    CHECK(ls.lambda_star >= *ls.exp_envelope);
  }
  SUBCASE("the table rows carry the definition") {
    for (const GammaRow& row : ls.table) {
      REQUIRE(row.f_max > 0);
      CHECK(row.lambda_star ==
            doctest::Approx(row.gamma * row.gamma / (2.0 * 81.0 * row.f_max)).epsilon(1e-9));
    }
  }
}

TEST_CASE("lambda_star sentinel regimes") {
  SUBCASE("linear growth pushes the sup to the gamma cap") {
    Fixture fx(2, 3, "0", "-1", "1", 1.0);
    const LambdaStarResult ls = lambda_star(fx.problem, fx.inst.form, fx.inst.weights,
                                            default_gamma_grid(8.0, 64));
    CHECK(!ls.finite);
    CHECK(std::isinf(ls.lambda_star));
    CHECK(ls.gamma_star == doctest::Approx(8.0));
  }
  SUBCASE("nonpositive F makes every box certify every coupling") {
    Fixture fx(2, 3, "0", "-1", "-u", 1.0);  // F = -u^2/2 <= 0
    const LambdaStarResult ls = lambda_star(fx.problem, fx.inst.form, fx.inst.weights,
                                            default_gamma_grid(4.0, 64));
    CHECK(!ls.finite);
    CHECK(std::isinf(ls.lambda_star));
    for (const GammaRow& row : ls.table) CHECK(row.f_max == 0.0);
  }
}

TEST_CASE("restricted minimization") {
  SUBCASE("zero coupling minimizes at the origin") {
    Fixture fx(3, 2, "-1", "-1", "exp(u)", 0.0);
    const SolveResult res =
        minimize_restricted(fx.problem, fx.inst.form, fx.inst.weights, 1.0, 0.0);
    CHECK(res.converged);
    CHECK(res.norm_u <= 1e-9);
    CHECK(std::abs(res.i_value) <= 1e-18);
  }

  SUBCASE("the interval fixture reproduces x(1-x) exactly") {
    Fixture fx(2, 6, "0", "-1", "1", 2.0);
    const double r = 64.0 / (2.0 * 49.0);
    const SolveResult res =
        minimize_restricted(fx.problem, fx.inst.form, fx.inst.weights, r, 2.0);
    REQUIRE(res.converged);
    CHECK(res.grad_norm <= 1e-12);
    double worst = 0;
    for (std::int64_t v = 0; v < fx.inst.graph.vertex_count(); ++v) {
      const double x = fx.inst.graph.euclidean(static_cast<VertexId>(v))[0];
      worst = std::max(worst, std::abs(res.u.values[v] - x * (1.0 - x)));
    }
    CHECK(worst <= 1e-10);
    CHECK(res.sup_u == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(res.residual <= 1e-9);  // the interval estimate is quadratically exact
    CHECK(res.phi_max_iterate <= r * (1.0 - 1e-9) + 1e-15);
  }

  SUBCASE("the exponential model problem has a certified nontrivial minimizer") {
    Fixture fx(3, 4, "-1", "-1", "exp(u)", 1.6e-3);
    const LambdaStarResult ls = lambda_star(fx.problem, fx.inst.form, fx.inst.weights,
                                            default_gamma_grid(8.0, 256));
    const double gamma_bar = ls.gamma_star;
    const double r = gamma_bar * gamma_bar / (2.0 * 81.0);
    const SolveResult res =
        minimize_restricted(fx.problem, fx.inst.form, fx.inst.weights, r, 1.6e-3);
    REQUIRE(res.converged);
    CHECK(res.norm_u > 1e-8);
    CHECK(res.i_value < 0.0);
    CHECK(res.grad_norm <= 1e-12);
    CHECK(res.phi_value < r);
    CHECK(res.phi_max_iterate <= r * (1.0 - 1e-9) + 1e-15);
    CHECK(res.sup_u <= gamma_bar + 1e-9);  // sublevel sets embed into the sup-norm box

    // stability of the reported strong-form estimate across one refinement
    Fixture fx5(3, 5, "-1", "-1", "exp(u)", 1.6e-3);
    const SolveResult res5 =
        minimize_restricted(fx5.problem, fx5.inst.form, fx5.inst.weights, r, 1.6e-3);
    REQUIRE(res5.converged);
    CHECK(res5.i_value < 0.0);
    CHECK(res5.residual == doctest::Approx(res.residual).epsilon(0.5));
  }
}

TEST_CASE("newton refinement") {
  SUBCASE("one step solves the linear problem") {
    Fixture fx(2, 4, "0", "-1", "1", 2.0);
    const SolveResult res = newton_refine(fx.problem, fx.inst.form, fx.inst.weights,
                                          zero_field(fx.inst.graph), 2.0);
    CHECK(res.grad_norm <= 1e-12);
    CHECK(res.iterations <= 2);
  }
  SUBCASE("an exact solution takes no steps") {
    Fixture fx(2, 4, "0", "-1", "1", 2.0);
    const SolveResult first = newton_refine(fx.problem, fx.inst.form, fx.inst.weights,
                                            zero_field(fx.inst.graph), 2.0);
    const SolveResult again =
        newton_refine(fx.problem, fx.inst.form, fx.inst.weights, first.u, 2.0);
    CHECK(again.iterations <= 1);
    CHECK((again.u.values - first.u.values).norm() <= 1e-12);
  }
  SUBCASE("a converged conjugate-gradient output polishes in a few steps") {
    Fixture fx(3, 3, "-1", "-1", "exp(u)", 1.6e-3);
    SolveOptions opts;
    opts.newton_polish = false;
    const double r = 0.015;
    const SolveResult cg =
        minimize_restricted(fx.problem, fx.inst.form, fx.inst.weights, r, 1.6e-3, opts);
    REQUIRE(cg.converged);
    const SolveResult polished =
        newton_refine(fx.problem, fx.inst.form, fx.inst.weights, cg.u, 1.6e-3, r);
    CHECK(polished.grad_norm <= 1e-12);
    CHECK(polished.iterations <= 5);
  }
}

TEST_CASE("minimizer certificates") {
  Fixture fx(3, 3, "-1", "-1", "exp(u)", 1.6e-3);
  const double r = 0.0157;
  const SolveResult res =
      minimize_restricted(fx.problem, fx.inst.form, fx.inst.weights, r, 1.6e-3);
  REQUIRE(res.converged);
  std::mt19937_64 rng(8);

  SUBCASE("random directions cannot improve the value") {
    const double base = res.i_value;
    for (int t = 0; t < 50; ++t) {
      Field v = random_dirichlet(fx.inst.graph, rng);
      v.values /= std::max(v.values.norm(), 1e-300);
      for (double s : {1e-4, -1e-4}) {
        Field probe = res.u;
        probe.values += s * v.values;
        CHECK(i_lambda(fx.problem, fx.inst.form, fx.inst.weights, probe, 1.6e-3) >=
              base - 1e-10);
      }
    }
  }

  SUBCASE("the weak-solution identity holds against random test fields") {
    for (int t = 0; t < 50; ++t) {
      const Field v = random_dirichlet(fx.inst.graph, rng);
      double pairing = energy_inner(fx.inst.form, res.u, v);
      for (std::int64_t x = 0; x < fx.inst.graph.vertex_count(); ++x)
        pairing += -fx.inst.weights.w[x] * fx.problem.a_values()[x] * res.u.values[x] *
                       v.values[x] +
                   1.6e-3 * fx.inst.weights.w[x] * fx.problem.g_values()[x] *
                       fx.problem.f(res.u.values[x]) * v.values[x];
      CHECK(std::abs(pairing) <= 1e-8 * std::sqrt(std::max(energy(fx.inst.form, v), 1e-300)));
    }
  }

  SUBCASE("doubling lambda while halving g changes nothing") {
    Fixture half(3, 3, "-1", "(-1)/2", "exp(u)", 3.2e-3);
    const SolveResult res2 =
        minimize_restricted(half.problem, half.inst.form, half.inst.weights, r, 3.2e-3);
    REQUIRE(res2.converged);
    CHECK((res2.u.values - res.u.values).cwiseAbs().maxCoeff() <= 1e-12);
    std::mt19937_64 rng2(9);
    const Field probe = random_dirichlet(fx.inst.graph, rng2, 0.2);
    const Field g1 = gradient(fx.problem, fx.inst.form, fx.inst.weights, probe, 1.6e-3);
    const Field g2 = gradient(half.problem, half.inst.form, half.inst.weights, probe, 3.2e-3);
    CHECK((g1.values - g2.values).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("sweep") {
  Fixture fx(3, 3, "-1", "-1", "exp(u)", 1e-3);
  const double bound = 2.0 * std::exp(-2.0) / 81.0;
  const double gamma_bar = 1.5936242;
  const double r = gamma_bar * gamma_bar / 162.0;

  SUBCASE("warm-started sweep tracks the theorem's qualitative picture") {
    std::vector<double> grid;
    for (int i = 1; i <= 5; ++i) grid.push_back(bound * 0.18 * i);
    const SweepResult sw =
        sweep(fx.problem, fx.inst.form, fx.inst.weights, grid, r, gamma_bar);
    REQUIRE(sw.rows.size() == 5);
    for (std::size_t i = 0; i < sw.rows.size(); ++i) {
      CHECK(sw.rows[i].converged);
      CHECK(sw.rows[i].nontrivial);
      CHECK(sw.rows[i].i_value < 0.0);
      if (i > 0) {
        CHECK(sw.rows[i].i_value < sw.rows[i - 1].i_value);
        CHECK(sw.rows[i].norm_u > sw.rows[i - 1].norm_u);
      }
    }
  }

  SUBCASE("norms collapse as the coupling goes to zero") {
    const SweepResult sw = sweep(fx.problem, fx.inst.form, fx.inst.weights,
                                 {1e-8 * bound}, r, gamma_bar);
    REQUIRE(sw.rows[0].converged);
    CHECK(sw.rows[0].norm_u <= 1e-4);
  }

  SUBCASE("a non-ascending grid is rejected") {
    CHECK_THROWS_AS(
        sweep(fx.problem, fx.inst.form, fx.inst.weights, {2e-3, 1e-3}, r, gamma_bar),
        ConfigError);
  }
}

TEST_CASE("hypothesis validation at problem binding") {
  Instance inst(3, 2);
  SUBCASE("positive a violates (h1)") {
    CHECK_THROWS_AS(
        BoundProblem(parse_problem(3, 2, "1", "-1", "u", std::nullopt, std::nullopt, 1.0),
                     inst.graph, inst.weights),
        ConfigError);
  }
  SUBCASE("positive g violates (h2)") {
    CHECK_THROWS_AS(
        BoundProblem(parse_problem(3, 2, "-1", "0.5", "u", std::nullopt, std::nullopt, 1.0),
                     inst.graph, inst.weights),
        ConfigError);
  }
  SUBCASE("identically zero g fails the support surrogate") {
    CHECK_THROWS_AS(
        BoundProblem(parse_problem(3, 2, "-1", "0", "u", std::nullopt, std::nullopt, 1.0),
                     inst.graph, inst.weights),
        ConfigError);
  }
  SUBCASE("strictly negative g passes it") {
    CHECK_NOTHROW(
        BoundProblem(parse_problem(3, 2, "-1", "-0.25-x1", "u", std::nullopt, std::nullopt, 1.0),
                     inst.graph, inst.weights));
  }
}
