#include "sgvar/problem.hpp"

#include <cmath>

namespace sgvar {

Eigen::VectorXd sample_on_vertices(const Expr& e, const LevelGraph& g) {
  Eigen::VectorXd out(g.vertex_count());
  std::vector<double> coords(g.ambient() - 1);
  for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
    const Eigen::VectorXd x = g.euclidean(static_cast<VertexId>(v));
    for (int k = 0; k < g.ambient() - 1; ++k) coords[k] = x[k];
    out[v] = e.eval({coords, std::nullopt});
  }
  return out;
}

ProblemSpec parse_problem(int N, int m, const std::string& a, const std::string& g,
                          const std::string& f, const std::optional<std::string>& F,
                          const std::optional<std::string>& fprime, double lambda) {
  ProblemSpec p;
  p.ambient = N;
  p.level = m;
  p.a = Expr::parse(a, N - 1, false);
  p.g = Expr::parse(g, N - 1, false);
  p.f = Expr::parse(f, 0, true);
  if (F) p.F = Expr::parse(*F, 0, true);
  if (fprime) p.fprime = Expr::parse(*fprime, 0, true);
  p.lambda = lambda;
  return p;
}

namespace {

void check_h2_support(const LevelGraph& g, const Eigen::VectorXd& gv) {
  // Every level-ceil(m/2) cell must see a vertex where g is nonzero.  Cells
  // are in lexicographic word order, so the level-m cells sharing a prefix of
  // length k form one contiguous run of N^{m-k}.
  const int m = g.level();
  const int k = (m + 1) / 2;
  const std::int64_t run = ipow(g.ambient(), m - k);
  const std::int64_t groups = ipow(g.ambient(), k);
  for (std::int64_t gr = 0; gr < groups; ++gr) {
    bool nonzero = false;
    for (std::int64_t c = gr * run; c < (gr + 1) * run && !nonzero; ++c)
      for (VertexId v : g.cells()[c].members)
        if (gv[v] != 0.0) {
          nonzero = true;
          break;
        }
    if (!nonzero)
      throw ConfigError("hypothesis (h2) surrogate fails: g vanishes on cell group " +
                        std::to_string(gr) + " at level " + std::to_string(k));
  }
}

}  // namespace

BoundProblem::BoundProblem(ProblemSpec spec, const LevelGraph& g, const QuadratureWeights& w)
    : spec_(std::move(spec)), graph_(&g), weights_(&w) {
  if (spec_.ambient != g.ambient() || spec_.level != g.level())
    throw ConfigError("problem declared for N=" + std::to_string(spec_.ambient) + ", m=" +
                      std::to_string(spec_.level) + " but bound to a different graph");

  a_values_ = sample_on_vertices(spec_.a, g);
  g_values_ = sample_on_vertices(spec_.g, g);
  integral_g_ = w.w.dot(g_values_);

  if (spec_.assert_h1)
    for (std::int64_t v = 0; v < g.vertex_count(); ++v)
      if (a_values_[v] > 0.0)
        throw ConfigError("hypothesis (h1) fails: a > 0 at vertex " + std::to_string(v));
  if (spec_.assert_h2) {
    for (std::int64_t v = 0; v < g.vertex_count(); ++v)
      if (g_values_[v] > 0.0)
        throw ConfigError("hypothesis (h2) fails: g > 0 at vertex " + std::to_string(v));
    check_h2_support(g, g_values_);
  }

  f_at_zero_ = spec_.f.eval({{}, 0.0});
  F_ = Antiderivative(spec_.f, spec_.F);
}

double BoundProblem::f_prime(double u) const {
  if (spec_.fprime) return spec_.fprime->eval({{}, u});
  const double h = 1e-6 * std::max(1.0, std::abs(u));
  return (f(u + h) - f(u - h)) / (2.0 * h);
}

}  // namespace sgvar
