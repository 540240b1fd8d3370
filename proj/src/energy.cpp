#include "sgvar/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace sgvar {

EnergyForm make_energy_form(const LevelGraph& g, double corrupt_base) {
  EnergyForm e;
  e.graph = &g;
  const double base = corrupt_base * (g.ambient() + 2.0) / g.ambient();
  e.factor = std::pow(base, g.level());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.edges().size() * 2 + g.vertex_count());
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(g.vertex_count());
  for (const Edge& ed : g.edges()) {
    trip.emplace_back(ed.a, ed.b, -e.factor);
    trip.emplace_back(ed.b, ed.a, -e.factor);
    diag[ed.a] += e.factor;
    diag[ed.b] += e.factor;
  }
  for (std::int64_t v = 0; v < g.vertex_count(); ++v)
    trip.emplace_back(v, v, diag[v]);
  e.stiffness.resize(g.vertex_count(), g.vertex_count());
  e.stiffness.setFromTriplets(trip.begin(), trip.end());
  return e;
}

double energy(const EnergyForm& e, const Field& u) {
  require_aligned(*e.graph, u, "energy");
  double s = 0;
  for (const Edge& ed : e.graph->edges()) {
    const double d = u.values[ed.a] - u.values[ed.b];
    s += d * d;
  }
  return e.factor * s;
}

double energy_inner(const EnergyForm& e, const Field& u, const Field& v) {
  require_aligned(*e.graph, u, "energy_inner");
  require_aligned(*e.graph, v, "energy_inner");
  double s = 0;
  for (const Edge& ed : e.graph->edges())
    s += (u.values[ed.a] - u.values[ed.b]) * (v.values[ed.a] - v.values[ed.b]);
  return e.factor * s;
}

double graph_laplacian(const LevelGraph& g, const Field& u, VertexId x) {
  require_aligned(g, u, "graph_laplacian");
  double s = 0;
  for (VertexId y : g.neighbors(x)) s += u.values[y] - u.values[x];
  return s;
}

Eigen::VectorXd graph_laplacian_all(const LevelGraph& g, const Field& u) {
  require_aligned(g, u, "graph_laplacian");
  Eigen::VectorXd h(g.vertex_count());
  for (std::int64_t x = 0; x < g.vertex_count(); ++x) {
    double s = 0;
    for (VertexId y : g.neighbors(static_cast<VertexId>(x))) s += u.values[y] - u.values[x];
    h[x] = s;
  }
  return h;
}

double standard_laplacian(const LevelGraph& g, const Field& u, VertexId x) {
  return std::pow(static_cast<double>(g.ambient() + 2), g.level()) * graph_laplacian(g, u, x);
}

namespace {

// Midpoint system for one cell with corner values c: for the midpoint z_{ab},
//   (2N-2) z_{ab} - sum_{j != a,b} (z_{aj} + z_{bj}) = c_a + c_b.
struct MidpointSolver {
  int N;
  std::vector<int> pair_index;  // (a,b), a<b -> 0..P-1
  Eigen::LDLT<Eigen::MatrixXd> ldlt;

  explicit MidpointSolver(int n) : N(n), pair_index(n * n, -1) {
    const int P = n * (n - 1) / 2;
    int idx = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        pair_index[a * n + b] = idx;
        pair_index[b * n + a] = idx;
        ++idx;
      }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P, P);
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        const int row = pair_index[a * n + b];
        A(row, row) = 2.0 * n - 2.0;
        for (int j = 0; j < n; ++j) {
          if (j == a || j == b) continue;
          A(row, pair_index[a * n + j]) -= 1.0;
          A(row, pair_index[b * n + j]) -= 1.0;
        }
      }
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success)
      throw NumericalError("midpoint system is singular; cell structure is invalid");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& corner_values) const {
    const int P = N * (N - 1) / 2;
    Eigen::VectorXd rhs(P);
    for (int a = 0; a < N; ++a)
      for (int b = a + 1; b < N; ++b)
        rhs[pair_index[a * N + b]] = corner_values[a] + corner_values[b];
    return ldlt.solve(rhs);
  }
};

}  // namespace

Field harmonic_extension(const LevelGraph& g, const Refinement& r, const Field& u) {
  require_aligned(g, u, "harmonic_extension");
  if (r.graph.ambient() != g.ambient() || r.graph.level() != g.level() + 1)
    throw ConfigError("harmonic_extension: refinement does not match the graph");

  const int N = g.ambient();
  MidpointSolver local(N);

  Field out = zero_field(r.graph, u.dirichlet);
  for (std::int64_t v = 0; v < g.vertex_count(); ++v)
    out.values[r.old_to_new[v]] = u.values[v];

  std::vector<std::int64_t> mid(N);
  Eigen::VectorXd corner_values(N);
  for (const Cell& cell : g.cells()) {
    for (int k = 0; k < N; ++k) corner_values[k] = u.values[cell.members[k]];
    const Eigen::VectorXd z = local.solve(corner_values);
    for (int a = 0; a < N; ++a) {
      auto ba = g.bary(cell.members[a]);
      for (int b = a + 1; b < N; ++b) {
        auto bb = g.bary(cell.members[b]);
        for (int k = 0; k < N; ++k) mid[k] = ba[k] + bb[k];
        const VertexId w = r.graph.find_vertex(mid);
        if (w < 0) throw NumericalError("harmonic_extension: midpoint vertex missing");
        out.values[w] = z[local.pair_index[a * N + b]];
      }
    }
  }
  return out;
}

double holder_exponent(int N) {
  return std::log((N + 2.0) / N) / (2.0 * std::log(2.0));
}

HolderReport holder_check(const EnergyForm& e, const Field& u) {
  const LevelGraph& g = *e.graph;
  require_aligned(g, u, "holder_check");
  const int N = g.ambient();
  const int m = g.level();
  const double sigma = holder_exponent(N);
  const double w = energy(e, u);

  HolderReport rep;
  rep.bound = (2.0 * N + 3.0) * std::sqrt(std::max(w, 0.0));
  rep.sup_bound = rep.bound;
  rep.sup_norm = u.sup_norm();
  rep.sup_ok = !u.dirichlet || rep.sup_norm <= rep.sup_bound + 1e-10;

  const std::int64_t n = g.vertex_count();
  if (n < 2) {
    rep.ok = true;
    return rep;
  }

  // |x-y|^sigma = (so / (2*4^m))^{sigma/2} with so the integer squared offset;
  // distinct vertices satisfy so >= 2, i.e. |x-y| >= 2^{-m}.
  const double pow4m = std::pow(4.0, m);
  auto pair_quotient = [&](VertexId a, VertexId b) {
    const double d2 = static_cast<double>(g.squared_offset(a, b)) / (2.0 * pow4m);
    return std::abs(u.values[a] - u.values[b]) / std::pow(d2, sigma / 2.0);
  };

  // Edges realize the minimum distance and normally the maximum quotient.
  const double dmin_sigma = std::pow(2.0, -m * sigma);
  double best = 0;
  for (const Edge& ed : g.edges())
    best = std::max(best, std::abs(u.values[ed.a] - u.values[ed.b]));
  best /= dmin_sigma;

  // Any pair beating `best` needs |u(x)-u(y)| > best * dmin^sigma; enumerate
  // only those via the sorted value array.  The threshold grows as the max
  // improves, so skipped pairs can never win.
  std::vector<VertexId> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](VertexId a, VertexId b) { return u.values[a] < u.values[b]; });
  for (std::int64_t i = 0; i < n; ++i) {
    const double ui = u.values[idx[i]];
    if (u.values[idx[n - 1]] - ui <= best * dmin_sigma) break;
    for (std::int64_t j = n - 1; j > i; --j) {
      if (u.values[idx[j]] - ui <= best * dmin_sigma) break;
      best = std::max(best, pair_quotient(idx[i], idx[j]));
    }
  }

  rep.quotient = best;
  rep.ok = rep.quotient <= rep.bound + 1e-10;
  return rep;
}

LipschitzFn lipschitz_identity() {
  return {[](double t) { return t; }, 1.0, "identity"};
}

LipschitzFn lipschitz_unit_truncation() {
  return {[](double t) { return std::abs(std::min(t, 1.0)); }, 1.0, "unit-truncation"};
}

LipschitzFn lipschitz_scale(double c) {
  return {[c](double t) { return c * t; }, std::abs(c), "scale(" + std::to_string(c) + ")"};
}

LipschitzFn lipschitz_clamp(double lo, double hi) {
  return {[lo, hi](double t) { return std::clamp(t, lo, hi); }, 1.0,
          "clamp[" + std::to_string(lo) + "," + std::to_string(hi) + "]"};
}

Field truncate(const Field& u, const LipschitzFn& h) {
  if (u.dirichlet && h.h(0.0) != 0.0)
    throw ConfigError("truncate: " + h.name + " has h(0) != 0 and would break the Dirichlet flag");
  Field out = u;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values[i] = h.h(u.values[i]);
  return out;
}

double starred_norm(const EnergyForm& e, const QuadratureWeights& w, const Field& u,
                    const Field& a, bool require_nonpositive) {
  const LevelGraph& g = *e.graph;
  require_aligned(g, u, "starred_norm");
  require_aligned(g, a, "starred_norm");
  if (require_nonpositive)
    for (Eigen::Index i = 0; i < a.values.size(); ++i)
      if (a.values[i] > 0.0)
        throw ConfigError("starred_norm: coefficient is positive at vertex " + std::to_string(i) +
                          " although a <= 0 was asserted");
  double s = energy(e, u);
  for (Eigen::Index i = 0; i < u.values.size(); ++i)
    s -= w.w[i] * a.values[i] * u.values[i] * u.values[i];
  return std::sqrt(std::max(s, 0.0));
}

}  // namespace sgvar
