#include "sgvar/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

namespace sgvar {

namespace {

std::vector<VertexId> interior_vertices(const LevelGraph& g) {
  std::vector<VertexId> idx;
  for (std::int64_t v = 0; v < g.vertex_count(); ++v)
    if (!g.is_boundary(static_cast<VertexId>(v))) idx.push_back(static_cast<VertexId>(v));
  return idx;
}

}  // namespace

SpectrumResult weighted_spectrum(const EnergyForm& e, const QuadratureWeights& w,
                                 const Field& a, int k, int dense_threshold) {
  const LevelGraph& g = *e.graph;
  require_aligned(g, a, "weighted_spectrum");
  const std::vector<VertexId> interior = interior_vertices(g);
  const std::size_t n = interior.size();
  if (n == 0) throw ConfigError("weighted_spectrum: no interior vertices at this level");
  if (k < 1) throw ConfigError("weighted_spectrum: need k >= 1");
  k = std::min<std::size_t>(k, n);

  Eigen::VectorXd mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    const VertexId v = interior[i];
    const double m = w.w[v] * (-a.values[v]);
    if (!(m > 0))
      throw ConfigError("weighted_spectrum: mass is not positive at vertex " +
                        std::to_string(v) + "; the weight a must be strictly negative "
                        "on interior vertices");
    mass[i] = m;
  }

  Eigen::VectorXi pos = Eigen::VectorXi::Constant(g.vertex_count(), -1);
  for (std::size_t i = 0; i < n; ++i) pos[interior[i]] = static_cast<int>(i);

  SpectrumResult out;
  out.level = g.level();
  out.normalization = "variational";

  auto expand = [&](const Eigen::VectorXd& x) {
    Field f = zero_field(g, true);
    for (std::size_t i = 0; i < n; ++i) f.values[interior[i]] = x[i];
    return f;
  };

  if (static_cast<int>(n) < dense_threshold) {
    Eigen::MatrixXd kd = Eigen::MatrixXd::Zero(n, n);
    for (int col = 0; col < e.stiffness.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(e.stiffness, col); it; ++it)
        if (pos[it.row()] >= 0 && pos[it.col()] >= 0)
          kd(pos[it.row()], pos[it.col()]) = it.value();
    Eigen::MatrixXd md = mass.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(kd, md);
    if (solver.info() != Eigen::Success)
      throw NumericalError("dense generalized eigensolver failed");
    for (int p = 0; p < k; ++p) {
      const double lam = solver.eigenvalues()[p];
      const Eigen::VectorXd v = solver.eigenvectors().col(p);
      out.eigenvalues.push_back(lam);
      out.residuals.push_back((kd * v - lam * mass.cwiseProduct(v)).norm());
      out.eigenfields.push_back(expand(v));
    }
    return out;
  }

  // Shift-inverted iteration with deflation: repeatedly apply K^{-1} M while
  // M-orthogonalizing against converged modes.
  Eigen::SparseMatrix<double> ks(n, n);
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < e.stiffness.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(e.stiffness, col); it; ++it)
        if (pos[it.row()] >= 0 && pos[it.col()] >= 0)
          trip.emplace_back(pos[it.row()], pos[it.col()], it.value());
    ks.setFromTriplets(trip.begin(), trip.end());
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fact(ks);
  if (fact.info() != Eigen::Success)
    throw NumericalError("stiffness factorization failed in weighted_spectrum");

  std::vector<Eigen::VectorXd> found;
  for (int p = 0; p < k; ++p) {
    Eigen::VectorXd v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = 1.0 + std::sin(static_cast<double>((p + 1) * (i + 1)));
    auto m_orthogonalize = [&](Eigen::VectorXd& x) {
      for (const Eigen::VectorXd& u : found) x -= u.dot(mass.cwiseProduct(x)) * u;
      const double mn = std::sqrt(x.dot(mass.cwiseProduct(x)));
      if (mn > 0) x /= mn;
    };
    m_orthogonalize(v);
    double lam = 0;
    bool ok = false;
    for (int it = 0; it < 10000; ++it) {
      Eigen::VectorXd next = fact.solve(mass.cwiseProduct(v));
      m_orthogonalize(next);
      v = std::move(next);
      const Eigen::VectorXd kv = ks * v;
      lam = v.dot(kv);  // Rayleigh quotient; v is M-normalized
      if ((kv - lam * mass.cwiseProduct(v)).norm() <= 1e-10 * std::max(1.0, lam)) {
        ok = true;
        break;
      }
    }
    if (!ok) throw NumericalError("inverse iteration failed to converge for mode " +
                                  std::to_string(p + 1));
    out.eigenvalues.push_back(lam);
    out.residuals.push_back((ks * v - lam * mass.cwiseProduct(v)).norm());
    out.eigenfields.push_back(expand(v));
    found.push_back(std::move(v));
  }
  std::vector<std::size_t> order(out.eigenvalues.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return out.eigenvalues[i] < out.eigenvalues[j]; });
  SpectrumResult sorted;
  sorted.level = out.level;
  sorted.normalization = out.normalization;
  for (std::size_t i : order) {
    sorted.eigenvalues.push_back(out.eigenvalues[i]);
    sorted.residuals.push_back(out.residuals[i]);
    sorted.eigenfields.push_back(std::move(out.eigenfields[i]));
  }
  return sorted;
}

std::vector<double> raw_dirichlet_spectrum(const LevelGraph& g) {
  const std::vector<VertexId> interior = interior_vertices(g);
  const std::size_t n = interior.size();
  if (n == 0) return {};
  Eigen::VectorXi pos = Eigen::VectorXi::Constant(g.vertex_count(), -1);
  for (std::size_t i = 0; i < n; ++i) pos[interior[i]] = static_cast<int>(i);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const VertexId v = interior[i];
    lap(i, i) = g.degree(v);
    for (VertexId y : g.neighbors(v))
      if (pos[y] >= 0) lap(i, pos[y]) -= 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success)
    throw NumericalError("raw Laplacian eigensolve failed");
  return {solver.eigenvalues().data(), solver.eigenvalues().data() + n};
}

DecimationReport decimation_check(const LevelGraph& coarse, const LevelGraph& fine,
                                  double match_tol, double forbidden_tol) {
  if (coarse.ambient() != 3 || fine.ambient() != 3)
    throw ConfigError("decimation_check applies to the three-corner gasket only");
  if (fine.level() != coarse.level() + 1)
    throw ConfigError("decimation_check needs consecutive levels");

  const std::vector<double> coarse_spec = raw_dirichlet_spectrum(coarse);
  const std::vector<double> fine_spec = raw_dirichlet_spectrum(fine);

  DecimationReport rep;
  rep.level_coarse = coarse.level();
  rep.level_fine = fine.level();
  const double forbidden[] = {2.0, 5.0, 6.0};
  for (double nu : fine_spec) {
    DecimationMatch row;
    row.fine_value = nu;
    row.mapped_value = nu * (5.0 - nu);
    for (double f : forbidden)
      if (std::abs(nu - f) <= forbidden_tol) row.forbidden = true;
    if (row.forbidden) {
      ++rep.excluded;
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (double mu : coarse_spec) best = std::min(best, std::abs(row.mapped_value - mu));
      row.mismatch = best;
      ++rep.considered;
      if (best <= match_tol) ++rep.matched;
      rep.max_mismatch = std::max(rep.max_mismatch, best);
    }
    rep.rows.push_back(row);
  }
  rep.match_fraction = rep.considered == 0
                           ? 1.0
                           : static_cast<double>(rep.matched) / rep.considered;
  return rep;
}

}  // namespace sgvar
