#pragma once

#include <random>

#include "sgvar/energy.hpp"
#include "sgvar/field.hpp"
#include "sgvar/gasket.hpp"
#include "sgvar/measure.hpp"
#include "sgvar/problem.hpp"

namespace sgvar::test {

inline Field random_dirichlet(const LevelGraph& g, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> dist(0.0, sigma);
  Field u = zero_field(g, true);
  for (std::int64_t v = 0; v < g.vertex_count(); ++v)
    if (!g.is_boundary(static_cast<VertexId>(v))) u.values[v] = dist(rng);
  return u;
}

inline Field random_full(const LevelGraph& g, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> dist(0.0, sigma);
  Field u{Eigen::VectorXd(g.vertex_count()), false};
  for (std::int64_t v = 0; v < g.vertex_count(); ++v) u.values[v] = dist(rng);
  return u;
}

// Field sampling a coordinate of the Euclidean embedding.
inline Field coordinate_field(const LevelGraph& g, int k) {
  Field u{Eigen::VectorXd(g.vertex_count()), false};
  for (std::int64_t v = 0; v < g.vertex_count(); ++v)
    u.values[v] = g.euclidean(static_cast<VertexId>(v))[k];
  return u;
}

struct Instance {
  LevelGraph graph;
  QuadratureWeights weights;
  EnergyForm form;

  Instance(int N, int m)
      : graph(build_gasket(N, m)), weights(vertex_weights(graph)),
        form(make_energy_form(graph)) {}
};

}  // namespace sgvar::test
