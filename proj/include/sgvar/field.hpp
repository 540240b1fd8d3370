#pragma once

#include <Eigen/Dense>

#include "sgvar/gasket.hpp"

namespace sgvar {

// Real-valued function on the vertices of a LevelGraph.  When `dirichlet` is
// set, values are exactly zero at the corner vertices.
struct Field {
  Eigen::VectorXd values;
  bool dirichlet = false;

  double sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

inline Field zero_field(const LevelGraph& g, bool dirichlet = true) {
  return {Eigen::VectorXd::Zero(g.vertex_count()), dirichlet};
}

inline Field constant_field(const LevelGraph& g, double c) {
  return {Eigen::VectorXd::Constant(g.vertex_count(), c), c == 0.0};
}

inline void require_aligned(const LevelGraph& g, const Field& u, const char* what) {
  if (u.values.size() != g.vertex_count())
    throw ConfigError(std::string(what) + ": field has " + std::to_string(u.values.size()) +
                      " values for a graph with " + std::to_string(g.vertex_count()) +
                      " vertices");
}

inline void enforce_dirichlet(const LevelGraph& g, Field& u) {
  for (VertexId v : g.boundary()) u.values[v] = 0.0;
  u.dirichlet = true;
}

inline bool dirichlet_consistent(const LevelGraph& g, const Field& u) {
  if (!u.dirichlet) return true;
  for (VertexId v : g.boundary())
    if (u.values[v] != 0.0) return false;
  return true;
}

}  // namespace sgvar
