#pragma once

#include <Eigen/Dense>

#include "sgvar/field.hpp"
#include "sgvar/gasket.hpp"

namespace sgvar {

// Vertex quadrature for the normalized self-similar measure: each level-m
// cell carries mass N^{-m}, split equally over its N vertices, so
// weight(x) = incidence(x) / N^{m+1}.  Weights are positive and sum to one
// exactly (integer numerators over the common denominator N^{m+1}).
struct QuadratureWeights {
  Eigen::VectorXd w;
  std::int64_t denom = 1;  // N^{m+1}
};

QuadratureWeights vertex_weights(const LevelGraph& g);

double integrate(const LevelGraph& g, const QuadratureWeights& w, const Field& u);

}  // namespace sgvar
