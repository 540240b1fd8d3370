#include "sgvar/measure.hpp"

#include "sgvar/errors.hpp"

namespace sgvar {

QuadratureWeights vertex_weights(const LevelGraph& g) {
  QuadratureWeights q;
  q.denom = ipow(g.ambient(), g.level() + 1);
  const std::int64_t n = g.vertex_count();
  q.w.resize(n);
  std::int64_t numerator_sum = 0;
  for (std::int64_t v = 0; v < n; ++v) {
    const std::int64_t num = g.cell_incidence(static_cast<VertexId>(v));
    numerator_sum += num;
    q.w[v] = static_cast<double>(num) / static_cast<double>(q.denom);
  }
  if (numerator_sum != q.denom)
    throw NumericalError("quadrature numerators sum to " + std::to_string(numerator_sum) +
                         " instead of " + std::to_string(q.denom));
  return q;
}

double integrate(const LevelGraph& g, const QuadratureWeights& w, const Field& u) {
  require_aligned(g, u, "integrate");
  if (w.w.size() != u.values.size())
    throw ConfigError("integrate: weight vector does not match the graph");
  return w.w.dot(u.values);
}

}  // namespace sgvar
