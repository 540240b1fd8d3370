#include "sgvar/gasket.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sgvar {

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > (std::int64_t(1) << 62) / base) throw ResourceLimitError("integer power overflow");
    r *= base;
  }
  return r;
}

Eigen::MatrixXd simplex_corners(int N) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(N, N - 1);
  for (int k = 1; k < N; ++k) {
    Eigen::RowVectorXd c = p.topRows(k).colwise().mean();
    double r2 = (c - p.row(0)).squaredNorm();
    p.row(k) = c;
    p(k, k - 1) = std::sqrt(1.0 - r2);
  }
  return p;
}

Eigen::VectorXd LevelGraph::euclidean(VertexId v) const {
  auto b = bary(v);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ambient_ - 1);
  const double inv = 1.0 / static_cast<double>(scale_);
  for (int k = 0; k < ambient_; ++k)
    if (b[k] != 0) x += (static_cast<double>(b[k]) * inv) * corner_coords_.row(k).transpose();
  return x;
}

std::int64_t LevelGraph::squared_offset(VertexId x, VertexId y) const {
  auto bx = bary(x), by = bary(y);
  std::int64_t s = 0;
  for (int k = 0; k < ambient_; ++k) {
    const std::int64_t d = bx[k] - by[k];
    s += d * d;
  }
  return s;
}

double LevelGraph::distance(VertexId x, VertexId y) const {
  return std::sqrt(static_cast<double>(squared_offset(x, y)) / 2.0) /
         static_cast<double>(scale_);
}

VertexId LevelGraph::find_vertex(std::span<const std::int64_t> b) const {
  const int N = ambient_;
  std::int64_t lo = 0, hi = vertex_count();
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    const std::int64_t* row = bary_.data() + mid * N;
    int cmp = 0;
    for (int k = 0; k < N; ++k) {
      if (row[k] != b[k]) {
        cmp = row[k] < b[k] ? -1 : 1;
        break;
      }
    }
    if (cmp < 0)
      lo = mid + 1;
    else if (cmp > 0)
      hi = mid;
    else
      return static_cast<VertexId>(mid);
  }
  return -1;
}

LevelGraph build_gasket(int N, int m, std::int64_t max_vertices) {
  if (N < 2) throw ConfigError("N must be >= 2 (the corner simplex needs at least two points)");
  if (m < 0) throw ConfigError("m must be >= 0");
  if (max_vertices <= 0) max_vertices = kDefaultVertexCap;

  // |V_m| = (N^{m+1} + N) / 2; every non-corner junction sits in exactly two cells.
  const long double predicted = (std::pow(static_cast<long double>(N), m + 1) + N) / 2.0L;
  if (predicted > static_cast<long double>(max_vertices))
    throw ResourceLimitError("level " + std::to_string(m) + " needs ~" +
                             std::to_string(static_cast<double>(predicted)) +
                             " vertices, above the cap of " + std::to_string(max_vertices));

  LevelGraph g;
  g.ambient_ = N;
  g.level_ = m;
  g.scale_ = ipow(2, m);
  g.corner_coords_ = simplex_corners(N);

  const std::int64_t ncells = ipow(N, m);
  const std::int64_t ntuples = ncells * N;

  // One barycentric tuple per (cell, corner): base(word) + e_k.
  std::vector<std::int64_t> tup(static_cast<std::size_t>(ntuples) * N);
  {
    std::vector<std::uint8_t> word(m, 1);
    std::vector<std::int64_t> base(N, 0);
    for (std::int64_t c = 0; c < ncells; ++c) {
      std::fill(base.begin(), base.end(), 0);
      for (int j = 0; j < m; ++j) base[word[j] - 1] += g.scale_ >> (j + 1);
      for (int k = 0; k < N; ++k) {
        std::int64_t* row = tup.data() + (c * N + k) * N;
        for (int q = 0; q < N; ++q) row[q] = base[q];
        row[k] += 1;  // e_k at level-0 scale 1, composed through m halvings
      }
      for (int j = m - 1; j >= 0; --j) {  // odometer, lexicographic words
        if (word[j] < N) {
          ++word[j];
          break;
        }
        word[j] = 1;
      }
    }
  }

  // Deduplicate by exact tuple; lexicographic vertex order.
  std::vector<std::int64_t> order(ntuples);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::int64_t i, std::int64_t j) {
    const std::int64_t* a = tup.data() + i * N;
    const std::int64_t* b = tup.data() + j * N;
    for (int k = 0; k < N; ++k)
      if (a[k] != b[k]) return a[k] < b[k];
    return false;
  };
  auto equal = [&](std::int64_t i, std::int64_t j) {
    const std::int64_t* a = tup.data() + i * N;
    const std::int64_t* b = tup.data() + j * N;
    for (int k = 0; k < N; ++k)
      if (a[k] != b[k]) return false;
    return true;
  };
  std::sort(order.begin(), order.end(), less);

  std::vector<VertexId> tuple_vertex(ntuples);
  VertexId next_id = -1;
  for (std::int64_t pos = 0; pos < ntuples; ++pos) {
    if (pos == 0 || !equal(order[pos], order[pos - 1])) {
      ++next_id;
      const std::int64_t* src = tup.data() + order[pos] * N;
      g.bary_.insert(g.bary_.end(), src, src + N);
    }
    tuple_vertex[order[pos]] = next_id;
  }
  const std::int64_t nverts = next_id + 1;

  g.cells_.resize(ncells);
  g.incidence_.assign(nverts, 0);
  {
    std::vector<std::uint8_t> word(m, 1);
    for (std::int64_t c = 0; c < ncells; ++c) {
      Cell& cell = g.cells_[c];
      cell.word = word;
      cell.members.resize(N);
      for (int k = 0; k < N; ++k) {
        const VertexId v = tuple_vertex[c * N + k];
        cell.members[k] = v;
        ++g.incidence_[v];
      }
      for (int j = m - 1; j >= 0; --j) {
        if (word[j] < N) {
          ++word[j];
          break;
        }
        word[j] = 1;
      }
    }
  }

  // Distinct cells meet in at most one vertex, so per-cell pairs never repeat.
  g.edges_.reserve(static_cast<std::size_t>(ncells) * N * (N - 1) / 2);
  for (const Cell& cell : g.cells_)
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        VertexId a = cell.members[i], b = cell.members[j];
        if (a > b) std::swap(a, b);
        g.edges_.push_back({a, b});
      }
  std::sort(g.edges_.begin(), g.edges_.end(), [](const Edge& e, const Edge& f) {
    return e.a != f.a ? e.a < f.a : e.b < f.b;
  });

  g.is_corner_.assign(nverts, 0);
  g.boundary_.resize(N);
  std::vector<std::int64_t> corner(N, 0);
  for (int k = 0; k < N; ++k) {
    std::fill(corner.begin(), corner.end(), 0);
    corner[k] = g.scale_;
    const VertexId v = g.find_vertex(corner);
    g.boundary_[k] = v;
    g.is_corner_[v] = 1;
  }

  g.adj_off_.assign(nverts + 1, 0);
  for (const Edge& e : g.edges_) {
    ++g.adj_off_[e.a + 1];
    ++g.adj_off_[e.b + 1];
  }
  for (std::int64_t v = 0; v < nverts; ++v) g.adj_off_[v + 1] += g.adj_off_[v];
  g.adj_.resize(g.edges_.size() * 2);
  {
    std::vector<std::int64_t> fill(g.adj_off_.begin(), g.adj_off_.end() - 1);
    for (const Edge& e : g.edges_) {
      g.adj_[fill[e.a]++] = e.b;
      g.adj_[fill[e.b]++] = e.a;
    }
  }
  return g;
}

Refinement refine(const LevelGraph& g, std::int64_t max_vertices) {
  Refinement r{build_gasket(g.ambient(), g.level() + 1, max_vertices), {}};
  const std::int64_t n = g.vertex_count();
  r.old_to_new.resize(n);
  std::vector<std::int64_t> doubled(g.ambient());
  for (std::int64_t v = 0; v < n; ++v) {
    auto b = g.bary(static_cast<VertexId>(v));
    for (int k = 0; k < g.ambient(); ++k) doubled[k] = 2 * b[k];
    const VertexId w = r.graph.find_vertex(doubled);
    if (w < 0) throw NumericalError("refinement lost a vertex; construction is inconsistent");
    r.old_to_new[v] = w;
  }
  return r;
}

std::vector<VertexId> cell_members(const LevelGraph& g, const std::vector<std::uint8_t>& word) {
  if (static_cast<int>(word.size()) != g.level())
    throw ConfigError("cell address has length " + std::to_string(word.size()) +
                      ", expected the level " + std::to_string(g.level()));
  std::int64_t idx = 0;
  for (std::uint8_t w : word) {
    if (w < 1 || w > g.ambient())
      throw ConfigError("cell address letter " + std::to_string(int(w)) + " outside 1.." +
                        std::to_string(g.ambient()));
    idx = idx * g.ambient() + (w - 1);
  }
  return g.cells()[idx].members;
}

}  // namespace sgvar
