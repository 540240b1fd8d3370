#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgvar/errors.hpp"

namespace sgvar {

// Graded graph approximations of the Sierpinski gasket in R^{N-1}.
//
// A level-m vertex is stored in exact barycentric integer coordinates: an
// N-tuple of non-negative integers summing to 2^m; the Euclidean point is
// sum_k (b_k / 2^m) p_k over unit-simplex corners p_k.  Because the corners
// are pairwise at distance 1,
//
//     |x - y|^2 = sum_k (b_k - c_k)^2 / (2 * 4^m),
//
// so deduplication, edge detection and distances are exact integer work,
// independent of the (irrational) simplex embedding.

using VertexId = std::int32_t;

struct Edge {
  VertexId a, b;  // a < b
};

struct Cell {
  std::vector<std::uint8_t> word;   // letters in 1..N, length = level
  std::vector<VertexId> members;    // members[k] = image of corner k+1
};

inline constexpr std::int64_t kDefaultVertexCap = 5'000'000;

class LevelGraph {
 public:
  int ambient() const { return ambient_; }           // N
  int level() const { return level_; }                // m
  std::int64_t scale() const { return scale_; }       // 2^m
  std::int64_t vertex_count() const { return static_cast<std::int64_t>(bary_.size()) / ambient_; }
  std::int64_t edge_count() const { return static_cast<std::int64_t>(edges_.size()); }
  std::int64_t cell_count() const { return static_cast<std::int64_t>(cells_.size()); }

  std::span<const std::int64_t> bary(VertexId v) const {
    return {bary_.data() + static_cast<std::size_t>(v) * ambient_,
            static_cast<std::size_t>(ambient_)};
  }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<VertexId>& boundary() const { return boundary_; }
  const std::vector<Cell>& cells() const { return cells_; }

  bool is_boundary(VertexId v) const { return is_corner_[v] != 0; }
  int cell_incidence(VertexId v) const { return incidence_[v]; }

  std::span<const VertexId> neighbors(VertexId v) const {
    return {adj_.data() + adj_off_[v], adj_.data() + adj_off_[v + 1]};
  }
  int degree(VertexId v) const { return static_cast<int>(adj_off_[v + 1] - adj_off_[v]); }

  // Unit-edge simplex corners, one row per corner, N-1 columns.
  const Eigen::MatrixXd& corner_coords() const { return corner_coords_; }
  Eigen::VectorXd euclidean(VertexId v) const;

  // sum_k (b_k - c_k)^2; |x-y|^2 = squared_offset / (2 * 4^m).
  std::int64_t squared_offset(VertexId x, VertexId y) const;
  double distance(VertexId x, VertexId y) const;

  // Index of the vertex with the given barycentric tuple, or -1.
  VertexId find_vertex(std::span<const std::int64_t> bary) const;

  friend LevelGraph build_gasket(int N, int m, std::int64_t max_vertices);

 private:
  int ambient_ = 0;
  int level_ = 0;
  std::int64_t scale_ = 1;
  std::vector<std::int64_t> bary_;     // vertex_count x N, lexicographic rows
  std::vector<Edge> edges_;            // sorted (a, b)
  std::vector<VertexId> boundary_;     // corner indices, corner order
  std::vector<Cell> cells_;            // lexicographic word order
  std::vector<std::uint8_t> incidence_;  // cells containing each vertex (1 or 2)
  std::vector<std::uint8_t> is_corner_;
  std::vector<std::int64_t> adj_off_;
  std::vector<VertexId> adj_;
  Eigen::MatrixXd corner_coords_;
};

LevelGraph build_gasket(int N, int m, std::int64_t max_vertices = kDefaultVertexCap);

struct Refinement {
  LevelGraph graph;                     // level m+1
  std::vector<VertexId> old_to_new;     // injective, coordinate-exact
};

Refinement refine(const LevelGraph& g, std::int64_t max_vertices = kDefaultVertexCap);

// The N vertices of S_{w1} o ... o S_{wm}(corner simplex), in corner order.
std::vector<VertexId> cell_members(const LevelGraph& g, const std::vector<std::uint8_t>& word);

// Corners of the regular unit-edge simplex in R^{N-1}, one row per corner.
Eigen::MatrixXd simplex_corners(int N);

std::int64_t ipow(std::int64_t base, int exp);

}  // namespace sgvar
