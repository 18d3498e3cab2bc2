#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mechpert/error.hpp"
#include "mechpert/gene.hpp"

namespace mechpert {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Edge {
  GeneSymbol a;
  GeneSymbol b;
  double weight = 0.0;
};

/// Weighted undirected interactome. Nodes are kept sorted by symbol so that
/// matrix indices, and therefore spectral results, never depend on input order.
class PpiGraph {
 public:
  PpiGraph() = default;

  /// Builds a graph from raw edges: self-loops dropped, duplicate pairs merged
  /// by keeping the largest weight. Weights must lie in (0, 1].
  static PpiGraph from_edges(const std::vector<Edge>& edges, const GeneSet& extra_nodes = {}) {
    std::map<std::pair<GeneSymbol, GeneSymbol>, double> merged;
    GeneSet node_set = extra_nodes;
    for (const auto& e : edges) {
      if (!(e.weight > 0.0 && e.weight <= 1.0) || !std::isfinite(e.weight)) {
        throw Error(ErrorCode::ScoreOutOfRange,
                    "edge " + e.a.str() + "-" + e.b.str() + " weight " + std::to_string(e.weight));
      }
      if (e.a == e.b) continue;
      auto key = e.a < e.b ? std::make_pair(e.a, e.b) : std::make_pair(e.b, e.a);
      auto [it, inserted] = merged.emplace(key, e.weight);
      if (!inserted) it->second = std::max(it->second, e.weight);
      node_set.insert(e.a);
      node_set.insert(e.b);
    }

    PpiGraph g;
    g.nodes_.assign(node_set.begin(), node_set.end());
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) g.index_.emplace(g.nodes_[i], i);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(merged.size() * 2);
    for (const auto& [key, w] : merged) {
      const auto i = static_cast<int>(g.index_.at(key.first));
      const auto j = static_cast<int>(g.index_.at(key.second));
      triplets.emplace_back(i, j, w);
      triplets.emplace_back(j, i, w);
    }
    const auto n = static_cast<Eigen::Index>(g.nodes_.size());
    g.adjacency_.resize(n, n);
    g.adjacency_.setFromTriplets(triplets.begin(), triplets.end());
    g.adjacency_.makeCompressed();

    g.degrees_ = Eigen::VectorXd::Zero(n);
    for (Eigen::Index col = 0; col < g.adjacency_.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(g.adjacency_, col); it; ++it) g.degrees_[col] += it.value();
    return g;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  const GeneList& nodes() const noexcept { return nodes_; }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  /// Weighted degree of every node, in node order.
  const Eigen::VectorXd& degrees() const noexcept { return degrees_; }

  bool contains(const GeneSymbol& g) const { return index_.count(g) != 0; }

  std::optional<std::size_t> index_of(const GeneSymbol& g) const {
    auto it = index_.find(g);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require_index(const GeneSymbol& g, ErrorCode code = ErrorCode::NodeNotInGraph) const {
    auto idx = index_of(g);
    if (!idx) throw Error(code, g.str());
    return *idx;
  }

  double weight(const GeneSymbol& a, const GeneSymbol& b) const {
    auto i = index_of(a), j = index_of(b);
    if (!i || !j) return 0.0;
    return adjacency_.coeff(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
  }

  std::size_t edge_count() const noexcept { return static_cast<std::size_t>(adjacency_.nonZeros() / 2); }

  /// Undirected edge list with a < b.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (Eigen::Index col = 0; col < adjacency_.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(adjacency_, col); it; ++it)
        if (it.row() < col) out.push_back({nodes_[it.row()], nodes_[col], it.value()});
    std::sort(out.begin(), out.end(), [](const Edge& x, const Edge& y) {
      return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    return out;
  }

  PpiGraph induced_subgraph(const GeneSet& keep) const {
    std::vector<Edge> kept;
    for (auto& e : edges())
      if (keep.count(e.a) && keep.count(e.b)) kept.push_back(e);
    GeneSet present;
    for (const auto& g : keep)
      if (contains(g)) present.insert(g);
    return from_edges(kept, present);
  }

  /// Connected-component label per node; labels are assigned in node order.
  std::vector<int> component_labels() const {
    std::vector<int> label(size(), -1);
    int next = 0;
    for (std::size_t start = 0; start < size(); ++start) {
      if (label[start] >= 0) continue;
      std::queue<std::size_t> frontier;
      frontier.push(start);
      label[start] = next;
      while (!frontier.empty()) {
        const auto u = frontier.front();
        frontier.pop();
        for (SparseMatrix::InnerIterator it(adjacency_, static_cast<Eigen::Index>(u)); it; ++it) {
          const auto v = static_cast<std::size_t>(it.row());
          if (label[v] < 0) {
            label[v] = next;
            frontier.push(v);
          }
        }
      }
      ++next;
    }
    return label;
  }

 private:
  GeneList nodes_;
  std::unordered_map<GeneSymbol, std::size_t> index_;
  SparseMatrix adjacency_;
  Eigen::VectorXd degrees_;
};

// ---------------------------------------------------------------------------
// Degree centrality

/// Nodes ranked by weighted degree, descending; ties by ascending symbol.
inline GeneList degree_centrality(const PpiGraph& graph) {
  if (graph.empty()) throw Error(ErrorCode::EmptyGraph, "degree centrality of an empty graph");
  std::map<GeneSymbol, double> deg;
  for (std::size_t i = 0; i < graph.size(); ++i) deg[graph.nodes()[i]] = graph.degrees()[static_cast<Eigen::Index>(i)];
  return rank_descending(deg, graph.size());
}

// ---------------------------------------------------------------------------
// Transition matrix and personalized PageRank

/// Column-stochastic A = W D^{-1}; columns of isolated nodes stay zero.
inline SparseMatrix transition_matrix(const PpiGraph& graph) {
  SparseMatrix a = graph.adjacency();
  for (Eigen::Index col = 0; col < a.outerSize(); ++col) {
    const double d = graph.degrees()[col];
    if (d <= 0.0) continue;
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) it.valueRef() /= d;
  }
  return a;
}

struct DiffusionScores {
  std::map<GeneSymbol, double> scores;
  double alpha = 0.85;
  GeneSet seeds;
  int iterations = 0;
  double residual = 0.0;
};

struct PprOptions {
  double alpha = 0.85;
  double tol = 1e-10;
  int max_iter = 200;
};

namespace detail {

/// One application of pr -> alpha*A*pr + (1-alpha)*p with dangling mass
/// returned to p.
inline Eigen::VectorXd ppr_step(const PpiGraph& graph, const SparseMatrix& transition,
                                const Eigen::VectorXd& pr, const Eigen::VectorXd& personalization,
                                double alpha) {
  double dangling = 0.0;
  for (Eigen::Index i = 0; i < pr.size(); ++i)
    if (graph.degrees()[i] <= 0.0) dangling += pr[i];
  Eigen::VectorXd next = alpha * (transition * pr);
  next += (alpha * dangling + (1.0 - alpha)) * personalization;
  return next;
}

}  // namespace detail

/// Power iteration for pr = alpha*A*pr + (1-alpha)*p, p uniform over `seeds`.
/// Stops when the L1 fixed-point residual drops below `tol`.
inline DiffusionScores personalized_pagerank(const PpiGraph& graph, const GeneSet& seeds,
                                             const PprOptions& options = {}) {
  if (seeds.empty()) throw Error(ErrorCode::SeedNotInGraph, "empty seed set");
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  for (const auto& s : seeds) p[static_cast<Eigen::Index>(graph.require_index(s, ErrorCode::SeedNotInGraph))] = 1.0;
  p /= static_cast<double>(seeds.size());

  const SparseMatrix a = transition_matrix(graph);
  Eigen::VectorXd pr = p;
  double residual = 0.0;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    Eigen::VectorXd next = detail::ppr_step(graph, a, pr, p, options.alpha);
    residual = (next - pr).lpNorm<1>();
    pr = std::move(next);
    if (residual < options.tol) break;
  }
  if (residual >= options.tol) {
    throw Error(ErrorCode::NoConvergence, "iterations=" + std::to_string(iter) +
                                              " residual=" + std::to_string(residual));
  }
  pr /= pr.sum();
  residual = (detail::ppr_step(graph, a, pr, p, options.alpha) - pr).lpNorm<1>();

  DiffusionScores out;
  out.alpha = options.alpha;
  out.seeds = seeds;
  out.iterations = iter + 1;
  out.residual = residual;
  for (Eigen::Index i = 0; i < n; ++i) out.scores.emplace(graph.nodes()[static_cast<std::size_t>(i)], pr[i]);
  return out;
}

/// Highest-scoring genes not in `exclude`; ties by ascending symbol.
inline GeneList top_reachable(const DiffusionScores& scores, std::size_t k = 50,
                              const GeneSet& exclude = {}) {
  std::map<GeneSymbol, double> kept;
  for (const auto& [g, s] : scores.scores)
    if (!exclude.count(g)) kept.emplace(g, s);
  return rank_descending(kept, k);
}

// ---------------------------------------------------------------------------
// Laplacian

enum class LaplacianKind { Normalized, Unnormalized };

/// Normalized: I - D^{-1/2} W D^{-1/2}, isolated nodes keep an identity row.
/// Unnormalized: D - W.
inline SparseMatrix laplacian(const PpiGraph& graph, LaplacianKind kind = LaplacianKind::Normalized) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  const auto& w = graph.adjacency();
  const auto& deg = graph.degrees();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(w.nonZeros() + n));
  for (Eigen::Index col = 0; col < w.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(w, col); it; ++it) {
      const double v = kind == LaplacianKind::Normalized
                           ? -it.value() / std::sqrt(deg[it.row()] * deg[col])
                           : -it.value();
      triplets.emplace_back(it.row(), col, v);
    }
    const double diag = kind == LaplacianKind::Normalized ? 1.0 : deg[col];
    if (kind == LaplacianKind::Normalized || diag != 0.0) triplets.emplace_back(col, col, diag);
  }
  SparseMatrix l(n, n);
  l.setFromTriplets(triplets.begin(), triplets.end());
  l.makeCompressed();
  return l;
}

}  // namespace mechpert
