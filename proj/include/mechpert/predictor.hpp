#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mechpert/consensus.hpp"
#include "mechpert/dataset.hpp"
#include "mechpert/graph.hpp"
#include "mechpert/hyperbolic.hpp"
#include "mechpert/hypothesis.hpp"
#include "mechpert/log.hpp"

namespace mechpert {

enum class Strategy { Semantic, Binary, Confidence, ThreePlusTwo, Harmonizer, Spectral };

inline constexpr Strategy kAllStrategies[] = {Strategy::Semantic,     Strategy::Binary,     Strategy::Confidence,
                                              Strategy::ThreePlusTwo, Strategy::Harmonizer, Strategy::Spectral};

constexpr std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Semantic: return "semantic";
    case Strategy::Binary: return "binary";
    case Strategy::Confidence: return "confidence";
    case Strategy::ThreePlusTwo: return "three_plus_two";
    case Strategy::Harmonizer: return "harmonizer";
    case Strategy::Spectral: return "spectral";
  }
  return "semantic";
}

/// Column titles used in report tables.
constexpr std::string_view display_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::Semantic: return "LangPert";
    case Strategy::Binary: return "Binary Consensus";
    case Strategy::Confidence: return "MechPert";
    case Strategy::ThreePlusTwo: return "3+2 Strategy";
    case Strategy::Harmonizer: return "Harmonizer";
    case Strategy::Spectral: return "Spectral";
  }
  return "";
}

inline Strategy parse_strategy(std::string_view name) {
  for (auto s : kAllStrategies)
    if (to_string(s) == name) return s;
  if (name == "3+2") return Strategy::ThreePlusTwo;
  throw Error(ErrorCode::InvalidConfig, "unknown strategy '" + std::string(name) + "'");
}

/// Genes with positive weights; the prediction is their weight-normalized
/// average profile.
struct WeightedNeighborhood {
  std::map<GeneSymbol, double> entries;
  Strategy strategy = Strategy::Semantic;

  double total() const {
    double z = 0.0;
    for (const auto& [_, w] : entries) z += w;
    return z;
  }
};

inline ExpressionProfile predict(const WeightedNeighborhood& nb, const PerturbationDataset& dataset) {
  if (nb.entries.empty()) throw Error(ErrorCode::EmptyNeighborhood, std::string(to_string(nb.strategy)));
  for (const auto& [g, _] : nb.entries)
    if (!dataset.has_profile(g)) throw Error(ErrorCode::MissingProfile, g.str());
  const double z = nb.total();
  if (!(z > 0.0)) throw Error(ErrorCode::ZeroTotalWeight, std::string(to_string(nb.strategy)));
  ExpressionProfile y = ExpressionProfile::Zero(static_cast<Eigen::Index>(dataset.dim()));
  for (const auto& [g, w] : nb.entries) y += (w / z) * dataset.profile(g);
  return y;
}

// ---------------------------------------------------------------------------
// Retrieval neighborhoods

/// Single-retrieval baseline: chain 0's semantic genes, unit weight.
inline WeightedNeighborhood build_semantic_neighborhood(const std::vector<HypothesisChain>& chains, const GeneSet& train) {
  if (chains.empty()) throw Error(ErrorCode::NoChains, "semantic neighborhood");
  WeightedNeighborhood nb{{}, Strategy::Semantic};
  for (const auto& g : chains.front().semantic)
    if (train.count(g)) nb.entries[g] = 1.0;
  if (nb.entries.empty()) throw Error(ErrorCode::NoValidNeighbors, "no semantic neighbor in the training set");
  return nb;
}

/// Consensus causal weights plus chain 0's semantic genes at unit weight;
/// a gene in both sets gets the sum.
inline WeightedNeighborhood build_mechpert_neighborhood(const std::vector<HypothesisChain>& chains, ConsensusMode mode,
                                                        const GeneSet& train, int min_votes = 1) {
  const auto consensus = filter_min_votes(aggregate(chains, mode), min_votes);
  WeightedNeighborhood nb{{}, mode == ConsensusMode::Binary ? Strategy::Binary : Strategy::Confidence};
  for (const auto& [g, w] : consensus.weights)
    if (train.count(g) && w > 0.0) nb.entries[g] += w;
  for (const auto& g : chains.front().semantic)
    if (train.count(g)) nb.entries[g] += 1.0;
  if (nb.entries.empty()) throw Error(ErrorCode::NoValidNeighbors, "no consensus or semantic gene in the training set");
  return nb;
}

/// First three training-set genes of chain 0's semantic list.
inline GeneList expert_seeds(const std::vector<HypothesisChain>& chains, const GeneSet& train) {
  GeneList seeds;
  if (chains.empty()) return seeds;
  for (const auto& g : chains.front().semantic) {
    if (train.count(g)) seeds.push_back(g);
    if (seeds.size() == 3) break;
  }
  return seeds;
}

// ---------------------------------------------------------------------------
// 3+2: three expert seeds plus the two training genes nearest their centroid

struct ThreePlusTwoDetail {
  WeightedNeighborhood neighborhood;
  Eigen::VectorXd centroid;
  GeneList geometric_neighbors;
};

inline ThreePlusTwoDetail three_plus_two_neighborhood(const GeneList& seeds, const EmbeddingMap& euclidean,
                                                      const GeneSet& train, const GeneSet& exclude = {}) {
  if (seeds.size() != 3 || to_set(seeds).size() != 3)
    throw Error(ErrorCode::SeedCountNot3, "got " + std::to_string(seeds.size()) + " seeds");
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(euclidean.dim);
  for (const auto& s : seeds) {
    const auto* e = euclidean.find(s);
    if (!e) throw Error(ErrorCode::InsufficientEmbeddedCandidates, "seed " + s.str() + " has no embedding");
    centroid += *e;
  }
  centroid /= 3.0;

  const GeneSet seed_set = to_set(seeds);
  std::vector<std::pair<double, GeneSymbol>> by_distance;
  for (const auto& g : train) {
    if (seed_set.count(g) || exclude.count(g)) continue;
    if (const auto* e = euclidean.find(g)) by_distance.emplace_back((*e - centroid).norm(), g);
  }
  if (by_distance.size() < 2)
    throw Error(ErrorCode::InsufficientEmbeddedCandidates, "need 2 embedded non-seed training genes");
  std::partial_sort(by_distance.begin(), by_distance.begin() + 2, by_distance.end());

  ThreePlusTwoDetail out;
  out.centroid = centroid;
  out.neighborhood.strategy = Strategy::ThreePlusTwo;
  for (const auto& s : seeds) out.neighborhood.entries[s] = 1.0;
  for (int i = 0; i < 2; ++i) {
    out.geometric_neighbors.push_back(by_distance[static_cast<std::size_t>(i)].second);
    out.neighborhood.entries[by_distance[static_cast<std::size_t>(i)].second] = 1.0;
  }
  return out;
}

inline ExpressionProfile predict_three_plus_two(const GeneList& seeds, const EmbeddingMap& euclidean,
                                                const GeneSet& train, const PerturbationDataset& dataset,
                                                const GeneSet& exclude = {}) {
  return predict(three_plus_two_neighborhood(seeds, euclidean, train, exclude).neighborhood, dataset);
}

// ---------------------------------------------------------------------------
// Harmonizer and Spectral: PPR reach from the seeds, hyperbolic density weights

struct ManifoldOptions {
  double alpha = 0.85;
  std::size_t top_k = 50;
  double percentile = 20.0;
};

struct ManifoldDetail {
  WeightedNeighborhood neighborhood;
  GeneList candidates;
  std::map<GeneSymbol, double> reach;      // PPR score per candidate
  std::map<GeneSymbol, double> distance;   // hyperbolic distance to the seed midpoint
  std::map<GeneSymbol, double> geometric;  // Gaussian density weight
  double sigma = 0.0;
  Eigen::VectorXd midpoint;
};

namespace detail {

inline ManifoldDetail manifold_weights(const GeneList& seeds, const PpiGraph& graph, const EmbeddingMap& poincare,
                                       const GeneSet& train, const GeneSymbol* query, const ManifoldOptions& opt) {
  GeneSet graph_seeds;
  for (const auto& s : seeds) {
    if (graph.contains(s)) graph_seeds.insert(s);
    else log::debug("seed " + s.str() + " not in interactome");
  }
  if (graph_seeds.empty()) throw Error(ErrorCode::SeedNotInGraph, "no expert seed is in the interactome");

  std::vector<PoincarePoint> seed_points;
  for (const auto& s : seeds)
    if (const auto* z = poincare.find(s)) seed_points.emplace_back(*z);
  if (seed_points.empty())
    throw Error(ErrorCode::InsufficientEmbeddedCandidates, "no expert seed has Poincare coordinates");

  const auto pr = personalized_pagerank(graph, graph_seeds, {opt.alpha});

  GeneSet exclude;
  for (const auto& g : graph.nodes())
    if (!train.count(g)) exclude.insert(g);
  if (query) exclude.insert(*query);

  ManifoldDetail out;
  out.candidates = top_reachable(pr, opt.top_k, exclude);
  for (const auto& s : seeds)
    if (std::find(out.candidates.begin(), out.candidates.end(), s) == out.candidates.end() && train.count(s))
      out.candidates.push_back(s);

  const PoincarePoint center = einstein_midpoint(seed_points);
  out.midpoint = center.coords();
  std::vector<double> pool_distances;
  for (const auto& g : out.candidates) {
    const auto* z = poincare.find(g);
    if (!z) {
      log::debug("candidate " + g.str() + " has no Poincare coordinates");
      continue;
    }
    const double d = poincare_distance(PoincarePoint(*z), center);
    out.distance[g] = d;
    auto it = pr.scores.find(g);
    out.reach[g] = it == pr.scores.end() ? 0.0 : it->second;
    pool_distances.push_back(d);
  }
  if (pool_distances.empty())
    throw Error(ErrorCode::NoValidNeighbors, "no reachable, embedded training gene");
  out.sigma = percentile_bandwidth(pool_distances, opt.percentile);
  for (const auto& [g, d] : out.distance) out.geometric[g] = gaussian_density_weight(d, out.sigma);
  return out;
}

}  // namespace detail

inline ManifoldDetail harmonizer_neighborhood(const GeneList& seeds, const PpiGraph& graph, const EmbeddingMap& poincare,
                                              const GeneSet& train, const GeneSymbol* query = nullptr,
                                              const ManifoldOptions& opt = {}) {
  auto out = detail::manifold_weights(seeds, graph, poincare, train, query, opt);
  out.neighborhood.strategy = Strategy::Harmonizer;
  for (const auto& [g, w] : out.geometric)
    if (w > 0.0) out.neighborhood.entries[g] = w;
  if (out.neighborhood.entries.empty()) throw Error(ErrorCode::ZeroTotalWeight, "harmonizer");
  return out;
}

/// Spectral gate: w_j = pr_j * w_geo_j, with the tighter default bandwidth.
inline ManifoldDetail spectral_neighborhood(const GeneList& seeds, const PpiGraph& graph, const EmbeddingMap& poincare,
                                            const GeneSet& train, const GeneSymbol* query = nullptr,
                                            ManifoldOptions opt = {0.85, 50, 15.0}) {
  auto out = detail::manifold_weights(seeds, graph, poincare, train, query, opt);
  out.neighborhood.strategy = Strategy::Spectral;
  for (const auto& [g, w] : out.geometric) {
    const double gated = out.reach.at(g) * w;
    if (gated > 0.0) out.neighborhood.entries[g] = gated;
  }
  if (out.neighborhood.entries.empty()) throw Error(ErrorCode::ZeroTotalWeight, "spectral gate removed every candidate");
  return out;
}

inline ExpressionProfile predict_harmonizer(const GeneList& seeds, const PpiGraph& graph, const EmbeddingMap& poincare,
                                            const GeneSet& train, const PerturbationDataset& dataset,
                                            const GeneSymbol* query = nullptr, const ManifoldOptions& opt = {}) {
  return predict(harmonizer_neighborhood(seeds, graph, poincare, train, query, opt).neighborhood, dataset);
}

inline ExpressionProfile predict_spectral(const GeneList& seeds, const PpiGraph& graph, const EmbeddingMap& poincare,
                                          const GeneSet& train, const PerturbationDataset& dataset,
                                          const GeneSymbol* query = nullptr, ManifoldOptions opt = {0.85, 50, 15.0}) {
  return predict(spectral_neighborhood(seeds, graph, poincare, train, query, opt).neighborhood, dataset);
}

// ---------------------------------------------------------------------------
// Strategy dispatch

struct PredictorParams {
  int min_votes = 1;
  double alpha = 0.85;
  std::size_t top_reachable = 50;
  double pct_harmonizer = 20.0;
  double pct_spectral = 15.0;
};

struct PredictionInputs {
  const PerturbationDataset* dataset = nullptr;
  const GeneSet* train = nullptr;
  const PpiGraph* graph = nullptr;
  const EmbeddingMap* euclidean = nullptr;
  const EmbeddingMap* poincare = nullptr;
  PredictorParams params;
};

struct Prediction {
  ExpressionProfile profile;
  WeightedNeighborhood neighborhood;
  Strategy requested = Strategy::Semantic;
  bool fell_back = false;
  std::string note;
};

inline json neighborhood_to_json(const WeightedNeighborhood& nb) {
  json w = json::object();
  for (const auto& [g, v] : nb.entries) w[g.str()] = v;
  return {{"strategy", std::string(to_string(nb.strategy))}, {"weights", w}};
}

/// Prediction for one query gene under `strategy`. Seed-based strategies fall
/// back to the semantic baseline when fewer than three expert seeds survive
/// or when the required graph/embedding inputs cannot place the seeds.
inline Prediction predict_target(Strategy strategy, const GeneSymbol& query, const std::vector<HypothesisChain>& chains,
                                 const PredictionInputs& in) {
  const auto& train = *in.train;
  const auto& p = in.params;
  Prediction out;
  out.requested = strategy;

  auto fallback = [&](const std::string& why) {
    log::warn(std::string(to_string(strategy)) + " for " + query.str() + " falls back to semantic: " + why);
    out.fell_back = true;
    out.note = why;
    out.neighborhood = build_semantic_neighborhood(chains, train);
  };

  switch (strategy) {
    case Strategy::Semantic:
      out.neighborhood = build_semantic_neighborhood(chains, train);
      break;
    case Strategy::Binary:
      out.neighborhood = build_mechpert_neighborhood(chains, ConsensusMode::Binary, train, p.min_votes);
      break;
    case Strategy::Confidence:
      out.neighborhood = build_mechpert_neighborhood(chains, ConsensusMode::Confidence, train, p.min_votes);
      break;
    case Strategy::ThreePlusTwo:
    case Strategy::Harmonizer:
    case Strategy::Spectral: {
      const auto seeds = expert_seeds(chains, train);
      if (seeds.size() < 3) {
        fallback("only " + std::to_string(seeds.size()) + " expert seeds in the training set");
        break;
      }
      try {
        if (strategy == Strategy::ThreePlusTwo) {
          if (!in.euclidean) throw Error(ErrorCode::InsufficientEmbeddedCandidates, "no Euclidean embeddings loaded");
          out.neighborhood = three_plus_two_neighborhood(seeds, *in.euclidean, train, {query}).neighborhood;
        } else {
          if (!in.graph || !in.poincare)
            throw Error(ErrorCode::InsufficientEmbeddedCandidates, "interactome and Poincare embeddings required");
          out.neighborhood =
              strategy == Strategy::Harmonizer
                  ? harmonizer_neighborhood(seeds, *in.graph, *in.poincare, train, &query,
                                            {p.alpha, p.top_reachable, p.pct_harmonizer})
                        .neighborhood
                  : spectral_neighborhood(seeds, *in.graph, *in.poincare, train, &query,
                                          {p.alpha, p.top_reachable, p.pct_spectral})
                        .neighborhood;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SeedNotInGraph && e.code() != ErrorCode::InsufficientEmbeddedCandidates) throw;
        fallback(e.what());
      }
      break;
    }
  }
  out.profile = predict(out.neighborhood, *in.dataset);
  return out;
}

}  // namespace mechpert
