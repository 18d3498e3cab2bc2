#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "mechpert/error.hpp"
#include "mechpert/gene.hpp"
#include "mechpert/hypothesis.hpp"

namespace mechpert {

enum class ConsensusMode { Binary, Confidence };

struct ConsensusResult {
  std::map<GeneSymbol, double> weights;
  std::map<GeneSymbol, int> votes;
  ConsensusMode mode = ConsensusMode::Confidence;
  int k_chains = 0;
};

/// w_r = sum over chains of 1[r proposed in chain i] * c_{i,r}; binary mode
/// fixes c at 1. Genes never proposed are absent from the map.
inline ConsensusResult aggregate(const std::vector<HypothesisChain>& chains, ConsensusMode mode) {
  if (chains.empty()) throw Error(ErrorCode::NoChains, "consensus over zero chains");
  ConsensusResult out;
  out.mode = mode;
  out.k_chains = static_cast<int>(chains.size());
  // Contributions are summed in sorted order so the result is bit-identical
  // under any permutation of the chains.
  std::map<GeneSymbol, std::vector<double>> terms;
  for (const auto& chain : chains)
    for (const auto& r : chain.causal) terms[r.gene].push_back(mode == ConsensusMode::Binary ? 1.0 : r.confidence);
  for (auto& [g, t] : terms) {
    std::sort(t.begin(), t.end());
    double w = 0.0;
    for (double c : t) w += c;
    out.weights[g] = w;
    out.votes[g] = static_cast<int>(t.size());
  }
  return out;
}

inline ConsensusResult aggregate_confidence(const std::vector<HypothesisChain>& chains) {
  return aggregate(chains, ConsensusMode::Confidence);
}

inline ConsensusResult aggregate_binary(const std::vector<HypothesisChain>& chains) {
  return aggregate(chains, ConsensusMode::Binary);
}

/// Drops genes proposed by fewer than `min_votes` chains.
inline ConsensusResult filter_min_votes(ConsensusResult result, int min_votes) {
  if (min_votes <= 1) return result;
  for (auto it = result.votes.begin(); it != result.votes.end();) {
    if (it->second < min_votes) {
      result.weights.erase(it->first);
      it = result.votes.erase(it);
    } else {
      ++it;
    }
  }
  return result;
}

/// Descending weight, ties by ascending symbol.
inline GeneList select_top_k(const ConsensusResult& result, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "select_top_k requires k >= 1");
  return rank_descending(result.weights, k);
}

/// Vote counting over plain gene lists (anchor-design rounds).
inline ConsensusResult vote_count(const std::vector<GeneList>& proposals) {
  ConsensusResult out;
  out.mode = ConsensusMode::Binary;
  out.k_chains = static_cast<int>(proposals.size());
  for (const auto& list : proposals) {
    GeneSet seen;
    for (const auto& g : list) {
      if (!seen.insert(g).second) continue;
      out.weights[g] += 1.0;
      out.votes[g] += 1;
    }
  }
  return out;
}

inline json consensus_to_json(const ConsensusResult& r) {
  json w = json::object();
  for (const auto& [g, v] : r.weights) w[g.str()] = v;
  return {{"mode", r.mode == ConsensusMode::Binary ? "binary" : "confidence"}, {"k_chains", r.k_chains}, {"weights", w}};
}

}  // namespace mechpert
