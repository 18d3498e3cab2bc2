#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mechpert/consensus.hpp"
#include "mechpert/dataset.hpp"
#include "mechpert/graph.hpp"
#include "mechpert/heat_kernel.hpp"
#include "mechpert/hypothesis.hpp"
#include "mechpert/metrics.hpp"
#include "mechpert/rng.hpp"

namespace mechpert {

enum class AnchorStrategy { Random, Degree, SemanticLLM, Consensus };

inline constexpr AnchorStrategy kAllAnchorStrategies[] = {AnchorStrategy::Random, AnchorStrategy::Degree,
                                                          AnchorStrategy::SemanticLLM, AnchorStrategy::Consensus};

constexpr std::string_view to_string(AnchorStrategy s) noexcept {
  switch (s) {
    case AnchorStrategy::Random: return "random";
    case AnchorStrategy::Degree: return "degree";
    case AnchorStrategy::SemanticLLM: return "semantic";
    case AnchorStrategy::Consensus: return "consensus";
  }
  return "random";
}

constexpr std::string_view display_name(AnchorStrategy s) noexcept {
  switch (s) {
    case AnchorStrategy::Random: return "Random (Reference)";
    case AnchorStrategy::Degree: return "PPI Baseline";
    case AnchorStrategy::SemanticLLM: return "Semantic (LLM)";
    case AnchorStrategy::Consensus: return "MechPert (Consensus)";
  }
  return "";
}

inline AnchorStrategy parse_anchor_strategy(std::string_view name) {
  for (auto s : kAllAnchorStrategies)
    if (to_string(s) == name) return s;
  throw Error(ErrorCode::InvalidConfig, "unknown anchor strategy '" + std::string(name) + "'");
}

struct DesignRound {
  int round = 0;
  std::string prompt;
  std::vector<std::string> raw_responses;
  std::vector<GeneList> proposals;
  std::map<GeneSymbol, double> votes;
  GeneList selected;
  bool padded = false;
};

struct AnchorSet {
  GeneList anchors;
  AnchorStrategy strategy = AnchorStrategy::Random;
  std::vector<DesignRound> rounds;
  bool padded = false;
  std::string adjudication;
};

// ---------------------------------------------------------------------------
// Provider-free baselines

inline AnchorSet select_random(const GeneList& pool, std::size_t k, std::uint64_t seed) {
  if (k > pool.size())
    throw Error(ErrorCode::BudgetExceedsPool, std::to_string(k) + " > " + std::to_string(pool.size()));
  Xoshiro256 rng(derive_seed(seed, "anchors/random"));
  AnchorSet out;
  out.strategy = AnchorStrategy::Random;
  for (auto i : sample_indices(pool.size(), k, rng)) out.anchors.push_back(pool[i]);
  return out;
}

/// Pool genes by interactome degree; genes absent from the graph count as degree 0.
inline AnchorSet select_degree(const PpiGraph& graph, const GeneList& pool, std::size_t k) {
  std::map<GeneSymbol, double> degree;
  for (const auto& g : pool) {
    auto idx = graph.index_of(g);
    degree[g] = idx ? graph.degrees()[static_cast<Eigen::Index>(*idx)] : 0.0;
  }
  AnchorSet out;
  out.strategy = AnchorStrategy::Degree;
  out.anchors = rank_descending(degree, k);
  return out;
}

// ---------------------------------------------------------------------------
// Iterative provider-driven selection

struct DesignOptions {
  int batch = 10;
  int k_chains = 3;
  std::string context = "K562";
  std::string model_id = "default";
  double temperature = 0.7;
  std::size_t pool_sample = 400;
  std::uint64_t seed = 0;
};

namespace detail {

inline AnchorSet design_loop(const Provider& provider, const GeneList& pool, std::size_t k, const DesignOptions& opt,
                             int n_chains, AnchorStrategy strategy) {
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "anchor budget must be >= 1");
  if (opt.batch < 1) throw Error(ErrorCode::InvalidConfig, "batch must be >= 1");
  if (k > pool.size())
    throw Error(ErrorCode::BudgetExceedsPool, std::to_string(k) + " > " + std::to_string(pool.size()));
  const GeneSet pool_set = to_set(pool);

  AnchorSet out;
  out.strategy = strategy;
  out.adjudication = n_chains > 1 ? "vote-count over " + std::to_string(n_chains) + " chains, ties alphabetical"
                                  : "single chain, response order";
  GeneSet chosen;
  int zero_streak = 0;

  for (int round = 0; out.anchors.size() < k; ++round) {
    GeneList remaining;
    for (const auto& g : pool)
      if (!chosen.count(g)) remaining.push_back(g);

    GeneList sample = remaining;
    if (remaining.size() > opt.pool_sample) {
      Xoshiro256 rng(derive_seed(opt.seed, "anchors/pool-sample/" + std::to_string(round)));
      auto idx = sample_indices(remaining.size(), opt.pool_sample, rng);
      std::sort(idx.begin(), idx.end());
      sample.clear();
      for (auto i : idx) sample.push_back(remaining[i]);
    }

    DesignRound rec;
    rec.round = round;
    const Prompt prompt = render_design_prompt(opt.context, out.anchors, sample, opt.batch);
    rec.prompt = prompt.user;
    const std::size_t need = std::min<std::size_t>(static_cast<std::size_t>(opt.batch), k - out.anchors.size());

    int transport_failures = 0;
    for (int c = 0; c < n_chains; ++c) {
      ProviderRequest req;
      req.task = PromptTask::DesignSelect;
      req.system = prompt.system;
      req.prompt = prompt.user;
      req.temperature = opt.temperature;
      req.chain_index = c;
      req.model_id = opt.model_id;
      req.pool = sample;
      req.exclude = out.anchors;
      req.batch = opt.batch;
      std::string raw;
      bool transport = false;
      auto parsed = call_and_parse(
          provider, req, [&](std::string_view text) { return parse_design_response(text, pool_set); }, raw, transport);
      if (transport) {
        ++transport_failures;
        continue;
      }
      rec.raw_responses.push_back(raw);
      if (!parsed) continue;
      GeneList fresh;
      for (const auto& g : *parsed)
        if (!chosen.count(g)) fresh.push_back(g);
      rec.proposals.push_back(std::move(fresh));
    }
    if (transport_failures == n_chains)
      throw Error(ErrorCode::ProviderUnavailable, "anchor design round " + std::to_string(round));

    if (n_chains == 1) {
      if (!rec.proposals.empty())
        for (std::size_t i = 0; i < rec.proposals.front().size() && rec.selected.size() < need; ++i)
          rec.selected.push_back(rec.proposals.front()[i]);
    } else if (!rec.proposals.empty()) {
      const auto votes = vote_count(rec.proposals);
      rec.votes = votes.weights;
      if (!votes.weights.empty()) rec.selected = select_top_k(votes, need);
    }

    if (rec.selected.empty()) {
      ++zero_streak;
      if (zero_streak >= 2) {
        const std::size_t missing = k - out.anchors.size();
        auto pad = select_random(remaining, std::min(missing, remaining.size()),
                                 derive_seed(opt.seed, "anchors/pad/" + std::string(to_string(strategy))));
        rec.selected = pad.anchors;
        rec.padded = true;
        out.padded = true;
        log::warn("anchor design: provider yielded no new genes twice; padded " + std::to_string(pad.anchors.size()) +
                  " anchors at random");
      }
    } else {
      zero_streak = 0;
    }
    for (const auto& g : rec.selected)
      if (chosen.insert(g).second) out.anchors.push_back(g);
    const bool stop = rec.padded;
    out.rounds.push_back(std::move(rec));
    if (stop) break;
  }
  return out;
}

}  // namespace detail

/// Single-chain iterative selection: ceil(k/batch) rounds when the provider
/// keeps returning full batches.
inline AnchorSet select_llm_iterative(const Provider& provider, const GeneList& pool, std::size_t k,
                                      const DesignOptions& opt = {}) {
  return detail::design_loop(provider, pool, k, opt, 1, AnchorStrategy::SemanticLLM);
}

/// Per round, k_chains independent proposals are vote-counted and the
/// top-`batch` genes (ties alphabetical) are added.
inline AnchorSet select_consensus(const Provider& provider, const GeneList& pool, std::size_t k,
                                  const DesignOptions& opt = {}) {
  return detail::design_loop(provider, pool, k, opt, std::max(1, opt.k_chains), AnchorStrategy::Consensus);
}

// ---------------------------------------------------------------------------
// Downstream target mapping (informational)

enum class RegulatoryLogic { Activation, Repression };

struct TargetMapEntry {
  GeneList targets;
  double confidence = 0.0;
  RegulatoryLogic logic = RegulatoryLogic::Activation;
  std::string evidence_note;
};

using TargetMap = std::map<GeneSymbol, TargetMapEntry>;

inline TargetMap parse_target_map_response(std::string_view raw, const GeneSet& batch) {
  auto j = extract_json(raw);
  if (!j || !j->is_object()) throw Error(ErrorCode::UnparseableResponse, std::string(raw.substr(0, 200)));
  TargetMap out;
  for (const auto& [key, value] : j->items()) {
    auto reg = GeneSymbol::try_parse(key);
    if (!reg || !value.is_object()) continue;
    if (!batch.count(*reg)) {
      log::warn("target map: ignoring regulator outside the batch: " + reg->str());
      continue;
    }
    TargetMapEntry e;
    if (value.contains("targets") && value["targets"].is_array())
      for (const auto& t : value["targets"])
        if (t.is_string())
          if (auto g = GeneSymbol::try_parse(t.get<std::string>())) e.targets.push_back(*g);
    if (value.contains("confidence"))
      if (auto c = detail::as_number(value["confidence"]); c && !std::isnan(*c)) e.confidence = std::clamp(*c, 0.0, 1.0);
    if (value.contains("logic") && value["logic"].is_string()) {
      const auto logic = value["logic"].get<std::string>();
      if (logic == "Repression") e.logic = RegulatoryLogic::Repression;
      else if (logic != "Activation") log::warn("target map: unknown logic '" + logic + "', using Activation");
    }
    if (value.contains("evidence_note") && value["evidence_note"].is_string())
      e.evidence_note = value["evidence_note"].get<std::string>();
    out[*reg] = std::move(e);
  }
  return out;
}

inline TargetMap map_targets(const Provider& provider, const GeneList& regulators, std::size_t batch_size,
                             const DesignOptions& opt = {}) {
  TargetMap out;
  if (batch_size == 0) batch_size = 1;
  for (std::size_t start = 0; start < regulators.size(); start += batch_size) {
    GeneList batch(regulators.begin() + static_cast<std::ptrdiff_t>(start),
                   regulators.begin() + static_cast<std::ptrdiff_t>(std::min(regulators.size(), start + batch_size)));
    const Prompt prompt = render_target_map_prompt(batch);
    ProviderRequest req;
    req.task = PromptTask::TargetMap;
    req.prompt = prompt.user;
    req.temperature = opt.temperature;
    req.model_id = opt.model_id;
    req.pool = batch;
    try {
      const auto parsed = parse_target_map_response(provider.complete(req), to_set(batch));
      out.insert(parsed.begin(), parsed.end());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableResponse && e.code() != ErrorCode::ProviderTransport) throw;
      log::warn(std::string("target map batch skipped: ") + e.what());
    }
  }
  return out;
}

inline json target_map_to_json(const TargetMap& m) {
  json out = json::object();
  for (const auto& [g, e] : m)
    out[g.str()] = {{"targets", to_strings(e.targets)},
                    {"confidence", e.confidence},
                    {"logic", e.logic == RegulatoryLogic::Repression ? "Repression" : "Activation"},
                    {"evidence_note", e.evidence_note}};
  return out;
}

// ---------------------------------------------------------------------------
// Surrogate evaluation with the fixed heat-kernel interpolator

struct AnchorEvaluation {
  std::map<GeneSymbol, double> scores;
  std::map<GeneSymbol, std::string> skipped;  // target -> reason
  std::optional<MeanSem> summary;
  double beta = 1.0;
};

inline AnchorEvaluation evaluate_anchor_set(const GeneList& anchors, const PerturbationDataset& dataset,
                                            const HeatKernel& kernel, std::size_t metric_top_k = 20) {
  const auto& graph = kernel.graph();
  const GeneSet anchor_set = to_set(anchors);
  for (const auto& a : anchor_set) {
    if (!dataset.has_profile(a)) throw Error(ErrorCode::AnchorMissingProfile, a.str());
    if (!graph.contains(a)) throw Error(ErrorCode::AnchorNotInGraph, a.str());
  }
  AnchorEvaluation out;
  out.beta = kernel.beta();
  std::vector<double> values;
  for (const auto& [target, truth] : dataset.profiles()) {
    if (anchor_set.count(target) || !graph.contains(target)) continue;
    try {
      const auto pred = heat_kernel_interpolate(kernel, anchor_set, target, dataset);
      const double s = c20(pred, truth, dataset.readout_genes(), metric_top_k);
      out.scores[target] = s;
      values.push_back(s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroKernelMass && e.code() != ErrorCode::ConstantInput) throw;
      out.skipped[target] = std::string(to_string(e.code()));
    }
  }
  if (!values.empty()) out.summary = mean_sem(values);
  return out;
}

inline AnchorEvaluation evaluate_anchor_set(const GeneList& anchors, const PerturbationDataset& dataset,
                                            const PpiGraph& graph, double beta, std::size_t metric_top_k = 20) {
  return evaluate_anchor_set(anchors, dataset, HeatKernel(graph, beta), metric_top_k);
}

inline json anchor_set_to_json(const AnchorSet& s) {
  json rounds = json::array();
  for (const auto& r : s.rounds) {
    json proposals = json::array();
    for (const auto& p : r.proposals) proposals.push_back(to_strings(p));
    json votes = json::object();
    for (const auto& [g, v] : r.votes) votes[g.str()] = v;
    rounds.push_back({{"round", r.round},
                      {"prompt", r.prompt},
                      {"raw_responses", r.raw_responses},
                      {"proposals", proposals},
                      {"votes", votes},
                      {"selected", to_strings(r.selected)},
                      {"padded", r.padded}});
  }
  return {{"strategy", std::string(to_string(s.strategy))},
          {"anchors", to_strings(s.anchors)},
          {"padded", s.padded},
          {"adjudication", s.adjudication},
          {"rounds", rounds}};
}

inline AnchorSet anchor_set_from_json(const json& j) {
  AnchorSet s;
  s.strategy = parse_anchor_strategy(j.at("strategy").get<std::string>());
  for (const auto& g : j.at("anchors")) s.anchors.emplace_back(g.get<std::string>());
  s.padded = j.value("padded", false);
  s.adjudication = j.value("adjudication", std::string{});
  return s;
}

inline json anchor_evaluation_to_json(const AnchorEvaluation& e) {
  json per = json::object();
  for (const auto& [g, s] : e.scores) per[g.str()] = s;
  for (const auto& [g, why] : e.skipped) per[g.str()] = {{"skipped", why}};
  json out = {{"beta", e.beta},
              {"n_scored", e.scores.size()},
              {"n_skipped", e.skipped.size()},
              {"per_target", per}};
  out["mean"] = e.summary ? json(e.summary->mean) : json(nullptr);
  out["sem"] = e.summary ? json(e.summary->sem) : json(nullptr);
  return out;
}

}  // namespace mechpert
