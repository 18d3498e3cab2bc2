#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mechpert/error.hpp"
#include "mechpert/gene.hpp"
#include "mechpert/log.hpp"

namespace mechpert {

using json = nlohmann::json;

enum class Relation { TF, Target, Partner };

constexpr std::string_view to_string(Relation r) noexcept {
  switch (r) {
    case Relation::TF: return "TF";
    case Relation::Target: return "Target";
    case Relation::Partner: return "Partner";
  }
  return "Partner";
}

struct RegulatorHypothesis {
  GeneSymbol gene;
  double confidence = 0.0;  // [0, 1]
  Relation relation = Relation::Partner;

  friend bool operator==(const RegulatorHypothesis&, const RegulatorHypothesis&) = default;
};

struct HypothesisChain {
  int chain_index = 0;
  GeneList semantic;
  std::vector<RegulatorHypothesis> causal;
  std::string reasoning;
  std::string raw_semantic;
  std::string raw_causal;
  bool semantic_ok = false;
  bool causal_ok = false;

  bool empty() const noexcept { return semantic.empty() && causal.empty(); }
};

enum class PromptTask { Semantic, Causal, DesignSelect, TargetMap };

constexpr std::string_view to_string(PromptTask t) noexcept {
  switch (t) {
    case PromptTask::Semantic: return "semantic";
    case PromptTask::Causal: return "causal";
    case PromptTask::DesignSelect: return "design_select";
    case PromptTask::TargetMap: return "target_map";
  }
  return "semantic";
}

struct Prompt {
  std::string system;
  std::string user;
};

/// One provider call. `system`, `prompt`, `temperature`, `chain_index` and
/// `model_id` define the request; the remaining fields are structured hints
/// that offline providers read instead of parsing prompt text.
struct ProviderRequest {
  std::string system;
  std::string prompt;
  double temperature = 0.7;
  int chain_index = 0;
  std::string model_id;
  int attempt = 0;

  PromptTask task = PromptTask::Semantic;
  GeneSymbol gene;
  GeneList pool;
  GeneList exclude;
  int batch = 10;
};

/// complete() must be safe to call concurrently. Transport-level failures are
/// reported by throwing Error(ErrorCode::ProviderTransport, ...).
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(const ProviderRequest& request) const = 0;
  virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Prompt rendering

inline std::string join_symbols(const GeneList& genes, std::string_view empty_text = "(none)") {
  if (genes.empty()) return std::string(empty_text);
  std::string out;
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (i) out += ", ";
    out += genes[i].str();
  }
  return out;
}

inline Prompt render_semantic_prompt(const GeneSymbol& gene, const GeneList& pool, std::string_view context,
                                     std::string_view k_range = "5") {
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "semantic prompt for " + gene.str());
  Prompt p;
  p.system =
      "You are a Lead Computational Biologist. Your task is to perform an analogous function mapping for "
      "gene perturbations. You must ground your similarity assessments in high-confidence mechanistic "
      "evidence, prioritizing genes that occupy identical transcriptomic manifolds or pathway positions. "
      "Respond strictly in valid JSON.";
  std::ostringstream u;
  u << "Instruction: Identify " << k_range << " functional neighbors for the target gene " << gene.str() << ".\n\n"
    << "Available Candidates: " << join_symbols(pool) << "\n\n"
    << "Chain-of-Thought Protocol:\n"
    << "1. Profile Analysis: Define the metabolic/signaling role of " << gene.str() << " in the " << context << ".\n"
    << "2. Pathway Alignment: For each top-ranked candidate, identify the specific shared interaction "
       "(e.g., membership in the same protein complex or signaling cascade).\n"
    << "3. Adjudication: Rank neighbors based on the depth of the mechanistic link.\n\n"
    << "Output Format (JSON): {\"reasoning\": {... }, \"kNN\": [\"G1\", \"G2\", ...]}\n";
  p.user = u.str();
  return p;
}

inline Prompt render_causal_prompt(const GeneSymbol& gene, const GeneList& pool, std::string_view context) {
  if (pool.empty()) throw Error(ErrorCode::EmptyPool, "causal prompt for " + gene.str());
  Prompt p;
  p.system =
      "You are a Molecular Systems Geneticist. Your objective is not general similarity, but the "
      "identification of the Mechanical Drivers of a gene's perturbation profile. Priority: Transcription "
      "Factors (TFs), downstream targets, or obligate complex partners.";
  std::ostringstream u;
  u << "Task: Map the regulatory hierarchy of " << gene.str() << " in " << context << ".\n\n"
    << "Candidate Pool: " << join_symbols(pool) << "\n\n"
    << "Hierarchical Search Logic:\n"
    << "1. Upstream: Identify TFs from the pool that directly regulate " << gene.str() << ".\n"
    << "2. Downstream: Identify primary targets of " << gene.str() << " (if it is a TF/signaling node).\n"
    << "3. Complexation: Identify proteins that form stable, non-redundant complexes with the target.\n\n"
    << "Output Format (JSON):\n"
    << "{\n"
    << "  \"regulators\": [\n"
    << "    {\"gene\": \"SYMB\", \"confidence\": 0-100, \"type\": \"TF/Target/Partner\"}\n"
    << "  ],\n"
    << "  \"reasoning\": \"...\",\n"
    << "  \"mechanism\": \"Brief description of the circuit.\"\n"
    << "}\n";
  p.user = u.str();
  return p;
}

inline Prompt render_design_prompt(std::string_view cell_line, const GeneList& perturbed,
                                   const GeneList& pool_sample, int batch = 10) {
  if (pool_sample.empty()) throw Error(ErrorCode::EmptyPool, "design prompt");
  std::ostringstream u;
  u << "Context: Active discovery of the " << cell_line << " regulatory network.\n"
    << "Objective: Select the next " << batch << " most informative \"Master Regulators\" to perturb.\n"
    << "Iterative Constraints:\n"
    << "1. Novelty: Prioritize genes not in the already perturbed set: " << join_symbols(perturbed, "[]") << ".\n"
    << "2. Regulatory Reach: Select nodes predicted to have maximum transcriptomic impact (>50k targets).\n"
    << "3. Exclusivity: You MUST select ONLY from the available pool: " << join_symbols(pool_sample) << "...\n"
    << "Return strictly a valid JSON array of " << batch << " gene symbols: [\"REG1\", \"REG2\", ..., \"REG"
    << batch << "\"]\n";
  return {std::string{}, u.str()};
}

inline Prompt render_target_map_prompt(const GeneList& batch) {
  std::ostringstream u;
  u << "Map the primary downstream targets for the candidates: " << join_symbols(batch) << ".\n"
    << "Requirement: For each regulator, provide a confidence interval grounded in literature "
       "(ChIP-seq, Perturb-seq, RNA-seq).\n"
    << "Confidence Calibration:\n"
    << "1.0 (Direct cell-type specific evidence); 0.7 (Lineage-wide evidence); 0.4 (Computational/Motif "
       "prediction only).\n"
    << "Output Format (JSON):\n"
    << "{\n"
    << "  \"REGULATOR_X\": {\n"
    << "    \"targets\": [\"T1\", \"T2\"],\n"
    << "    \"confidence\": 0.9,\n"
    << "    \"logic\": \"Repression/Activation\",\n"
    << "    \"evidence_note\": \"A summary of the supporting literature.\"\n"
    << "  }\n"
    << "}\n";
  return {std::string{}, u.str()};
}

// ---------------------------------------------------------------------------
// Structured output extraction

/// Accepts the whole response as JSON, or else the first fenced code block.
inline std::optional<json> extract_json(std::string_view raw) {
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  };
  auto try_parse = [](std::string_view s) -> std::optional<json> {
    if (s.empty()) return std::nullopt;
    json j = json::parse(s.begin(), s.end(), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(trim(raw))) return j;

  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = raw.find('\n', open + 3);
  if (body_start == std::string_view::npos) return std::nullopt;
  const auto close = raw.find("```", body_start + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return try_parse(trim(raw.substr(body_start + 1, close - body_start - 1)));
}

namespace detail {

inline std::optional<GeneSymbol> pool_member(const json& item, const GeneSet& pool, std::string_view where) {
  if (!item.is_string()) {
    log::warn(std::string(where) + ": ignoring non-string entry " + item.dump());
    return std::nullopt;
  }
  auto g = GeneSymbol::try_parse(item.get<std::string>());
  if (!g) {
    log::warn(std::string(where) + ": ignoring malformed symbol " + item.dump());
    return std::nullopt;
  }
  if (!pool.count(*g)) {
    log::warn(std::string(where) + ": dropping out-of-pool gene " + g->str());
    return std::nullopt;
  }
  return g;
}

inline std::optional<double> as_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const auto s = v.get<std::string>();
      double x = std::stod(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

inline std::string reasoning_text(const json& obj) {
  if (!obj.is_object() || !obj.contains("reasoning")) return {};
  const auto& r = obj["reasoning"];
  return r.is_string() ? r.get<std::string>() : r.dump();
}

}  // namespace detail

/// Genes from the "kNN" array that belong to `pool`, deduplicated in first-seen order.
inline GeneList parse_semantic_response(std::string_view raw, const GeneSet& pool) {
  auto j = extract_json(raw);
  if (!j || !j->is_object() || !j->contains("kNN") || !(*j)["kNN"].is_array())
    throw Error(ErrorCode::UnparseableResponse, std::string(raw.substr(0, 200)));
  GeneList out;
  GeneSet seen;
  for (const auto& item : (*j)["kNN"]) {
    auto g = detail::pool_member(item, pool, "semantic response");
    if (g && seen.insert(*g).second) out.push_back(*g);
  }
  return out;
}

inline Relation parse_relation(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "tf") return Relation::TF;
  if (t == "target") return Relation::Target;
  if (t == "partner") return Relation::Partner;
  log::warn("unknown regulator type '" + std::string(text) + "', using Partner");
  return Relation::Partner;
}

/// Regulators with confidence rescaled from 0-100 to [0,1] (clamped).
inline std::vector<RegulatorHypothesis> parse_causal_response(std::string_view raw, const GeneSet& pool) {
  auto j = extract_json(raw);
  if (!j || !j->is_object() || !j->contains("regulators") || !(*j)["regulators"].is_array())
    throw Error(ErrorCode::UnparseableResponse, std::string(raw.substr(0, 200)));
  std::vector<RegulatorHypothesis> out;
  GeneSet seen;
  for (const auto& item : (*j)["regulators"]) {
    if (!item.is_object() || !item.contains("gene")) {
      log::warn("causal response: skipping malformed regulator " + item.dump());
      continue;
    }
    auto g = detail::pool_member(item["gene"], pool, "causal response");
    if (!g) continue;
    auto conf = item.contains("confidence") ? detail::as_number(item["confidence"]) : std::nullopt;
    if (!conf || std::isnan(*conf)) {
      log::warn("causal response: regulator " + g->str() + " has no usable confidence");
      continue;
    }
    if (!seen.insert(*g).second) continue;
    Relation rel = Relation::Partner;
    if (item.contains("type") && item["type"].is_string()) rel = parse_relation(item["type"].get<std::string>());
    else log::warn("causal response: regulator " + g->str() + " has no type, using Partner");
    out.push_back({*g, std::clamp(*conf, 0.0, 100.0) / 100.0, rel});
  }
  return out;
}

/// A JSON array of symbols (or an object wrapping one); pool filter and dedup as above.
inline GeneList parse_design_response(std::string_view raw, const GeneSet& pool) {
  auto j = extract_json(raw);
  if (j && j->is_object()) {
    for (auto& [key, value] : j->items())
      if (value.is_array()) {
        j = value;
        break;
      }
  }
  if (!j || !j->is_array()) throw Error(ErrorCode::UnparseableResponse, std::string(raw.substr(0, 200)));
  GeneList out;
  GeneSet seen;
  for (const auto& item : *j) {
    auto g = detail::pool_member(item, pool, "design response");
    if (g && seen.insert(*g).second) out.push_back(*g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical response formatting (offline providers and round-trip checks)

inline std::string format_semantic_response(const GeneList& knn, std::string_view reasoning = "") {
  json j;
  j["reasoning"] = json::object();
  if (!reasoning.empty()) j["reasoning"]["summary"] = reasoning;
  j["kNN"] = to_strings(knn);
  return j.dump();
}

inline std::string format_causal_response(const std::vector<RegulatorHypothesis>& regs,
                                          std::string_view reasoning = "", std::string_view mechanism = "") {
  json j;
  j["regulators"] = json::array();
  for (const auto& r : regs) {
    // Confidence travels on the 0-100 prompt scale.
    j["regulators"].push_back({{"gene", r.gene.str()}, {"confidence", r.confidence * 100.0},
                               {"type", std::string(to_string(r.relation))}});
  }
  j["reasoning"] = std::string(reasoning);
  j["mechanism"] = std::string(mechanism);
  return j.dump();
}

// ---------------------------------------------------------------------------
// Chain execution

struct ChainOptions {
  int k_chains = 3;
  double temperature = 0.7;
  std::string k_range = "5";
  std::string context = "the cell line of interest";
  std::string model_id = "default";
};

namespace detail {

struct CallOutcome {
  std::string raw;
  bool transport_failed = false;
};

inline CallOutcome call_provider(const Provider& provider, ProviderRequest request) {
  try {
    return {provider.complete(request), false};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProviderTransport) throw;
    log::warn(std::string("provider transport failure: ") + e.what());
    return {{}, true};
  }
}

/// Calls the provider, retrying once on an unparseable response. Returns the
/// parsed value or nullopt, plus the last raw text seen.
template <typename Parse>
auto call_and_parse(const Provider& provider, ProviderRequest request, Parse parse, std::string& raw_out,
                    bool& transport_failed) -> std::optional<decltype(parse(std::string_view{}))> {
  for (int attempt = 0; attempt < 2; ++attempt) {
    request.attempt = attempt;
    auto outcome = call_provider(provider, request);
    if (outcome.transport_failed) {
      transport_failed = true;
      return std::nullopt;
    }
    raw_out = outcome.raw;
    try {
      return parse(raw_out);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnparseableResponse) throw;
      log::warn("unparseable " + std::string(to_string(request.task)) + " response for " + request.gene.str() +
                " (chain " + std::to_string(request.chain_index) + ", attempt " + std::to_string(attempt) + ")");
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Runs `k_chains` independent semantic + causal request pairs. A half whose
/// response stays unparseable after one retry is left empty; if every call
/// fails at the transport level the whole run is ProviderUnavailable.
inline std::vector<HypothesisChain> run_chains(const Provider& provider, const GeneSymbol& gene, const GeneList& pool,
                                               const ChainOptions& options = {}) {
  if (options.k_chains < 1) throw Error(ErrorCode::InvalidConfig, "k_chains must be >= 1");
  const GeneSet pool_set(pool.begin(), pool.end());
  const Prompt semantic_prompt = render_semantic_prompt(gene, pool, options.context, options.k_range);
  const Prompt causal_prompt = render_causal_prompt(gene, pool, options.context);

  struct Outcome {
    HypothesisChain chain;
    int transport_failures = 0;
  };

  auto run_one = [&](int index) {
    Outcome out;
    out.chain.chain_index = index;
    ProviderRequest base;
    base.temperature = options.temperature;
    base.chain_index = index;
    base.model_id = options.model_id;
    base.gene = gene;
    base.pool = pool;

    ProviderRequest sem = base;
    sem.task = PromptTask::Semantic;
    sem.system = semantic_prompt.system;
    sem.prompt = semantic_prompt.user;
    bool sem_transport = false;
    std::string sem_reasoning;
    auto semantic = detail::call_and_parse(
        provider, sem,
        [&](std::string_view raw) {
          auto genes_out = parse_semantic_response(raw, pool_set);
          if (auto j = extract_json(raw)) sem_reasoning = detail::reasoning_text(*j);
          return genes_out;
        },
        out.chain.raw_semantic, sem_transport);

    ProviderRequest cau = base;
    cau.task = PromptTask::Causal;
    cau.system = causal_prompt.system;
    cau.prompt = causal_prompt.user;
    bool cau_transport = false;
    std::string cau_reasoning;
    auto causal = detail::call_and_parse(
        provider, cau,
        [&](std::string_view raw) {
          auto regs = parse_causal_response(raw, pool_set);
          if (auto j = extract_json(raw)) cau_reasoning = detail::reasoning_text(*j);
          return regs;
        },
        out.chain.raw_causal, cau_transport);

    if (semantic) {
      out.chain.semantic = std::move(*semantic);
      out.chain.semantic_ok = true;
    }
    if (causal) {
      out.chain.causal = std::move(*causal);
      out.chain.causal_ok = true;
    }
    out.chain.reasoning = cau_reasoning.empty() ? sem_reasoning : cau_reasoning;
    out.transport_failures = int(sem_transport) + int(cau_transport);
    return out;
  };

  std::vector<std::future<Outcome>> futures;
  futures.reserve(static_cast<std::size_t>(options.k_chains));
  for (int i = 0; i < options.k_chains; ++i) futures.push_back(std::async(std::launch::async, run_one, i));

  std::vector<HypothesisChain> chains;
  int transport_failures = 0;
  for (auto& f : futures) {
    auto outcome = f.get();
    transport_failures += outcome.transport_failures;
    chains.push_back(std::move(outcome.chain));
  }
  if (transport_failures == 2 * options.k_chains)
    throw Error(ErrorCode::ProviderUnavailable, "all chains failed for " + gene.str());
  return chains;
}

inline json chain_to_json(const HypothesisChain& c) {
  json regs = json::array();
  for (const auto& r : c.causal)
    regs.push_back({{"gene", r.gene.str()}, {"confidence", r.confidence}, {"type", std::string(to_string(r.relation))}});
  return {{"chain_index", c.chain_index},
          {"semantic", to_strings(c.semantic)},
          {"causal", regs},
          {"semantic_ok", c.semantic_ok},
          {"causal_ok", c.causal_ok},
          {"reasoning", c.reasoning},
          {"raw_semantic", c.raw_semantic},
          {"raw_causal", c.raw_causal}};
}

}  // namespace mechpert
