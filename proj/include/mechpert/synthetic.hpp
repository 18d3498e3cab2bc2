#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mechpert/dataset.hpp"
#include "mechpert/graph.hpp"
#include "mechpert/hypothesis.hpp"
#include "mechpert/rng.hpp"
#include "mechpert/tsv.hpp"

namespace mechpert {

/// Ground truth for the offline provider: who regulates whom, a literature
/// signature per gene (what similarity retrieval sees), and a regulatory-reach
/// score used when answering anchor-design prompts.
struct PlantedGrn {
  std::map<GeneSymbol, GeneList> regulators;
  std::map<GeneSymbol, Eigen::VectorXd> descriptors;
  std::map<GeneSymbol, double> reach;

  GeneList targets_of(const GeneSymbol& regulator) const {
    GeneList out;
    for (const auto& [g, regs] : regulators)
      if (std::find(regs.begin(), regs.end(), regulator) != regs.end()) out.push_back(g);
    return out;
  }
};

struct SyntheticAgentParams {
  double p_true = 0.8;
  double true_conf_mean = 0.8;
  double true_conf_sd = 0.1;
  double distractor_mean = 2.0;
  double distractor_conf_mean = 0.4;
  double distractor_conf_sd = 0.15;
  std::size_t semantic_k = 5;
};

namespace detail {

inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double denom = ca.norm() * cb.norm();
  return denom > 0.0 ? ca.dot(cb) / denom : 0.0;
}

}  // namespace detail

/// Deterministic stand-in for one agent chain. True in-pool regulators are
/// kept with probability p_true at high confidence; a Poisson number of
/// distractors is drawn uniformly from the other pool genes at low confidence.
/// The semantic set is the top-k pool genes by literature-signature correlation.
inline HypothesisChain synthetic_generate(const PlantedGrn& truth, const GeneSymbol& gene, const GeneSet& pool,
                                          std::uint64_t chain_seed, const SyntheticAgentParams& params = {}) {
  Xoshiro256 rng(chain_seed);
  HypothesisChain chain;

  GeneSet true_in_pool;
  if (auto it = truth.regulators.find(gene); it != truth.regulators.end())
    for (const auto& r : it->second)
      if (pool.count(r) && r != gene) true_in_pool.insert(r);

  for (const auto& r : true_in_pool) {
    if (!rng.bernoulli(params.p_true)) continue;
    const double c = std::clamp(rng.normal(params.true_conf_mean, params.true_conf_sd), 0.0, 1.0);
    chain.causal.push_back({r, c, Relation::TF});
  }

  GeneList others;
  for (const auto& g : pool)
    if (g != gene && !true_in_pool.count(g)) others.push_back(g);
  const unsigned n_distractors = rng.poisson(params.distractor_mean);
  for (auto idx : sample_indices(others.size(), n_distractors, rng)) {
    const double c = std::clamp(rng.normal(params.distractor_conf_mean, params.distractor_conf_sd), 0.0, 1.0);
    chain.causal.push_back({others[idx], c, Relation::Partner});
  }

  if (auto self = truth.descriptors.find(gene); self != truth.descriptors.end()) {
    std::map<GeneSymbol, double> sim;
    for (const auto& g : pool) {
      if (g == gene) continue;
      auto d = truth.descriptors.find(g);
      if (d != truth.descriptors.end()) sim[g] = detail::correlation(self->second, d->second);
    }
    chain.semantic = rank_descending(sim, params.semantic_k);
  }
  chain.semantic_ok = chain.causal_ok = true;
  return chain;
}

/// Offline provider backed by a planted GRN. Answers are a pure function of
/// (seed, request), so runs are reproducible without network access.
class SyntheticProvider : public Provider {
 public:
  SyntheticProvider(PlantedGrn truth, std::uint64_t seed, SyntheticAgentParams params = {})
      : truth_(std::move(truth)), seed_(seed), params_(params) {}

  std::string complete(const ProviderRequest& r) const override {
    switch (r.task) {
      case PromptTask::Semantic:
      case PromptTask::Causal: {
        const auto chain_seed = derive_seed(seed_, "chain/" + r.gene.str() + "/" + std::to_string(r.chain_index) +
                                                       "/" + std::to_string(r.attempt));
        auto chain = synthetic_generate(truth_, r.gene, to_set(r.pool), chain_seed, params_);
        return r.task == PromptTask::Semantic
                   ? format_semantic_response(chain.semantic, "literature similarity")
                   : format_causal_response(chain.causal, "planted regulators", "synthetic circuit");
      }
      case PromptTask::DesignSelect: return design_answer(r);
      case PromptTask::TargetMap: return target_map_answer(r);
    }
    return {};
  }

  std::string id() const override { return "synthetic(seed=" + std::to_string(seed_) + ")"; }

  const PlantedGrn& truth() const noexcept { return truth_; }

 private:
  std::string design_answer(const ProviderRequest& r) const {
    const GeneSet excluded = to_set(r.exclude);
    Xoshiro256 rng(derive_seed(seed_, "design/" + std::to_string(r.chain_index) + "/" +
                                          std::to_string(r.attempt) + "/" + join_symbols(r.exclude)));
    std::map<GeneSymbol, double> score;
    for (const auto& g : r.pool) {
      if (excluded.count(g)) continue;
      auto it = truth_.reach.find(g);
      const double base = it == truth_.reach.end() ? 0.0 : it->second;
      score[g] = base + rng.normal(0.0, 0.5);
    }
    return json(to_strings(rank_descending(score, static_cast<std::size_t>(std::max(r.batch, 0))))).dump();
  }

  std::string target_map_answer(const ProviderRequest& r) const {
    static constexpr double kTiers[] = {1.0, 0.7, 0.4};
    json out = json::object();
    for (const auto& g : r.pool) {
      const auto tier = derive_seed(seed_, "tier/" + g.str()) % 3;
      out[g.str()] = {{"targets", to_strings(truth_.targets_of(g))},
                      {"confidence", kTiers[tier]},
                      {"logic", "Activation"},
                      {"evidence_note", "planted edge"}};
    }
    return out.dump();
  }

  PlantedGrn truth_;
  std::uint64_t seed_;
  SyntheticAgentParams params_;
};

// ---------------------------------------------------------------------------
// Planted GRN persistence

inline json planted_grn_to_json(const PlantedGrn& grn) {
  json genes_json = json::object();
  for (const auto& [g, regs] : grn.regulators) genes_json[g.str()]["regulators"] = to_strings(regs);
  for (const auto& [g, d] : grn.descriptors)
    genes_json[g.str()]["descriptor"] = std::vector<double>(d.data(), d.data() + d.size());
  for (const auto& [g, r] : grn.reach) genes_json[g.str()]["reach"] = r;
  return {{"genes", genes_json}};
}

inline PlantedGrn planted_grn_from_json(const json& j) {
  PlantedGrn grn;
  if (!j.is_object() || !j.contains("genes") || !j["genes"].is_object())
    throw Error(ErrorCode::MalformedRow, "planted GRN: missing 'genes' object");
  for (const auto& [name, entry] : j["genes"].items()) {
    GeneSymbol g(name);
    if (entry.contains("regulators"))
      for (const auto& r : entry["regulators"]) grn.regulators[g].emplace_back(r.get<std::string>());
    if (entry.contains("descriptor")) {
      auto v = entry["descriptor"].get<std::vector<double>>();
      grn.descriptors[g] = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (entry.contains("reach")) grn.reach[g] = entry["reach"].get<double>();
  }
  return grn;
}

inline PlantedGrn load_planted_grn(const std::filesystem::path& path) {
  return planted_grn_from_json(json::parse(tsv::read_all(path)));
}

// ---------------------------------------------------------------------------
// Synthetic world

struct SyntheticWorldParams {
  std::size_t n_genes = 100;
  std::size_t n_modules = 10;
  std::size_t regulators_per_gene = 4;
  double profile_noise = 0.8;
  double module_signal = 0.6;     // weight of the true module in literature signatures
  double cocitation_signal = 0.8;  // weight of an unrelated co-citation family
  std::size_t descriptor_dim = 16;
  std::size_t embedding_dim = 8;
};

struct SyntheticWorld {
  PerturbationDataset dataset;
  PpiGraph graph;
  std::vector<Edge> raw_edges;  // STRING-scale scores in weight*1000, including sub-threshold ones
  PlantedGrn grn;
  EmbeddingMap euclidean;
  EmbeddingMap poincare;
  std::map<GeneSymbol, std::size_t> module_of;
};

/// Low-frequency eigenvectors of the normalized Laplacian as node coordinates
/// (signs fixed so the largest-magnitude entry is positive). A deterministic
/// stand-in for trained embeddings.
inline EmbeddingMap spectral_embedding(const PpiGraph& graph, int dim) {
  const Eigen::MatrixXd l = Eigen::MatrixXd(laplacian(graph));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l);
  const auto n = static_cast<Eigen::Index>(graph.size());
  const Eigen::Index cols = std::min<Eigen::Index>(dim, std::max<Eigen::Index>(n - 1, 0));
  Eigen::MatrixXd v = eig.eigenvectors().middleCols(n > 1 ? 1 : 0, cols);
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0) v.col(c) *= -1.0;
  }
  EmbeddingMap out{Geometry::Euclidean, dim, {}};
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(dim);
    row.head(v.cols()) = v.row(i).transpose() * std::sqrt(static_cast<double>(n));
    out.vectors[graph.nodes()[static_cast<std::size_t>(i)]] = row;
  }
  return out;
}

/// Radial squashing into the ball: r -> 0.95 * tanh(r / scale).
inline EmbeddingMap to_poincare(const EmbeddingMap& euclidean, double scale = 2.0) {
  EmbeddingMap out{Geometry::Poincare, euclidean.dim, {}};
  for (const auto& [g, v] : euclidean.vectors) {
    const double r = v.norm();
    out.vectors[g] = r > 0.0 ? Eigen::VectorXd(v * (0.95 * std::tanh(r / scale) / r)) : v;
  }
  return out;
}

inline SyntheticWorld make_synthetic_world(std::uint64_t seed, const SyntheticWorldParams& p = {}) {
  Xoshiro256 rng(derive_seed(seed, "synthetic-world"));
  SyntheticWorld w;

  GeneList gene_list;
  for (std::size_t i = 0; i < p.n_genes; ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "SYN%03zu", i + 1);
    gene_list.emplace_back(name);
  }
  const auto d = static_cast<Eigen::Index>(p.n_genes);

  std::vector<std::size_t> family(p.n_genes);
  {
    auto perm = sample_indices(p.n_genes, p.n_genes, rng);
    for (std::size_t i = 0; i < p.n_genes; ++i) family[perm[i]] = i % p.n_modules;
  }
  std::vector<GeneList> members(p.n_modules);
  for (std::size_t i = 0; i < p.n_genes; ++i) {
    w.module_of[gene_list[i]] = i % p.n_modules;
    members[i % p.n_modules].push_back(gene_list[i]);
  }

  auto gaussian_vector = [&](Eigen::Index n, double sd) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal(0.0, sd);
    return v;
  };

  std::vector<Eigen::VectorXd> module_effect, module_latent, family_latent;
  for (std::size_t m = 0; m < p.n_modules; ++m) {
    module_effect.push_back(gaussian_vector(d, 1.0));
    module_latent.push_back(gaussian_vector(static_cast<Eigen::Index>(p.descriptor_dim), 1.0));
    family_latent.push_back(gaussian_vector(static_cast<Eigen::Index>(p.descriptor_dim), 1.0));
  }

  std::map<GeneSymbol, ExpressionProfile> profiles;
  for (std::size_t i = 0; i < p.n_genes; ++i) {
    const auto& g = gene_list[i];
    const auto m = i % p.n_modules;
    const double strength = 1.0 + rng.normal(0.0, 0.2);
    profiles[g] = strength * module_effect[m] + gaussian_vector(d, p.profile_noise);
    w.grn.descriptors[g] = p.module_signal * module_latent[m] + p.cocitation_signal * family_latent[family[i]] +
                           gaussian_vector(static_cast<Eigen::Index>(p.descriptor_dim), 0.3);

    GeneList mates;
    for (const auto& o : members[m])
      if (o != g) mates.push_back(o);
    GeneList regs;
    for (auto idx : sample_indices(mates.size(), p.regulators_per_gene, rng)) regs.push_back(mates[idx]);
    std::sort(regs.begin(), regs.end());
    w.grn.regulators[g] = regs;
  }
  for (const auto& g : gene_list) w.grn.reach[g] = 0.0;
  for (const auto& [g, regs] : w.grn.regulators)
    for (const auto& r : regs) w.grn.reach[r] += 1.0;

  w.dataset = PerturbationDataset(gene_list, std::move(profiles), {"SYNTHETIC", "synthetic:" + std::to_string(seed)});

  auto score = [&](double lo, double hi) { return std::floor(lo + (hi - lo) * rng.uniform()); };
  for (std::size_t i = 0; i < p.n_genes; ++i) {
    for (std::size_t j = i + 1; j < p.n_genes; ++j) {
      const bool same = (i % p.n_modules) == (j % p.n_modules);
      if (same && rng.bernoulli(0.45)) w.raw_edges.push_back({gene_list[i], gene_list[j], score(700, 1000) / 1000.0});
      else if (!same && rng.bernoulli(0.01)) w.raw_edges.push_back({gene_list[i], gene_list[j], score(700, 1000) / 1000.0});
      else if (rng.bernoulli(0.03)) w.raw_edges.push_back({gene_list[i], gene_list[j], score(150, 700) / 1000.0});
    }
  }
  std::vector<Edge> kept;
  for (const auto& e : w.raw_edges)
    if (e.weight * 1000.0 >= kDefaultMinScore) kept.push_back(e);
  w.graph = PpiGraph::from_edges(kept);
  w.euclidean = spectral_embedding(w.graph, static_cast<int>(p.embedding_dim));
  w.poincare = to_poincare(w.euclidean);
  return w;
}

inline std::string format_raw_edges(const std::vector<Edge>& edges) {
  std::string out = "gene_a\tgene_b\tcombined_score\n";
  for (const auto& e : edges)
    out += e.a.str() + "\t" + e.b.str() + "\t" + tsv::format_double(std::round(e.weight * 1000.0)) + "\n";
  return out;
}

}  // namespace mechpert
