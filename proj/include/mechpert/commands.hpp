#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "mechpert/active_design.hpp"
#include "mechpert/cache.hpp"
#include "mechpert/config.hpp"
#include "mechpert/evaluation.hpp"
#include "mechpert/http_provider.hpp"
#include "mechpert/synthetic.hpp"

namespace mechpert {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitConfig = 2, kExitPrediction = 3, kExitTransport = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ProviderTransport:
    case ErrorCode::ProviderUnavailable: return kExitTransport;
    case ErrorCode::InvalidConfig:
    case ErrorCode::MissingFile:
    case ErrorCode::MalformedRow:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::DuplicatePerturbation:
    case ErrorCode::ScoreOutOfRange:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::PoincareNormViolation:
    case ErrorCode::NTooLarge:
    case ErrorCode::BudgetExceedsPool:
    case ErrorCode::AnchorMissingProfile:
    case ErrorCode::AnchorNotInGraph:
    case ErrorCode::CacheCorrupt: return kExitConfig;
    default: return kExitPrediction;
  }
}

/// Runs a command body, mapping errors to exit codes with a one-line message.
inline int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::fprintf(stderr, "mechpert: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mechpert: internal error: %s\n", e.what());
    return kExitInternal;
  }
}

inline void apply_log_level(const std::string& level) {
  if (level == "debug") log::set_level(log::Level::Debug);
  else if (level == "info") log::set_level(log::Level::Info);
  else if (level == "quiet") log::set_level(log::Level::Quiet);
  else log::set_level(log::Level::Warn);
}

// ---------------------------------------------------------------------------
// Inputs

struct Workspace {
  RunConfig config;
  std::optional<PerturbationDataset> dataset;
  std::optional<PpiGraph> graph;
  std::optional<EmbeddingMap> euclidean;
  std::optional<EmbeddingMap> poincare;
  std::shared_ptr<const Provider> provider;

  const PpiGraph* graph_ptr() const { return graph ? &*graph : nullptr; }
  const EmbeddingMap* euclidean_ptr() const { return euclidean ? &*euclidean : nullptr; }
  const EmbeddingMap* poincare_ptr() const { return poincare ? &*poincare : nullptr; }
  std::string context() const {
    if (!config.context.empty()) return config.context;
    return config.cell_line.empty() ? std::string("the cell line of interest") : config.cell_line;
  }
};

inline HttpProviderSettings http_settings(const RunConfig& c) {
  if (c.http_url.empty()) throw Error(ErrorCode::InvalidConfig, "http provider needs http_url");
  HttpProviderSettings s;
  s.url = c.http_url;
  s.model = c.model_id;
  s.style = parse_body_style(c.http_style);
  s.model_field = c.http_model_field;
  s.prompt_field = c.http_prompt_field;
  s.messages_field = c.http_messages_field;
  s.system_field = c.http_system_field;
  s.temperature_field = c.http_temperature_field;
  s.response_pointer = c.http_response_pointer;
  s.api_key_env = c.api_key_env;
  s.timeout_seconds = c.http_timeout;
  return s;
}

inline std::shared_ptr<const Provider> make_backend(const RunConfig& c, const std::string& kind) {
  if (kind == "http") return std::make_shared<HttpProvider>(http_settings(c));
  if (kind == "synthetic") {
    if (c.grn_path.empty()) throw Error(ErrorCode::InvalidConfig, "synthetic provider needs grn_path");
    return std::make_shared<SyntheticProvider>(load_planted_grn(c.grn_path), c.synthetic_seed);
  }
  return nullptr;
}

inline std::shared_ptr<const Provider> make_provider(const RunConfig& c) {
  if (c.provider != "cache") return make_backend(c, c.provider);
  if (c.cache_dir.empty()) throw Error(ErrorCode::InvalidConfig, "cache provider needs cache_dir");
  return std::make_shared<CachingProvider>(c.cache_dir, make_backend(c, c.cache_backend));
}

struct Needs {
  bool dataset = true;
  bool graph = false;
  bool embeddings = false;
  bool provider = false;
};

inline Workspace load_workspace(const RunConfig& c, Needs needs) {
  validate(c);
  validate_paths(c);
  Workspace w;
  w.config = c;
  if (needs.dataset) {
    if (c.dataset_path.empty()) throw Error(ErrorCode::InvalidConfig, "dataset_path is required");
    w.dataset = load_dataset(c.dataset_path, c.cell_line);
  }
  if (!c.ppi_path.empty()) {
    auto g = load_ppi(c.ppi_path, c.min_score);
    if (c.restrict_graph && w.dataset) {
      const auto measured = to_set(w.dataset->perturbations());
      g = g.induced_subgraph(measured);
    }
    w.graph = std::move(g);
  } else if (needs.graph) {
    throw Error(ErrorCode::InvalidConfig, "ppi_path is required");
  }
  if (needs.embeddings) {
    if (!c.euclidean_path.empty())
      w.euclidean = load_embeddings(c.euclidean_path, Geometry::Euclidean,
                                    c.euclidean_dim ? c.euclidean_dim : sniff_embedding_dim(c.euclidean_path));
    if (!c.poincare_path.empty())
      w.poincare = load_embeddings(c.poincare_path, Geometry::Poincare,
                                   c.poincare_dim ? c.poincare_dim : sniff_embedding_dim(c.poincare_path));
  }
  if (needs.provider) w.provider = make_provider(c);
  return w;
}

inline LaplacianKind laplacian_kind(const RunConfig& c) {
  return c.laplacian == "unnormalized" ? LaplacianKind::Unnormalized : LaplacianKind::Normalized;
}

inline ChainOptions chain_options(const Workspace& w) {
  ChainOptions o;
  o.k_chains = w.config.k_chains;
  o.temperature = w.config.temperature;
  o.k_range = w.config.k_range;
  o.context = w.context();
  o.model_id = w.config.model_id;
  return o;
}

inline PredictorParams predictor_params(const RunConfig& c) {
  PredictorParams p;
  p.min_votes = c.min_votes;
  p.alpha = c.alpha;
  p.top_reachable = static_cast<std::size_t>(c.top_reachable);
  p.pct_harmonizer = c.pct_harmonizer;
  p.pct_spectral = c.pct_spectral;
  return p;
}

inline bool strategy_needs_graph(Strategy s) { return s == Strategy::Harmonizer || s == Strategy::Spectral; }
inline bool strategy_needs_embeddings(Strategy s) {
  return s == Strategy::ThreePlusTwo || s == Strategy::Harmonizer || s == Strategy::Spectral;
}

/// Config as embedded in reports: all run parameters plus the provider id,
/// without output location or verbosity.
inline json report_config(const Workspace& w) {
  json j = w.config;
  j.erase("output_dir");
  j.erase("log_level");
  j["provider_id"] = w.provider ? w.provider->id() : std::string("none");
  return j;
}

// ---------------------------------------------------------------------------
// Outputs

inline std::filesystem::path prepare_output(const RunConfig& c) {
  std::filesystem::path dir = c.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidConfig, "cannot create output_dir " + dir.string() + ": " + ec.message());
  tsv::write_atomic(dir / "config.json", config_snapshot(c));
  return dir;
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// predict

inline int cmd_predict(const RunConfig& c) {
  const Strategy strategy = parse_strategy(c.strategy);
  Needs needs;
  needs.provider = true;
  needs.graph = strategy_needs_graph(strategy);
  needs.embeddings = strategy_needs_embeddings(strategy);
  auto w = load_workspace(c, needs);
  if (c.targets.empty()) throw Error(ErrorCode::InvalidConfig, "no targets given");
  const auto& ds = *w.dataset;

  GeneList targets;
  GeneSet seen;
  for (const auto& t : c.targets) {
    GeneSymbol g(t);
    if (seen.insert(g).second) targets.push_back(g);
  }
  GeneSet train = to_set(ds.perturbations());
  for (const auto& t : targets)
    if (train.erase(t)) log::warn(t.str() + " is a training perturbation; excluded from its own training pool");
  const GeneList pool(train.begin(), train.end());
  PredictionInputs in{&ds, &train, w.graph_ptr(), w.euclidean_ptr(), w.poincare_ptr(), predictor_params(c)};
  auto opt = chain_options(w);
  if (strategy == Strategy::Semantic) opt.k_chains = 1;

  const auto dir = prepare_output(c);
  std::ostringstream tsv_out;
  tsv_out << "target";
  for (const auto& g : ds.readout_genes()) tsv_out << '\t' << g.str();
  tsv_out << '\n';
  json provenance = {{"config", report_config(w)}, {"targets", json::object()}};
  int ok = 0, transport = 0;
  for (const auto& t : targets) {
    json rec;
    try {
      auto chains = run_chains(*w.provider, t, pool, opt);
      json cj = json::array();
      for (const auto& ch : chains) cj.push_back(chain_to_json(ch));
      rec["chains"] = cj;
      if (strategy == Strategy::Binary || strategy == Strategy::Confidence)
        rec["consensus"] = consensus_to_json(
            aggregate(chains, strategy == Strategy::Binary ? ConsensusMode::Binary : ConsensusMode::Confidence));
      auto pred = predict_target(strategy, t, chains, in);
      rec["neighborhood"] = neighborhood_to_json(pred.neighborhood);
      rec["fell_back"] = pred.fell_back;
      if (!pred.note.empty()) rec["note"] = pred.note;
      tsv_out << t.str();
      for (Eigen::Index i = 0; i < pred.profile.size(); ++i) tsv_out << '\t' << tsv::format_double(pred.profile[i]);
      tsv_out << '\n';
      ++ok;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ProviderUnavailable) ++transport;
      else if (exit_code_for(e.code()) == kExitConfig) throw;
      log::warn("prediction for " + t.str() + " failed: " + e.what());
      rec["error"] = e.what();
    }
    provenance["targets"][t.str()] = rec;
  }
  tsv::write_atomic(dir / "predictions.tsv", tsv_out.str());
  tsv::write_atomic(dir / "provenance.json", dump_json(provenance));
  if (ok > 0) return kExitOk;
  return transport == static_cast<int>(targets.size()) ? kExitTransport : kExitPrediction;
}

// ---------------------------------------------------------------------------
// benchmark / ablate

inline BenchmarkConfig benchmark_config(const Workspace& w) {
  const auto& c = w.config;
  BenchmarkConfig b;
  b.strategies.clear();
  for (const auto& s : c.strategies) b.strategies.push_back(parse_strategy(s));
  b.sizes.assign(c.sizes.begin(), c.sizes.end());
  b.seeds = c.seeds;
  if (b.seeds.empty()) throw Error(ErrorCode::InvalidConfig, "seeds must not be empty");
  if (b.sizes.empty()) throw Error(ErrorCode::InvalidConfig, "sizes must not be empty");
  b.max_targets = static_cast<std::size_t>(c.max_targets);
  b.metric_top_k = static_cast<std::size_t>(c.metric_top_k);
  b.chains = chain_options(w);
  b.predictor = predictor_params(c);
  return b;
}

inline int benchmark_exit(const BenchmarkReport& r) {
  if (r.targets_attempted > 0 && r.transport_failures == r.targets_attempted) return kExitTransport;
  return kExitOk;
}

inline int cmd_benchmark(const RunConfig& c) {
  Needs needs;
  needs.provider = true;
  for (const auto& s : c.strategies) {
    const auto st = parse_strategy(s);
    needs.graph |= strategy_needs_graph(st);
    needs.embeddings |= strategy_needs_embeddings(st);
  }
  auto w = load_workspace(c, needs);
  const auto cfg = benchmark_config(w);
  BenchmarkInputs in{&*w.dataset, w.provider.get(), w.graph_ptr(), w.euclidean_ptr(), w.poincare_ptr()};
  const auto report = scaling_benchmark(in, cfg, report_config(w));
  const auto dir = prepare_output(c);
  tsv::write_atomic(dir / "benchmark.json", dump_json(benchmark_to_json(report)));
  tsv::write_atomic(dir / "benchmark.md", benchmark_markdown(report));
  return benchmark_exit(report);
}

inline int cmd_ablate(const RunConfig& c) {
  auto w = load_workspace(c, Needs{true, false, false, true});
  auto cfg = benchmark_config(w);
  const auto n = cfg.sizes.front();
  auto snapshot = report_config(w);
  snapshot["sizes"] = json::array({n});
  snapshot["strategies"] = {"semantic", "binary", "confidence"};
  BenchmarkInputs in{&*w.dataset, w.provider.get(), w.graph_ptr(), nullptr, nullptr};
  const auto report = ablation_run(in, cfg, n, snapshot);
  const auto dir = prepare_output(c);
  tsv::write_atomic(dir / "ablation.json", dump_json(ablation_to_json(report)));
  tsv::write_atomic(dir / "ablation.md", ablation_markdown(report));
  return benchmark_exit(report.benchmark);
}

// ---------------------------------------------------------------------------
// anchors

/// Candidates must be measured (to be evaluated) and in the interactome (to
/// diffuse).
inline GeneList anchor_pool(const Workspace& w) {
  GeneList pool;
  for (const auto& g : w.dataset->perturbations())
    if (w.graph->contains(g)) pool.push_back(g);
  return pool;
}

inline DesignOptions design_options(const Workspace& w) {
  DesignOptions o;
  o.batch = w.config.batch;
  o.k_chains = w.config.k_chains;
  o.context = w.context();
  o.model_id = w.config.model_id;
  o.temperature = w.config.temperature;
  o.pool_sample = static_cast<std::size_t>(w.config.pool_sample);
  o.seed = w.config.seed;
  return o;
}

inline AnchorSet select_anchors(const Workspace& w, AnchorStrategy s) {
  const auto pool = anchor_pool(w);
  const auto k = static_cast<std::size_t>(w.config.budget);
  switch (s) {
    case AnchorStrategy::Random: return select_random(pool, k, w.config.seed);
    case AnchorStrategy::Degree: return select_degree(*w.graph, pool, k);
    case AnchorStrategy::SemanticLLM: return select_llm_iterative(*w.provider, pool, k, design_options(w));
    case AnchorStrategy::Consensus: return select_consensus(*w.provider, pool, k, design_options(w));
  }
  throw Error(ErrorCode::InvalidConfig, "unknown anchor strategy");
}

inline bool anchor_strategy_uses_provider(const std::string& name) {
  return name == "semantic" || name == "consensus" || name == "all";
}

inline std::vector<AnchorStrategy> anchor_strategies(const std::string& name) {
  if (name == "all") return {std::begin(kAllAnchorStrategies), std::end(kAllAnchorStrategies)};
  return {parse_anchor_strategy(name)};
}

inline json anchor_output(const Workspace& w, const AnchorSet& set) {
  json j = anchor_set_to_json(set);
  if (w.config.map_targets && w.provider)
    j["target_map"] = target_map_to_json(map_targets(*w.provider, set.anchors, static_cast<std::size_t>(w.config.batch),
                                                     design_options(w)));
  return j;
}

inline int cmd_anchors_select(const RunConfig& c) {
  auto w = load_workspace(c, Needs{true, true, false, anchor_strategy_uses_provider(c.anchor_strategy) || c.map_targets});
  json out = {{"config", report_config(w)}, {"sets", json::array()}};
  for (auto s : anchor_strategies(c.anchor_strategy)) out["sets"].push_back(anchor_output(w, select_anchors(w, s)));
  const auto dir = prepare_output(c);
  tsv::write_atomic(dir / "anchors.json", dump_json(out));
  return kExitOk;
}

/// Reads anchors from an `anchors select` output, a single AnchorSet object,
/// or a plain one-symbol-per-line list.
inline std::vector<AnchorSet> read_anchor_sets(const std::filesystem::path& path) {
  const auto text = tsv::read_all(path);
  auto j = json::parse(text, nullptr, false);
  std::vector<AnchorSet> out;
  if (!j.is_discarded()) {
    try {
      if (j.is_object() && j.contains("sets"))
        for (const auto& s : j["sets"]) out.push_back(anchor_set_from_json(s));
      else if (j.is_object())
        out.push_back(anchor_set_from_json(j));
      else if (j.is_array()) {
        AnchorSet s;
        for (const auto& g : j) s.anchors.emplace_back(g.get<std::string>());
        out.push_back(s);
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRow, path.string() + ": " + e.what());
    }
    if (out.empty()) throw Error(ErrorCode::MalformedRow, path.string() + ": no anchor sets");
    return out;
  }
  AnchorSet s;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto g = GeneSymbol::try_parse(tsv::strip_cr(line))) s.anchors.push_back(*g);
  }
  if (s.anchors.empty()) throw Error(ErrorCode::MalformedRow, path.string() + ": no anchors");
  out.push_back(s);
  return out;
}

inline std::string anchor_markdown(const std::vector<std::pair<AnchorSet, AnchorEvaluation>>& rows,
                                   const std::string& cell_line) {
  std::ostringstream out;
  out << "| Cell Line |";
  for (const auto& [s, _] : rows) out << ' ' << display_name(s.strategy) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < rows.size(); ++i) out << "---|";
  out << "\n| " << (cell_line.empty() ? std::string("dataset") : cell_line) << " |";
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [_, e] : rows)
    if (e.summary) best = std::max(best, e.summary->mean);
  for (const auto& [_, e] : rows) {
    if (!e.summary) {
      out << " n/a |";
      continue;
    }
    const auto m = format_fixed(e.summary->mean);
    out << ' ' << (e.summary->mean == best ? "**" + m + "**" : m) << " |";
  }
  out << '\n';
  return out.str();
}

inline int cmd_anchors_evaluate(const RunConfig& c) {
  const bool from_file = !c.anchors_path.empty();
  auto w = load_workspace(c, Needs{true, true, false, !from_file && anchor_strategy_uses_provider(c.anchor_strategy)});
  std::vector<AnchorSet> sets;
  if (from_file) sets = read_anchor_sets(c.anchors_path);
  else
    for (auto s : anchor_strategies(c.anchor_strategy)) sets.push_back(select_anchors(w, s));
  const HeatKernel kernel(*w.graph, c.beta, laplacian_kind(c));
  std::vector<std::pair<AnchorSet, AnchorEvaluation>> rows;
  json evals = json::array();
  for (const auto& s : sets) {
    auto e = evaluate_anchor_set(s.anchors, *w.dataset, kernel, static_cast<std::size_t>(c.metric_top_k));
    json j = anchor_evaluation_to_json(e);
    j["anchor_set"] = anchor_set_to_json(s);
    evals.push_back(j);
    rows.emplace_back(s, std::move(e));
  }
  const auto dir = prepare_output(c);
  tsv::write_atomic(dir / "anchor_evaluation.json", dump_json({{"config", report_config(w)}, {"evaluations", evals}}));
  tsv::write_atomic(dir / "anchor_evaluation.md", anchor_markdown(rows, c.cell_line));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

/// Writes a planted-GRN world (dataset, interactome, embeddings, GRN) and a
/// ready-to-run config pointing at it.
inline int cmd_synth(const RunConfig& c, const SyntheticWorldParams& params = {}) {
  validate(c);
  const auto world = make_synthetic_world(c.synthetic_seed, params);
  std::filesystem::path dir = c.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidConfig, "cannot create " + dir.string());
  tsv::write_atomic(dir / "dataset.tsv", format_dataset(world.dataset));
  tsv::write_atomic(dir / "ppi.tsv", format_raw_edges(world.raw_edges));
  tsv::write_atomic(dir / "euclidean.tsv", format_embeddings(world.euclidean));
  tsv::write_atomic(dir / "poincare.tsv", format_embeddings(world.poincare));
  tsv::write_atomic(dir / "grn.json", dump_json(planted_grn_to_json(world.grn)));

  RunConfig run = c;
  run.dataset_path = (dir / "dataset.tsv").string();
  run.ppi_path = (dir / "ppi.tsv").string();
  run.euclidean_path = (dir / "euclidean.tsv").string();
  run.poincare_path = (dir / "poincare.tsv").string();
  run.grn_path = (dir / "grn.json").string();
  run.provider = "synthetic";
  run.cell_line = run.cell_line.empty() ? "SYNTH" : run.cell_line;
  run.sizes = {50};
  run.max_targets = 0;
  run.output_dir = (dir / "out").string();
  tsv::write_atomic(dir / "config.json", config_snapshot(run));
  return kExitOk;
}

}  // namespace mechpert
