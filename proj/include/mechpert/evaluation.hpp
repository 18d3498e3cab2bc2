#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mechpert/dataset.hpp"
#include "mechpert/hypothesis.hpp"
#include "mechpert/metrics.hpp"
#include "mechpert/predictor.hpp"

namespace mechpert {

struct BenchmarkConfig {
  std::vector<Strategy> strategies{Strategy::Semantic, Strategy::Binary, Strategy::Confidence};
  std::vector<std::size_t> sizes{50, 100, 200, 500, 800};
  std::vector<std::uint64_t> seeds{0};
  std::size_t max_targets = 100;  // 0 = every test gene
  std::size_t metric_top_k = 20;
  ChainOptions chains;
  PredictorParams predictor;
};

struct BenchmarkInputs {
  const PerturbationDataset* dataset = nullptr;
  const Provider* provider = nullptr;
  const PpiGraph* graph = nullptr;
  const EmbeddingMap* euclidean = nullptr;
  const EmbeddingMap* poincare = nullptr;
};

struct TargetScore {
  std::optional<double> score;
  std::string skip_reason;
  bool fell_back = false;
};

struct BenchmarkCell {
  Strategy strategy = Strategy::Semantic;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::map<GeneSymbol, TargetScore> per_target;
  std::optional<MeanSem> summary;

  std::vector<double> scores() const {
    std::vector<double> out;
    for (const auto& [_, t] : per_target)
      if (t.score) out.push_back(*t.score);
    return out;
  }
  std::size_t n_scored() const { return scores().size(); }
  std::size_t n_skipped() const { return per_target.size() - n_scored(); }
};

struct PooledRow {
  std::size_t n = 0;
  Strategy strategy = Strategy::Semantic;
  std::optional<MeanSem> summary;
  std::optional<double> relative;  // vs the first strategy listed
};

struct BenchmarkReport {
  json config;
  std::vector<BenchmarkCell> cells;
  std::vector<PooledRow> pooled;
  std::size_t transport_failures = 0;
  std::size_t targets_attempted = 0;
};

/// Test genes scored for one split: all of them, or a seeded sample of `max_targets`.
inline GeneList benchmark_targets(const TrainTestSplit& split, std::size_t max_targets) {
  GeneList test(split.test.begin(), split.test.end());
  if (max_targets == 0 || test.size() <= max_targets) return test;
  Xoshiro256 rng(derive_seed(split.seed, "targets/" + std::to_string(split.train.size())));
  auto idx = sample_indices(test.size(), max_targets, rng);
  std::sort(idx.begin(), idx.end());
  GeneList out;
  for (auto i : idx) out.push_back(test[i]);
  return out;
}

/// (candidate - baseline) / |baseline|; undefined for a zero baseline.
inline std::optional<double> relative_improvement(double candidate, double baseline) {
  if (baseline == 0.0) return std::nullopt;
  return (candidate - baseline) / std::abs(baseline);
}

inline bool needs_consensus(const std::vector<Strategy>& strategies) {
  for (auto s : strategies)
    if (s == Strategy::Binary || s == Strategy::Confidence) return true;
  return false;
}

/// For every (size, seed): split, query the provider once per target, score
/// each strategy's prediction with C20, and pool per-target scores across
/// seeds per (size, strategy).
inline BenchmarkReport scaling_benchmark(const BenchmarkInputs& in, const BenchmarkConfig& cfg, json config_snapshot = {}) {
  const auto& ds = *in.dataset;
  if (cfg.strategies.empty()) throw Error(ErrorCode::InvalidConfig, "no strategies");
  for (auto n : cfg.sizes)
    if (n >= ds.size())
      throw Error(ErrorCode::NTooLarge, "size " + std::to_string(n) + " >= " + std::to_string(ds.size()) + " perturbations");

  BenchmarkReport report;
  report.config = std::move(config_snapshot);
  ChainOptions chain_opt = cfg.chains;
  if (!needs_consensus(cfg.strategies)) chain_opt.k_chains = 1;

  for (auto n : cfg.sizes) {
    for (auto seed : cfg.seeds) {
      const auto split = subsample_training(ds, n, seed);
      const GeneList pool(split.train.begin(), split.train.end());
      const auto targets = benchmark_targets(split, cfg.max_targets);

      std::vector<BenchmarkCell> cells(cfg.strategies.size());
      for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
        cells[s].strategy = cfg.strategies[s];
        cells[s].n = n;
        cells[s].seed = seed;
      }
      PredictionInputs pin{&ds, &split.train, in.graph, in.euclidean, in.poincare, cfg.predictor};

      for (const auto& target : targets) {
        ++report.targets_attempted;
        std::vector<HypothesisChain> chains;
        try {
          chains = run_chains(*in.provider, target, pool, chain_opt);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::ProviderUnavailable) throw;
          ++report.transport_failures;
          for (auto& c : cells) c.per_target[target].skip_reason = "ProviderUnavailable";
          continue;
        }
        for (auto& cell : cells) {
          TargetScore ts;
          try {
            const auto pred = predict_target(cell.strategy, target, chains, pin);
            ts.fell_back = pred.fell_back;
            ts.score = c20(pred.profile, ds.profile(target), ds.readout_genes(), cfg.metric_top_k);
          } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidConfig) throw;
            ts.skip_reason = std::string(to_string(e.code()));
          }
          cell.per_target[target] = ts;
        }
      }
      for (auto& c : cells) {
        const auto sc = c.scores();
        if (!sc.empty()) c.summary = mean_sem(sc);
        report.cells.push_back(std::move(c));
      }
    }
  }

  for (auto n : cfg.sizes) {
    std::optional<double> baseline;
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
      PooledRow row;
      row.n = n;
      row.strategy = cfg.strategies[s];
      std::vector<double> pooled;
      for (const auto& c : report.cells)
        if (c.n == n && c.strategy == row.strategy)
          for (double v : c.scores()) pooled.push_back(v);
      if (!pooled.empty()) row.summary = mean_sem(pooled);
      if (s == 0 && row.summary) baseline = row.summary->mean;
      if (baseline && row.summary) row.relative = relative_improvement(row.summary->mean, *baseline);
      report.pooled.push_back(row);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json benchmark_to_json(const BenchmarkReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json per = json::object();
    for (const auto& [g, t] : c.per_target) {
      if (t.score) per[g.str()] = *t.score;
      else per[g.str()] = {{"skipped", t.skip_reason}};
    }
    cells.push_back({{"strategy", std::string(to_string(c.strategy))},
                     {"n", c.n},
                     {"seed", c.seed},
                     {"mean", c.summary ? json(c.summary->mean) : json(nullptr)},
                     {"sem", c.summary ? json(c.summary->sem) : json(nullptr)},
                     {"sem_defined", c.summary ? c.summary->sem_defined : false},
                     {"n_scored", c.n_scored()},
                     {"n_skipped", c.n_skipped()},
                     {"per_target", per}});
  }
  json rel = json::array();
  for (const auto& p : r.pooled) {
    rel.push_back({{"n", p.n},
                   {"strategy", std::string(to_string(p.strategy))},
                   {"pooled_mean", p.summary ? json(p.summary->mean) : json(nullptr)},
                   {"pooled_sem", p.summary ? json(p.summary->sem) : json(nullptr)},
                   {"n_scored", p.summary ? p.summary->n : 0},
                   {"relative", optional_number(p.relative)}});
  }
  return {{"config", r.config}, {"cells", cells}, {"relative_improvement", rel}};
}

inline std::string format_fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string format_percent(double rel) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.1f%%", rel * 100.0);
  return buf;
}

/// One row per training size, one column per strategy (mean ± SEM), and the
/// relative improvement of the last strategy over the first. Best mean per
/// row is bolded.
inline std::string benchmark_markdown(const BenchmarkReport& r) {
  std::vector<Strategy> strategies;
  std::vector<std::size_t> sizes;
  for (const auto& p : r.pooled) {
    if (std::find(strategies.begin(), strategies.end(), p.strategy) == strategies.end()) strategies.push_back(p.strategy);
    if (std::find(sizes.begin(), sizes.end(), p.n) == sizes.end()) sizes.push_back(p.n);
  }
  std::ostringstream out;
  out << "| Training Size (N) |";
  for (auto s : strategies) out << ' ' << display_name(s) << " |";
  out << " Rel. Improv. |\n|---|";
  for (std::size_t i = 0; i < strategies.size(); ++i) out << "---|";
  out << "---|\n";
  for (auto n : sizes) {
    std::vector<const PooledRow*> row;
    for (const auto& p : r.pooled)
      if (p.n == n) row.push_back(&p);
    double best = -std::numeric_limits<double>::infinity();
    for (auto* p : row)
      if (p->summary) best = std::max(best, p->summary->mean);
    out << "| N=" << n << " |";
    for (auto* p : row) {
      if (!p->summary) {
        out << " n/a |";
        continue;
      }
      const std::string mean = format_fixed(p->summary->mean);
      out << ' ' << (p->summary->mean == best ? "**" + mean + "**" : mean) << " ± " << format_fixed(p->summary->sem)
          << " |";
    }
    const auto* last = row.empty() ? nullptr : row.back();
    out << ' ' << (last && last->relative ? format_percent(*last->relative) : std::string("n/a")) << " |\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationRow {
  std::string variant;
  std::string logic;
  Strategy strategy;
  int k_chains;
  std::optional<MeanSem> summary;
  std::optional<double> gain;
};

struct AblationReport {
  BenchmarkReport benchmark;
  std::vector<AblationRow> rows;
};

/// Single retrieval (chain 0 only) vs unweighted voting vs confidence
/// weighting at one training size.
inline AblationReport ablation_run(const BenchmarkInputs& in, BenchmarkConfig cfg, std::size_t n, json config_snapshot = {}) {
  cfg.strategies = {Strategy::Semantic, Strategy::Binary, Strategy::Confidence};
  cfg.sizes = {n};
  AblationReport out;
  out.benchmark = scaling_benchmark(in, cfg, std::move(config_snapshot));
  const char* variants[] = {"LangPert (Baseline)", "Binary Consensus", "MechPert (Full)"};
  const char* logic[] = {"None (Single Retrieval)", "Unweighted Voting (w_i=1)", "Confidence Weighted (w_i=c_i)"};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& p = out.benchmark.pooled[i];
    out.rows.push_back({variants[i], logic[i], p.strategy, i == 0 ? 1 : cfg.chains.k_chains, p.summary,
                        i == 0 ? std::nullopt : p.relative});
  }
  return out;
}

inline json ablation_to_json(const AblationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"variant", row.variant},
                    {"aggregation_logic", row.logic},
                    {"strategy", std::string(to_string(row.strategy))},
                    {"k_chains", row.k_chains},
                    {"mean", row.summary ? json(row.summary->mean) : json(nullptr)},
                    {"sem", row.summary ? json(row.summary->sem) : json(nullptr)},
                    {"gain", optional_number(row.gain)}});
  json out = benchmark_to_json(r.benchmark);
  out["rows"] = rows;
  return out;
}

inline std::string ablation_markdown(const AblationReport& r) {
  std::ostringstream out;
  out << "| Model Variant | Aggregation Logic | Mean C20 | % Gain |\n|---|---|---|---|\n";
  for (const auto& row : r.rows) {
    out << "| " << row.variant << " | " << row.logic << " | "
        << (row.summary ? format_fixed(row.summary->mean) + " ± " + format_fixed(row.summary->sem) : std::string("n/a"))
        << " | " << (row.gain ? format_percent(*row.gain) : std::string("--")) << " |\n";
  }
  return out.str();
}

}  // namespace mechpert
