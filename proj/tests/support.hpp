#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mechpert/dataset.hpp"
#include "mechpert/graph.hpp"
#include "mechpert/hypothesis.hpp"

namespace testing_support {

using namespace mechpert;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mechpert_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline PpiGraph graph_of(std::initializer_list<std::tuple<const char*, const char*, double>> edges,
                         std::initializer_list<const char*> extra = {}) {
  std::vector<Edge> list;
  for (const auto& [a, b, w] : edges) list.push_back({GeneSymbol(a), GeneSymbol(b), w});
  GeneSet nodes;
  for (const char* n : extra) nodes.insert(GeneSymbol(n));
  return PpiGraph::from_edges(list, nodes);
}

/// Dataset whose readouts are R0..R{d-1}.
inline PerturbationDataset dataset_of(const std::map<std::string, Eigen::VectorXd>& rows) {
  const auto d = rows.begin()->second.size();
  GeneList readouts;
  for (Eigen::Index i = 0; i < d; ++i) readouts.emplace_back("R" + std::to_string(i));
  std::map<GeneSymbol, ExpressionProfile> profiles;
  for (const auto& [g, v] : rows) profiles.emplace(GeneSymbol(g), v);
  return PerturbationDataset(readouts, profiles, {});
}

inline HypothesisChain chain(int index, std::initializer_list<const char*> semantic,
                             std::initializer_list<std::pair<const char*, double>> causal) {
  HypothesisChain c;
  c.chain_index = index;
  for (const char* g : semantic) c.semantic.emplace_back(g);
  for (const auto& [g, conf] : causal) c.causal.push_back({GeneSymbol(g), conf, Relation::TF});
  c.semantic_ok = c.causal_ok = true;
  return c;
}

/// Dense normalized Laplacian built straight from edge weights.
inline Eigen::MatrixXd dense_normalized_laplacian(const Eigen::MatrixXd& w) {
  const auto n = w.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd deg = w.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && w(i, j) != 0.0) l(i, j) = -w(i, j) / std::sqrt(deg[i] * deg[j]);
  return l;
}

/// Random undirected graph on n nodes named N00.. with weights in (0,1].
inline PpiGraph random_graph(std::uint64_t seed, int n, double p) {
  Xoshiro256 rng(seed);
  std::vector<Edge> edges;
  GeneSet nodes;
  auto name = [](int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "N%02d", i);
    return GeneSymbol(buf);
  };
  for (int i = 0; i < n; ++i) {
    nodes.insert(name(i));
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.push_back({name(i), name(j), 0.05 + 0.95 * rng.uniform()});
  }
  return PpiGraph::from_edges(edges, nodes);
}

/// Provider that answers from a fixed table keyed by (task, chain_index,
/// attempt); missing entries throw a transport error.
class ScriptedProvider : public Provider {
 public:
  std::map<std::tuple<PromptTask, int, int>, std::string> answers;
  std::string fallback;
  bool fail_transport = false;
  mutable std::atomic<int> calls{0};

  std::string complete(const ProviderRequest& r) const override {
    ++calls;
    if (fail_transport) throw Error(ErrorCode::ProviderTransport, "scripted outage");
    auto it = answers.find({r.task, r.chain_index, r.attempt});
    if (it != answers.end()) return it->second;
    if (!fallback.empty()) return fallback;
    throw Error(ErrorCode::ProviderTransport, "no scripted answer");
  }
  std::string id() const override { return "scripted"; }
};

}  // namespace testing_support
