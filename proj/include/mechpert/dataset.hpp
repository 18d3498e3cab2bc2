#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mechpert/error.hpp"
#include "mechpert/gene.hpp"
#include "mechpert/graph.hpp"
#include "mechpert/rng.hpp"
#include "mechpert/tsv.hpp"

namespace mechpert {

/// Mean expression effect per readout gene, indexed by the owning dataset's
/// readout universe.
using ExpressionProfile = Eigen::VectorXd;

struct DatasetMetadata {
  std::string cell_line;
  std::string source_path;
};

class PerturbationDataset {
 public:
  PerturbationDataset() = default;

  PerturbationDataset(GeneList readout_genes, std::map<GeneSymbol, ExpressionProfile> profiles,
                      DatasetMetadata metadata = {})
      : readouts_(std::move(readout_genes)), profiles_(std::move(profiles)), meta_(std::move(metadata)) {
    if (readouts_.empty()) throw Error(ErrorCode::MalformedRow, "dataset has no readout genes");
    if (profiles_.empty()) throw Error(ErrorCode::MalformedRow, "dataset has no perturbation profiles");
    for (const auto& [g, y] : profiles_) {
      if (static_cast<std::size_t>(y.size()) != readouts_.size())
        throw Error(ErrorCode::MalformedRow, "profile " + g.str() + " has wrong length");
      if (!y.allFinite()) throw Error(ErrorCode::NonFiniteValue, "profile " + g.str());
    }
  }

  std::size_t dim() const noexcept { return readouts_.size(); }
  std::size_t size() const noexcept { return profiles_.size(); }
  const GeneList& readout_genes() const noexcept { return readouts_; }
  const std::map<GeneSymbol, ExpressionProfile>& profiles() const noexcept { return profiles_; }
  const DatasetMetadata& metadata() const noexcept { return meta_; }

  bool has_profile(const GeneSymbol& g) const { return profiles_.count(g) != 0; }

  const ExpressionProfile& profile(const GeneSymbol& g) const {
    auto it = profiles_.find(g);
    if (it == profiles_.end()) throw Error(ErrorCode::MissingProfile, g.str());
    return it->second;
  }

  /// Perturbed genes in ascending symbol order.
  GeneList perturbations() const {
    GeneList out;
    out.reserve(profiles_.size());
    for (const auto& [g, _] : profiles_) out.push_back(g);
    return out;
  }

  friend bool operator==(const PerturbationDataset& a, const PerturbationDataset& b) {
    if (a.readouts_ != b.readouts_ || a.profiles_.size() != b.profiles_.size()) return false;
    for (const auto& [g, y] : a.profiles_) {
      auto it = b.profiles_.find(g);
      if (it == b.profiles_.end() || it->second != y) return false;
    }
    return true;
  }

 private:
  GeneList readouts_;
  std::map<GeneSymbol, ExpressionProfile> profiles_;
  DatasetMetadata meta_;
};

// ---------------------------------------------------------------------------
// Perturbation matrix TSV

inline PerturbationDataset parse_dataset(std::istream& in, const std::string& source = "<stream>",
                                         const std::string& cell_line = {}) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, source + ": empty file");
  ++line_no;
  auto header = tsv::split(tsv::strip_cr(line));
  if (header.size() < 2) throw Error(ErrorCode::MalformedRow, "line 1: header needs at least one readout gene");
  GeneList readouts;
  for (std::size_t c = 1; c < header.size(); ++c) readouts.emplace_back(header[c]);

  std::map<GeneSymbol, ExpressionProfile> profiles;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = tsv::strip_cr(line);
    if (row.empty()) continue;
    auto fields = tsv::split(row);
    if (fields.size() != header.size())
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(header.size()) + " fields, got " +
                                               std::to_string(fields.size()));
    auto gene = GeneSymbol::try_parse(fields[0]);
    if (!gene) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad symbol");
    ExpressionProfile y(static_cast<Eigen::Index>(readouts.size()));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto v = tsv::parse_double(fields[c]);
      if (!v) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + " col " + std::to_string(c + 1));
      if (!std::isfinite(*v))
        throw Error(ErrorCode::NonFiniteValue, "line " + std::to_string(line_no) + " col " + std::to_string(c + 1));
      y[static_cast<Eigen::Index>(c - 1)] = *v;
    }
    if (!profiles.emplace(*gene, std::move(y)).second)
      throw Error(ErrorCode::DuplicatePerturbation, gene->str());
  }
  return PerturbationDataset(std::move(readouts), std::move(profiles), {cell_line, source});
}

inline PerturbationDataset load_dataset(const std::filesystem::path& path, const std::string& cell_line = {}) {
  auto in = tsv::open_input(path);
  return parse_dataset(in, path.string(), cell_line);
}

inline std::string format_dataset(const PerturbationDataset& ds) {
  std::ostringstream out;
  out << "perturbation";
  for (const auto& g : ds.readout_genes()) out << '\t' << g.str();
  out << '\n';
  for (const auto& [g, y] : ds.profiles()) {
    out << g.str();
    for (Eigen::Index i = 0; i < y.size(); ++i) out << '\t' << tsv::format_double(y[i]);
    out << '\n';
  }
  return out.str();
}

inline void write_dataset(const PerturbationDataset& ds, const std::filesystem::path& path) {
  tsv::write_atomic(path, format_dataset(ds));
}

// ---------------------------------------------------------------------------
// STRING-style edge list

constexpr int kDefaultMinScore = 700;

inline PpiGraph parse_ppi(std::istream& in, int min_score = kDefaultMinScore) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = tsv::strip_cr(line);
    if (row.empty()) continue;
    auto fields = tsv::split(row);
    if (fields.size() != 3)
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": expected 3 fields");
    auto score = tsv::parse_double(fields[2]);
    if (!score) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad score");
    }
    if (!std::isfinite(*score) || *score < 0.0 || *score > 1000.0)
      throw Error(ErrorCode::ScoreOutOfRange, "line " + std::to_string(line_no) + ": " + std::string(fields[2]));
    auto a = GeneSymbol::try_parse(fields[0]);
    auto b = GeneSymbol::try_parse(fields[1]);
    if (!a || !b) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad symbol");
    if (*score < min_score || *score <= 0.0) continue;
    edges.push_back({*a, *b, *score / 1000.0});
  }
  return PpiGraph::from_edges(edges);
}

inline PpiGraph load_ppi(const std::filesystem::path& path, int min_score = kDefaultMinScore) {
  if (min_score < 0 || min_score > 1000)
    throw Error(ErrorCode::ScoreOutOfRange, "min_score " + std::to_string(min_score));
  auto in = tsv::open_input(path);
  return parse_ppi(in, min_score);
}

inline std::string format_ppi(const PpiGraph& graph) {
  std::ostringstream out;
  for (const auto& e : graph.edges())
    out << e.a.str() << '\t' << e.b.str() << '\t' << tsv::format_double(e.weight * 1000.0) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Embeddings

enum class Geometry { Euclidean, Poincare };

struct EmbeddingMap {
  Geometry geometry = Geometry::Euclidean;
  int dim = 0;
  std::map<GeneSymbol, Eigen::VectorXd> vectors;

  bool contains(const GeneSymbol& g) const { return vectors.count(g) != 0; }
  const Eigen::VectorXd* find(const GeneSymbol& g) const {
    auto it = vectors.find(g);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

inline EmbeddingMap parse_embeddings(std::istream& in, Geometry geometry, int dim) {
  if (dim <= 0) throw Error(ErrorCode::DimensionMismatch, "dimension must be positive");
  EmbeddingMap out{geometry, dim, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = tsv::strip_cr(line);
    if (row.empty()) continue;
    auto fields = tsv::split(row);
    if (fields.size() != static_cast<std::size_t>(dim) + 1)
      throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(line_no) + ": expected " +
                                                    std::to_string(dim) + " values, got " +
                                                    std::to_string(fields.size() - 1));
    auto gene = GeneSymbol::try_parse(fields[0]);
    if (!gene) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no) + ": bad symbol");
    Eigen::VectorXd v(dim);
    for (int c = 0; c < dim; ++c) {
      auto x = tsv::parse_double(fields[static_cast<std::size_t>(c) + 1]);
      if (!x) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line_no));
      if (!std::isfinite(*x)) throw Error(ErrorCode::NonFiniteValue, "line " + std::to_string(line_no));
      v[c] = *x;
    }
    if (geometry == Geometry::Poincare && v.norm() >= 1.0)
      throw Error(ErrorCode::PoincareNormViolation, gene->str() + " norm " + tsv::format_double(v.norm()));
    out.vectors[*gene] = std::move(v);
  }
  return out;
}

inline EmbeddingMap load_embeddings(const std::filesystem::path& path, Geometry geometry, int dim) {
  auto in = tsv::open_input(path);
  return parse_embeddings(in, geometry, dim);
}

/// Reads the dimension from the first data row.
inline int sniff_embedding_dim(const std::filesystem::path& path) {
  auto in = tsv::open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    auto row = tsv::strip_cr(line);
    if (!row.empty()) return static_cast<int>(tsv::split(row).size()) - 1;
  }
  throw Error(ErrorCode::DimensionMismatch, path.string() + ": no rows");
}

inline std::string format_embeddings(const EmbeddingMap& emb) {
  std::ostringstream out;
  for (const auto& [g, v] : emb.vectors) {
    out << g.str();
    for (Eigen::Index i = 0; i < v.size(); ++i) out << '\t' << tsv::format_double(v[i]);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Train/test split

struct TrainTestSplit {
  GeneSet train;
  GeneSet test;
  std::uint64_t seed = 0;
};

/// Uniform sample of `n` perturbations without replacement; the rest is the
/// test set. Depends only on (sorted perturbation list, n, seed).
inline TrainTestSplit subsample_training(const PerturbationDataset& dataset, std::size_t n, std::uint64_t seed) {
  const auto all = dataset.perturbations();
  if (n == 0 || n >= all.size())
    throw Error(ErrorCode::NTooLarge, "n=" + std::to_string(n) + " with " + std::to_string(all.size()) +
                                          " perturbations (test set would be empty)");
  Xoshiro256 rng(derive_seed(seed, "train-split"));
  auto picked = sample_indices(all.size(), n, rng);
  TrainTestSplit split;
  split.seed = seed;
  std::vector<bool> in_train(all.size(), false);
  for (auto i : picked) in_train[i] = true;
  for (std::size_t i = 0; i < all.size(); ++i) (in_train[i] ? split.train : split.test).insert(all[i]);
  return split;
}

}  // namespace mechpert
