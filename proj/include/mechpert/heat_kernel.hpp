#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mechpert/dataset.hpp"
#include "mechpert/error.hpp"
#include "mechpert/graph.hpp"

namespace mechpert {

/// Components up to this size are exponentiated by dense eigendecomposition;
/// larger ones use the Taylor action on the target indicator.
constexpr std::size_t kDenseHeatKernelLimit = 5000;

/// Kernel entries below this fraction of the column maximum are below the
/// accuracy of the dense route and are reported as exact zeros.
constexpr double kKernelNoiseFloor = 1e-13;

struct HeatKernelWeights {
  double beta = 1.0;
  GeneSymbol target;
  std::map<GeneSymbol, double> weights;

  double total() const {
    double z = 0.0;
    for (const auto& [_, w] : weights) z += w;
    return z;
  }
};

/// exp(-beta * M) for a dense symmetric M via eigendecomposition.
inline Eigen::MatrixXd expm_symmetric(const Eigen::MatrixXd& m, double beta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd decay = (-beta * eig.eigenvalues().array()).exp().matrix();
  return eig.eigenvectors() * decay.asDiagonal() * eig.eigenvectors().transpose();
}

/// exp(-beta * M) v by scaling: s applications of a truncated Taylor series
/// of exp(-beta M / s), with s chosen so that each step has operator 1-norm <= 1.
/// Each series is cut once two consecutive terms fall below `rel_tol` relative
/// to the running sum.
inline Eigen::VectorXd expm_multiply(const SparseMatrix& m, double beta, Eigen::VectorXd v,
                                     double rel_tol = 1e-9) {
  if (beta == 0.0) return v;
  double norm1 = 0.0;
  for (Eigen::Index col = 0; col < m.outerSize(); ++col) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, col); it; ++it) s += std::abs(it.value());
    norm1 = std::max(norm1, s);
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(beta * norm1)));
  const double h = beta / steps;
  // Tighten per-step tolerance so the accumulated error over all steps stays at rel_tol.
  const double step_tol = std::min(rel_tol, 1e-9) * 1e-3;
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd term = v;
    Eigen::VectorXd sum = v;
    int small = 0;
    for (int k = 1; k < 200; ++k) {
      term = (-h / k) * (m * term);
      sum += term;
      const double scale = std::max(sum.lpNorm<Eigen::Infinity>(), 1e-300);
      small = term.lpNorm<Eigen::Infinity>() <= step_tol * scale ? small + 1 : 0;
      if (small >= 2) break;
    }
    v = std::move(sum);
  }
  return v;
}

/// exp(-beta L) for one graph and scale. Spectral factors are computed per
/// connected component on first use and cached; the object is safe to share
/// across threads.
class HeatKernel {
 public:
  HeatKernel(const PpiGraph& graph, double beta, LaplacianKind kind = LaplacianKind::Normalized)
      : graph_(&graph), beta_(beta), kind_(kind) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorCode::InvalidConfig, "beta must be >= 0");
    labels_ = graph.component_labels();
    int count = 0;
    for (int l : labels_) count = std::max(count, l + 1);
    members_.resize(static_cast<std::size_t>(count));
    local_index_.resize(labels_.size());
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      auto& m = members_[static_cast<std::size_t>(labels_[i])];
      local_index_[i] = m.size();
      m.push_back(i);
    }
    factors_.resize(members_.size());
    once_ = std::make_unique<std::once_flag[]>(members_.size());
  }

  double beta() const noexcept { return beta_; }
  const PpiGraph& graph() const noexcept { return *graph_; }

  /// Column `target` of exp(-beta L) over all nodes. Cross-component entries
  /// are exactly zero.
  Eigen::VectorXd column(std::size_t target) const {
    const auto comp = static_cast<std::size_t>(labels_[target]);
    const auto& members = members_[comp];
    Eigen::VectorXd local;
    if (beta_ == 0.0) {
      local = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(members.size()));
      local[static_cast<Eigen::Index>(local_index_[target])] = 1.0;
    } else if (members.size() <= kDenseHeatKernelLimit) {
      std::call_once(once_[comp], [&] { factorize(comp); });
      const auto& f = factors_[comp];
      const auto t = static_cast<Eigen::Index>(local_index_[target]);
      local = f.vectors * (f.decay.array() * f.vectors.row(t).transpose().array()).matrix();
    } else {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(members.size()));
      e[static_cast<Eigen::Index>(local_index_[target])] = 1.0;
      local = expm_multiply(component_laplacian(comp), beta_, std::move(e));
    }
    const double peak = local.cwiseAbs().maxCoeff();
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(graph_->size()));
    for (std::size_t i = 0; i < members.size(); ++i) {
      const double v = local[static_cast<Eigen::Index>(i)];
      full[static_cast<Eigen::Index>(members[i])] = v > kKernelNoiseFloor * peak ? v : 0.0;
    }
    return full;
  }

  Eigen::VectorXd column(const GeneSymbol& target) const { return column(graph_->require_index(target)); }

  /// Full dense kernel; intended for small graphs and tests.
  Eigen::MatrixXd dense() const {
    const auto n = static_cast<Eigen::Index>(graph_->size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) k.col(j) = column(static_cast<std::size_t>(j));
    return k;
  }

  HeatKernelWeights weights(const GeneSet& anchors, const GeneSymbol& target) const {
    const auto t = graph_->require_index(target);
    for (const auto& a : anchors) graph_->require_index(a);
    const Eigen::VectorXd col = column(t);
    HeatKernelWeights out{beta_, target, {}};
    for (const auto& a : anchors) out.weights[a] = col[static_cast<Eigen::Index>(*graph_->index_of(a))];
    return out;
  }

 private:
  struct Factor {
    Eigen::MatrixXd vectors;
    Eigen::VectorXd decay;
  };

  SparseMatrix component_laplacian(std::size_t comp) const {
    const auto& members = members_[comp];
    GeneSet keep;
    for (auto i : members) keep.insert(graph_->nodes()[i]);
    // Node order of the induced subgraph matches `members` since both are sorted by symbol.
    return laplacian(graph_->induced_subgraph(keep), kind_);
  }

  void factorize(std::size_t comp) const {
    const Eigen::MatrixXd l = Eigen::MatrixXd(component_laplacian(comp));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(l);
    factors_[comp].vectors = eig.eigenvectors();
    factors_[comp].decay = (-beta_ * eig.eigenvalues().array()).exp().matrix();
  }

  const PpiGraph* graph_;
  double beta_;
  LaplacianKind kind_;
  std::vector<int> labels_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> local_index_;
  mutable std::vector<Factor> factors_;
  std::unique_ptr<std::once_flag[]> once_;
};

inline HeatKernelWeights heat_kernel_weights(const PpiGraph& graph, const GeneSet& anchors,
                                             const GeneSymbol& target, double beta = 1.0,
                                             LaplacianKind kind = LaplacianKind::Normalized) {
  return HeatKernel(graph, beta, kind).weights(anchors, target);
}

/// Kernel-weighted average of anchor profiles at `target`.
inline ExpressionProfile heat_kernel_interpolate(const HeatKernel& kernel, const GeneSet& anchors,
                                                 const GeneSymbol& target, const PerturbationDataset& dataset) {
  for (const auto& a : anchors)
    if (!dataset.has_profile(a)) throw Error(ErrorCode::MissingProfile, a.str());
  const auto w = kernel.weights(anchors, target);
  const double z = w.total();
  if (!(z > 0.0)) throw Error(ErrorCode::ZeroKernelMass, target.str());
  ExpressionProfile y = ExpressionProfile::Zero(static_cast<Eigen::Index>(dataset.dim()));
  for (const auto& [a, weight] : w.weights)
    if (weight > 0.0) y += (weight / z) * dataset.profile(a);
  return y;
}

inline ExpressionProfile heat_kernel_interpolate(const GeneSet& anchors, const GeneSymbol& target,
                                                 const PpiGraph& graph, double beta,
                                                 const PerturbationDataset& dataset) {
  return heat_kernel_interpolate(HeatKernel(graph, beta), anchors, target, dataset);
}

}  // namespace mechpert
