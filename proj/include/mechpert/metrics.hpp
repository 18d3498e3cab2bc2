#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mechpert/error.hpp"
#include "mechpert/gene.hpp"

namespace mechpert {

/// Sample Pearson correlation. Both inputs constant is an error; a single
/// constant input correlates with nothing and yields 0.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "pearson inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::LengthMismatch, "pearson needs at least 2 values");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 && syy == 0.0) throw Error(ErrorCode::ConstantInput, "both pearson inputs are constant");
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return pearson(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                 std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

/// Indices of the `top_k` readouts with the largest |truth|, ties by symbol.
inline std::vector<std::size_t> top_abs_indices(const Eigen::VectorXd& truth, const GeneList& readouts,
                                                std::size_t top_k) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(truth.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (idx.size() <= top_k) return idx;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double fa = std::abs(truth[static_cast<Eigen::Index>(a)]);
    const double fb = std::abs(truth[static_cast<Eigen::Index>(b)]);
    if (fa != fb) return fa > fb;
    return readouts[a] < readouts[b];
  });
  idx.resize(top_k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Pearson over the top-k ground-truth effects by magnitude (all readouts
/// when there are no more than k).
inline double c20(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, const GeneList& readouts,
                  std::size_t top_k = 20) {
  if (pred.size() != truth.size() || static_cast<std::size_t>(truth.size()) != readouts.size())
    throw Error(ErrorCode::LengthMismatch, "c20 inputs differ in length");
  if (truth.size() < 2) throw Error(ErrorCode::LengthMismatch, "c20 needs at least 2 readouts");
  const auto idx = top_abs_indices(truth, readouts, top_k);
  std::vector<double> p, t;
  for (auto i : idx) {
    p.push_back(pred[static_cast<Eigen::Index>(i)]);
    t.push_back(truth[static_cast<Eigen::Index>(i)]);
  }
  if (std::all_of(t.begin(), t.end(), [&](double v) { return v == t.front(); }))
    throw Error(ErrorCode::ConstantInput, "selected truth subset is constant");
  return pearson(p, t);
}

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n = 0;
  bool sem_defined = false;  // false when n < 2
};

/// Mean and standard error (Bessel-corrected sd / sqrt(n)).
inline MeanSem mean_sem(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyScores, "mean_sem of no scores");
  MeanSem out;
  out.n = scores.size();
  const double n = static_cast<double>(scores.size());
  out.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  if (scores.size() >= 2) {
    double ss = 0.0;
    for (double s : scores) ss += (s - out.mean) * (s - out.mean);
    out.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    out.sem_defined = true;
  }
  return out;
}

}  // namespace mechpert
