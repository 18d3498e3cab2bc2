#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mechpert/error.hpp"

namespace mechpert {

/// Points at or beyond this norm are pulled back inside the ball.
constexpr double kBallBoundary = 1.0 - 1e-12;
constexpr double kReprojectNorm = 1.0 - 1e-9;

/// A point of the unit Poincaré ball (curvature -1).
class PoincarePoint {
 public:
  PoincarePoint() = default;

  explicit PoincarePoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
    const double n = coords_.norm();
    if (!(n < 1.0)) throw Error(ErrorCode::OutsideBall, "norm " + std::to_string(n));
    if (n >= kBallBoundary) coords_ *= kReprojectNorm / n;
  }

  /// Rescales radially to stay strictly inside the ball instead of throwing.
  static PoincarePoint projected(Eigen::VectorXd coords) {
    const double n = coords.norm();
    if (n >= kBallBoundary) coords *= kReprojectNorm / n;
    return PoincarePoint(std::move(coords));
  }

  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  Eigen::Index dim() const noexcept { return coords_.size(); }
  double norm() const { return coords_.norm(); }

 private:
  Eigen::VectorXd coords_;
};

/// Geodesic distance, arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2))), evaluated in
/// the equivalent 2*asinh form which keeps precision for nearby points.
inline double poincare_distance(const PoincarePoint& u, const PoincarePoint& v) {
  if (u.dim() != v.dim()) throw Error(ErrorCode::DimensionMismatch, "poincare_distance");
  const double du = 1.0 - u.coords().squaredNorm();
  const double dv = 1.0 - v.coords().squaredNorm();
  if (!(du > 0.0) || !(dv > 0.0)) throw Error(ErrorCode::OutsideBall, "poincare_distance");
  const double diff = (u.coords() - v.coords()).norm();
  return 2.0 * std::asinh(diff / std::sqrt(du * dv));
}

/// Lorentz-factor weighted mean computed in the Klein model and mapped back.
inline PoincarePoint einstein_midpoint(std::span<const PoincarePoint> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "einstein_midpoint of no points");
  const Eigen::Index dim = points.front().dim();
  Eigen::VectorXd numer = Eigen::VectorXd::Zero(dim);
  double denom = 0.0;
  for (const auto& p : points) {
    if (p.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "einstein_midpoint");
    const double sq = p.coords().squaredNorm();
    const Eigen::VectorXd klein = 2.0 * p.coords() / (1.0 + sq);
    // 1 - |k|^2 = ((1 - |p|^2) / (1 + |p|^2))^2, so gamma has a closed form in p.
    const double gamma = (1.0 + sq) / (1.0 - sq);
    numer += gamma * klein;
    denom += gamma;
  }
  const Eigen::VectorXd m = numer / denom;
  const double mk = std::min(m.squaredNorm(), 1.0);
  return PoincarePoint::projected(m / (1.0 + std::sqrt(1.0 - mk)));
}

/// Nearest-rank percentile of `distances`. A zero result falls back to the
/// smallest positive distance, or 1e-6 when every distance is zero.
inline double percentile_bandwidth(std::span<const double> distances, double pct) {
  if (distances.empty()) throw Error(ErrorCode::EmptyInput, "percentile_bandwidth");
  if (!(pct > 0.0 && pct < 100.0)) throw Error(ErrorCode::InvalidConfig, "percentile must be in (0,100)");
  std::vector<double> sorted(distances.begin(), distances.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  double sigma = sorted[rank - 1];
  if (sigma <= 0.0) {
    auto pos = std::find_if(sorted.begin(), sorted.end(), [](double d) { return d > 0.0; });
    sigma = pos == sorted.end() ? 1e-6 : *pos;
  }
  return sigma;
}

inline double gaussian_density_weight(double d, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidConfig, "sigma must be positive");
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

}  // namespace mechpert
