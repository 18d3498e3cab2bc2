#pragma once

#include <cmath>
#include <map>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "mechpert/dataset.hpp"
#include "support.hpp"

// Six-gene world shared by the manifold, anchor and acceptance tests, plus
// scalar reference implementations that avoid the library's code paths.
namespace fixtures {

using namespace mechpert;

inline const char* const kSix[] = {"A", "B", "C", "D", "E", "F"};

inline PpiGraph six_graph() {
  return testing_support::graph_of({{"A", "B", 0.9},
                                    {"B", "C", 0.8},
                                    {"C", "D", 0.7},
                                    {"D", "E", 0.6},
                                    {"E", "F", 0.5},
                                    {"A", "C", 0.4},
                                    {"B", "E", 0.3}});
}

inline Eigen::MatrixXd six_adjacency() {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(6, 6);
  auto set = [&](int i, int j, double x) { w(i, j) = w(j, i) = x; };
  set(0, 1, 0.9);
  set(1, 2, 0.8);
  set(2, 3, 0.7);
  set(3, 4, 0.6);
  set(4, 5, 0.5);
  set(0, 2, 0.4);
  set(1, 4, 0.3);
  return w;
}

inline EmbeddingMap six_poincare() {
  EmbeddingMap e{Geometry::Poincare, 2, {}};
  const double xy[6][2] = {{0.1, 0.2}, {-0.3, 0.1}, {0.4, -0.2}, {0.0, 0.5}, {-0.2, -0.4}, {0.6, 0.3}};
  for (int i = 0; i < 6; ++i) e.vectors[GeneSymbol(kSix[i])] = testing_support::vec({xy[i][0], xy[i][1]});
  return e;
}

inline PerturbationDataset six_dataset() {
  using testing_support::vec;
  return testing_support::dataset_of({{"A", vec({1.0, -0.5, 0.2, 0.0})},
                                      {"B", vec({0.8, -0.1, 0.4, -0.3})},
                                      {"C", vec({-0.2, 0.9, 0.1, 0.5})},
                                      {"D", vec({0.3, 0.3, -0.7, 0.2})},
                                      {"E", vec({-0.6, 0.2, 0.5, 0.9})},
                                      {"F", vec({0.1, -0.8, 0.6, -0.4})}});
}

/// pr = (1-alpha) (I - alpha W D^-1)^-1 p by dense solve.
inline Eigen::VectorXd dense_ppr(const Eigen::MatrixXd& w, const Eigen::VectorXd& p, double alpha) {
  const auto n = w.rows();
  Eigen::MatrixXd a = w;
  for (Eigen::Index j = 0; j < n; ++j) a.col(j) /= w.col(j).sum();
  return (1.0 - alpha) * (Eigen::MatrixXd::Identity(n, n) - alpha * a).partialPivLu().solve(p);
}

inline double ref_poincare_distance(double ux, double uy, double vx, double vy) {
  const double diff = (ux - vx) * (ux - vx) + (uy - vy) * (uy - vy);
  const double nu = ux * ux + uy * uy, nv = vx * vx + vy * vy;
  return std::acosh(1.0 + 2.0 * diff / ((1.0 - nu) * (1.0 - nv)));
}

/// Einstein midpoint by explicit Klein-model arithmetic in 2-d.
inline std::pair<double, double> ref_midpoint(const std::vector<std::pair<double, double>>& pts) {
  double sx = 0, sy = 0, sg = 0;
  for (auto [x, y] : pts) {
    const double n2 = x * x + y * y;
    const double kx = 2 * x / (1 + n2), ky = 2 * y / (1 + n2);
    const double g = 1.0 / std::sqrt(1.0 - (kx * kx + ky * ky));
    sx += g * kx;
    sy += g * ky;
    sg += g;
  }
  const double mx = sx / sg, my = sy / sg;
  const double s = 1.0 + std::sqrt(1.0 - (mx * mx + my * my));
  return {mx / s, my / s};
}

inline double ref_pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double mx = x.mean(), my = y.mean();
  double sxy = 0, sxx = 0, syy = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Mean C20 of heat-kernel interpolation from `anchors`, using a dense
/// matrix exponential of the normalized Laplacian. Readouts number fewer
/// than 20, so C20 is the plain Pearson correlation.
inline double ref_anchor_mean(const std::vector<int>& anchors, double beta) {
  const Eigen::MatrixXd l = testing_support::dense_normalized_laplacian(six_adjacency());
  const Eigen::MatrixXd k = (-beta * l).exp();
  const auto ds = six_dataset();
  double total = 0;
  int count = 0;
  for (int t = 0; t < 6; ++t) {
    if (std::find(anchors.begin(), anchors.end(), t) != anchors.end()) continue;
    Eigen::VectorXd pred = Eigen::VectorXd::Zero(4);
    double z = 0;
    for (int a : anchors) {
      pred += k(a, t) * ds.profile(GeneSymbol(kSix[a]));
      z += k(a, t);
    }
    total += ref_pearson(pred / z, ds.profile(GeneSymbol(kSix[t])));
    ++count;
  }
  return total / count;
}

}  // namespace fixtures
