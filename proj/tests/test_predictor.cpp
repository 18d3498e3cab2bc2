#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mechpert/predictor.hpp"
#include "support.hpp"

using namespace mechpert;
using testing_support::chain;
using testing_support::dataset_of;
using testing_support::vec;

namespace {

GeneSet train_of(std::initializer_list<std::string_view> names) { return to_set(genes(names)); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidConfig;
}

}  // namespace

TEST(Predict, WeightedAverageHandFixture) {
  auto ds = dataset_of({{"A", vec({1.0, 2.0})}, {"B", vec({-1.0, 4.0})}});
  WeightedNeighborhood nb{{{GeneSymbol("A"), 1.4}, {GeneSymbol("B"), 0.9}}, Strategy::Confidence};
  auto y = predict(nb, ds);
  EXPECT_NEAR(y[0], (1.4 * 1.0 + 0.9 * -1.0) / 2.3, 1e-15);
  EXPECT_NEAR(y[1], (1.4 * 2.0 + 0.9 * 4.0) / 2.3, 1e-15);
}

TEST(Predict, Errors) {
  auto ds = dataset_of({{"A", vec({1.0, 2.0})}});
  EXPECT_EQ(code_of([&] { predict({{}, Strategy::Semantic}, ds); }), ErrorCode::EmptyNeighborhood);
  EXPECT_EQ(code_of([&] { predict({{{GeneSymbol("Q"), 1.0}}, Strategy::Semantic}, ds); }), ErrorCode::MissingProfile);
  EXPECT_EQ(code_of([&] { predict({{{GeneSymbol("A"), 0.0}}, Strategy::Semantic}, ds); }), ErrorCode::ZeroTotalWeight);
}

// Convex envelope and scale invariance over random neighborhoods.
TEST(Predict, ConvexityAndScaleInvariance) {
  Xoshiro256 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    const int d = 1 + static_cast<int>(rng.below(6));
    std::map<std::string, Eigen::VectorXd> rows;
    WeightedNeighborhood nb;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd y(d);
      for (int j = 0; j < d; ++j) y[j] = rng.normal() * 3.0;
      rows["G" + std::to_string(i)] = y;
      nb.entries[GeneSymbol("G" + std::to_string(i))] = 1e-3 + rng.uniform();
    }
    auto ds = dataset_of(rows);
    const auto y = predict(nb, ds);
    for (int j = 0; j < d; ++j) {
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& [_, r] : rows) {
        lo = std::min(lo, r[j]);
        hi = std::max(hi, r[j]);
      }
      EXPECT_GE(y[j], lo - 1e-12);
      EXPECT_LE(y[j], hi + 1e-12);
    }
    WeightedNeighborhood scaled = nb;
    const double lambda = std::ldexp(1.0, static_cast<int>(rng.below(20)) - 10) * (1.0 + rng.uniform());
    for (auto& [_, w] : scaled.entries) w *= lambda;
    EXPECT_LE((predict(scaled, ds) - y).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

TEST(Predict, IdenticalProfilesReproduceProfile) {
  auto same = vec({0.3, -1.2, 4.0});
  auto ds = dataset_of({{"A", same}, {"B", same}, {"C", same}});
  WeightedNeighborhood nb{{{GeneSymbol("A"), 0.1}, {GeneSymbol("B"), 7.0}, {GeneSymbol("C"), 2.5}}, Strategy::Binary};
  EXPECT_LE((predict(nb, ds) - same).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(Neighborhoods, SemanticUsesChainZeroOnly) {
  std::vector<HypothesisChain> chains{chain(0, {"A", "B", "OUT"}, {}), chain(1, {"C"}, {})};
  auto nb = build_semantic_neighborhood(chains, train_of({"A", "B", "C"}));
  EXPECT_EQ(nb.entries.size(), 2u);
  EXPECT_EQ(nb.entries.at(GeneSymbol("A")), 1.0);
  EXPECT_EQ(code_of([&] { build_semantic_neighborhood(chains, train_of({"Z"})); }), ErrorCode::NoValidNeighbors);
}

TEST(Neighborhoods, MechpertAdditiveOverlap) {
  std::vector<HypothesisChain> chains{chain(0, {"A", "S"}, {{"A", 0.8}}), chain(1, {}, {{"A", 0.6}}),
                                      chain(2, {}, {{"B", 0.9}, {"OUT", 1.0}})};
  const auto train = train_of({"A", "B", "S"});
  auto conf = build_mechpert_neighborhood(chains, ConsensusMode::Confidence, train);
  EXPECT_NEAR(conf.entries.at(GeneSymbol("A")), 1.4 + 1.0, 1e-15);
  EXPECT_EQ(conf.entries.at(GeneSymbol("B")), 0.9);
  EXPECT_EQ(conf.entries.at(GeneSymbol("S")), 1.0);
  EXPECT_FALSE(conf.entries.count(GeneSymbol("OUT")));
  auto bin = build_mechpert_neighborhood(chains, ConsensusMode::Binary, train);
  EXPECT_EQ(bin.entries.at(GeneSymbol("A")), 3.0);
  EXPECT_EQ(bin.entries.at(GeneSymbol("B")), 1.0);
  EXPECT_EQ(code_of([&] { build_mechpert_neighborhood(chains, ConsensusMode::Binary, train_of({"Z"})); }),
            ErrorCode::NoValidNeighbors);
}

TEST(Neighborhoods, SingleChainBinaryEqualsSemanticPlusUnitCausal) {
  std::vector<HypothesisChain> chains{chain(0, {"A", "B"}, {{"C", 0.3}})};
  auto nb = build_mechpert_neighborhood(chains, ConsensusMode::Binary, train_of({"A", "B", "C"}));
  EXPECT_EQ(nb.entries.size(), 3u);
  for (const auto& [_, w] : nb.entries) EXPECT_EQ(w, 1.0);
}

TEST(ThreePlusTwo, NearestNeighborFixture) {
  EmbeddingMap emb{Geometry::Euclidean, 2, {}};
  emb.vectors[GeneSymbol("S1")] = vec({0, 0});
  emb.vectors[GeneSymbol("S2")] = vec({2, 0});
  emb.vectors[GeneSymbol("S3")] = vec({4, 0});
  emb.vectors[GeneSymbol("NEAR1")] = vec({2.1, 0});
  emb.vectors[GeneSymbol("NEAR2")] = vec({1.9, 0});
  emb.vectors[GeneSymbol("FAR")] = vec({9, 9});
  const auto train = train_of({"S1", "S2", "S3", "NEAR1", "NEAR2", "FAR"});
  auto d = three_plus_two_neighborhood(genes({"S1", "S2", "S3"}), emb, train);
  EXPECT_EQ(d.centroid, vec({2, 0}));

  // Brute-force oracle: every non-seed candidate ranked by distance.
  std::vector<std::pair<double, std::string>> all;
  for (const char* g : {"NEAR1", "NEAR2", "FAR"})
    all.emplace_back((emb.vectors.at(GeneSymbol(g)) - vec({2, 0})).norm(), g);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(to_set(d.geometric_neighbors), to_set(genes({all[0].second.c_str(), all[1].second.c_str()})));
  EXPECT_EQ(d.neighborhood.entries.size(), 5u);
  for (const auto& [_, w] : d.neighborhood.entries) EXPECT_EQ(w, 1.0);
}

TEST(ThreePlusTwo, RandomBruteForce) {
  Xoshiro256 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    EmbeddingMap emb{Geometry::Euclidean, 3, {}};
    GeneSet train;
    for (int i = 0; i < 12; ++i) {
      GeneSymbol g("G" + std::to_string(i));
      emb.vectors[g] = vec({rng.normal(), rng.normal(), rng.normal()});
      train.insert(g);
    }
    const auto seeds = genes({"G0", "G1", "G2"});
    const GeneSet exclude{GeneSymbol("G3")};
    auto d = three_plus_two_neighborhood(seeds, emb, train, exclude);
    const Eigen::VectorXd c = (emb.vectors[GeneSymbol("G0")] + emb.vectors[GeneSymbol("G1")] +
                               emb.vectors[GeneSymbol("G2")]) / 3.0;
    std::vector<std::pair<double, GeneSymbol>> ranked;
    for (int i = 4; i < 12; ++i) {
      GeneSymbol g("G" + std::to_string(i));
      ranked.emplace_back((emb.vectors[g] - c).norm(), g);
    }
    std::sort(ranked.begin(), ranked.end());
    EXPECT_EQ(d.geometric_neighbors, (GeneList{ranked[0].second, ranked[1].second}));
  }
}

TEST(ThreePlusTwo, Errors) {
  EmbeddingMap emb{Geometry::Euclidean, 1, {}};
  emb.vectors[GeneSymbol("A")] = vec({0});
  emb.vectors[GeneSymbol("B")] = vec({1});
  emb.vectors[GeneSymbol("C")] = vec({2});
  emb.vectors[GeneSymbol("D")] = vec({3});
  const auto train = train_of({"A", "B", "C", "D", "E"});
  EXPECT_EQ(code_of([&] { three_plus_two_neighborhood(genes({"A", "B"}), emb, train); }), ErrorCode::SeedCountNot3);
  EXPECT_EQ(code_of([&] { three_plus_two_neighborhood(genes({"A", "B", "E"}), emb, train); }),
            ErrorCode::InsufficientEmbeddedCandidates);
  EXPECT_EQ(code_of([&] { three_plus_two_neighborhood(genes({"A", "B", "C"}), emb, train); }),
            ErrorCode::InsufficientEmbeddedCandidates);
}

TEST(ExpertSeeds, FirstThreeInTraining) {
  std::vector<HypothesisChain> chains{chain(0, {"X", "A", "B", "Y", "C", "D"}, {})};
  EXPECT_EQ(expert_seeds(chains, train_of({"A", "B", "C", "D"})), genes({"A", "B", "C"}));
}

// Six-gene manifold fixture against scalar recomputation.
class SixNode : public ::testing::Test {
 protected:
  PpiGraph graph = fixtures::six_graph();
  EmbeddingMap poincare = fixtures::six_poincare();
  PerturbationDataset ds = fixtures::six_dataset();
  GeneSet train = to_set(genes({"A", "B", "C", "D", "E"}));
  GeneSymbol query{"F"};
  GeneList seeds = genes({"A", "B", "C"});

  std::map<std::string, double> ref_reach() {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
    p.head(3).setConstant(1.0 / 3.0);
    const auto pr = fixtures::dense_ppr(fixtures::six_adjacency(), p, 0.85);
    std::map<std::string, double> out;
    for (int i = 0; i < 5; ++i) out[fixtures::kSix[i]] = pr[i];
    return out;
  }

  std::map<std::string, double> ref_geometric(double pct) {
    const double xy[6][2] = {{0.1, 0.2}, {-0.3, 0.1}, {0.4, -0.2}, {0.0, 0.5}, {-0.2, -0.4}, {0.6, 0.3}};
    auto [mx, my] = fixtures::ref_midpoint({{0.1, 0.2}, {-0.3, 0.1}, {0.4, -0.2}});
    std::vector<double> d(5);
    for (int i = 0; i < 5; ++i) d[i] = fixtures::ref_poincare_distance(xy[i][0], xy[i][1], mx, my);
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * 5.0));
    const double sigma = sorted[std::max<std::size_t>(rank, 1) - 1];
    std::map<std::string, double> out;
    for (int i = 0; i < 5; ++i) out[fixtures::kSix[i]] = std::exp(-d[i] * d[i] / (2 * sigma * sigma));
    return out;
  }

  Eigen::VectorXd ref_predict(const std::map<std::string, double>& w) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
    double z = 0;
    for (const auto& [g, x] : w) {
      y += x * ds.profile(GeneSymbol(g));
      z += x;
    }
    return y / z;
  }
};

TEST_F(SixNode, HarmonizerMatchesScalarOracle) {
  auto d = harmonizer_neighborhood(seeds, graph, poincare, train, &query);
  const auto ref = ref_geometric(20.0);
  ASSERT_EQ(d.neighborhood.entries.size(), ref.size());
  for (const auto& [g, w] : ref) EXPECT_NEAR(d.neighborhood.entries.at(GeneSymbol(g)), w, 1e-12) << g;
  for (const auto& [g, r] : ref_reach()) EXPECT_NEAR(d.reach.at(GeneSymbol(g)), r, 1e-9) << g;
  const auto y = predict_harmonizer(seeds, graph, poincare, train, ds, &query);
  EXPECT_LE((y - ref_predict(ref)).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST_F(SixNode, SpectralIsElementwiseProduct) {
  auto d = spectral_neighborhood(seeds, graph, poincare, train, &query);
  const auto geo = ref_geometric(15.0);
  const auto reach = ref_reach();
  std::map<std::string, double> gated;
  for (const auto& [g, w] : geo) gated[g] = w * reach.at(g);
  for (const auto& [g, w] : gated) EXPECT_NEAR(d.neighborhood.entries.at(GeneSymbol(g)), w, 1e-9) << g;
  const auto y = predict_spectral(seeds, graph, poincare, train, ds, &query);
  EXPECT_LE((y - ref_predict(gated)).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST_F(SixNode, SeedsOutsideGraphOrBall) {
  EXPECT_EQ(code_of([&] { harmonizer_neighborhood(genes({"X", "Y", "Z"}), graph, poincare, train); }),
            ErrorCode::SeedNotInGraph);
  EmbeddingMap empty{Geometry::Poincare, 2, {}};
  EXPECT_EQ(code_of([&] { harmonizer_neighborhood(seeds, graph, empty, train); }),
            ErrorCode::InsufficientEmbeddedCandidates);
}

TEST_F(SixNode, DispatchAndFallback) {
  std::vector<HypothesisChain> chains{chain(0, {"A", "B", "C"}, {{"D", 0.5}})};
  PredictionInputs in{&ds, &train, &graph, nullptr, &poincare, {}};
  auto h = predict_target(Strategy::Harmonizer, query, chains, in);
  EXPECT_FALSE(h.fell_back);
  EXPECT_EQ(h.neighborhood.strategy, Strategy::Harmonizer);

  auto no_euclid = predict_target(Strategy::ThreePlusTwo, query, chains, in);
  EXPECT_TRUE(no_euclid.fell_back);
  EXPECT_EQ(no_euclid.neighborhood.strategy, Strategy::Semantic);

  std::vector<HypothesisChain> short_chains{chain(0, {"A", "B"}, {})};
  auto s = predict_target(Strategy::Spectral, query, short_chains, in);
  EXPECT_TRUE(s.fell_back);
  EXPECT_EQ(s.profile, predict(build_semantic_neighborhood(short_chains, train), ds));

  auto c = predict_target(Strategy::Confidence, query, chains, in);
  EXPECT_EQ(c.neighborhood.entries.size(), 4u);
}

TEST(Strategy, NamesRoundTrip) {
  for (auto s : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("bogus"), Error);
  EXPECT_EQ(display_name(Strategy::Semantic), "LangPert");
}
