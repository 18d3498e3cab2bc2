#include <gtest/gtest.h>

#include "mechpert/commands.hpp"
#include "support.hpp"

using namespace mechpert;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

/// Synthetic world on disk plus the run config that points at it.
struct SynthFixture {
  TempDir dir;
  RunConfig config;
  SynthFixture() {
    RunConfig c;
    c.output_dir = dir.path().string();
    c.synthetic_seed = 2;
    EXPECT_EQ(cmd_synth(c), 0);
    config = config_from_json(load_config_json(dir / "config.json"));
  }
  RunConfig with_output(const std::string& name) const {
    RunConfig c = config;
    c.output_dir = (dir / name).string();
    return c;
  }
};

int code_of(const std::function<void()>& f) {
  return run_guarded([&] {
    f();
    return 0;
  });
}

}  // namespace

TEST(Config, DefaultsAndSnapshot) {
  RunConfig c;
  const json j = c;
  EXPECT_EQ(j["k_chains"], 3);
  EXPECT_EQ(j["alpha"], 0.85);
  EXPECT_EQ(j["sizes"], json({50, 100, 200, 500, 800}));
  EXPECT_EQ(config_snapshot(config_from_json(j)), config_snapshot(c));
  EXPECT_EQ(config_snapshot(c).back(), '\n');
}

TEST(Config, UnknownKeyRejected) {
  try {
    config_from_json({{"k_chain", 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    EXPECT_NE(std::string(e.what()).find("k_chain"), std::string::npos);
  }
  EXPECT_THROW(config_from_json({{"k_chains", "three"}}), Error);
  EXPECT_THROW(config_from_json(json::array()), Error);
}

TEST(Config, Validation) {
  auto bad = [](json patch) {
    try {
      validate(config_from_json(patch));
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidConfig;
    }
    return false;
  };
  EXPECT_TRUE(bad({{"k_chains", 0}}));
  EXPECT_TRUE(bad({{"alpha", 1.0}}));
  EXPECT_TRUE(bad({{"beta", -1.0}}));
  EXPECT_TRUE(bad({{"pct_harmonizer", 100.0}}));
  EXPECT_TRUE(bad({{"strategy", "magic"}}));
  EXPECT_FALSE(bad({{"k_chains", 5}}));
}

TEST(Config, CoerceFlags) {
  EXPECT_EQ(coerce_flag("k_chains", "5"), 5);
  EXPECT_EQ(coerce_flag("alpha", "0.5"), 0.5);
  EXPECT_EQ(coerce_flag("restrict_graph", "true"), true);
  EXPECT_EQ(coerce_flag("sizes", "10,20"), json({10, 20}));
  EXPECT_EQ(coerce_flag("seeds", "0,18446744073709551615"), json({0ull, 18446744073709551615ull}));
  EXPECT_EQ(coerce_flag("strategies", "semantic,binary"), json({"semantic", "binary"}));
  EXPECT_EQ(coerce_flag("cell_line", "K562"), "K562");
  EXPECT_THROW(coerce_flag("k_chains", "3x"), Error);
  EXPECT_THROW(coerce_flag("seeds", "-1"), Error);
  EXPECT_EQ(flag_name("k_chains"), "k-chains");
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::ProviderUnavailable), kExitTransport);
  EXPECT_EQ(exit_code_for(ErrorCode::InvalidConfig), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::MalformedRow), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorCode::NoValidNeighbors), kExitPrediction);
  EXPECT_EQ(code_of([] { throw Error(ErrorCode::InvalidConfig, "x"); }), kExitConfig);
  EXPECT_EQ(code_of([] { throw std::runtime_error("boom"); }), kExitInternal);
}

TEST(Commands, SynthWritesInputs) {
  SynthFixture f;
  for (const char* name : {"dataset.tsv", "ppi.tsv", "euclidean.tsv", "poincare.tsv", "grn.json", "config.json"})
    EXPECT_TRUE(std::filesystem::exists(f.dir / name)) << name;
  EXPECT_EQ(f.config.sizes, std::vector<int>{50});
  EXPECT_EQ(f.config.cell_line, "SYNTH");
}

TEST(Commands, PredictWritesTsvAndProvenance) {
  SynthFixture f;
  auto c = f.with_output("predict");
  c.targets = {"SYN001", "syn001", "SYN002"};
  EXPECT_EQ(cmd_predict(c), 0);
  const auto tsv = slurp(std::filesystem::path(c.output_dir) / "predictions.tsv");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 3);
  EXPECT_EQ(tsv.rfind("target\tSYN001\t", 0), 0u);
  const auto prov = json::parse(slurp(std::filesystem::path(c.output_dir) / "provenance.json"));
  EXPECT_EQ(prov["targets"].size(), 2u);
  EXPECT_EQ(prov["targets"]["SYN001"]["chains"].size(), 3u);
  EXPECT_TRUE(prov["targets"]["SYN001"].contains("consensus"));
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output_dir) / "config.json"));
}

TEST(Commands, PredictAllStrategies) {
  SynthFixture f;
  for (const char* s : {"semantic", "binary", "confidence", "3+2", "harmonizer", "spectral"}) {
    auto c = f.with_output(std::string("p_") + (s[0] == '3' ? "tp" : s));
    c.strategy = s;
    c.targets = {"SYN010"};
    EXPECT_EQ(cmd_predict(c), 0) << s;
  }
}

TEST(Commands, CacheRecordThenReplayIsByteIdentical) {
  SynthFixture f;
  auto rec = f.with_output("rec");
  rec.provider = "cache";
  rec.cache_backend = "synthetic";
  rec.cache_dir = (f.dir / "cache").string();
  rec.targets = {"SYN003", "SYN004"};
  EXPECT_EQ(cmd_predict(rec), 0);
  auto rep = rec;
  rep.output_dir = (f.dir / "rep").string();
  rep.cache_backend = "replay";
  EXPECT_EQ(cmd_predict(rep), 0);
  EXPECT_EQ(slurp(f.dir / "rec" / "predictions.tsv"), slurp(f.dir / "rep" / "predictions.tsv"));

  auto miss = rep;
  miss.output_dir = (f.dir / "miss").string();
  miss.targets = {"SYN005"};
  EXPECT_EQ(run_guarded([&] { return cmd_predict(miss); }), kExitTransport);
}

TEST(Commands, BenchmarkDeterministic) {
  SynthFixture f;
  auto a = f.with_output("b1");
  a.max_targets = 10;
  auto b = a;
  b.output_dir = a.output_dir;
  EXPECT_EQ(cmd_benchmark(a), 0);
  const auto first = slurp(std::filesystem::path(a.output_dir) / "benchmark.json");
  EXPECT_EQ(cmd_benchmark(b), 0);
  EXPECT_EQ(first, slurp(std::filesystem::path(b.output_dir) / "benchmark.json"));
  const auto md = slurp(std::filesystem::path(a.output_dir) / "benchmark.md");
  EXPECT_NE(md.find("| LangPert | Binary Consensus | MechPert | Rel. Improv. |"), std::string::npos);
}

TEST(Commands, AblateWritesThreeRows) {
  SynthFixture f;
  auto c = f.with_output("abl");
  c.max_targets = 10;
  EXPECT_EQ(cmd_ablate(c), 0);
  const auto j = json::parse(slurp(std::filesystem::path(c.output_dir) / "ablation.json"));
  EXPECT_EQ(j["rows"].size(), 3u);
  EXPECT_EQ(j["cells"][0]["n"], 50);
}

TEST(Commands, AnchorsSelectAndEvaluate) {
  SynthFixture f;
  auto c = f.with_output("anc");
  c.anchor_strategy = "all";
  c.budget = 12;
  c.batch = 4;
  EXPECT_EQ(cmd_anchors_select(c), 0);
  const auto path = std::filesystem::path(c.output_dir) / "anchors.json";
  const auto first = slurp(path);
  EXPECT_EQ(cmd_anchors_select(c), 0);
  EXPECT_EQ(first, slurp(path));
  const auto j = json::parse(first);
  ASSERT_EQ(j["sets"].size(), 4u);
  for (const auto& s : j["sets"]) EXPECT_EQ(s["anchors"].size(), 12u);

  auto e = f.with_output("eval");
  e.anchors_path = path.string();
  e.beta = 0.5;
  EXPECT_EQ(cmd_anchors_evaluate(e), 0);
  const auto ev = json::parse(slurp(std::filesystem::path(e.output_dir) / "anchor_evaluation.json"));
  EXPECT_FALSE(ev.dump().empty());
  const auto md = slurp(std::filesystem::path(e.output_dir) / "anchor_evaluation.md");
  EXPECT_EQ(md.rfind("| Cell Line |", 0), 0u);
}

TEST(Commands, InputErrorsMapToConfigExit) {
  SynthFixture f;
  auto c = f.with_output("err");
  c.dataset_path = (f.dir / "missing.tsv").string();
  c.targets = {"SYN001"};
  EXPECT_EQ(run_guarded([&] { return cmd_predict(c); }), kExitConfig);
  auto d = f.with_output("err2");
  d.sizes = {100};
  EXPECT_EQ(run_guarded([&] { return cmd_benchmark(d); }), kExitConfig);
}
