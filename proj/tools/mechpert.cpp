// mechpert command-line front end.
//
//   mechpert synth --synthetic-seed 7 --output-dir world
//   mechpert benchmark --config world/config.json
//   mechpert predict --config run.json --targets GATA1,TAL1
//   mechpert anchors select --config run.json --anchor-strategy all
//   mechpert anchors evaluate --config run.json --anchors-path out/anchors.json
//   mechpert ablate --config run.json
//
// Configuration layers: built-in defaults, then --config FILE, then flags.

#include <CLI11.hpp>

#include "mechpert/commands.hpp"

using namespace mechpert;

namespace {

struct Flags {
  std::string config_path;
  std::map<std::string, std::string> values;  // config key -> raw flag text
  std::vector<std::string> positional_targets;
};

void add_config_flags(CLI::App& cmd, Flags& flags) {
  cmd.add_option("-c,--config", flags.config_path, "Run-config JSON file");
  const json defaults = RunConfig{};
  for (const auto& [key, value] : defaults.items()) {
    std::string help = "Default: " + (value.is_string() ? value.get<std::string>() : value.dump());
    if (value.is_array()) help += " (comma separated)";
    cmd.add_option("--" + flag_name(key), flags.values[key], help);
  }
}

RunConfig resolve_config(const CLI::App& cmd, const Flags& flags) {
  json patch = flags.config_path.empty() ? json::object() : load_config_json(flags.config_path);
  if (!patch.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, text] : flags.values)
    if (cmd.count("--" + flag_name(key)) > 0) patch[key] = coerce_flag(key, text);
  if (!flags.positional_targets.empty()) patch["targets"] = flags.positional_targets;
  auto config = config_from_json(patch);
  apply_log_level(config.log_level);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus-weighted perturbation response prediction and anchor design"};
  app.require_subcommand(1);

  Flags predict_flags, bench_flags, ablate_flags, select_flags, eval_flags, synth_flags;
  SyntheticWorldParams world;

  auto* predict = app.add_subcommand("predict", "Predict responses for unseen perturbations");
  add_config_flags(*predict, predict_flags);
  predict->add_option("genes", predict_flags.positional_targets, "Target genes (alternative to --targets)");

  auto* bench = app.add_subcommand("benchmark", "Scaling benchmark over training sizes and seeds");
  add_config_flags(*bench, bench_flags);

  auto* ablate = app.add_subcommand("ablate", "Consensus ablation at the first training size");
  add_config_flags(*ablate, ablate_flags);

  auto* anchors = app.add_subcommand("anchors", "Anchor-set design and evaluation");
  anchors->require_subcommand(1);
  auto* select = anchors->add_subcommand("select", "Select anchor sets under a budget");
  add_config_flags(*select, select_flags);
  auto* evaluate = anchors->add_subcommand("evaluate", "Score anchor sets with the heat-kernel interpolator");
  add_config_flags(*evaluate, eval_flags);

  auto* synth = app.add_subcommand("synth", "Write a synthetic planted-GRN world and matching config");
  add_config_flags(*synth, synth_flags);
  synth->add_option("--n-genes", world.n_genes, "Genes in the synthetic world")->check(CLI::Range(10, 100000));
  synth->add_option("--n-modules", world.n_modules, "Co-regulated modules")->check(CLI::Range(1, 10000));
  synth->add_option("--regulators-per-gene", world.regulators_per_gene, "Planted regulators per gene");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  auto run = [](const CLI::App& cmd, const Flags& flags, auto body) {
    return run_guarded([&] { return body(resolve_config(cmd, flags)); });
  };
  if (*predict) return run(*predict, predict_flags, cmd_predict);
  if (*bench) return run(*bench, bench_flags, cmd_benchmark);
  if (*ablate) return run(*ablate, ablate_flags, cmd_ablate);
  if (*select) return run(*select, select_flags, cmd_anchors_select);
  if (*evaluate) return run(*evaluate, eval_flags, cmd_anchors_evaluate);
  if (*synth) return run(*synth, synth_flags, [&](const RunConfig& c) { return cmd_synth(c, world); });
  return kExitConfig;
}
