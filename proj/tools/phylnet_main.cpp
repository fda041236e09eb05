#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phylnet/cli.hpp"

namespace {

phylnet::RunConfig resolve_config(const std::string& config_path,
                                  const phylnet::CliOverrides& overrides) {
  phylnet::RunConfig cfg;
  if (!config_path.empty()) cfg = phylnet::load_config_file(config_path);
  phylnet::apply_env_overrides(cfg);
  phylnet::apply_overrides(cfg, overrides);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phylnet: phylogenetic latent space network model"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", truth_path;
  phylnet::CliOverrides overrides;
  std::uint64_t seed_flag = 0;
  int jobs_flag = 0;
  double threshold_flag = 0, level_flag = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration file (key = value)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_flag, "master RNG seed")
        ->each([&](const std::string&) { overrides.seed = seed_flag; });
    sub->add_option("--jobs", jobs_flag, "max worker threads (0 = default)")
        ->each([&](const std::string&) { overrides.jobs = jobs_flag; });
  };

  auto* sim = app.add_subcommand("simulate", "simulate networks from the generative model");
  add_common(sim);

  auto* fit = app.add_subcommand("fit", "run the Metropolis-within-Gibbs sampler");
  add_common(fit);
  std::vector<std::string> data_paths;
  fit->add_option("data", data_paths, "adjacency CSV files or directories")->required();

  auto* summ = app.add_subcommand("summarize", "summarize posterior tree samples");
  add_common(summ);
  std::vector<std::string> log_paths;
  summ->add_option("logs", log_paths, "sample log files")->required();
  summ->add_option("--truth", truth_path, "truth tree Newick for the credible radius");
  summ->add_option("--threshold", threshold_flag, "consensus support threshold")
      ->each([&](const std::string&) { overrides.threshold = threshold_flag; });
  summ->add_option("--level", level_flag, "credible level")
      ->each([&](const std::string&) { overrides.level = level_flag; });

  auto* dist = app.add_subcommand("dist", "normalized Robinson-Foulds distance of two trees");
  std::string newick_a, newick_b;
  dist->add_option("tree_a", newick_a, "Newick file")->required();
  dist->add_option("tree_b", newick_b, "Newick file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      phylnet::cmd_simulate(resolve_config(config_path, overrides), out_dir);
    } else if (fit->parsed()) {
      phylnet::cmd_fit(resolve_config(config_path, overrides), data_paths, out_dir);
    } else if (summ->parsed()) {
      phylnet::cmd_summarize(resolve_config(config_path, overrides), log_paths, out_dir,
                             truth_path);
    } else if (dist->parsed()) {
      std::printf("%.12g\n", phylnet::cmd_dist(newick_a, newick_b));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
