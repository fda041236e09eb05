#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phylnet/model.hpp"
#include "phylnet/sampler.hpp"

namespace phylnet {

// Flat key = value run configuration; unknown keys are errors, every field
// has a default (the hyperparameter defaults follow the reference settings:
// alpha/beta = 1, sigma_a2 = 100, sigma_mu2 = 1000, K = 3, target 0.23).
struct RunConfig {
  Hyperparams hyper;
  SamplerConfig sampler;

  // scenario (simulate)
  std::string scenario = "generative";  // generative | blocks
  int V = 60;
  int M = 30;
  double b0 = 0.6;
  double sigma0_2 = 0.6;
  double a0 = 2.6;
  double mu0 = 0.0;            // broadcast to every (m, k)
  std::string truth_tree;      // optional Newick path fixing the tree
  int n_blocks = 5;
  double within_prob = 0.6;
  double between_prob = 0.1;

  // summarize
  double threshold = 0.8;
  double level = 0.9;

  int jobs = 0;  // OpenMP thread cap; 0 = runtime default
};

RunConfig parse_config(const std::string& content, const std::string& origin);
RunConfig load_config_file(const std::string& path);
// PHYLNET_SEED and PHYLNET_JOBS environment overrides (between file and flags).
void apply_env_overrides(RunConfig& config);

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> threshold;
  std::optional<double> level;
};
void apply_overrides(RunConfig& config, const CliOverrides& o);

// Subcommand bodies; they throw on invalid input and return the paths written.
std::vector<std::string> cmd_simulate(const RunConfig& config, const std::string& out_dir);
std::vector<std::string> cmd_fit(const RunConfig& config, const std::vector<std::string>& data_paths,
                                 const std::string& out_dir);
std::vector<std::string> cmd_summarize(const RunConfig& config,
                                       const std::vector<std::string>& log_paths,
                                       const std::string& out_dir,
                                       const std::string& truth_path);
double cmd_dist(const std::string& newick_path_a, const std::string& newick_path_b);

// Directory arguments expand to their *.csv entries, sorted lexicographically.
std::vector<std::string> expand_data_paths(const std::vector<std::string>& paths);

}  // namespace phylnet
