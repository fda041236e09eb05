#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phylnet/model.hpp"
#include "phylnet/rng.hpp"
#include "phylnet/tree.hpp"

namespace phylnet {

// Generative sampling from the model: tree -> branching Brownian features ->
// Bernoulli edges.
struct GenerativeSpec {
  int V = 60;
  int K = 3;
  int M = 30;
  double b0 = 0.6;
  double sigma0_2 = 0.6;
  double a0 = 2.6;
  Eigen::MatrixXd mu0;            // M x K centering; empty means all zeros
  std::optional<PhyloTree> tree;  // fixed truth tree; sampled from the prior when absent
  std::vector<std::string> labels;  // defaults to v1..vV
};

struct ProbabilityMatrixSpec {
  int V = 0;
  int M = 1;
  Eigen::MatrixXd P;  // symmetric edge probabilities, zero diagonal
  std::vector<std::string> labels;
};

struct GenerativeResult {
  PhyloTree tree;
  LatentFeatures features;
  NetworkData data;
};

GenerativeResult simulate_generative(const GenerativeSpec& spec, Rng& rng);
NetworkData simulate_from_probability_matrix(const ProbabilityMatrixSpec& spec, Rng& rng);

// Community-structured preset (illustrative defaults, not calibrated values).
Eigen::MatrixXd block_probability_matrix(int V, int n_blocks, double within, double between);

}  // namespace phylnet
