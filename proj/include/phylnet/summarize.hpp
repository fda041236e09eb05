#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phylnet/tree.hpp"

namespace phylnet {

// Posterior tree samples sharing one leaf label set.
struct TreeSampleSet {
  std::vector<PhyloTree> trees;
  std::vector<std::string> labels;  // sorted; the mask order used by all splits
};
TreeSampleSet make_sample_set(std::vector<PhyloTree> trees);

// Majority-threshold consensus: retains the splits appearing in a fraction
// > threshold of the samples (threshold >= 0.5 keeps them pairwise
// compatible), assembles the unique laminar tree, possibly multifurcating.
// Node ages are means over the supporting samples.
struct ConsensusNode {
  std::vector<int> children;
  int parent = -1;
  double age = 0.0;
  double support = 1.0;
  Split clade;
};

struct ConsensusTree {
  std::vector<ConsensusNode> nodes;  // 0..V-1 leaves in sorted label order
  int root = -1;
  std::vector<std::string> labels;
};

ConsensusTree consensus(const TreeSampleSet& samples, double threshold);
// Newick with support values as bracketed node comments.
std::string consensus_to_newick(const ConsensusTree& tree);
std::vector<std::string> consensus_leaf_order(const ConsensusTree& tree);
// Split-set symmetric difference against a binary tree, normalized by 2(V-2).
double consensus_rf_to_tree(const ConsensusTree& consensus_tree, const PhyloTree& tree,
                            bool normalized = true);

// DensiTree export: every sample re-serialized under a shared leaf ordering
// plus an (x = age, y = position) coordinate table for external plotting.
struct DensitreeExport {
  std::vector<std::string> newicks;
  std::string coordinate_table;  // tab-separated, one row per (tree, node)
};
DensitreeExport densitree_export(const TreeSampleSet& samples,
                                 const std::vector<std::string>& leaf_order);

// Distance of the reference to the farthest tree among the closest
// level-fraction of the samples (normalized RF).
double credible_radius(const TreeSampleSet& samples, const PhyloTree& reference, double level);

// Scalar-chain summaries.
double quantile(std::vector<double> values, double q);  // type-7
double ess_batch_means(const std::vector<double>& trace);
// Split-chain potential scale reduction; requires at least 2 chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

struct ScalarDiagnostics {
  std::vector<double> chain_means;
  double mean = 0.0;
  double lo = 0.0, hi = 0.0;  // central credible interval bounds
  double ess = 0.0;
  std::optional<double> rhat;
};
ScalarDiagnostics summarize_scalar(const std::vector<std::vector<double>>& chains, double level);

struct DiagnosticsReport {
  double level = 0.9;
  ScalarDiagnostics a, sigma2, b;
  std::string render() const;
};
DiagnosticsReport diagnostics(const std::vector<std::vector<double>>& a_chains,
                              const std::vector<std::vector<double>>& sigma2_chains,
                              const std::vector<std::vector<double>>& b_chains,
                              double level = 0.9);

}  // namespace phylnet
