#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phylnet/rng.hpp"

namespace phylnet {

// Rooted binary ultrametric tree over V labeled leaves.
//
// Layout: nodes 0..V-1 are the leaves (leaf i carries leaf_labels[i]),
// nodes V..2V-2 are internal. Ages are depths from the root: the root has
// age 0 and every leaf has age exactly 1, so branch lengths are age
// differences and ultrametricity is a per-node property.
//
// PhyloTree values are immutable once validated; the move kernels produce
// modified copies.
struct TreeNode {
  int parent = -1;
  int left = -1;
  int right = -1;
  double age = 0.0;
};

struct PhyloTree {
  std::vector<TreeNode> nodes;
  std::vector<std::string> leaf_labels;
  int root = -1;

  int num_leaves() const { return static_cast<int>(leaf_labels.size()); }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  bool is_leaf(int i) const { return nodes[i].left < 0; }
};

struct ValidationResult {
  bool ok = true;
  std::string violation;  // names the first violated invariant
};

ValidationResult validate(const PhyloTree& tree);
// Throws std::invalid_argument with the violation message.
void require_valid(const PhyloTree& tree);

// [Sigma]_vu = age of the most recent common ancestor of leaves v and u,
// unit diagonal. Row/column order is the leaf index order.
Eigen::MatrixXd correlation_matrix(const PhyloTree& tree);

double total_branch_length(const PhyloTree& tree);

// Unnormalized pure-birth log density over (topology, ages) at height 1:
// (V-2) log b - b L(tree).
double yule_log_density(const PhyloTree& tree, double b);

// Pure-birth simulation from 2 lineages at per-lineage rate b, stopped while
// V lineages are extant, ages rescaled to height 1. Leaf node i always
// carries labels[i]; the random label attachment is realized by randomizing
// which grown lineage each leaf index lands on.
PhyloTree sample_yule_tree(const std::vector<std::string>& labels, double b, Rng& rng);
PhyloTree sample_yule_tree(int num_leaves, double b, Rng& rng);  // labels v1..vV

// A split is the set of leaf labels under one non-root internal node,
// encoded as a bitmask over the lexicographically sorted label order.
using Split = std::vector<std::uint64_t>;

std::vector<std::string> sorted_labels(const PhyloTree& tree);
// Exactly V-2 clades; the root clade is excluded.
std::vector<Split> splits(const PhyloTree& tree);
int popcount(const Split& s);
bool split_subset(const Split& a, const Split& b);  // a subset of b
bool split_disjoint(const Split& a, const Split& b);

// Robinson-Foulds distance: symmetric-difference cardinality of the two
// split sets; the normalized form divides by 2(V-2). Requires identical
// leaf label sets.
double rf_distance(const PhyloTree& a, const PhyloTree& b, bool normalized = false);

// Newick serialization with branch lengths (12 significant digits).
std::string to_newick(const PhyloTree& tree);
// Parser; rejects non-binary trees and root-leaf path lengths departing from
// 1 by more than 1e-9. expected_leaves > 0 additionally pins the leaf count.
PhyloTree from_newick(const std::string& text, int expected_leaves = 0);

inline constexpr double kUltrametricTolerance = 1e-9;

}  // namespace phylnet
