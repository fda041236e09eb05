#include "support/yule_enum.hpp"

#include <algorithm>
#include <numeric>

namespace phylnet::test {

std::string topology_key(const PhyloTree& tree) {
  const auto labels = sorted_labels(tree);
  std::vector<std::string> clades;
  for (const auto& mask : splits(tree)) {
    std::string clade;
    for (size_t i = 0; i < labels.size(); ++i)
      if (mask[i / 64] & (1ull << (i % 64))) {
        if (!clade.empty()) clade += ',';
        clade += labels[i];
      }
    clades.push_back(clade);
  }
  std::sort(clades.begin(), clades.end());
  std::string key;
  for (const auto& c : clades) {
    if (!key.empty()) key += '|';
    key += c;
  }
  return key;
}

namespace {

struct Pending {
  int parent;
  bool is_left;
};

void enumerate(const std::vector<std::string>& labels, PhyloTree& tree,
               std::vector<Pending>& active, int next_internal, double weight,
               std::map<std::string, double>& out) {
  const int V = static_cast<int>(labels.size());
  if (static_cast<int>(active.size()) == V) {
    // All label assignments are equally likely.
    std::vector<int> perm(V);
    std::iota(perm.begin(), perm.end(), 0);
    double fact = 1.0;
    for (int i = 2; i <= V; ++i) fact *= i;
    do {
      for (int i = 0; i < V; ++i) {
        const int leaf = perm[i];
        tree.nodes[leaf].age = 1.0;
        tree.nodes[leaf].parent = active[i].parent;
        auto& parent = tree.nodes[active[i].parent];
        (active[i].is_left ? parent.left : parent.right) = leaf;
      }
      out[topology_key(tree)] += weight / fact;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return;
  }

  const int n = static_cast<int>(active.size());
  const int node = next_internal;
  tree.nodes[node].age = double(next_internal - V) / double(V - 1);
  for (int slot = 0; slot < n; ++slot) {
    const Pending saved = active[slot];
    tree.nodes[node].parent = saved.parent;
    auto& parent = tree.nodes[saved.parent];
    (saved.is_left ? parent.left : parent.right) = node;
    active[slot] = {node, true};
    active.push_back({node, false});
    enumerate(labels, tree, active, next_internal + 1, weight / n, out);
    active.pop_back();
    active[slot] = saved;
    (saved.is_left ? parent.left : parent.right) = -1;
  }
}

}  // namespace

std::map<std::string, double> yule_topology_distribution(const std::vector<std::string>& labels) {
  const int V = static_cast<int>(labels.size());
  PhyloTree tree;
  tree.leaf_labels = labels;
  tree.nodes.resize(2 * V - 1);
  tree.root = V;
  tree.nodes[V].age = 0.0;
  std::vector<Pending> active{{V, true}, {V, false}};
  std::map<std::string, double> out;
  enumerate(labels, tree, active, V + 1, 1.0, out);
  return out;
}

}  // namespace phylnet::test
