#include "phylnet/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace phylnet {

namespace {

std::string fmt(double x, const char* spec = "%.12g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return buf;
}

// (clade mask, node age) for every non-root internal node, masks in the
// sorted-label order shared by the sample set.
std::vector<std::pair<Split, double>> clades_with_ages(const PhyloTree& tree,
                                                       const std::map<std::string, int>& rank) {
  const int V = tree.num_leaves();
  const size_t words = (static_cast<size_t>(V) + 63) / 64;
  std::vector<Split> masks(tree.num_nodes(), Split(words, 0));
  std::vector<std::pair<Split, double>> out;
  out.reserve(std::max(V - 2, 0));
  // post-order
  std::vector<int> order;
  order.reserve(tree.num_nodes());
  std::vector<int> stack{tree.root};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    order.push_back(n);
    if (!tree.is_leaf(n)) {
      stack.push_back(tree.nodes[n].left);
      stack.push_back(tree.nodes[n].right);
    }
  }
  std::reverse(order.begin(), order.end());
  for (int n : order) {
    if (tree.is_leaf(n)) {
      const int r = rank.at(tree.leaf_labels[n]);
      masks[n][r / 64] |= 1ull << (r % 64);
      continue;
    }
    const auto& l = masks[tree.nodes[n].left];
    const auto& r = masks[tree.nodes[n].right];
    for (size_t w = 0; w < words; ++w) masks[n][w] = l[w] | r[w];
    if (n != tree.root) out.emplace_back(masks[n], tree.nodes[n].age);
  }
  return out;
}

int lowest_rank(const Split& mask) {
  for (size_t w = 0; w < mask.size(); ++w)
    if (mask[w]) return static_cast<int>(w * 64 + __builtin_ctzll(mask[w]));
  return -1;
}

}  // namespace

TreeSampleSet make_sample_set(std::vector<PhyloTree> trees) {
  if (trees.empty()) throw std::invalid_argument("tree sample set: empty");
  TreeSampleSet set;
  set.labels = sorted_labels(trees.front());
  for (const auto& t : trees)
    if (sorted_labels(t) != set.labels)
      throw std::invalid_argument("tree sample set: inconsistent leaf label sets");
  set.trees = std::move(trees);
  return set;
}

ConsensusTree consensus(const TreeSampleSet& samples, double threshold) {
  if (samples.trees.empty()) throw std::invalid_argument("consensus: empty sample set");
  if (!(threshold >= 0.5 && threshold < 1.0))
    throw std::invalid_argument("consensus: threshold must lie in [0.5, 1)");
  const int V = static_cast<int>(samples.labels.size());
  const size_t n = samples.trees.size();
  std::map<std::string, int> rank;
  for (int i = 0; i < V; ++i) rank[samples.labels[i]] = i;

  struct Tally {
    std::int64_t count = 0;
    double age_sum = 0.0;
  };
  std::map<Split, Tally> tally;
  for (const auto& tree : samples.trees) {
    for (auto& [mask, age] : clades_with_ages(tree, rank)) {
      auto& t = tally[mask];
      ++t.count;
      t.age_sum += age;
    }
  }

  struct Retained {
    Split mask;
    double age;
    double support;
  };
  std::vector<Retained> retained;
  for (const auto& [mask, t] : tally) {
    const double freq = double(t.count) / double(n);
    if (freq > threshold) retained.push_back({mask, t.age_sum / t.count, freq});
  }
  std::sort(retained.begin(), retained.end(),
            [](const Retained& a, const Retained& b) { return popcount(a.mask) > popcount(b.mask); });

  ConsensusTree out;
  out.labels = samples.labels;
  out.nodes.resize(V);
  const size_t words = (static_cast<size_t>(V) + 63) / 64;
  for (int i = 0; i < V; ++i) {
    out.nodes[i].age = 1.0;
    out.nodes[i].clade.assign(words, 0);
    out.nodes[i].clade[i / 64] |= 1ull << (i % 64);
  }
  out.root = static_cast<int>(out.nodes.size());
  ConsensusNode root;
  root.age = 0.0;
  root.support = 1.0;
  root.clade.assign(words, 0);
  for (int i = 0; i < V; ++i) root.clade[i / 64] |= 1ull << (i % 64);
  out.nodes.push_back(root);

  std::vector<int> internal{out.root};  // insertion order: decreasing clade size
  for (const auto& r : retained) {
    // Retained splits above a majority threshold are pairwise compatible;
    // the minimal strict superset among already-inserted nodes is unique.
    int parent = -1, parent_size = V + 1;
    for (int id : internal) {
      const auto& mask = out.nodes[id].clade;
      if (!split_subset(r.mask, mask)) {
        if (!split_disjoint(r.mask, mask) && !split_subset(mask, r.mask))
          throw std::logic_error("consensus: incompatible retained splits");
        continue;
      }
      if (mask == r.mask) throw std::logic_error("consensus: duplicate retained split");
      if (popcount(mask) < parent_size) {
        parent = id;
        parent_size = popcount(mask);
      }
    }
    const int id = static_cast<int>(out.nodes.size());
    ConsensusNode node;
    node.parent = parent;
    node.age = r.age;
    node.support = r.support;
    node.clade = r.mask;
    out.nodes.push_back(node);
    internal.push_back(id);
  }
  // Re-point each node (leaf or internal) at the smallest containing clade.
  for (size_t i = 0; i < out.nodes.size(); ++i) {
    if (static_cast<int>(i) == out.root) continue;
    int parent = -1, parent_size = V + 1;
    for (int id : internal) {
      if (static_cast<int>(i) == id) continue;
      const auto& mask = out.nodes[id].clade;
      if (split_subset(out.nodes[i].clade, mask) && mask != out.nodes[i].clade &&
          popcount(mask) < parent_size) {
        parent = id;
        parent_size = popcount(mask);
      }
    }
    out.nodes[i].parent = parent;
    out.nodes[parent].children.push_back(static_cast<int>(i));
  }
  for (auto& node : out.nodes)
    std::sort(node.children.begin(), node.children.end(), [&](int a, int b) {
      return lowest_rank(out.nodes[a].clade) < lowest_rank(out.nodes[b].clade);
    });
  return out;
}

std::string consensus_to_newick(const ConsensusTree& tree) {
  std::string out;
  auto rec = [&](auto&& self, int id) -> void {
    const auto& node = tree.nodes[id];
    if (node.children.empty()) {
      out += tree.labels[id];
    } else {
      out += '(';
      for (size_t i = 0; i < node.children.size(); ++i) {
        if (i) out += ',';
        self(self, node.children[i]);
      }
      out += ')';
      out += "[&support=" + fmt(node.support, "%.6g") + "]";
    }
    if (node.parent >= 0) {
      out += ':';
      out += fmt(node.age - tree.nodes[node.parent].age);
    }
  };
  rec(rec, tree.root);
  out += ';';
  return out;
}

std::vector<std::string> consensus_leaf_order(const ConsensusTree& tree) {
  std::vector<std::string> order;
  auto rec = [&](auto&& self, int id) -> void {
    const auto& node = tree.nodes[id];
    if (node.children.empty()) {
      order.push_back(tree.labels[id]);
      return;
    }
    for (int c : node.children) self(self, c);
  };
  rec(rec, tree.root);
  return order;
}

double consensus_rf_to_tree(const ConsensusTree& consensus_tree, const PhyloTree& tree,
                            bool normalized) {
  if (consensus_tree.labels != sorted_labels(tree))
    throw std::invalid_argument("consensus_rf_to_tree: leaf label sets differ");
  std::vector<Split> a;
  for (size_t i = 0; i < consensus_tree.nodes.size(); ++i)
    if (!consensus_tree.nodes[i].children.empty() && static_cast<int>(i) != consensus_tree.root)
      a.push_back(consensus_tree.nodes[i].clade);
  auto b = splits(tree);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) ++common, ++i, ++j;
    else if (a[i] < b[j]) ++i;
    else ++j;
  }
  const double raw = double(a.size() + b.size() - 2 * common);
  if (!normalized) return raw;
  const int V = static_cast<int>(consensus_tree.labels.size());
  return V <= 2 ? 0.0 : raw / (2.0 * (V - 2));
}

DensitreeExport densitree_export(const TreeSampleSet& samples,
                                 const std::vector<std::string>& leaf_order) {
  if (samples.trees.empty()) throw std::invalid_argument("densitree: empty sample set");
  {
    auto check = leaf_order;
    std::sort(check.begin(), check.end());
    if (check != samples.labels)
      throw std::invalid_argument("densitree: leaf order is not a permutation of the labels");
  }
  std::map<std::string, int> rank;
  for (size_t i = 0; i < leaf_order.size(); ++i) rank[leaf_order[i]] = static_cast<int>(i);

  DensitreeExport out;
  std::string table = "#tree\tnode\tparent\ttype\tlabel\tx\ty\n";
  for (size_t t = 0; t < samples.trees.size(); ++t) {
    const auto& tree = samples.trees[t];
    std::vector<double> y(tree.num_nodes(), 0.0);
    std::vector<int> min_rank(tree.num_nodes(), 0);
    auto layout = [&](auto&& self, int n) -> void {
      if (tree.is_leaf(n)) {
        min_rank[n] = rank.at(tree.leaf_labels[n]);
        y[n] = min_rank[n];
        return;
      }
      self(self, tree.nodes[n].left);
      self(self, tree.nodes[n].right);
      min_rank[n] = std::min(min_rank[tree.nodes[n].left], min_rank[tree.nodes[n].right]);
      y[n] = 0.5 * (y[tree.nodes[n].left] + y[tree.nodes[n].right]);
    };
    layout(layout, tree.root);

    // Newick with the child of smaller canonical rank printed first.
    std::string nwk;
    auto rec = [&](auto&& self, int n) -> void {
      if (tree.is_leaf(n)) {
        nwk += tree.leaf_labels[n];
      } else {
        int first = tree.nodes[n].left, second = tree.nodes[n].right;
        if (min_rank[second] < min_rank[first]) std::swap(first, second);
        nwk += '(';
        self(self, first);
        nwk += ',';
        self(self, second);
        nwk += ')';
      }
      if (tree.nodes[n].parent >= 0) {
        nwk += ':';
        nwk += fmt(tree.nodes[n].age - tree.nodes[tree.nodes[n].parent].age);
      }
    };
    rec(rec, tree.root);
    nwk += ';';
    out.newicks.push_back(std::move(nwk));

    for (int n = 0; n < tree.num_nodes(); ++n) {
      table += std::to_string(t) + '\t' + std::to_string(n) + '\t' +
               std::to_string(tree.nodes[n].parent) + '\t' +
               (tree.is_leaf(n) ? "leaf" : "internal") + '\t' +
               (tree.is_leaf(n) ? tree.leaf_labels[n] : "") + '\t' + fmt(tree.nodes[n].age) +
               '\t' + fmt(y[n]) + '\n';
    }
  }
  out.coordinate_table = std::move(table);
  return out;
}

double credible_radius(const TreeSampleSet& samples, const PhyloTree& reference, double level) {
  if (samples.trees.empty()) throw std::invalid_argument("credible_radius: empty sample set");
  if (!(level > 0.0 && level <= 1.0))
    throw std::invalid_argument("credible_radius: level must lie in (0, 1]");
  const int n = static_cast<int>(samples.trees.size());
  std::vector<double> d(n);
#pragma omp parallel for schedule(static) if (n > 8)
  for (int i = 0; i < n; ++i) d[i] = rf_distance(samples.trees[i], reference, true);
  std::sort(d.begin(), d.end());
  const int k = std::max<int>(1, static_cast<int>(std::ceil(level * n)));
  return d[std::min(k, n) - 1];
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double h = (values.size() - 1) * std::clamp(q, 0.0, 1.0);
  const size_t lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

double ess_batch_means(const std::vector<double>& trace) {
  const size_t n = trace.size();
  if (n < 8) return static_cast<double>(n);
  const size_t L = static_cast<size_t>(std::floor(std::sqrt(double(n))));
  const size_t B = n / L;
  const size_t used = B * L;
  const double grand = std::accumulate(trace.begin(), trace.begin() + used, 0.0) / used;
  double var_trace = 0.0;
  for (size_t i = 0; i < used; ++i) var_trace += (trace[i] - grand) * (trace[i] - grand);
  var_trace /= (used - 1);
  if (var_trace <= 0.0) return static_cast<double>(n);
  double var_batch = 0.0;
  for (size_t b = 0; b < B; ++b) {
    double mean = 0.0;
    for (size_t i = 0; i < L; ++i) mean += trace[b * L + i];
    mean /= L;
    var_batch += (mean - grand) * (mean - grand);
  }
  var_batch /= (B - 1);
  const double tau = L * var_batch / var_trace;
  return tau <= 0.0 ? static_cast<double>(n) : double(n) / tau;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2)
    throw std::invalid_argument("split_rhat: need at least 2 chains");
  size_t half = SIZE_MAX;
  for (const auto& c : chains) half = std::min(half, c.size() / 2);
  if (half < 2) throw std::invalid_argument("split_rhat: chains too short");
  std::vector<std::vector<double>> seqs;
  for (const auto& c : chains) {
    seqs.emplace_back(c.begin(), c.begin() + half);
    seqs.emplace_back(c.end() - half, c.end());
  }
  const size_t m = seqs.size();
  const double n = static_cast<double>(half);
  std::vector<double> means(m);
  double w = 0.0;
  for (size_t j = 0; j < m; ++j) {
    means[j] = std::accumulate(seqs[j].begin(), seqs[j].end(), 0.0) / n;
    double v = 0.0;
    for (double x : seqs[j]) v += (x - means[j]) * (x - means[j]);
    w += v / (n - 1);
  }
  w /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b_over_n = 0.0;
  for (double mj : means) b_over_n += (mj - grand) * (mj - grand);
  b_over_n /= (m - 1);
  if (w <= 0.0) return 1.0;
  return std::sqrt((n - 1) / n + b_over_n / w);
}

ScalarDiagnostics summarize_scalar(const std::vector<std::vector<double>>& chains, double level) {
  if (chains.empty()) throw std::invalid_argument("summarize_scalar: no chains");
  ScalarDiagnostics out;
  std::vector<double> pooled;
  for (const auto& c : chains) {
    if (c.empty()) throw std::invalid_argument("summarize_scalar: empty chain");
    out.chain_means.push_back(std::accumulate(c.begin(), c.end(), 0.0) / c.size());
    pooled.insert(pooled.end(), c.begin(), c.end());
    out.ess += ess_batch_means(c);
  }
  out.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / pooled.size();
  out.lo = quantile(pooled, (1.0 - level) / 2.0);
  out.hi = quantile(pooled, 1.0 - (1.0 - level) / 2.0);
  if (chains.size() >= 2) out.rhat = split_rhat(chains);
  return out;
}

std::string DiagnosticsReport::render() const {
  auto line = [&](const char* name, const ScalarDiagnostics& s) {
    std::string out = name;
    out += ": mean=" + fmt(s.mean, "%.6g") + " ci" + fmt(level * 100, "%.0f") + "%=[" +
           fmt(s.lo, "%.6g") + ", " + fmt(s.hi, "%.6g") + "] ess=" + fmt(s.ess, "%.1f");
    if (s.rhat) out += " rhat=" + fmt(*s.rhat, "%.4f");
    out += "\n  chain means:";
    for (double m : s.chain_means) out += ' ' + fmt(m, "%.6g");
    out += '\n';
    return out;
  };
  std::string out = "# scalar posterior diagnostics\n";
  out += line("a", a);
  out += line("sigma2", sigma2);
  out += line("b", b);
  return out;
}

DiagnosticsReport diagnostics(const std::vector<std::vector<double>>& a_chains,
                              const std::vector<std::vector<double>>& sigma2_chains,
                              const std::vector<std::vector<double>>& b_chains, double level) {
  DiagnosticsReport report;
  report.level = level;
  report.a = summarize_scalar(a_chains, level);
  report.sigma2 = summarize_scalar(sigma2_chains, level);
  report.b = summarize_scalar(b_chains, level);
  return report;
}

}  // namespace phylnet
