#include "phylnet/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace phylnet {

namespace {

std::string format_branch(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  std::string s = buf;
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

}  // namespace

ValidationResult validate(const PhyloTree& tree) {
  const int V = tree.num_leaves();
  if (V < 2) return {false, "fewer than 2 leaves"};
  if (tree.num_nodes() != 2 * V - 1)
    return {false, "node count is not 2V-1"};

  int root_count = 0;
  for (int i = 0; i < tree.num_nodes(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.parent < 0) {
      ++root_count;
      if (tree.root != i) return {false, "root field does not match parentless node"};
    }
    const bool has_left = n.left >= 0;
    const bool has_right = n.right >= 0;
    if (has_left != has_right) return {false, "non-binary node (single child)"};
    if (i < V) {
      if (has_left) return {false, "leaf index with children"};
    } else {
      if (!has_left) return {false, "internal index without children"};
      if (n.left == n.right) return {false, "non-binary node (duplicate child)"};
      for (int c : {n.left, n.right}) {
        if (c < 0 || c >= tree.num_nodes()) return {false, "child index out of range"};
        if (tree.nodes[c].parent != i) return {false, "child parent link mismatch"};
      }
    }
  }
  if (root_count != 1) return {false, "tree must have exactly one root"};
  if (tree.root < V) return {false, "root is a leaf"};

  // Reachability from the root covers all nodes (no detached cycles).
  std::vector<char> seen(tree.num_nodes(), 0);
  std::vector<int> stack{tree.root};
  int reached = 0;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    if (seen[n]) return {false, "cycle detected"};
    seen[n] = 1;
    ++reached;
    if (!tree.is_leaf(n)) {
      stack.push_back(tree.nodes[n].left);
      stack.push_back(tree.nodes[n].right);
    }
  }
  if (reached != tree.num_nodes()) return {false, "unreachable nodes"};

  if (tree.nodes[tree.root].age != 0.0) return {false, "root age != 0"};
  for (int i = 0; i < tree.num_nodes(); ++i) {
    const auto& n = tree.nodes[i];
    if (!std::isfinite(n.age)) return {false, "non-finite age"};
    if (n.parent >= 0 && !(tree.nodes[n.parent].age < n.age))
      return {false, "non-positive branch length (parent age >= child age)"};
    if (i < V && n.age != 1.0) return {false, "leaf age != 1"};
  }

  std::unordered_set<std::string> labels(tree.leaf_labels.begin(), tree.leaf_labels.end());
  if (static_cast<int>(labels.size()) != V) return {false, "duplicate leaf labels"};
  for (const auto& l : tree.leaf_labels)
    if (l.empty()) return {false, "empty leaf label"};
  return {};
}

void require_valid(const PhyloTree& tree) {
  auto r = validate(tree);
  if (!r.ok) throw std::invalid_argument("invalid tree: " + r.violation);
}

namespace {

// Post-order list of node ids (children before parents).
std::vector<int> postorder(const PhyloTree& tree) {
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
  return order;
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const PhyloTree& tree) {
  require_valid(tree);
  const int V = tree.num_leaves();
  Eigen::MatrixXd sigma(V, V);
  // Leaves of a subtree are contiguous in the DFS leaf sequence, so each node
  // owns a (begin, end) range; every pair (u,v) receives the age of its MRCA
  // exactly once, at the internal node where the two leaves first meet.
  std::vector<int> leaf_seq(V);
  std::vector<int> begin(tree.num_nodes()), end(tree.num_nodes());
  int cursor = 0;
  const auto order = postorder(tree);
  for (int n : order) {
    if (tree.is_leaf(n)) {
      begin[n] = cursor;
      leaf_seq[cursor++] = n;
      end[n] = cursor;
    }
  }
  for (int n : order) {
    if (tree.is_leaf(n)) continue;
    const int l = tree.nodes[n].left, r = tree.nodes[n].right;
    begin[n] = std::min(begin[l], begin[r]);
    end[n] = std::max(end[l], end[r]);
    for (int i = begin[l]; i < end[l]; ++i)
      for (int j = begin[r]; j < end[r]; ++j) {
        sigma(leaf_seq[i], leaf_seq[j]) = tree.nodes[n].age;
        sigma(leaf_seq[j], leaf_seq[i]) = tree.nodes[n].age;
      }
  }
  for (int v = 0; v < V; ++v) sigma(v, v) = 1.0;
  return sigma;
}

double total_branch_length(const PhyloTree& tree) {
  double total = 0.0;
  for (int i = 0; i < tree.num_nodes(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.parent >= 0) total += n.age - tree.nodes[n.parent].age;
  }
  return total;
}

double yule_log_density(const PhyloTree& tree, double b) {
  if (!(b > 0)) throw std::invalid_argument("yule_log_density: b must be positive");
  const int V = tree.num_leaves();
  return (V - 2) * std::log(b) - b * total_branch_length(tree);
}

PhyloTree sample_yule_tree(const std::vector<std::string>& labels, double b, Rng& rng) {
  const int V = static_cast<int>(labels.size());
  if (V < 2) throw std::invalid_argument("sample_yule_tree: need at least 2 leaves");
  if (!(b > 0)) throw std::invalid_argument("sample_yule_tree: b must be positive");

  PhyloTree tree;
  tree.leaf_labels = labels;
  tree.nodes.resize(2 * V - 1);

  // Grow the lineage structure: the root splits at time 0; each subsequent
  // split happens after an Exp(n*b) wait and hits a uniformly random extant
  // lineage. A pending slot is the (parent, side) position a lineage hangs from.
  struct Pending {
    int parent;
    bool is_left;
  };
  int next_internal = V;
  const int root = next_internal++;
  tree.root = root;
  tree.nodes[root].age = 0.0;
  std::vector<Pending> active{{root, true}, {root, false}};

  double now = 0.0;
  std::exponential_distribution<double> exp1(1.0);
  while (static_cast<int>(active.size()) < V) {
    const double n = static_cast<double>(active.size());
    now += exp1(rng) / (n * b);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(active.size()) - 1);
    const int slot = pick(rng);
    const int node = next_internal++;
    tree.nodes[node].age = now;
    tree.nodes[node].parent = active[slot].parent;
    auto& parent = tree.nodes[active[slot].parent];
    (active[slot].is_left ? parent.left : parent.right) = node;
    active[slot] = {node, true};
    active.push_back({node, false});
  }
  // Observe the extant lineages strictly before the next split.
  now += exp1(rng) / (static_cast<double>(V) * b);

  // Uniform random attachment of the V leaf indices to the grown lineages.
  std::vector<int> leaf_ids(V);
  std::iota(leaf_ids.begin(), leaf_ids.end(), 0);
  std::shuffle(leaf_ids.begin(), leaf_ids.end(), rng);
  for (int i = 0; i < V; ++i) {
    const int leaf = leaf_ids[i];
    tree.nodes[leaf].age = now;
    tree.nodes[leaf].parent = active[i].parent;
    auto& parent = tree.nodes[active[i].parent];
    (active[i].is_left ? parent.left : parent.right) = leaf;
  }

  // Rescale to height exactly 1 (leaves land on 1.0 bit-exactly).
  for (auto& n : tree.nodes) n.age /= now;
  for (int i = 0; i < V; ++i) tree.nodes[i].age = 1.0;
  return tree;
}

PhyloTree sample_yule_tree(int num_leaves, double b, Rng& rng) {
  std::vector<std::string> labels(std::max(num_leaves, 0));
  for (int i = 0; i < num_leaves; ++i) labels[i] = "v" + std::to_string(i + 1);
  return sample_yule_tree(labels, b, rng);
}

std::vector<std::string> sorted_labels(const PhyloTree& tree) {
  auto labels = tree.leaf_labels;
  std::sort(labels.begin(), labels.end());
  return labels;
}

int popcount(const Split& s) {
  int c = 0;
  for (auto word : s) c += __builtin_popcountll(word);
  return c;
}

bool split_subset(const Split& a, const Split& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if ((a[i] & ~b[i]) != 0) return false;
  return true;
}

bool split_disjoint(const Split& a, const Split& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if ((a[i] & b[i]) != 0) return false;
  return true;
}

std::vector<Split> splits(const PhyloTree& tree) {
  require_valid(tree);
  const int V = tree.num_leaves();
  const auto labels = sorted_labels(tree);
  std::vector<int> rank(V);  // leaf index -> position in sorted label order
  {
    std::map<std::string, int> pos;
    for (int i = 0; i < V; ++i) pos[labels[i]] = i;
    for (int i = 0; i < V; ++i) rank[i] = pos.at(tree.leaf_labels[i]);
  }
  const size_t words = (static_cast<size_t>(V) + 63) / 64;
  std::vector<Split> masks(tree.num_nodes(), Split(words, 0));
  std::vector<Split> out;
  out.reserve(std::max(V - 2, 0));
  for (int n : postorder(tree)) {
    if (tree.is_leaf(n)) {
      masks[n][rank[n] / 64] |= 1ull << (rank[n] % 64);
      continue;
    }
    const auto& l = masks[tree.nodes[n].left];
    const auto& r = masks[tree.nodes[n].right];
    for (size_t w = 0; w < words; ++w) masks[n][w] = l[w] | r[w];
    if (n != tree.root) out.push_back(masks[n]);
  }
  return out;
}

double rf_distance(const PhyloTree& a, const PhyloTree& b, bool normalized) {
  if (sorted_labels(a) != sorted_labels(b))
    throw std::invalid_argument("rf_distance: leaf label sets differ");
  auto sa = splits(a);
  auto sb = splits(b);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  size_t i = 0, j = 0, common = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] == sb[j]) {
      ++common;
      ++i;
      ++j;
    } else if (sa[i] < sb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const double raw = static_cast<double>(sa.size() + sb.size() - 2 * common);
  if (!normalized) return raw;
  const int V = a.num_leaves();
  if (V <= 2) return 0.0;
  return raw / (2.0 * (V - 2));
}

std::string to_newick(const PhyloTree& tree) {
  require_valid(tree);
  std::string out;
  auto rec = [&](auto&& self, int n) -> void {
    if (tree.is_leaf(n)) {
      out += tree.leaf_labels[n];
    } else {
      out += '(';
      self(self, tree.nodes[n].left);
      out += ',';
      self(self, tree.nodes[n].right);
      out += ')';
    }
    if (tree.nodes[n].parent >= 0) {
      out += ':';
      out += format_branch(tree.nodes[n].age - tree.nodes[tree.nodes[n].parent].age);
    }
  };
  rec(rec, tree.root);
  out += ';';
  return out;
}

namespace {

struct NewickParser {
  const std::string& text;
  size_t pos = 0;

  explicit NewickParser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("newick parse error at byte " + std::to_string(pos) + ": " + msg);
  }

  void skip_filler() {
    while (pos < text.size()) {
      const char c = text[pos];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else if (c == '[') {  // bracketed comment convention
        const size_t close = text.find(']', pos);
        if (close == std::string::npos) fail("unterminated comment");
        pos = close + 1;
      } else {
        break;
      }
    }
  }

  char peek() {
    skip_filler();
    if (pos >= text.size()) fail("unexpected end of input");
    return text[pos];
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos;
  }

  std::string parse_label() {
    skip_filler();
    const size_t start = pos;
    while (pos < text.size()) {
      const char c = text[pos];
      if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' ||
          std::isspace(static_cast<unsigned char>(c)))
        break;
      ++pos;
    }
    return text.substr(start, pos - start);
  }

  double parse_number() {
    skip_filler();
    const size_t start = pos;
    while (pos < text.size()) {
      const char c = text[pos];
      if ((c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E')
        ++pos;
      else
        break;
    }
    if (pos == start) fail("expected a number");
    try {
      return std::stod(text.substr(start, pos - start));
    } catch (const std::exception&) {
      pos = start;
      fail("malformed number");
    }
  }
};

struct RawNode {
  int parent = -1;
  std::vector<int> children;
  std::string label;
  double branch = 0.0;  // length of the edge above; unused for the root
};

}  // namespace

PhyloTree from_newick(const std::string& text, int expected_leaves) {
  NewickParser p(text);
  std::vector<RawNode> raw;

  auto parse_clade = [&](auto&& self, int parent) -> int {
    const int id = static_cast<int>(raw.size());
    raw.emplace_back();
    raw[id].parent = parent;
    if (p.peek() == '(') {
      p.expect('(');
      const int first = self(self, id);  // recursion may reallocate raw
      raw[id].children.push_back(first);
      while (p.peek() == ',') {
        p.expect(',');
        const int next = self(self, id);
        raw[id].children.push_back(next);
      }
      p.expect(')');
      raw[id].label = p.parse_label();  // optional internal name, ignored
    } else {
      raw[id].label = p.parse_label();
      if (raw[id].label.empty()) p.fail("expected a leaf label");
    }
    p.skip_filler();
    if (p.pos < text.size() && text[p.pos] == ':') {
      ++p.pos;
      raw[id].branch = p.parse_number();
    } else if (parent >= 0) {
      p.fail("missing branch length");
    }
    return id;
  };

  const int raw_root = parse_clade(parse_clade, -1);
  p.expect(';');
  p.skip_filler();
  if (p.pos != text.size()) p.fail("trailing characters after ';'");

  int V = 0;
  for (const auto& n : raw) {
    if (n.children.empty())
      ++V;
    else if (n.children.size() != 2)
      throw std::runtime_error("newick parse error: non-binary node (" +
                               std::to_string(n.children.size()) + " children)");
  }
  if (V < 2) throw std::runtime_error("newick parse error: fewer than 2 leaves");
  if (expected_leaves > 0 && V != expected_leaves)
    throw std::runtime_error("newick parse error: expected " + std::to_string(expected_leaves) +
                             " leaves, found " + std::to_string(V));

  PhyloTree tree;
  tree.nodes.resize(2 * V - 1);
  tree.leaf_labels.resize(V);
  std::vector<int> id_map(raw.size(), -1);
  int next_leaf = 0, next_internal = V;
  for (size_t i = 0; i < raw.size(); ++i)
    id_map[i] = raw[i].children.empty() ? next_leaf++ : next_internal++;

  std::vector<double> depth(raw.size(), 0.0);
  for (size_t i = 0; i < raw.size(); ++i) {  // parents precede children in raw order
    const int id = id_map[i];
    depth[i] = raw[i].parent >= 0 ? depth[raw[i].parent] + raw[i].branch : 0.0;
    tree.nodes[id].age = depth[i];
    tree.nodes[id].parent = raw[i].parent >= 0 ? id_map[raw[i].parent] : -1;
    if (raw[i].children.empty()) {
      tree.leaf_labels[id] = raw[i].label;
    } else {
      tree.nodes[id].left = id_map[raw[i].children[0]];
      tree.nodes[id].right = id_map[raw[i].children[1]];
    }
  }
  tree.root = id_map[raw_root];

  for (int v = 0; v < V; ++v) {
    if (std::abs(tree.nodes[v].age - 1.0) > kUltrametricTolerance)
      throw std::runtime_error("newick ultrametricity violation: leaf '" + tree.leaf_labels[v] +
                               "' has root-leaf path length " + std::to_string(tree.nodes[v].age));
    tree.nodes[v].age = 1.0;
  }
  require_valid(tree);
  return tree;
}

}  // namespace phylnet
