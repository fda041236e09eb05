#include "phylnet/moves.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phylnet {

const char* move_kind_name(MoveKind kind) {
  switch (kind) {
    case MoveKind::TipsInterchange: return "tips_interchange";
    case MoveKind::SubtreeExchange: return "subtree_exchange";
    case MoveKind::NodeAgeMove: return "node_age_move";
    case MoveKind::Spr: return "spr";
    case MoveKind::LocalSpr: return "local_spr";
  }
  return "unknown";
}

namespace {

bool is_ancestor(const PhyloTree& tree, int anc, int node) {
  for (int n = tree.nodes[node].parent; n >= 0; n = tree.nodes[n].parent)
    if (n == anc) return true;
  return false;
}

void replace_child(PhyloTree& tree, int parent, int old_child, int new_child) {
  auto& p = tree.nodes[parent];
  if (p.left == old_child)
    p.left = new_child;
  else if (p.right == old_child)
    p.right = new_child;
  else
    throw std::logic_error("replace_child: not a child of parent");
}

int uniform_non_root(const PhyloTree& tree, Rng& rng) {
  // Non-root nodes are all ids except tree.root.
  std::uniform_int_distribution<int> pick(0, tree.num_nodes() - 2);
  int id = pick(rng);
  if (id >= tree.root) ++id;
  return id;
}

}  // namespace

PhyloTree tips_interchange(const PhyloTree& tree, int leaf_i, int leaf_j) {
  PhyloTree out = tree;
  if (leaf_i == leaf_j) return out;
  const int pi = out.nodes[leaf_i].parent;
  const int pj = out.nodes[leaf_j].parent;
  replace_child(out, pi, leaf_i, leaf_j);
  replace_child(out, pj, leaf_j, leaf_i);
  std::swap(out.nodes[leaf_i].parent, out.nodes[leaf_j].parent);
  return out;
}

bool subtree_exchange_valid(const PhyloTree& tree, int x, int y) {
  if (x == y) return false;
  if (x == tree.root || y == tree.root) return false;
  if (is_ancestor(tree, x, y) || is_ancestor(tree, y, x)) return false;
  const double px_age = tree.nodes[tree.nodes[x].parent].age;
  const double py_age = tree.nodes[tree.nodes[y].parent].age;
  return px_age < tree.nodes[y].age && py_age < tree.nodes[x].age;
}

PhyloTree exchange_subtrees(const PhyloTree& tree, int x, int y) {
  PhyloTree out = tree;
  const int px = out.nodes[x].parent;
  const int py = out.nodes[y].parent;
  replace_child(out, px, x, y);
  replace_child(out, py, y, x);
  std::swap(out.nodes[x].parent, out.nodes[y].parent);
  return out;
}

double reflect_into_interval(double x, double lo, double hi) {
  const double width = hi - lo;
  double y = std::fmod(x - lo, 2.0 * width);
  if (y < 0) y += 2.0 * width;
  if (y > width) y = 2.0 * width - y;
  return lo + y;
}

SprContext spr_context(const PhyloTree& tree, int x, bool local) {
  SprContext ctx;
  ctx.pruned = x;
  ctx.attach = tree.nodes[x].parent;
  const auto& p = tree.nodes[ctx.attach];
  ctx.attach_age = p.age;
  ctx.sibling = p.left == x ? p.right : p.left;
  ctx.grandparent = p.parent;
  if (local && ctx.grandparent < 0) return ctx;  // no grandparent: empty candidate set

  if (local) {
    // Child edges of the grandparent in the pruned tree: the merged edge
    // (sibling, gp) always spans g; the other child edge spans g iff its
    // child is older than g.
    ctx.candidates.push_back(ctx.sibling);
    const auto& gp = tree.nodes[ctx.grandparent];
    const int other = gp.left == ctx.attach ? gp.right : gp.left;
    if (tree.nodes[other].age > ctx.attach_age) ctx.candidates.push_back(other);
    return ctx;
  }

  // Mark the pruned subtree.
  std::vector<char> in_pruned(tree.num_nodes(), 0);
  std::vector<int> stack{x};
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    in_pruned[n] = 1;
    if (!tree.is_leaf(n)) {
      stack.push_back(tree.nodes[n].left);
      stack.push_back(tree.nodes[n].right);
    }
  }
  const double g = ctx.attach_age;
  for (int c = 0; c < tree.num_nodes(); ++c) {
    if (in_pruned[c] || c == ctx.attach) continue;
    int parent = tree.nodes[c].parent;
    if (parent == ctx.attach) parent = ctx.grandparent;  // merged edge
    if (parent < 0) {
      // Virtual edge above the pruned tree's root.
      if (g < tree.nodes[c].age) ctx.candidates.push_back(-1 - c);
      continue;
    }
    if (tree.nodes[parent].age < g && g < tree.nodes[c].age) ctx.candidates.push_back(c);
  }
  return ctx;
}

PhyloTree apply_spr(const PhyloTree& tree, const SprContext& ctx, int regraft_child) {
  PhyloTree out = tree;
  const int x = ctx.pruned;
  const int p = ctx.attach;
  const int s = ctx.sibling;
  const int gp = ctx.grandparent;
  const bool x_was_left = out.nodes[p].left == x;

  // Detach x together with its parent; the sibling takes the parent's place.
  out.nodes[s].parent = gp;
  if (gp >= 0) replace_child(out, gp, p, s);

  int c = regraft_child;
  int pc;
  if (c < 0) {
    c = -1 - c;  // virtual edge above the pruned tree's root
    pc = -1;
  } else {
    pc = c == s ? gp : out.nodes[c].parent;
  }

  // Re-insert the attachment node at its original age on the chosen edge.
  out.nodes[p].parent = pc;
  if (pc >= 0)
    replace_child(out, pc, c, p);
  else
    out.root = p;
  out.nodes[c].parent = p;
  if (x_was_left) {
    out.nodes[p].left = x;
    out.nodes[p].right = c;
  } else {
    out.nodes[p].right = x;
    out.nodes[p].left = c;
  }
  return out;
}

MoveOutcome propose(const PhyloTree& tree, MoveKind kind, Rng& rng, double age_window) {
  require_valid(tree);
  const int V = tree.num_leaves();
  MoveOutcome out;

  switch (kind) {
    case MoveKind::TipsInterchange: {
      std::uniform_int_distribution<int> pick(0, V - 1);
      const int i = pick(rng);
      std::uniform_int_distribution<int> pick2(0, V - 2);
      int j = pick2(rng);
      if (j >= i) ++j;
      out.proposed = tips_interchange(tree, i, j);
      out.feasible = true;
      return out;
    }
    case MoveKind::SubtreeExchange: {
      const int x = uniform_non_root(tree, rng);
      int y = x;
      while (y == x) y = uniform_non_root(tree, rng);
      if (!subtree_exchange_valid(tree, x, y)) return out;
      out.proposed = exchange_subtrees(tree, x, y);
      out.feasible = true;
      return out;
    }
    case MoveKind::NodeAgeMove: {
      if (V <= 2) return out;  // no internal non-root node
      std::uniform_int_distribution<int> pick(V, 2 * V - 2);
      int node = tree.root;
      while (node == tree.root) node = pick(rng);
      const auto& n = tree.nodes[node];
      const double lo = tree.nodes[n.parent].age;
      const double hi = std::min(tree.nodes[n.left].age, tree.nodes[n.right].age);
      std::uniform_real_distribution<double> step(-age_window, age_window);
      const double age = reflect_into_interval(n.age + step(rng), lo, hi);
      if (!(lo < age && age < hi)) return out;  // boundary hit (measure zero)
      out.proposed = tree;
      out.proposed.nodes[node].age = age;
      out.feasible = true;
      return out;
    }
    case MoveKind::Spr:
    case MoveKind::LocalSpr: {
      const int x = uniform_non_root(tree, rng);
      const SprContext ctx = spr_context(tree, x, kind == MoveKind::LocalSpr);
      if (ctx.candidates.empty()) return out;
      std::uniform_int_distribution<size_t> pick(0, ctx.candidates.size() - 1);
      out.proposed = apply_spr(tree, ctx, ctx.candidates[pick(rng)]);
      out.feasible = true;
      return out;
    }
  }
  return out;
}

std::pair<MoveKind, MoveOutcome> propose_random(const PhyloTree& tree, Rng& rng,
                                                double age_window) {
  std::uniform_int_distribution<int> pick(0, kNumMoveKinds - 1);
  const auto kind = static_cast<MoveKind>(pick(rng));
  return {kind, propose(tree, kind, rng, age_window)};
}

}  // namespace phylnet
