#pragma once

#include <vector>

#include "phylnet/rng.hpp"
#include "phylnet/tree.hpp"

namespace phylnet {

// The five symmetric proposal kernels driving the MH update of the tree.
// Every kernel draws from a candidate set whose size does not depend on the
// current state (or is invariant under the move), so q(t -> t') = q(t' -> t)
// and no proposal-ratio correction is ever needed. Draws that cannot yield a
// valid ultrametric tree are returned with feasible = false and count as
// rejections of a no-op; they are never silently retried.
enum class MoveKind {
  TipsInterchange = 0,
  SubtreeExchange = 1,
  NodeAgeMove = 2,
  Spr = 3,
  LocalSpr = 4,
};
inline constexpr int kNumMoveKinds = 5;
const char* move_kind_name(MoveKind kind);

struct MoveOutcome {
  PhyloTree proposed;
  bool feasible = false;
};

MoveOutcome propose(const PhyloTree& tree, MoveKind kind, Rng& rng, double age_window);
std::pair<MoveKind, MoveOutcome> propose_random(const PhyloTree& tree, Rng& rng,
                                                double age_window);

// Deterministic building blocks, exposed for tests.

// Swaps the tree positions of two leaves (equivalently: swaps their labels).
PhyloTree tips_interchange(const PhyloTree& tree, int leaf_i, int leaf_j);

// Swapping two non-nested non-root subtrees keeps every age fixed; valid when
// neither root is an ancestor of the other and both attachment edges keep
// parent.age < child.age after the swap.
bool subtree_exchange_valid(const PhyloTree& tree, int x, int y);
PhyloTree exchange_subtrees(const PhyloTree& tree, int x, int y);

// Folds x into the open interval (lo, hi) by reflection at the boundaries.
double reflect_into_interval(double x, double lo, double hi);

// SPR machinery: prune the subtree rooted at x; its parent keeps its age g and
// becomes the attachment node. Candidate regraft edges are the edges of the
// pruned tree spanning g, identified by their child endpoint (-1 is the
// virtual edge above the pruned tree's root, reachable only when x hung off
// the root). The candidate set is a function of the pruned tree and g alone,
// hence identical from t and from any t' reachable from t.
struct SprContext {
  int pruned = -1;       // x
  int attach = -1;       // x's parent, reused as the regraft node
  double attach_age = 0; // g
  int sibling = -1;
  int grandparent = -1;  // -1 when x's parent is the root
  std::vector<int> candidates;
};
// local = true restricts candidates to the child edges of the former
// grandparent in the pruned tree (the only regrafts whose reverse move is
// again a local SPR with the same candidate set).
SprContext spr_context(const PhyloTree& tree, int x, bool local);
PhyloTree apply_spr(const PhyloTree& tree, const SprContext& ctx, int regraft_child);

}  // namespace phylnet
