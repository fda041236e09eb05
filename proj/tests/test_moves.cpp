#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "phylnet/moves.hpp"
#include "support/stats.hpp"
#include "support/yule_enum.hpp"

using namespace phylnet;

namespace {

const char* kTree3 = "((A:0.4,B:0.4):0.6,C:1.0);";

std::multiset<double> age_multiset(const PhyloTree& t) {
  std::multiset<double> ages;
  for (const auto& n : t.nodes) ages.insert(n.age);
  return ages;
}

}  // namespace

TEST_CASE("tips interchange on a cherry keeps the unique topology") {
  const auto t = from_newick("(A:1.0,B:1.0);");
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto out = propose(t, MoveKind::TipsInterchange, rng, 0.1);
    REQUIRE(out.feasible);
    CHECK(validate(out.proposed).ok);
    CHECK(rf_distance(t, out.proposed) == 0.0);
  }
}

TEST_CASE("tips interchange swaps two leaves and nothing else") {
  const auto t = from_newick(kTree3);
  const auto swapped = tips_interchange(t, 0, 2);  // A <-> C
  CHECK(validate(swapped).ok);
  CHECK(test::topology_key(swapped) == "B,C");
  for (int n = t.num_leaves(); n < t.num_nodes(); ++n)
    CHECK(swapped.nodes[n].age == t.nodes[n].age);
}

TEST_CASE("every feasible proposal validates and preserves the leaf set") {
  Rng rng(11);
  for (int rep = 0; rep < 400; ++rep) {
    const int V = 2 + int(rng() % 10);
    const auto t = sample_yule_tree(V, 1.0, rng);
    const auto [kind, out] = propose_random(t, rng, 0.1);
    if (!out.feasible) continue;
    CHECK(validate(out.proposed).ok);
    CHECK(sorted_labels(out.proposed) == sorted_labels(t));
  }
}

TEST_CASE("node age move changes exactly one age; tips interchange none") {
  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const auto t = sample_yule_tree(8, 1.0, rng);
    const auto age_out = propose(t, MoveKind::NodeAgeMove, rng, 0.1);
    REQUIRE(age_out.feasible);
    int changed = 0;
    for (int n = 0; n < t.num_nodes(); ++n)
      if (age_out.proposed.nodes[n].age != t.nodes[n].age) ++changed;
    CHECK(changed == 1);

    const auto tip_out = propose(t, MoveKind::TipsInterchange, rng, 0.1);
    REQUIRE(tip_out.feasible);
    CHECK(age_multiset(tip_out.proposed) == age_multiset(t));
  }
}

TEST_CASE("node age move is infeasible on a cherry") {
  const auto t = from_newick("(A:1.0,B:1.0);");
  Rng rng(5);
  CHECK_FALSE(propose(t, MoveKind::NodeAgeMove, rng, 0.1).feasible);
}

TEST_CASE("local spr is infeasible when the pruned parent is the root") {
  const auto t = from_newick("(A:1.0,B:1.0);");
  Rng rng(5);
  CHECK_FALSE(propose(t, MoveKind::LocalSpr, rng, 0.1).feasible);
}

TEST_CASE("reflection folds into the interval") {
  CHECK(reflect_into_interval(0.5, 0.0, 1.0) == 0.5);
  CHECK(reflect_into_interval(1.2, 0.0, 1.0) == doctest::Approx(0.8));
  CHECK(reflect_into_interval(-0.3, 0.0, 1.0) == doctest::Approx(0.3));
  CHECK(reflect_into_interval(2.1, 0.0, 1.0) == doctest::Approx(0.1));
  CHECK(reflect_into_interval(0.55, 0.4, 0.6) == doctest::Approx(0.55));
}

TEST_CASE("spr regrafting onto the pruned edge reproduces the input tree exactly") {
  Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    const auto t = sample_yule_tree(2 + int(rng() % 8), 1.0, rng);
    const int x = [&] {
      std::uniform_int_distribution<int> pick(0, t.num_nodes() - 2);
      int id = pick(rng);
      return id >= t.root ? id + 1 : id;
    }();
    const auto ctx = spr_context(t, x, false);
    // the merged edge (sibling in the pruned tree) is always a candidate
    const int identity_edge = ctx.grandparent < 0 ? -1 - ctx.sibling : ctx.sibling;
    REQUIRE(std::count(ctx.candidates.begin(), ctx.candidates.end(), identity_edge) == 1);
    const auto back = apply_spr(t, ctx, identity_edge);
    CHECK(to_newick(back) == to_newick(t));
  }
}

TEST_CASE("subtree exchange validity rules") {
  const auto t = from_newick("(((A:0.2,B:0.2):0.3,C:0.5):0.5,D:1.0);");
  const int ab = t.nodes[0].parent;
  const int abc = t.nodes[ab].parent;
  CHECK_FALSE(subtree_exchange_valid(t, ab, abc));    // nested
  CHECK_FALSE(subtree_exchange_valid(t, 0, 0));       // identical
  CHECK_FALSE(subtree_exchange_valid(t, t.root, 0));  // root not movable
  CHECK(subtree_exchange_valid(t, 0, 1));             // sibling leaves
  const auto swapped = exchange_subtrees(t, 0, 1);
  CHECK(validate(swapped).ok);
  CHECK(rf_distance(swapped, t) == 0.0);  // sibling swap keeps the topology
}

TEST_CASE("propose_random is deterministic given the seed and draws kinds uniformly") {
  const auto t = from_newick("(((A:0.2,B:0.2):0.3,C:0.5):0.5,D:1.0);");
  Rng r1(909), r2(909);
  for (int i = 0; i < 50; ++i) {
    const auto [k1, o1] = propose_random(t, r1, 0.1);
    const auto [k2, o2] = propose_random(t, r2, 0.1);
    CHECK(k1 == k2);
    CHECK(o1.feasible == o2.feasible);
    if (o1.feasible) CHECK(to_newick(o1.proposed) == to_newick(o2.proposed));
  }

  Rng rng(31337);
  std::array<int, kNumMoveKinds> counts{};
  const int n = 100000;
  int infeasible = 0;
  for (int i = 0; i < n; ++i) {
    const auto [kind, out] = propose_random(t, rng, 0.1);
    counts[int(kind)]++;
    if (!out.feasible) ++infeasible;
  }
  for (int k = 0; k < kNumMoveKinds; ++k)
    CHECK(std::abs(counts[k] / double(n) - 0.2) < 0.01);
  CHECK(infeasible > 0);  // infeasible draws are reported, not retried
}

// Accept-everything-feasible chain driven by the five kernels. Its invariant
// law is uniform over (topology, ages); the exact topology marginal of that
// law is the pure-birth labeled-topology distribution (mass proportional to
// the number of valid age orderings of the internal nodes), which the
// enumeration computes. Any asymmetry in a kernel, or a failure to reach the
// whole space, shows up as a chi-square failure against this law.
TEST_CASE("move kernels: symmetry and ergodicity via topology occupancy at V=4") {
  const std::vector<std::string> labels{"A", "B", "C", "D"};
  const auto law = test::yule_topology_distribution(labels);
  Rng rng(8675309);
  PhyloTree tree = sample_yule_tree(labels, 1.0, rng);

  std::map<std::string, int> counts;
  const int sweeps = 100000;
  const int thin = 10;
  int kept = 0;
  for (int s = 0; s < sweeps; ++s) {
    const auto [kind, out] = propose_random(tree, rng, 0.15);
    if (out.feasible) tree = std::move(out.proposed);
    if (s % thin == 0) {
      counts[test::topology_key(tree)]++;
      ++kept;
    }
  }
  REQUIRE(counts.size() == law.size());
  std::vector<double> observed, expected;
  for (const auto& [key, p] : law) {
    observed.push_back(counts.count(key) ? counts.at(key) : 0);
    expected.push_back(p * kept);
  }
  CHECK(test::chi2_test(observed, expected) > 0.001);
}
