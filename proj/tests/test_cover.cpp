#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "thermo/cover.hpp"

using namespace thermo;

namespace {

SetFamily evens_odds() { return SetFamily::partition(7, {{0, 2, 4, 6}, {1, 3, 5}}); }

// Oracle for F^n: brute-force intersection over all tuples of members.
std::set<StateList> naive_orbit_join(const FiniteSystem& sys, const SetFamily& fam, const LatticePoint& n) {
  const auto pts = enumerate_box(n);
  std::vector<StateList> cur = {identity_map(sys.state_count())};
  for (const auto& k : pts) {
    const auto tk = power_map(sys, k);
    std::vector<StateList> next;
    for (const auto& c : cur)
      for (const auto& m : fam.members()) {
        StateList s;
        for (State x : c)
          if (std::binary_search(m.begin(), m.end(), tk[x])) s.push_back(x);
        if (!s.empty()) next.push_back(s);
      }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    cur = next;
  }
  return {cur.begin(), cur.end()};
}

SetFamily random_family(std::mt19937_64& rng, std::size_t m, bool partition) {
  if (partition) {
    std::vector<std::uint64_t> lab(m);
    const std::size_t k = 1 + rng() % 3;
    for (auto& l : lab) l = rng() % k;
    return SetFamily::from_labels(lab);
  }
  std::vector<StateList> members;
  const std::size_t k = 1 + rng() % 4;
  for (std::size_t i = 0; i < k; ++i) {
    StateList s;
    for (State x = 0; x < m; ++x)
      if (rng() % 2) s.push_back(x);
    members.push_back(s);
  }
  StateList fill;
  for (State x = 0; x < m; ++x) fill.push_back(x);
  if (rng() % 2) members.push_back(fill);
  else {
    // make it cover by assigning uncovered states to member 0
    std::vector<bool> seen(m, false);
    for (auto& s : members)
      for (State x : s) seen[x] = true;
    for (State x = 0; x < m; ++x)
      if (!seen[x]) members[0].push_back(x);
    std::sort(members[0].begin(), members[0].end());
  }
  return SetFamily::cover(m, members);
}

}  // namespace

TEST(Cover, ConstructionValidates) {
  EXPECT_THROW(SetFamily::cover(4, {{0, 1}, {2}}), domain_error);
  EXPECT_THROW(SetFamily::partition(3, {{0, 1}, {1, 2}}), domain_error);
  auto f = SetFamily::cover(3, {{0, 1}, {1, 0}, {2}, {}});
  EXPECT_EQ(f.size(), 2u);
  EXPECT_EQ(f.dropped_empty(), 1u);
}

TEST(Cover, TextRoundTrip) {
  auto f = SetFamily::cover(5, {{0, 1, 2}, {2, 3, 4}});
  std::istringstream is(to_text(f));
  auto g = read_family(is);
  EXPECT_TRUE(g.same_members(f));
  EXPECT_EQ(g.kind(), f.kind());
}

TEST(Cover, PreimageExamples) {
  auto sys = make_circle_doubling(7);
  auto f = evens_odds();
  EXPECT_TRUE(preimage_family(sys, f, LatticePoint({0})).same_members(f));
  auto p = preimage_family(sys, f, LatticePoint({1}));
  EXPECT_TRUE(p.is_partition());
  EXPECT_TRUE(std::count(p.members().begin(), p.members().end(), StateList{0, 1, 2, 3}));
}

TEST(Cover, JoinExamples) {
  auto f = evens_odds();
  EXPECT_TRUE(join(f, f).same_members(f));
  EXPECT_TRUE(join(f, SetFamily::trivial(7)).same_members(f));
  auto g = SetFamily::partition(7, {{0, 1, 2, 3}, {4, 5, 6}});
  auto j = join(f, g);
  EXPECT_TRUE(j.same_members(SetFamily::partition(7, {{0, 2}, {4, 6}, {1, 3}, {5}})));
}

TEST(Cover, OrbitJoinExamples) {
  auto sys = make_circle_doubling(101);
  std::vector<std::uint64_t> lab(101);
  for (State x = 0; x < 101; ++x) lab[x] = 2 * x >= 101;
  auto arcs = SetFamily::from_labels(lab);
  EXPECT_TRUE(orbit_join(sys, arcs, LatticePoint({1})).same_members(arcs));
  auto j3 = orbit_join(sys, arcs, LatticePoint({3}));
  EXPECT_TRUE(j3.is_partition());
  EXPECT_EQ(j3.size(), 8u);
}

TEST(Cover, OrbitJoinMatchesNaive) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t m = 2 + rng() % 8;
    const std::size_t dim = 1 + rng() % 2;
    StateMap base(m);
    for (auto& y : base) y = static_cast<State>(rng() % m);
    std::vector<StateMap> gens;
    for (std::size_t j = 0; j < dim; ++j) gens.push_back(iterate_map(base, 1 + rng() % 2));
    FiniteSystem sys(m, gens);
    auto fam = random_family(rng, m, trial % 2 == 0);
    std::vector<std::uint64_t> n(dim);
    for (auto& c : n) c = 1 + rng() % (dim == 1 ? 5 : 3);
    auto fast = orbit_join(sys, fam, LatticePoint(n));
    auto naive = naive_orbit_join(sys, fam, LatticePoint(n));
    auto canon = fast.canonical_members();
    EXPECT_EQ(std::set<StateList>(canon.begin(), canon.end()), naive) << "trial " << trial;
    EXPECT_EQ(fast.is_partition(), fam.is_partition());
  }
}

TEST(Cover, OrbitJoinBudget) {
  auto sys = make_circle_doubling(101);
  JoinLimits lim;
  lim.max_lambda = 4;
  EXPECT_THROW(orbit_join(sys, SetFamily::trivial(101), LatticePoint({5}), lim), resource_error);
}

TEST(Cover, RefinesExamples) {
  auto f = evens_odds();
  auto g = SetFamily::partition(7, {{0, 1}, {2, 3, 4, 5, 6}});
  EXPECT_TRUE(refines(f, f));
  EXPECT_TRUE(refines(join(f, g), f));
  EXPECT_FALSE(refines(f, g));
}

TEST(Cover, Admissibility) {
  FiniteSystem plain(4, {identity_map(4)});
  auto c = SetFamily::cover(4, {{0, 1}, {2, 3}});
  auto r = classify_admissible(plain, c);
  EXPECT_TRUE(r.is_admissible);
  EXPECT_TRUE(r.is_strongly_admissible);

  auto disk = make_disk_system(4, 8);
  DiskGrid grid{4, 8};
  StateList annulus, inner;
  for (State s = 0; s < disk.state_count(); ++s) (s != 0 && grid.ring_of(s) >= 2 ? annulus : inner).push_back(s);
  std::vector<StateList> mem{annulus};
  for (State s : inner) mem.push_back({s});
  auto adm = classify_admissible(disk, SetFamily::partition(disk.state_count(), mem));
  EXPECT_TRUE(adm.is_admissible);
  EXPECT_EQ(adm.witness, std::optional<std::size_t>(0));

  // two pizza slices: each meets the outer ring but neither holds all of it
  StateList a, b;
  for (State s = 1; s < disk.state_count(); ++s) (grid.sector_of(s) < 4 ? a : b).push_back(s);
  a.insert(a.begin(), 0);
  auto pizza = SetFamily::partition(disk.state_count(), {a, b});
  EXPECT_FALSE(classify_admissible(disk, pizza).is_admissible);
  EXPECT_FALSE(classify_admissible_partition(disk, pizza).is_admissible_partition);
}

TEST(Cover, CoverFromPartition) {
  FiniteSystem sys(6, {identity_map(6)}, {5});
  auto two = SetFamily::partition(6, {{0, 1, 2}, {3, 4, 5}});
  auto c = cover_from_partition(sys, two);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].size(), 6u);

  auto four = SetFamily::partition(6, {{0}, {1, 2}, {3}, {4, 5}});
  auto d = cover_from_partition(sys, four);
  EXPECT_EQ(d.size(), 3u);
  auto rep = classify_admissible(sys, d);
  EXPECT_TRUE(rep.is_strongly_admissible);
  for (const auto& m : d.members()) EXPECT_TRUE(std::includes(m.begin(), m.end(), four[3].begin(), four[3].end()));

  auto bad = SetFamily::partition(6, {{0, 5}, {1, 2, 3, 4}});
  FiniteSystem two_marked(6, {identity_map(6)}, {0, 1});
  EXPECT_THROW(cover_from_partition(two_marked, bad), domain_error);
}

TEST(Cover, PotentialCover) {
  FiniteSystem sys(4, {identity_map(4)});
  auto z = potential_cover(sys, Potential::constant(4, 0), 1.0);
  EXPECT_TRUE(std::any_of(z.members().begin(), z.members().end(), [](auto& m) { return m.size() == 4; }));

  Potential f({0, 0.3, 0.1, 0.2});
  auto w = potential_cover(sys, f, 1.0);
  EXPECT_TRUE(classify_admissible(sys, w).is_admissible);

  Potential two({0, 1, 1, 0});
  auto lv = potential_cover(sys, two, 0.5);
  EXPECT_TRUE(lv.same_members(SetFamily::cover(4, {{0, 3}, {1, 2}})));

  FiniteSystem marked(4, {identity_map(4)}, {2, 3});
  EXPECT_THROW(potential_cover(marked, two, 0.5), precondition_error);
}

TEST(Cover, ClosenessGraph) {
  auto sys = make_circle_doubling(5);
  auto g0 = closeness_graph(sys, SetFamily::singletons(5), LatticePoint({3}));
  for (State x = 0; x < 5; ++x) EXPECT_TRUE(g0.neighbors(x).empty());
  auto g1 = closeness_graph(sys, SetFamily::trivial(5), LatticePoint({2}));
  for (State x = 0; x < 5; ++x) EXPECT_EQ(g1.neighbors(x).size(), 4u);

  auto arcs = SetFamily::partition(5, {{0, 1, 2}, {3, 4}});
  auto g = closeness_graph(sys, arcs, LatticePoint({2}));
  // itinerary classes of (x, 2x mod 5)
  std::map<std::pair<int, int>, StateList> cls;
  for (State x = 0; x < 5; ++x) cls[{x >= 3, (2 * x) % 5 >= 3}].push_back(x);
  for (State x = 0; x < 5; ++x)
    for (State y = 0; y < 5; ++y) {
      const bool same = std::pair<int, int>{x >= 3, (2 * x) % 5 >= 3} == std::pair<int, int>{y >= 3, (2 * y) % 5 >= 3};
      EXPECT_EQ(g.adjacent(x, y), same);
    }
}
