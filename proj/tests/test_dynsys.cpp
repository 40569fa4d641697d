#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>
#include <set>

#include "thermo/dynsys.hpp"

using namespace thermo;

TEST(Dynsys, ApplyPowerDoubling) {
  auto sys = make_circle_doubling(7);
  for (State x = 0; x < 7; ++x) EXPECT_EQ(apply_power(sys, LatticePoint({0}), x), x);
  EXPECT_EQ(apply_power(sys, LatticePoint({1}), 3), 6u);
  EXPECT_EQ(apply_power(sys, LatticePoint({2}), 3), 5u);
  EXPECT_THROW(apply_power(sys, LatticePoint({1, 1}), 3), domain_error);
}

TEST(Dynsys, DoublingConstruction) {
  auto s3 = make_circle_doubling(3);
  EXPECT_EQ(s3.generator(0), (StateMap{0, 2, 1}));
  auto s7 = make_circle_doubling(7);
  std::set<State> img(s7.generator(0).begin(), s7.generator(0).end());
  EXPECT_EQ(img.size(), 7u);
  EXPECT_THROW(make_circle_doubling(8), domain_error);
  EXPECT_THROW(make_circle_doubling(1), domain_error);
}

TEST(Dynsys, NonCommutingGeneratorsRejected) {
  StateMap a{1, 0, 2}, b{0, 2, 1};
  EXPECT_THROW(FiniteSystem(3, {a, b}), domain_error);
  EXPECT_NO_THROW(FiniteSystem(3, {a, a}));
  EXPECT_THROW(FiniteSystem(3, {StateMap{0, 1, 3}}), domain_error);
}

TEST(Dynsys, PotentialValidation) {
  EXPECT_THROW(Potential({0.0, NAN}), domain_error);
  EXPECT_THROW(Potential({0.0, INFINITY}), domain_error);
  EXPECT_DOUBLE_EQ(Potential({-3.0, 2.0}).sup_norm(), 3.0);
}

TEST(Dynsys, BirkhoffExamples) {
  auto sys = make_circle_doubling(7);
  Potential c = Potential::constant(7, 0.25);
  EXPECT_DOUBLE_EQ(birkhoff_sum(sys, c, LatticePoint({8}), 3), 2.0);
  Potential even({1, 0, 1, 0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(birkhoff_sum(sys, even, LatticePoint({1}), 5), 0.0);
  EXPECT_DOUBLE_EQ(birkhoff_sum(sys, even, LatticePoint({3}), 1), 2.0);
  EXPECT_THROW(birkhoff_sum(sys, even, LatticePoint({0}), 1), domain_error);
}

TEST(Dynsys, BirkhoffTableMatchesNaive) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 2 + rng() % 9;
    const std::size_t dim = 1 + rng() % 2;
    // commuting generators: powers of one random map
    StateMap base(m);
    for (auto& y : base) y = static_cast<State>(rng() % m);
    std::vector<StateMap> gens;
    for (std::size_t j = 0; j < dim; ++j) gens.push_back(iterate_map(base, 1 + rng() % 3));
    FiniteSystem sys(m, gens);
    std::vector<double> v(m);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto& x : v) x = u(rng);
    Potential f(v);
    std::vector<std::uint64_t> n(dim);
    for (auto& c : n) c = 1 + rng() % 9;
    const auto table = birkhoff_table(sys, f, LatticePoint(n));
    for (State x = 0; x < m; ++x) EXPECT_NEAR(table[x], birkhoff_sum(sys, f, LatticePoint(n), x), 1e-9);
  }
}

TEST(Dynsys, DoublingItinerariesLength10) {
  auto sys = make_circle_doubling(100003);
  std::set<std::uint32_t> words;
  for (State x = 0; x < 100003; ++x) {
    std::uint32_t w = 0;
    State y = x;
    for (int t = 0; t < 10; ++t) {
      w = (w << 1) | (2ull * y >= 100003 ? 1u : 0u);
      y = sys.generator(0)[y];
    }
    words.insert(w);
  }
  EXPECT_EQ(words.size(), 1024u);
}

TEST(Dynsys, DiskCenterFixedAndRingsContract) {
  auto sys = make_disk_system(16, 32);
  DiskGrid grid{16, 32};
  EXPECT_EQ(sys.generator(0)[0], 0u);
  for (State s = 1; s < sys.state_count(); ++s) {
    const State t = sys.generator(0)[s];
    ASSERT_NE(t, 0u);
    EXPECT_LE(grid.ring_of(t), grid.ring_of(s));
  }
  EXPECT_EQ(sys.marked().size(), 32u);
}

TEST(Dynsys, DiskImageAgreesWithContinuousMap) {
  // the doubled center angle sits on a bin edge; accept either neighbour,
  // and compare rings against floating point away from edges
  DiskGrid grid{64, 256};
  for (State s = 1; s < grid.state_count(); ++s) {
    const State t = disk_cell_image(grid, s);
    const double r = grid.center_radius(s);
    const double r2 = r * (r + 1) / 2;
    const double ring_f = r2 * 64;
    if (std::abs(ring_f - std::round(ring_f)) > 1e-9) {
      EXPECT_EQ(grid.ring_of(t), static_cast<std::uint64_t>(std::ceil(ring_f)) - 1);
    }
    const std::uint64_t j = grid.sector_of(s);
    const std::uint64_t sec = grid.sector_of(t);
    EXPECT_TRUE(sec == (2 * j) % 256 || sec == (2 * j + 1) % 256);
  }
}

TEST(Dynsys, PowerSystem) {
  auto sys = make_circle_doubling(7);
  auto p1 = power_system(sys, LatticePoint({1}));
  EXPECT_EQ(p1.generator(0), sys.generator(0));
  auto p2 = power_system(sys, LatticePoint({2}));
  for (State x = 0; x < 7; ++x) EXPECT_EQ(p2.generator(0)[x], (4 * x) % 7);
  StateMap base{1, 2, 0, 0};
  FiniteSystem two(4, {base, iterate_map(base, 2)});
  EXPECT_NO_THROW(power_system(two, LatticePoint({3, 2})));
}

TEST(Dynsys, CycleStructureExamples) {
  FiniteSystem id(3, {identity_map(3)});
  auto c = cycle_structure(id, Potential({1, 2, 3}));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_DOUBLE_EQ(c[0].mean, 1);
  EXPECT_DOUBLE_EQ(c[2].mean, 3);

  for (const auto& cy : cycle_structure(make_circle_doubling(7), Potential::constant(7, 0))) EXPECT_EQ(cy.mean, 0.0);

  FiniteSystem t(4, {StateMap{1, 2, 0, 0}});
  auto d = cycle_structure(t, Potential({0, 3, 0, 9}));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].states.size(), 3u);
  EXPECT_DOUBLE_EQ(d[0].mean, 1.0);
}
