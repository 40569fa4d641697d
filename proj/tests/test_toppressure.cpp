#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "thermo/lattice.hpp"
#include "thermo/toppressure.hpp"

using namespace thermo;

namespace {

SetFamily binary_arcs(std::uint64_t m) {
  std::vector<std::uint64_t> lab(m);
  for (std::uint64_t x = 0; x < m; ++x) lab[x] = 2 * x >= m;
  return SetFamily::from_labels(lab);
}

// Brute-force oracles over all subfamilies / state subsets, in linear space.
double brute_q(const SetFamily& joined, const std::vector<double>& fn, bool use_max) {
  const std::size_t k = joined.size();
  double best = INFINITY;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    std::vector<bool> cov(joined.state_count(), false);
    double s = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (!(mask >> i & 1)) continue;
      double e = use_max ? -INFINITY : INFINITY;
      for (State x : joined[i]) {
        cov[x] = true;
        e = use_max ? std::max(e, fn[x]) : std::min(e, fn[x]);
      }
      s += std::exp(e);
    }
    if (std::all_of(cov.begin(), cov.end(), [](bool b) { return b; })) best = std::min(best, s);
  }
  return best;
}

double brute_sg(const SetFamily& joined, const std::vector<double>& fn, bool separated) {
  const auto g = closeness_graph(joined);
  const std::size_t m = joined.state_count();
  double best = separated ? 0.0 : INFINITY;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    double s = 0;
    bool ok = true;
    for (State x = 0; x < m; ++x)
      if (mask >> x & 1) s += std::exp(fn[x]);
    if (separated) {
      for (State x = 0; x < m && ok; ++x)
        for (State y = x + 1; y < m && ok; ++y)
          if ((mask >> x & 1) && (mask >> y & 1) && g.adjacent(x, y)) ok = false;
      if (ok) best = std::max(best, s);
    } else {
      for (State x = 0; x < m && ok; ++x) {
        bool dom = false;
        for (State y = 0; y < m && !dom; ++y) dom = (mask >> y & 1) && g.adjacent(x, y);
        ok = dom;
      }
      if (ok) best = std::min(best, s);
    }
  }
  return best;
}

}  // namespace

TEST(TopPressure, ZeroPotentialCountsMembers) {
  auto sys = make_circle_doubling(101);
  auto q = cover_pressure_value(sys, Potential::constant(101, 0), binary_arcs(101), LatticePoint({3}), PressureMode::Q);
  EXPECT_NEAR(std::exp(q.log_value), 8.0, 1e-12);
  auto c = cover_pressure_value(sys, Potential::constant(101, 0.5), binary_arcs(101), LatticePoint({3}), PressureMode::Q);
  EXPECT_NEAR(c.log_value, std::log(8.0) + 1.5, 1e-12);
}

TEST(TopPressure, SeparatedSpanningExamples) {
  FiniteSystem id(5, {identity_map(5)});
  auto f0 = Potential::constant(5, 0);
  auto path = SetFamily::cover(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  EXPECT_NEAR(std::exp(separated_value(id, f0, path, LatticePoint({1})).log_value), 3.0, 1e-12);
  EXPECT_NEAR(std::exp(spanning_value(id, f0, path, LatticePoint({1})).log_value), 2.0, 1e-12);

  Potential f({0.1, -0.3, 0.7, 0.2, 0.0});
  auto one = SetFamily::trivial(5);
  EXPECT_NEAR(separated_value(id, f, one, LatticePoint({2})).log_value, 1.4, 1e-12);
  EXPECT_NEAR(spanning_value(id, f, one, LatticePoint({2})).log_value, -0.6, 1e-12);
  EXPECT_NEAR(std::exp(separated_value(id, f0, SetFamily::singletons(5), LatticePoint({1})).log_value), 5, 1e-12);
  EXPECT_NEAR(std::exp(spanning_value(id, f0, SetFamily::singletons(5), LatticePoint({1})).log_value), 5, 1e-12);
}

TEST(TopPressure, ModesMatchBruteForce) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 150; ++t) {
    const std::size_t m = 2 + rng() % 7;
    StateMap g(m);
    for (auto& y : g) y = static_cast<State>(rng() % m);
    FiniteSystem sys(m, {g});
    std::vector<double> v(m);
    for (auto& x : v) x = u(rng);
    Potential f(v);
    std::vector<StateList> mem;
    const std::size_t k = 1 + rng() % 4;
    for (std::size_t i = 0; i < k; ++i) {
      StateList s;
      for (State x = 0; x < m; ++x)
        if (rng() % 2) s.push_back(x);
      mem.push_back(s);
    }
    std::vector<bool> seen(m, false);
    for (auto& s : mem)
      for (State x : s) seen[x] = true;
    for (State x = 0; x < m; ++x)
      if (!seen[x]) mem[rng() % k].push_back(x);
    for (auto& s : mem) std::sort(s.begin(), s.end());
    auto fam = SetFamily::cover(m, mem);
    const LatticePoint n({1 + rng() % 3});
    const auto joined = orbit_join(sys, fam, n);
    if (joined.size() > 14) continue;
    const auto fn = birkhoff_table(sys, f, n);
    EXPECT_NEAR(pressure_value(sys, f, fam, n, PressureMode::Q).log_value, std::log(brute_q(joined, fn, false)), 1e-9);
    EXPECT_NEAR(pressure_value(sys, f, fam, n, PressureMode::P).log_value, std::log(brute_q(joined, fn, true)), 1e-9);
    EXPECT_NEAR(pressure_value(sys, f, fam, n, PressureMode::S).log_value, std::log(brute_sg(joined, fn, true)), 1e-9);
    EXPECT_NEAR(pressure_value(sys, f, fam, n, PressureMode::G).log_value, std::log(brute_sg(joined, fn, false)), 1e-9);
  }
}

TEST(TopPressure, RateSequence) {
  std::vector<PressureSample> s;
  for (std::uint64_t t = 1; t <= 4; ++t) s.push_back({LatticePoint({t}), t, t * std::log(2.0), SolverStatus::exact, 0, {}});
  auto e = rate_sequence(s, true);
  for (double r : e.rates()) EXPECT_NEAR(r, std::log(2.0), 1e-15);
  EXPECT_NEAR(*e.increment_rate, std::log(2.0), 1e-15);
  s[0].log_value = -INFINITY;
  EXPECT_THROW(rate_sequence(s, true), domain_error);
}

TEST(TopPressure, DoublingRatesIncreaseTowardLog2) {
  auto sys = make_circle_doubling(100003);
  PressureLimits lim;
  lim.join.max_members = 1 << 15;
  auto est = pressure_along_diagonal(sys, Potential::constant(100003, 0), binary_arcs(100003), {1, 4, 8, 12},
                                     PressureMode::Q, lim);
  for (double r : est.rates()) EXPECT_NEAR(r, std::log(2.0), 1e-12);
}

TEST(TopPressure, TopologicalPressureCovers) {
  FiniteSystem sys(4, {StateMap{1, 2, 0, 0}});
  auto f0 = Potential::constant(4, 0);
  TopologicalPressureOptions opt;
  opt.steps = {2, 4, 8};
  auto r = topological_pressure(sys, f0, {SetFamily::trivial(4)}, opt);
  EXPECT_NEAR(r.estimate, 0.0, 1e-15);

  auto disk = make_disk_system(4, 8);
  StateList a, b;
  DiskGrid grid{4, 8};
  for (State s = 1; s < disk.state_count(); ++s) (grid.sector_of(s) < 4 ? a : b).push_back(s);
  a.insert(a.begin(), 0);
  auto pizza = SetFamily::partition(disk.state_count(), {a, b});
  auto fd = Potential::constant(disk.state_count(), 0);
  EXPECT_THROW(topological_pressure(disk, fd, {pizza}, opt), domain_error);
  opt.allow_nonadmissible = true;
  auto diag = topological_pressure(disk, fd, {pizza}, opt);
  EXPECT_TRUE(diag.diagnostic);
  EXPECT_FALSE(diag.covers[0].admissible);
}

TEST(TopPressure, PModeSubmultiplicativeWithResidueCorrection) {
  // P_n <= e^{|Gamma_n(p)| |f|_inf} P_p^{#tiles}, exact instances only
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    const std::size_t m = 2 + rng() % 7, dim = 1 + rng() % 2;
    StateMap g(m);
    for (auto& y : g) y = static_cast<State>(rng() % m);
    std::vector<StateMap> gens{g};
    if (dim == 2) gens.push_back(compose(g, g));
    FiniteSystem sys(m, gens);
    std::vector<double> v(m);
    for (auto& x : v) x = u(rng);
    Potential f(v);
    std::vector<std::uint64_t> lab(m);
    for (auto& l : lab) l = rng() % 3;
    auto fam = SetFamily::from_labels(lab);
    if (t % 2) fam = SetFamily::cover(m, [&] {
        auto mem = fam.members();
        mem.push_back({static_cast<State>(rng() % m), static_cast<State>(rng() % m)});
        std::sort(mem.back().begin(), mem.back().end());
        mem.back().erase(std::unique(mem.back().begin(), mem.back().end()), mem.back().end());
        return mem;
      }());
    std::vector<std::uint64_t> pv(dim), nv(dim);
    for (std::size_t j = 0; j < dim; ++j) pv[j] = 1 + rng() % 2, nv[j] = pv[j] + rng() % (dim == 1 ? 6 : 3);
    const LatticePoint p(pv), n(nv);
    const auto pn = pressure_value(sys, f, fam, n, PressureMode::P);
    const auto pp = pressure_value(sys, f, fam, p, PressureMode::P);
    if (pn.status != SolverStatus::exact || pp.status != SolverStatus::exact) continue;
    const auto d = decompose(n, p, LatticePoint::diagonal(dim, 0));
    const double rhs = static_cast<double>(d.residue.size()) * f.sup_norm() +
                       static_cast<double>(d.corners.size()) * pp.log_value;
    EXPECT_LE(pn.log_value, rhs + 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 250);
}
