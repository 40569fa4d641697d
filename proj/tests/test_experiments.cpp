#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "thermo/experiments.hpp"

using namespace thermo;

TEST(Experiments, RawValueRoundTrip) {
  for (double l : {-3.0, 0.0, 1e-3, 12.5, 699.0, 701.0, -850.0, 4.2e6, 1.7e7}) {
    const auto s = format_raw(l);
    EXPECT_NEAR(parse_raw_log(s), l, 1e-12 * std::max(1.0, std::abs(l))) << s;
  }
  EXPECT_EQ(format_raw(std::log(8.0)), "8");
  EXPECT_EQ(format_raw(-INFINITY), "0");
}

TEST(Experiments, CsvRoundTripAndConsistency) {
  std::vector<ResultRow> rows{
      log_row("x", "c1", "Q", LatticePoint({3, 4}), 12, 5.5, 0.5, "exact"),
      log_row("x", "c2", "S", LatticePoint({100}), 100, 3000.25, {}, "greedy_lower"),
      {"lattice-check", "case0", "residue", "5-6", 30, "7", 7.0 / 30, 0.9, "tiling-exact"}};
  std::stringstream ss;
  write_csv(ss, rows);
  auto back = read_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].cover, rows[i].cover);
    EXPECT_EQ(back[i].n, rows[i].n);
    EXPECT_EQ(back[i].raw_value, rows[i].raw_value);
    EXPECT_EQ(back[i].rate, rows[i].rate);
    EXPECT_EQ(back[i].bound.has_value(), rows[i].bound.has_value());
    EXPECT_TRUE(row_consistent(back[i]));
  }
  auto bad = rows[0];
  bad.rate += 1e-6;
  EXPECT_FALSE(row_consistent(bad));
  std::stringstream wrong("a,b\n");
  EXPECT_THROW(read_csv(wrong), domain_error);
}

TEST(Experiments, BinomialOracleIsClosedForm) {
  for (double a : {-1.0, 0.0, 0.7, 2.0})
    for (std::uint64_t n : {1, 5, 14, 200}) EXPECT_NEAR(binomial_sum_rate(a, n), std::log1p(std::exp(a)), 1e-12);
}

TEST(Experiments, ParallelMapKeepsOrderAndRethrows) {
  auto v = parallel_map(100, 4, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(v[i], i * i);
  EXPECT_THROW(parallel_map(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw resource_error("boom");
                              return i;
                            }),
               resource_error);
}

TEST(Experiments, LcmAndOracle) {
  EXPECT_EQ(lcm_upto(1), 1u);
  EXPECT_EQ(lcm_upto(6), 60u);
  EXPECT_EQ(lcm_upto(12), 27720u);
  FiniteSystem sys(3, {StateMap{1, 0, 2}});
  EXPECT_NEAR(cycle_oracle_pressure(sys, Potential({0, 2, 0.5})), 1.0, 1e-12);
}

TEST(Experiments, TilingCheckDetectsCorruption) {
  auto d = decompose(LatticePoint({7, 5}), LatticePoint({2, 3}), LatticePoint({1, 0}));
  EXPECT_TRUE(tiling_is_exact(d));
  auto dup = d;
  dup.residue.push_back(dup.residue.front());
  EXPECT_FALSE(tiling_is_exact(dup));
  auto miss = d;
  miss.residue.pop_back();
  EXPECT_FALSE(tiling_is_exact(miss));
}

TEST(Experiments, LatticeCheckRun) {
  ExperimentConfig cfg;
  cfg.experiment = "lattice-check";
  cfg.cases = 90;
  auto r = run_lattice_check(cfg);
  EXPECT_EQ(r.rows.size(), 90u);
  EXPECT_TRUE(r.all_pass()) << r.verdicts[0].detail;
  for (const auto& row : r.rows) EXPECT_TRUE(row_consistent(row));
}

TEST(Experiments, DoublingSmall) {
  ExperimentConfig cfg;
  cfg.m = 1001;
  cfg.n_max = 6;
  cfg.potential = "arc-indicator";
  cfg.potential_a = 0.5;
  auto r = run_doubling(cfg);
  EXPECT_EQ(r.rows.size(), 2u * 6 * 4);
  ASSERT_EQ(r.verdicts.size(), 1u);
  EXPECT_TRUE(r.verdicts[0].pass) << r.verdicts[0].detail;
  for (const auto& row : r.rows) EXPECT_TRUE(row_consistent(row));
  // deterministic regardless of worker count
  cfg.threads = 1;
  auto r1 = run_doubling(cfg);
  std::stringstream a, b;
  write_csv(a, r.rows);
  write_csv(b, r1.rows);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Experiments, DiskCoversAdmissibility) {
  auto sys = make_disk_system(8, 16);
  auto c = disk_covers(8, 16, 2);
  EXPECT_FALSE(classify_admissible(sys, c.pizza).is_admissible);
  EXPECT_TRUE(classify_admissible(sys, c.annulus_d).is_admissible);
  EXPECT_TRUE(c.pizza.is_partition());
  EXPECT_EQ(c.pizza.size(), 3u);
}

TEST(Experiments, EuclideanSeparatedGrowth) {
  // near the circle the angular part doubles: counts grow roughly like 2^t
  const auto c4 = euclidean_separated_count(64, 4, 0.5, 1e-9);
  const auto c8 = euclidean_separated_count(64, 8, 0.5, 1e-9);
  EXPECT_GE(c8, 8 * c4);
  EXPECT_GE(c4, 4u);
}

TEST(Experiments, FiniteVpTwoInstances) {
  ExperimentConfig cfg;
  cfg.experiment = "finite-vp";
  cfg.instances = 2;
  cfg.vp_min_box = 4096;
  auto r = run_finite_vp(cfg);
  ASSERT_EQ(r.verdicts.size(), 1u);
  EXPECT_TRUE(r.verdicts[0].pass) << r.verdicts[0].detail;
}

TEST(Experiments, FullShiftRun) {
  ExperimentConfig cfg;
  cfg.experiment = "fullshift";
  cfg.symbols = 3;
  cfg.shift_dim = 2;
  cfg.phi = {0.0, 1.0, -0.5};
  auto r = run_fullshift(cfg);
  EXPECT_TRUE(r.all_pass());
  cfg.phi = {0.0};
  EXPECT_THROW(run_fullshift(cfg), domain_error);
}

TEST(Experiments, VerdictsArePureOverRows) {
  std::vector<ResultRow> rows{log_row("doubling", "arcs", "Q", LatticePoint({2}), 2, 2 * 0.6, 0.7, "exact"),
                              log_row("doubling", "arcs", "Q", LatticePoint({3}), 3, 3 * 0.69, 0.7, "exact")};
  EXPECT_TRUE(verdict_doubling(rows, 0.05).pass);
  EXPECT_FALSE(verdict_doubling(rows, 0.001).pass);
  rows.pop_back();
  EXPECT_FALSE(verdict_doubling(rows, 0.05).pass);

  std::vector<ResultRow> lk{log_row("leakage", "pizza", "Q", LatticePoint({5}), 5, 5 * 0.65, {}, "exact"),
                            log_row("leakage", "euclidean-separated", "S", LatticePoint({5}), 5, 5 * 0.7, {}, "exact"),
                            log_row("leakage", "admissible:x", "Q", LatticePoint({5}), 5, 0.1, {}, "exact")};
  auto v = verdict_leakage(lk, 5, "pizza");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_TRUE(v[0].pass && v[1].pass && v[2].pass);
}

TEST(Experiments, SvgHasOneLinePerSeries) {
  std::vector<ResultRow> rows{log_row("d", "a", "Q", LatticePoint({1}), 1, 1, {}, "exact"),
                              log_row("d", "a", "Q", LatticePoint({2}), 2, 1, {}, "exact"),
                              log_row("d", "b", "S", LatticePoint({2}), 2, 1, {}, "exact")};
  const auto svg = svg_plot(rows, "t");
  std::size_t count = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++count;
  EXPECT_EQ(count, 2u);
}

TEST(Experiments, ConfigValidation) {
  ExperimentConfig cfg;
  cfg.experiment = "nope";
  EXPECT_THROW(cfg.validate(), domain_error);
  cfg.experiment = "doubling";
  cfg.m = 100;
  EXPECT_THROW(cfg.validate(), domain_error);
  cfg.m = 101;
  cfg.potential = "weird";
  EXPECT_THROW(cfg.validate(), domain_error);
}
