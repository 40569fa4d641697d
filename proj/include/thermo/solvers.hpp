#pragma once

// Exact and greedy solvers behind the pressure quantities:
//   - minimum-weight set cover (weighted minimal subcover),
//   - maximum-weight independent set,
//   - minimum-weight dominating set (through set cover).
// Exact solves are branch and bound on bitsets after reductions (forced sets,
// dominated sets, connected components). Instances larger than the exact
// limit fall back to greedy and say so in their status.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "thermo/error.hpp"

namespace thermo {

enum class SolverStatus { exact, greedy_upper, greedy_lower };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::exact: return "exact";
    case SolverStatus::greedy_upper: return "greedy_upper";
    case SolverStatus::greedy_lower: return "greedy_lower";
  }
  return "?";
}

/// exact_limit: largest component (sets or vertices) solved exactly.
/// node_limit: search nodes per component before giving up on exactness.
struct SolverLimits {
  std::size_t exact_limit = 24;
  std::uint64_t node_limit = 2'000'000;
};

using Bits = boost::dynamic_bitset<std::uint64_t>;

// ===========================================================================
// Weighted set cover

/// Minimize the total weight of a subfamily of `sets` whose union is
/// {0..universe_size-1}.
struct WeightedCoverInstance {
  std::size_t universe_size = 0;
  std::vector<std::vector<std::uint32_t>> sets;  // sorted element lists
  std::vector<double> weights;
};

struct CoverSolution {
  double value = 0.0;
  std::vector<std::size_t> chosen;  // ascending set indices
  SolverStatus status = SolverStatus::exact;
};

namespace detail {

inline void validate_cover_instance(const WeightedCoverInstance& inst) {
  if (inst.sets.size() != inst.weights.size()) throw domain_error("cover instance: one weight per set required");
  Bits seen(inst.universe_size);
  for (std::size_t i = 0; i < inst.sets.size(); ++i) {
    if (!(inst.weights[i] >= 0.0) || !std::isfinite(inst.weights[i]))
      throw domain_error("cover instance: weights must be finite and non-negative");
    for (auto e : inst.sets[i]) {
      if (e >= inst.universe_size) throw domain_error("cover instance: element out of range");
      seen.set(e);
    }
  }
  if (!seen.all()) throw domain_error("cover instance: the sets do not cover the universe");
}

// Greedy: repeatedly take the set with the least weight per newly covered
// element (lowest index on ties), then drop redundant picks, heaviest first.
inline std::vector<std::size_t> greedy_cover(const std::vector<Bits>& sets, const std::vector<double>& w,
                                             const Bits& universe) {
  Bits uncovered = universe;
  std::vector<std::size_t> pick;
  while (uncovered.any()) {
    std::size_t best = sets.size();
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const auto gain = (sets[i] & uncovered).count();
      if (gain == 0) continue;
      const double ratio = w[i] / static_cast<double>(gain);
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best = i;
      }
    }
    if (best == sets.size()) throw domain_error("cover instance: the sets do not cover the universe");
    pick.push_back(best);
    uncovered -= sets[best];
  }
  std::vector<std::size_t> order = pick;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return w[a] > w[b]; });
  std::vector<bool> keep(sets.size(), false);
  for (auto i : pick) keep[i] = true;
  for (auto i : order) {
    keep[i] = false;
    Bits u(universe.size());
    for (auto j : pick)
      if (keep[j]) u |= sets[j];
    if (!universe.is_subset_of(u)) keep[i] = true;
  }
  std::vector<std::size_t> out;
  for (auto i : pick)
    if (keep[i]) out.push_back(i);
  std::sort(out.begin(), out.end());
  return out;
}

struct CoverSearch {
  const std::vector<Bits>& sets;
  const std::vector<double>& w;
  std::vector<std::vector<std::size_t>> holders;  // element -> sets containing it
  std::uint64_t node_limit;
  std::uint64_t nodes = 0;
  bool aborted = false;
  double best;
  std::vector<std::size_t> best_pick;
  std::vector<std::size_t> cur;

  CoverSearch(const std::vector<Bits>& s, const std::vector<double>& weights, std::size_t universe,
              std::uint64_t limit, double incumbent, std::vector<std::size_t> incumbent_pick)
      : sets(s), w(weights), holders(universe), node_limit(limit), best(incumbent), best_pick(std::move(incumbent_pick)) {
    for (std::size_t i = 0; i < sets.size(); ++i)
      for (auto e = sets[i].find_first(); e != Bits::npos; e = sets[i].find_next(e)) holders[e].push_back(i);
  }

  // Sum over uncovered e of min_{S containing e} w_S / |S n uncovered|.
  double lower_bound(const Bits& uncovered) const {
    double lb = 0.0;
    for (auto e = uncovered.find_first(); e != Bits::npos; e = uncovered.find_next(e)) {
      double m = std::numeric_limits<double>::infinity();
      for (auto i : holders[e]) m = std::min(m, w[i] / static_cast<double>((sets[i] & uncovered).count()));
      lb += m;
    }
    return lb;
  }

  void run(const Bits& uncovered, double cost) {
    if (aborted) return;
    if (++nodes > node_limit) {
      aborted = true;
      return;
    }
    if (uncovered.none()) {
      if (cost < best) {
        best = cost;
        best_pick = cur;
      }
      return;
    }
    // Shaved slightly so rounding in the bound never prunes an optimum.
    if (cost + lower_bound(uncovered) * (1.0 - 1e-12) >= best) return;
    // Branch on the uncovered element with the fewest holders.
    std::size_t pivot = Bits::npos, fewest = std::numeric_limits<std::size_t>::max();
    for (auto e = uncovered.find_first(); e != Bits::npos; e = uncovered.find_next(e)) {
      if (holders[e].size() < fewest) {
        fewest = holders[e].size();
        pivot = e;
      }
    }
    for (auto i : holders[pivot]) {
      cur.push_back(i);
      run(uncovered - sets[i], cost + w[i]);
      cur.pop_back();
    }
  }
};

}  // namespace detail

/// Exact when every residual component (after forced and dominated sets are
/// removed) has at most `exact_limit` sets and its search stays within
/// `node_limit`; otherwise the greedy value with status greedy_upper.
inline CoverSolution min_subcover_value(const WeightedCoverInstance& inst, const SolverLimits& limits = {}) {
  detail::validate_cover_instance(inst);
  const std::size_t U = inst.universe_size;
  const std::size_t S = inst.sets.size();

  CoverSolution sol;
  std::vector<bool> chosen(S, false);
  Bits uncovered(U);
  uncovered.set();

  // Forced sets: an element held by a single set.
  {
    std::vector<std::uint32_t> count(U, 0), last(U, 0);
    for (std::uint32_t i = 0; i < S; ++i)
      for (auto e : inst.sets[i]) {
        ++count[e];
        last[e] = i;
      }
    for (std::size_t e = 0; e < U; ++e)
      if (count[e] == 1) chosen[last[e]] = true;
    for (std::size_t i = 0; i < S; ++i)
      if (chosen[i])
        for (auto e : inst.sets[i]) uncovered.reset(e);
  }

  // Residual sets restricted to uncovered elements.
  std::vector<std::size_t> live;
  std::vector<std::vector<std::uint32_t>> rest(S);
  for (std::size_t i = 0; i < S; ++i) {
    if (chosen[i]) continue;
    for (auto e : inst.sets[i])
      if (uncovered.test(e)) rest[i].push_back(e);
    if (!rest[i].empty()) live.push_back(i);
  }
  // Dominated sets: rest_i subset of rest_j with w_i >= w_j (lower index kept
  // on exact duplicates).
  if (live.size() <= 4096) {
    std::vector<bool> dead(S, false);
    for (auto i : live)
      for (auto j : live) {
        if (i == j || dead[j] || rest[i].size() > rest[j].size()) continue;
        if (inst.weights[i] < inst.weights[j]) continue;
        if (rest[i].size() == rest[j].size() && inst.weights[i] == inst.weights[j] && i < j) continue;
        if (std::includes(rest[j].begin(), rest[j].end(), rest[i].begin(), rest[i].end())) {
          dead[i] = true;
          break;
        }
      }
    std::erase_if(live, [&](auto i) { return dead[i]; });
  }

  // Connected components of the residual (sets linked through elements).
  std::vector<std::size_t> parent(live.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  {
    std::vector<std::size_t> owner(U, std::numeric_limits<std::size_t>::max());
    for (std::size_t a = 0; a < live.size(); ++a)
      for (auto e : rest[live[a]]) {
        if (owner[e] == std::numeric_limits<std::size_t>::max())
          owner[e] = a;
        else
          parent[find(a)] = find(owner[e]);
      }
  }
  std::vector<std::vector<std::size_t>> comps;
  {
    std::vector<std::size_t> slot(live.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t a = 0; a < live.size(); ++a) {
      const auto r = find(a);
      if (slot[r] == std::numeric_limits<std::size_t>::max()) {
        slot[r] = comps.size();
        comps.emplace_back();
      }
      comps[slot[r]].push_back(live[a]);
    }
  }

  bool all_exact = true;
  for (const auto& comp : comps) {
    // Compress this component's elements.
    std::vector<std::uint32_t> elems;
    for (auto i : comp) elems.insert(elems.end(), rest[i].begin(), rest[i].end());
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    std::vector<Bits> sets;
    std::vector<double> w;
    for (auto i : comp) {
      Bits b(elems.size());
      for (auto e : rest[i]) b.set(static_cast<std::size_t>(std::lower_bound(elems.begin(), elems.end(), e) - elems.begin()));
      sets.push_back(std::move(b));
      w.push_back(inst.weights[i]);
    }
    Bits universe(elems.size());
    universe.set();
    auto pick = detail::greedy_cover(sets, w, universe);
    if (comp.size() <= limits.exact_limit) {
      double inc = 0.0;
      for (auto p : pick) inc += w[p];
      // The incumbent is opened by one ulp so that the search itself finds a
      // cover at least as good, in lowest-index-first order.
      detail::CoverSearch search(sets, w, elems.size(), limits.node_limit,
                                 std::nextafter(inc, std::numeric_limits<double>::infinity()), pick);
      search.run(universe, 0.0);
      if (search.aborted) {
        all_exact = false;
      } else {
        pick = search.best_pick;
      }
    } else {
      all_exact = false;
    }
    for (auto p : pick) chosen[comp[p]] = true;
  }

  for (std::size_t i = 0; i < S; ++i)
    if (chosen[i]) sol.chosen.push_back(i);
  for (auto i : sol.chosen) sol.value += inst.weights[i];
  sol.status = all_exact ? SolverStatus::exact : SolverStatus::greedy_upper;
  return sol;
}

// ===========================================================================
// Graphs

/// Simple undirected graph on vertices 0..n-1 as adjacency bitsets (no loops).
struct Graph {
  std::vector<Bits> adj;

  explicit Graph(std::size_t n = 0) : adj(n, Bits(n)) {}
  std::size_t size() const noexcept { return adj.size(); }
  void add_edge(std::size_t a, std::size_t b) {
    if (a == b) return;
    adj[a].set(b);
    adj[b].set(a);
  }
  bool has_edge(std::size_t a, std::size_t b) const { return adj[a].test(b); }
};

struct VertexSetSolution {
  double value = 0.0;
  std::vector<std::size_t> vertices;  // ascending
  SolverStatus status = SolverStatus::exact;
};

namespace detail {

struct IndependentSearch {
  const Graph& g;
  const std::vector<double>& w;
  std::uint64_t node_limit;
  std::uint64_t nodes = 0;
  bool aborted = false;
  double best = -1.0;
  std::vector<std::size_t> best_set, cur;

  void run(Bits cand, double cost) {
    if (aborted) return;
    if (++nodes > node_limit) {
      aborted = true;
      return;
    }
    if (cand.none()) {
      if (cost > best) {
        best = cost;
        best_set = cur;
      }
      return;
    }
    double bound = cost;
    for (auto v = cand.find_first(); v != Bits::npos; v = cand.find_next(v)) bound += w[v];
    if (bound <= best) return;
    const auto v = cand.find_first();
    cand.reset(v);
    cur.push_back(v);
    run(cand - g.adj[v], cost + w[v]);
    cur.pop_back();
    run(cand, cost);
  }
};

inline std::vector<std::size_t> greedy_independent(const Graph& g, const std::vector<double>& w) {
  std::vector<std::size_t> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return w[a] > w[b]; });
  Bits blocked(g.size());
  std::vector<std::size_t> out;
  for (auto v : order) {
    if (blocked.test(v)) continue;
    out.push_back(v);
    blocked |= g.adj[v];
    blocked.set(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Maximum-weight independent set; exact when size() <= exact_limit and the
/// search stays under node_limit, else greedy with status greedy_lower.
inline VertexSetSolution max_weight_independent_set(const Graph& g, const std::vector<double>& w,
                                                    const SolverLimits& limits = {}) {
  if (w.size() != g.size()) throw domain_error("independent set: one weight per vertex required");
  VertexSetSolution sol;
  sol.vertices = detail::greedy_independent(g, w);
  if (g.size() <= limits.exact_limit) {
    detail::IndependentSearch s{g, w, limits.node_limit, 0, false, -1.0, {}, {}};
    Bits all(g.size());
    all.set();
    s.run(all, 0.0);
    if (!s.aborted) {
      sol.vertices = s.best_set;
      std::sort(sol.vertices.begin(), sol.vertices.end());
    } else {
      sol.status = SolverStatus::greedy_lower;
    }
  } else {
    sol.status = SolverStatus::greedy_lower;
  }
  for (auto v : sol.vertices) sol.value += w[v];
  return sol;
}

/// Minimum-weight dominating set via the set-cover reduction: vertex v covers
/// its closed neighborhood.
inline VertexSetSolution min_weight_dominating_set(const Graph& g, const std::vector<double>& w,
                                                   const SolverLimits& limits = {}) {
  if (w.size() != g.size()) throw domain_error("dominating set: one weight per vertex required");
  WeightedCoverInstance inst;
  inst.universe_size = g.size();
  inst.weights = w;
  for (std::size_t v = 0; v < g.size(); ++v) {
    std::vector<std::uint32_t> nb;
    for (std::size_t u = 0; u < g.size(); ++u)
      if (u == v || g.has_edge(u, v)) nb.push_back(static_cast<std::uint32_t>(u));
    inst.sets.push_back(std::move(nb));
  }
  auto c = min_subcover_value(inst, limits);
  return {c.value, c.chosen, c.status};
}

// ===========================================================================
// Log-domain front ends: weights are given as logarithms and the value is
// returned as a logarithm, so Birkhoff sums of any size stay representable.

struct LogSolution {
  double log_value = 0.0;
  std::vector<std::size_t> chosen;
  SolverStatus status = SolverStatus::exact;
};

inline double log_sum_exp(const std::vector<double>& xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Minimum-weight subcover with log weights. Sets heavier than a feasible
/// greedy cover cannot be in an optimum and are dropped; the rest are scaled
/// by that cover's total before the linear solve.
inline LogSolution min_subcover_log(const WeightedCoverInstance& log_inst, const SolverLimits& limits = {}) {
  const auto& lw = log_inst.weights;
  for (double x : lw)
    if (!std::isfinite(x)) throw domain_error("cover instance: log weights must be finite");
  const double shift = lw.empty() ? 0.0 : *std::min_element(lw.begin(), lw.end());
  // Greedy in log space to get a feasible total.
  std::vector<Bits> sets;
  for (const auto& s : log_inst.sets) {
    Bits b(log_inst.universe_size);
    for (auto e : s) {
      if (e >= log_inst.universe_size) throw domain_error("cover instance: element out of range");
      b.set(e);
    }
    sets.push_back(std::move(b));
  }
  Bits universe(log_inst.universe_size);
  universe.set();
  {
    Bits u(log_inst.universe_size);
    for (const auto& b : sets) u |= b;
    if (!universe.is_subset_of(u)) throw domain_error("cover instance: the sets do not cover the universe");
  }
  std::vector<double> rel(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i) rel[i] = std::exp(std::min(lw[i] - shift, 700.0));
  const auto gpick = detail::greedy_cover(sets, rel, universe);
  std::vector<double> picked;
  for (auto p : gpick) picked.push_back(lw[p]);
  const double log_inc = log_sum_exp(picked);

  WeightedCoverInstance lin;
  lin.universe_size = log_inst.universe_size;
  std::vector<std::size_t> back;
  for (std::size_t i = 0; i < lw.size(); ++i) {
    if (lw[i] > log_inc) continue;
    lin.sets.push_back(log_inst.sets[i]);
    lin.weights.push_back(std::exp(lw[i] - log_inc));
    back.push_back(i);
  }
  auto sol = min_subcover_value(lin, limits);
  LogSolution out;
  out.status = sol.status;
  std::vector<double> chosen_lw;
  for (auto c : sol.chosen) {
    out.chosen.push_back(back[c]);
    chosen_lw.push_back(lw[back[c]]);
  }
  out.log_value = log_sum_exp(chosen_lw);
  return out;
}

inline LogSolution max_weight_independent_set_log(const Graph& g, const std::vector<double>& log_w,
                                                  const SolverLimits& limits = {}) {
  if (g.size() == 0) return {-std::numeric_limits<double>::infinity(), {}, SolverStatus::exact};
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> w(log_w.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_w[i] - shift);
  auto sol = max_weight_independent_set(g, w, limits);
  std::vector<double> chosen;
  for (auto v : sol.vertices) chosen.push_back(log_w[v]);
  return {log_sum_exp(chosen), sol.vertices, sol.status};
}

inline LogSolution min_weight_dominating_set_log(const Graph& g, const std::vector<double>& log_w,
                                                 const SolverLimits& limits = {}) {
  if (log_w.size() != g.size()) throw domain_error("dominating set: one weight per vertex required");
  WeightedCoverInstance inst;
  inst.universe_size = g.size();
  inst.weights = log_w;
  for (std::size_t v = 0; v < g.size(); ++v) {
    std::vector<std::uint32_t> nb;
    for (std::size_t u = 0; u < g.size(); ++u)
      if (u == v || g.has_edge(u, v)) nb.push_back(static_cast<std::uint32_t>(u));
    inst.sets.push_back(std::move(nb));
  }
  return min_subcover_log(inst, limits);
}

}  // namespace thermo
