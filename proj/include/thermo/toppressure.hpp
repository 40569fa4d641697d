#pragma once

// Topological pressure through covers: the subcover quantities Q_n (inf
// weights) and P_n (sup weights), the separated S_n and spanning G_n
// quantities, their rates along the diagonal, and the pressure as the
// largest rate over a list of admissible covers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "thermo/cover.hpp"
#include "thermo/dynsys.hpp"
#include "thermo/error.hpp"
#include "thermo/lattice.hpp"
#include "thermo/solvers.hpp"

namespace thermo {

enum class PressureMode { Q, P, S, G };

inline const char* to_string(PressureMode m) {
  switch (m) {
    case PressureMode::Q: return "Q";
    case PressureMode::P: return "P";
    case PressureMode::S: return "S";
    case PressureMode::G: return "G";
  }
  return "?";
}

struct PressureLimits {
  JoinLimits join;
  SolverLimits solver;
};

/// One computed value at box n, kept as a logarithm.
struct PressureSample {
  LatticePoint n;
  std::uint64_t lambda = 0;
  double log_value = 0.0;
  SolverStatus status = SolverStatus::exact;
  std::size_t member_count = 0;     // members of A^n
  std::vector<std::size_t> certificate;  // chosen member indices or states

  double rate() const { return log_value / static_cast<double>(lambda); }
};

// ---------------------------------------------------------------------------
// Q_n and P_n

/// Weighted minimal subcover of A^n with member weight min (Q) or max (P) of
/// e^{f_n} over the member.
inline PressureSample cover_pressure_value(const FiniteSystem& sys, const Potential& f, const SetFamily& a,
                                           const LatticePoint& n, PressureMode mode, const PressureLimits& limits = {}) {
  if (mode != PressureMode::Q && mode != PressureMode::P) throw domain_error("cover_pressure_value takes mode Q or P");
  const auto joined = orbit_join(sys, a, n, limits.join);
  const auto fn = birkhoff_table(sys, f, n);
  std::vector<double> lw(joined.size());
  for (std::size_t i = 0; i < joined.size(); ++i) {
    const auto& m = joined[i];
    double v = fn[m.front()];
    for (State x : m) v = (mode == PressureMode::Q) ? std::min(v, fn[x]) : std::max(v, fn[x]);
    lw[i] = v;
  }
  PressureSample s{n, Box(n).cardinality(), 0.0, SolverStatus::exact, joined.size(), {}};
  if (joined.is_partition()) {
    // Disjoint nonempty members: the only subcover is the whole family.
    s.log_value = log_sum_exp(lw);
    s.certificate.resize(joined.size());
    std::iota(s.certificate.begin(), s.certificate.end(), 0);
    return s;
  }
  // States lying in exactly the same members are one element of the universe.
  std::vector<std::vector<std::uint32_t>> containing(sys.state_count());
  for (std::size_t i = 0; i < joined.size(); ++i)
    for (State x : joined[i]) containing[x].push_back(static_cast<std::uint32_t>(i));
  std::map<std::vector<std::uint32_t>, std::uint32_t> cls;
  for (const auto& c : containing) cls.emplace(c, 0u);
  // A member that is the only one containing some state is in every subcover.
  std::vector<char> forced(joined.size(), 0);
  for (const auto& [c, id] : cls)
    if (c.size() == 1) forced[c[0]] = 1;
  std::vector<double> forced_lw;
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < joined.size(); ++i)
    if (forced[i]) forced_lw.push_back(lw[i]), chosen.push_back(i);
  std::vector<std::size_t> rest_index(joined.size(), SIZE_MAX), rest_back;
  WeightedCoverInstance inst{0, {}, {}};
  for (const auto& [c, id] : cls) {
    if (std::any_of(c.begin(), c.end(), [&](auto i) { return forced[i]; })) continue;
    const auto e = static_cast<std::uint32_t>(inst.universe_size++);
    for (auto i : c) {
      if (rest_index[i] == SIZE_MAX) {
        rest_index[i] = rest_back.size();
        rest_back.push_back(i);
        inst.sets.emplace_back();
        inst.weights.push_back(lw[i]);
      }
      inst.sets[rest_index[i]].push_back(e);
    }
  }
  s.log_value = log_sum_exp(forced_lw);
  if (inst.universe_size > 0) {
    auto sol = min_subcover_log(inst, limits.solver);
    s.log_value = log_sum_exp({s.log_value, sol.log_value});
    s.status = sol.status;
    for (auto c : sol.chosen) chosen.push_back(rest_back[c]);
  }
  std::sort(chosen.begin(), chosen.end());
  s.certificate = std::move(chosen);
  return s;
}

// ---------------------------------------------------------------------------
// S_n and G_n on the closeness graph of A^n

namespace detail {

// States with the same set of containing members are closed twins. Classes
// are grouped into connected components of the closeness graph.
struct CollapsedCloseness {
  std::vector<std::vector<State>> classes;        // states per class
  std::vector<std::vector<std::uint32_t>> class_members;  // members touching each class
  std::vector<std::vector<std::size_t>> components;       // class indices
};

inline CollapsedCloseness collapse(const SetFamily& joined) {
  CollapsedCloseness out;
  const auto who = joined.membership();
  std::map<std::vector<std::uint32_t>, std::size_t> sig;
  std::vector<std::size_t> class_of(joined.state_count());
  for (State x = 0; x < joined.state_count(); ++x) {
    auto [it, fresh] = sig.emplace(who[x], out.classes.size());
    if (fresh) {
      out.classes.emplace_back();
      out.class_members.push_back(who[x]);
    }
    out.classes[it->second].push_back(x);
    class_of[x] = it->second;
  }
  const std::size_t c = out.classes.size();
  std::vector<std::size_t> parent(c);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& m : joined.members())
    for (State x : m) parent[find(class_of[x])] = find(class_of[m.front()]);
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t v = 0; v < c; ++v) {
    auto [it, fresh] = slot.emplace(find(v), out.components.size());
    if (fresh) out.components.emplace_back();
    out.components[it->second].push_back(v);
  }
  return out;
}

inline bool classes_adjacent(const CollapsedCloseness& cc, std::size_t a, std::size_t b) {
  const auto& ma = cc.class_members[a];
  const auto& mb = cc.class_members[b];
  std::size_t i = 0, j = 0;
  while (i < ma.size() && j < mb.size()) {
    if (ma[i] == mb[j]) return true;
    if (ma[i] < mb[j])
      ++i;
    else
      ++j;
  }
  return false;
}

inline Graph component_graph(const CollapsedCloseness& cc, const std::vector<std::size_t>& comp) {
  Graph g(comp.size());
  for (std::size_t i = 0; i < comp.size(); ++i)
    for (std::size_t j = i + 1; j < comp.size(); ++j)
      if (classes_adjacent(cc, comp[i], comp[j])) g.add_edge(i, j);
  return g;
}

// Representative of each class: the state with the largest (separated) or
// smallest (spanning) f_n, lowest index on ties.
inline std::vector<State> representatives(const CollapsedCloseness& cc, const std::vector<double>& fn, bool largest) {
  std::vector<State> rep;
  for (const auto& cls : cc.classes) {
    State best = cls.front();
    for (State x : cls)
      if (largest ? fn[x] > fn[best] : fn[x] < fn[best]) best = x;
    rep.push_back(best);
  }
  return rep;
}

}  // namespace detail

/// Maximum of sum_{x in E} e^{f_n(x)} over A^n-separated E (maximum-weight
/// independent set of the closeness graph). certificate holds the states of E.
inline PressureSample separated_value(const FiniteSystem& sys, const Potential& f, const SetFamily& a,
                                      const LatticePoint& n, const PressureLimits& limits = {}) {
  const auto joined = orbit_join(sys, a, n, limits.join);
  const auto fn = birkhoff_table(sys, f, n);
  const auto cc = detail::collapse(joined);
  const auto rep = detail::representatives(cc, fn, true);
  PressureSample s{n, Box(n).cardinality(), 0.0, SolverStatus::exact, joined.size(), {}};
  std::vector<double> parts;
  for (const auto& comp : cc.components) {
    if (comp.size() == 1) {
      parts.push_back(fn[rep[comp[0]]]);
      s.certificate.push_back(rep[comp[0]]);
      continue;
    }
    std::vector<double> lw;
    for (auto c : comp) lw.push_back(fn[rep[c]]);
    if (comp.size() <= limits.solver.exact_limit) {
      auto sol = max_weight_independent_set_log(detail::component_graph(cc, comp), lw, limits.solver);
      if (sol.status != SolverStatus::exact) s.status = SolverStatus::greedy_lower;
      parts.push_back(sol.log_value);
      for (auto v : sol.chosen) s.certificate.push_back(rep[comp[v]]);
    } else {
      // Greedy: heaviest first, blocking closed neighborhoods.
      s.status = SolverStatus::greedy_lower;
      std::vector<std::size_t> order(comp.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return lw[x] > lw[y]; });
      std::vector<std::size_t> picked;
      std::vector<double> chosen_lw;
      for (auto v : order) {
        bool free = true;
        for (auto p : picked)
          if (detail::classes_adjacent(cc, comp[v], comp[p])) {
            free = false;
            break;
          }
        if (!free) continue;
        picked.push_back(v);
        chosen_lw.push_back(lw[v]);
        s.certificate.push_back(rep[comp[v]]);
      }
      parts.push_back(log_sum_exp(chosen_lw));
    }
  }
  s.log_value = log_sum_exp(parts);
  std::sort(s.certificate.begin(), s.certificate.end());
  return s;
}

/// Minimum of sum_{x in E} e^{f_n(x)} over A^n-spanning E (minimum-weight
/// dominating set of the closeness graph). certificate holds the states of E.
inline PressureSample spanning_value(const FiniteSystem& sys, const Potential& f, const SetFamily& a,
                                     const LatticePoint& n, const PressureLimits& limits = {}) {
  const auto joined = orbit_join(sys, a, n, limits.join);
  const auto fn = birkhoff_table(sys, f, n);
  const auto cc = detail::collapse(joined);
  const auto rep = detail::representatives(cc, fn, false);
  PressureSample s{n, Box(n).cardinality(), 0.0, SolverStatus::exact, joined.size(), {}};
  std::vector<double> parts;
  for (const auto& comp : cc.components) {
    if (comp.size() == 1) {
      parts.push_back(fn[rep[comp[0]]]);
      s.certificate.push_back(rep[comp[0]]);
      continue;
    }
    std::vector<double> lw;
    for (auto c : comp) lw.push_back(fn[rep[c]]);
    if (comp.size() <= limits.solver.exact_limit) {
      auto sol = min_weight_dominating_set_log(detail::component_graph(cc, comp), lw, limits.solver);
      if (sol.status != SolverStatus::exact) s.status = SolverStatus::greedy_upper;
      parts.push_back(sol.log_value);
      for (auto v : sol.chosen) s.certificate.push_back(rep[comp[v]]);
    } else {
      // Greedy: least log-weight per newly dominated class.
      s.status = SolverStatus::greedy_upper;
      std::vector<bool> dominated(comp.size(), false);
      std::size_t left = comp.size();
      std::vector<double> chosen_lw;
      while (left) {
        std::size_t best = comp.size();
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < comp.size(); ++v) {
          std::size_t gain = 0;
          for (std::size_t u = 0; u < comp.size(); ++u)
            if (!dominated[u] && (u == v || detail::classes_adjacent(cc, comp[u], comp[v]))) ++gain;
          if (!gain) continue;
          const double score = lw[v] - std::log(static_cast<double>(gain));
          if (score < best_score) {
            best_score = score;
            best = v;
          }
        }
        for (std::size_t u = 0; u < comp.size(); ++u)
          if (!dominated[u] && (u == best || detail::classes_adjacent(cc, comp[u], comp[best]))) {
            dominated[u] = true;
            --left;
          }
        chosen_lw.push_back(lw[best]);
        s.certificate.push_back(rep[comp[best]]);
      }
      parts.push_back(log_sum_exp(chosen_lw));
    }
  }
  s.log_value = log_sum_exp(parts);
  std::sort(s.certificate.begin(), s.certificate.end());
  return s;
}

inline PressureSample pressure_value(const FiniteSystem& sys, const Potential& f, const SetFamily& a,
                                     const LatticePoint& n, PressureMode mode, const PressureLimits& limits = {}) {
  switch (mode) {
    case PressureMode::Q:
    case PressureMode::P: return cover_pressure_value(sys, f, a, n, mode, limits);
    case PressureMode::S: return separated_value(sys, f, a, n, limits);
    case PressureMode::G: return spanning_value(sys, f, a, n, limits);
  }
  throw domain_error("unknown pressure mode");
}

// ---------------------------------------------------------------------------
// Rates

/// Rates (1/lambda(n)) log value along a sequence of boxes.
struct PressureEstimate {
  std::vector<PressureSample> samples;  // ascending lambda
  /// min over samples of the rate; an upper bound on the limit for
  /// subadditive sequences (P-mode, partition entropies).
  std::optional<double> fekete_bound;
  /// Rate at the largest box.
  double extrapolated = 0.0;
  /// (log v_last - log v_prev) / (lambda_last - lambda_prev).
  std::optional<double> increment_rate;

  bool all_exact() const {
    return std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.status == SolverStatus::exact; });
  }
  std::vector<double> rates() const {
    std::vector<double> r;
    for (const auto& s : samples) r.push_back(s.rate());
    return r;
  }
};

inline PressureEstimate rate_sequence(std::vector<PressureSample> samples, bool subadditive) {
  if (samples.empty()) throw domain_error("rate_sequence needs at least one sample");
  for (const auto& s : samples)
    if (!std::isfinite(s.log_value)) throw domain_error("rate_sequence: values must be positive and finite");
  std::stable_sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
  PressureEstimate est;
  est.samples = std::move(samples);
  est.extrapolated = est.samples.back().rate();
  if (subadditive) {
    double b = std::numeric_limits<double>::infinity();
    for (const auto& s : est.samples) b = std::min(b, s.rate());
    est.fekete_bound = b;
  }
  if (est.samples.size() >= 2) {
    const auto& a = est.samples[est.samples.size() - 2];
    const auto& b = est.samples.back();
    if (b.lambda > a.lambda)
      est.increment_rate = (b.log_value - a.log_value) / static_cast<double>(b.lambda - a.lambda);
  }
  return est;
}

/// Samples at the diagonal boxes (t,...,t) for each t in `steps`.
inline PressureEstimate pressure_along_diagonal(const FiniteSystem& sys, const Potential& f, const SetFamily& a,
                                                const std::vector<std::uint64_t>& steps, PressureMode mode,
                                                const PressureLimits& limits = {}) {
  std::vector<PressureSample> samples;
  for (auto t : steps) samples.push_back(pressure_value(sys, f, a, LatticePoint::diagonal(sys.dim(), t), mode, limits));
  return rate_sequence(std::move(samples), mode == PressureMode::P);
}

// ---------------------------------------------------------------------------
// Pressure over a cover list

enum class RateEstimator {
  last_rate,  // rate at the largest box
  increment,  // growth between the two largest boxes
};

struct TopologicalPressureOptions {
  std::vector<std::uint64_t> steps;  // diagonal t values, ascending
  RateEstimator estimator = RateEstimator::last_rate;
  bool with_separated_spanning = true;
  /// Diagnostic only: lets non-admissible covers through (leakage contrast).
  bool allow_nonadmissible = false;
};

struct CoverPressureReport {
  std::size_t cover_index = 0;
  bool admissible = true;
  PressureEstimate q;
  std::optional<PressureEstimate> s;
  std::optional<PressureEstimate> g;
  double q_estimate = 0.0;
};

struct TopologicalPressureReport {
  double estimate = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> best_cover;
  bool exact = true;  // estimate rests on exact solves only
  bool diagnostic = false;
  std::vector<CoverPressureReport> covers;
};

inline double estimate_of(const PressureEstimate& e, RateEstimator how) {
  if (how == RateEstimator::increment && e.increment_rate) return *e.increment_rate;
  return e.extrapolated;
}

/// Largest Q-mode rate over the covers. Non-admissible covers are rejected
/// unless the diagnostic switch is on. Covers whose Q solves were not all
/// exact are reported but only used when no exact cover is available.
inline TopologicalPressureReport topological_pressure(const FiniteSystem& sys, const Potential& f,
                                                      const std::vector<SetFamily>& covers,
                                                      const TopologicalPressureOptions& opt,
                                                      const PressureLimits& limits = {}) {
  if (opt.steps.empty()) throw domain_error("topological_pressure needs at least one step");
  TopologicalPressureReport rep;
  rep.diagnostic = opt.allow_nonadmissible;
  for (std::size_t i = 0; i < covers.size(); ++i) {
    const bool adm = classify_admissible(sys, covers[i]).is_admissible;
    if (!adm && !opt.allow_nonadmissible)
      throw domain_error("cover " + std::to_string(i) + " is not admissible (no member contains every marked cell)");
    CoverPressureReport cr;
    cr.cover_index = i;
    cr.admissible = adm;
    cr.q = pressure_along_diagonal(sys, f, covers[i], opt.steps, PressureMode::Q, limits);
    cr.q_estimate = estimate_of(cr.q, opt.estimator);
    if (opt.with_separated_spanning) {
      cr.s = pressure_along_diagonal(sys, f, covers[i], opt.steps, PressureMode::S, limits);
      cr.g = pressure_along_diagonal(sys, f, covers[i], opt.steps, PressureMode::G, limits);
    }
    rep.covers.push_back(std::move(cr));
  }
  auto pick = [&](bool exact_only) {
    for (const auto& cr : rep.covers) {
      if (exact_only && !cr.q.all_exact()) continue;
      if (!rep.best_cover || cr.q_estimate > rep.estimate) {
        rep.estimate = cr.q_estimate;
        rep.best_cover = cr.cover_index;
      }
    }
  };
  pick(true);
  if (!rep.best_cover) {
    rep.exact = false;
    pick(false);
  }
  return rep;
}

}  // namespace thermo
