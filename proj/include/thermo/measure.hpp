#pragma once

// Finite measures on a finite system: pushforward and invariance, partition
// and conditional entropy, entropy rates, Kolmogorov-Sinai entropy, measure
// pressure, and the empirical-measure construction used to bound pressure
// from below.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermo/cover.hpp"
#include "thermo/dynsys.hpp"
#include "thermo/error.hpp"
#include "thermo/lattice.hpp"
#include "thermo/toppressure.hpp"

namespace thermo {

/// Non-negative weight per state; total mass need not be 1.
class FiniteMeasure {
public:
  explicit FiniteMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw domain_error("measure weights must be finite and non-negative");
      mass_ += w;
    }
  }
  static FiniteMeasure dirac(std::size_t state_count, State x) {
    std::vector<double> w(state_count, 0.0);
    w.at(x) = 1.0;
    return FiniteMeasure(std::move(w));
  }
  static FiniteMeasure uniform_on(std::size_t state_count, const std::vector<State>& support) {
    std::vector<double> w(state_count, 0.0);
    for (State x : support) w.at(x) += 1.0 / static_cast<double>(support.size());
    return FiniteMeasure(std::move(w));
  }

  std::size_t size() const noexcept { return weights_.size(); }
  double operator()(State x) const { return weights_[x]; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double mass() const noexcept { return mass_; }
  double of(const StateList& set) const {
    double s = 0.0;
    for (State x : set) s += weights_[x];
    return s;
  }
  FiniteMeasure scaled(double alpha) const {
    auto w = weights_;
    for (auto& x : w) x *= alpha;
    return FiniteMeasure(std::move(w));
  }
  double integral(const Potential& f) const {
    double s = 0.0;
    for (std::size_t x = 0; x < weights_.size(); ++x) s += f(static_cast<State>(x)) * weights_[x];
    return s;
  }

private:
  std::vector<double> weights_;
  double mass_ = 0.0;
};

/// Sum of |a(x) - b(x)|: the total-variation norm of the difference.
inline double total_variation(const FiniteMeasure& a, const FiniteMeasure& b) {
  if (a.size() != b.size()) throw domain_error("total_variation: measures on different state spaces");
  double s = 0.0;
  for (State x = 0; x < a.size(); ++x) s += std::abs(a(x) - b(x));
  return s;
}

inline FiniteMeasure pushforward_under(const FiniteMeasure& mu, const StateMap& map) {
  std::vector<double> w(mu.size(), 0.0);
  for (State x = 0; x < mu.size(); ++x) w[map[x]] += mu(x);
  return FiniteMeasure(std::move(w));
}

/// mu o T^{-k}.
inline FiniteMeasure pushforward(const FiniteMeasure& mu, const FiniteSystem& sys, const LatticePoint& k) {
  if (mu.size() != sys.state_count()) throw domain_error("measure does not live on this system");
  return pushforward_under(mu, power_map(sys, k));
}

inline bool is_invariant(const FiniteMeasure& mu, const FiniteSystem& sys, double tol = 1e-9) {
  if (mu.size() != sys.state_count()) throw domain_error("measure does not live on this system");
  for (const auto& g : sys.generators())
    if (total_variation(pushforward_under(mu, g), mu) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Entropy

namespace detail {
inline double eta(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }
}  // namespace detail

/// sum over cells of mu(C) log(1/mu(C)), with 0 log(1/0) = 0.
inline double partition_entropy(const FiniteMeasure& mu, const SetFamily& c) {
  if (!c.is_partition()) throw domain_error("partition_entropy needs a partition");
  if (c.state_count() != mu.size()) throw domain_error("partition and measure on different state spaces");
  double h = 0.0;
  for (const auto& cell : c.members()) h += detail::eta(mu.of(cell));
  return h;
}

/// H_mu(C | D) = sum_D mu(D) H_{mu(.|D)}(C) for a probability mu.
inline double conditional_entropy(const FiniteMeasure& mu, const SetFamily& c, const SetFamily& d) {
  if (std::abs(mu.mass() - 1.0) > 1e-9)
    throw precondition_error("conditional_entropy needs a probability measure, mass = " + std::to_string(mu.mass()));
  if (!c.is_partition() || !d.is_partition()) throw domain_error("conditional_entropy needs partitions");
  const auto lc = c.labels();
  double h = 0.0;
  for (const auto& dcell : d.members()) {
    const double md = mu.of(dcell);
    if (md <= 0.0) continue;
    std::vector<double> mass(c.size(), 0.0);
    for (State x : dcell) mass[lc[x]] += mu(x);
    double hd = 0.0;
    for (double m : mass) hd += detail::eta(m / md);
    h += md * hd;
  }
  return h;
}

/// (1/lambda(n)) H_mu(C^n) along the diagonal steps. log_value of each sample
/// holds H_mu(C^n) itself.
inline PressureEstimate entropy_rate(const FiniteMeasure& mu, const FiniteSystem& sys, const SetFamily& c,
                                     const std::vector<std::uint64_t>& steps, const JoinLimits& limits = {},
                                     double invariance_tol = 1e-9) {
  if (!c.is_partition()) throw domain_error("entropy_rate needs a partition");
  if (!is_invariant(mu, sys, invariance_tol)) throw precondition_error("entropy_rate needs an invariant measure");
  std::vector<PressureSample> samples;
  for (auto t : steps) {
    const auto n = LatticePoint::diagonal(sys.dim(), t);
    const auto joined = orbit_join(sys, c, n, limits);
    samples.push_back({n, Box(n).cardinality(), partition_entropy(mu, joined), SolverStatus::exact, joined.size(), {}});
  }
  return rate_sequence(std::move(samples), true);
}

/// Limit estimate of an entropy/pressure rate: the increment between the two
/// largest boxes when available, else the rate at the largest box.
inline double rate_limit(const PressureEstimate& e) { return e.increment_rate.value_or(e.extrapolated); }

// ---------------------------------------------------------------------------
// Kolmogorov-Sinai entropy

enum class KsStrategy { exhaustive, admissible_only, fixed_partition };

struct KsOptions {
  KsStrategy strategy = KsStrategy::fixed_partition;
  std::optional<SetFamily> partition;  // fixed_partition; defaults to the finest admissible partition
  std::vector<std::uint64_t> steps{1, 2, 4, 8, 16, 32};
  std::size_t exhaustive_cap = 8;
  JoinLimits limits;
};

/// Every set partition of {0..m-1}, as restricted growth strings.
inline void for_each_set_partition(std::size_t m, const std::function<void(const std::vector<std::uint64_t>&)>& fn) {
  if (m == 0) return;
  std::vector<std::uint64_t> a(m, 0);
  std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t i, std::uint64_t used) {
    if (i == m) {
      fn(a);
      return;
    }
    for (std::uint64_t v = 0; v <= used; ++v) {
      a[i] = v;
      rec(i + 1, v == used ? used + 1 : used);
    }
  };
  rec(1, 1);
}

/// Singletons of unmarked states plus the marked set as one member: refines
/// every admissible partition.
inline SetFamily finest_admissible_partition(const FiniteSystem& sys) {
  std::vector<StateList> members;
  for (State x = 0; x < sys.state_count(); ++x)
    if (!sys.is_marked(x)) members.push_back({x});
  if (!sys.marked().empty()) members.push_back(sys.marked());
  return SetFamily::partition(sys.state_count(), std::move(members));
}

inline double ks_entropy(const FiniteMeasure& mu, const FiniteSystem& sys, const KsOptions& opt = {}) {
  if (!is_invariant(mu, sys)) throw precondition_error("ks_entropy needs an invariant measure");
  auto rate_of = [&](const SetFamily& c) { return rate_limit(entropy_rate(mu, sys, c, opt.steps, opt.limits)); };
  switch (opt.strategy) {
    case KsStrategy::fixed_partition:
      return rate_of(opt.partition ? *opt.partition : finest_admissible_partition(sys));
    case KsStrategy::exhaustive:
    case KsStrategy::admissible_only: {
      if (sys.state_count() > opt.exhaustive_cap)
        throw resource_error("ks_entropy: partition enumeration over " + std::to_string(sys.state_count()) +
                             " states exceeds the cap " + std::to_string(opt.exhaustive_cap));
      double best = 0.0;
      for_each_set_partition(sys.state_count(), [&](const std::vector<std::uint64_t>& labels) {
        auto c = SetFamily::from_labels(labels);
        if (opt.strategy == KsStrategy::admissible_only && !classify_admissible_partition(sys, c).is_admissible_partition)
          return;
        best = std::max(best, rate_of(c));
      });
      return best;
    }
  }
  return 0.0;
}

/// h_mu + integral of f.
inline double measure_pressure(const FiniteMeasure& mu, const FiniteSystem& sys, const Potential& f,
                               const KsOptions& opt = {}) {
  return ks_entropy(mu, sys, opt) + mu.integral(f);
}

// ---------------------------------------------------------------------------
// Empirical measures from a set E

struct EmpiricalMeasures {
  FiniteMeasure sigma;  // (1/S) sum_{x in E} e^{f_n(x)} delta_x
  FiniteMeasure mu;     // (1/lambda(n)) sum_{k in Lambda(n)} sigma o T^{-k}
  double log_normalizer = 0.0;  // log S
};

inline EmpiricalMeasures empirical_measures(const FiniteSystem& sys, const Potential& f, const LatticePoint& n,
                                            const std::vector<State>& e) {
  if (e.empty()) throw domain_error("empirical_measures needs a nonempty set");
  const auto fn = birkhoff_table(sys, f, n);
  std::vector<double> lw;
  for (State x : e) {
    sys.require_state(x);
    lw.push_back(fn[x]);
  }
  const double log_s = log_sum_exp(lw);
  std::vector<double> sigma(sys.state_count(), 0.0);
  for (State x : e) sigma[x] += std::exp(fn[x] - log_s);
  Box box(n);
  std::vector<double> mu(sys.state_count(), 0.0);
  const double inv = 1.0 / static_cast<double>(box.cardinality());
  box.for_each([&](const LatticePoint& k) {
    const auto tk = power_map(sys, k);
    for (State x = 0; x < sys.state_count(); ++x)
      if (sigma[x] > 0.0) mu[tk[x]] += sigma[x] * inv;
  });
  return {FiniteMeasure(std::move(sigma)), FiniteMeasure(std::move(mu)), log_s};
}

/// ||mu o T^{-m} - mu||; for mu = mu_n this is at most
/// |Lambda(n) sym-diff (m + Lambda(n))| / lambda(n).
inline double invariance_defect(const FiniteMeasure& mu, const FiniteSystem& sys, const LatticePoint& m) {
  return total_variation(pushforward(mu, sys, m), mu);
}

struct SeparatedLinkReport {
  bool applicable = false;  // every Z^n cell holds at most one point of E
  double log_normalizer = 0.0;           // log S_n
  double entropy_plus_integral = 0.0;    // H_sigma(Z^n) + integral f_n d sigma
  double transport_lhs = 0.0;            // (1/lambda) integral f_n d sigma
  double transport_rhs = 0.0;            // integral f d mu_n
  bool holds = false;
};

/// Checks log S_n = H_{sigma_n}(Z^n) + integral f_n d sigma_n and
/// (1/lambda(n)) integral f_n d sigma_n = integral f d mu_n.
inline SeparatedLinkReport separated_entropy_link_check(const FiniteSystem& sys, const Potential& f,
                                                        const SetFamily& z, const LatticePoint& n,
                                                        const std::vector<State>& e, const JoinLimits& limits = {},
                                                        double tol = 1e-9) {
  if (!z.is_partition()) throw domain_error("separated_entropy_link_check needs a partition Z");
  SeparatedLinkReport r;
  const auto zn = orbit_join(sys, z, n, limits);
  const auto lab = zn.labels();
  std::vector<int> hits(zn.size(), 0);
  for (State x : e)
    if (++hits[lab[x]] > 1) return r;
  r.applicable = true;
  const auto em = empirical_measures(sys, f, n, e);
  const auto fn = birkhoff_table(sys, f, n);
  double int_fn = 0.0;
  for (State x = 0; x < sys.state_count(); ++x) int_fn += fn[x] * em.sigma(x);
  r.log_normalizer = em.log_normalizer;
  r.entropy_plus_integral = partition_entropy(em.sigma, zn) + int_fn;
  r.transport_lhs = int_fn / static_cast<double>(Box(n).cardinality());
  r.transport_rhs = em.mu.integral(f);
  const double scale = std::max(1.0, std::abs(r.log_normalizer));
  r.holds = std::abs(r.log_normalizer - r.entropy_plus_integral) <= tol * scale &&
            std::abs(r.transport_lhs - r.transport_rhs) <= tol * std::max(1.0, std::abs(r.transport_rhs));
  return r;
}

/// Partition into the atoms of a cover (states grouped by the set of members
/// containing them); it refines the cover.
inline SetFamily atoms_of(const SetFamily& cover) {
  const auto who = cover.membership();
  std::map<std::vector<std::uint32_t>, std::uint64_t> ids;
  std::vector<std::uint64_t> labels(cover.state_count());
  for (State x = 0; x < cover.state_count(); ++x) labels[x] = ids.emplace(who[x], ids.size()).first->second;
  return SetFamily::from_labels(labels);
}

}  // namespace thermo
