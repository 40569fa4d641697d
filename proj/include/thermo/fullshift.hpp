#pragma once

// Full shift on k symbols over Z_+^N with a single-site potential. Everything
// here is closed form or brute-force configuration enumeration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "thermo/error.hpp"
#include "thermo/lattice.hpp"
#include "thermo/solvers.hpp"

namespace thermo {

struct FullShiftSpec {
  std::size_t symbols = 2;
  std::size_t dim = 1;
  std::vector<double> phi;

  static FullShiftSpec make(std::size_t k, std::size_t dim, std::vector<double> phi) {
    FullShiftSpec s{k, dim, std::move(phi)};
    s.validate();
    return s;
  }
  void validate() const {
    if (symbols == 0) throw domain_error("full shift needs at least one symbol");
    if (dim == 0) throw domain_error("full shift dimension must be >= 1");
    if (phi.size() != symbols)
      throw domain_error("site potential has " + std::to_string(phi.size()) + " values for " + std::to_string(symbols) +
                         " symbols");
    for (double v : phi)
      if (!std::isfinite(v)) throw domain_error("site potential values must be finite");
  }
};

inline double exact_pressure(const FullShiftSpec& s) {
  s.validate();
  return log_sum_exp(s.phi);
}

inline constexpr std::uint64_t kCylinderBudget = 19683;  // 3^9

/// log of the sum over all configurations w on Lambda(n) of
/// exp(sum_j phi(w_j)), by enumeration. Energies are shifted by their maximum
/// so large boxes do not overflow.
inline double log_cylinder_sum(const FullShiftSpec& s, const LatticePoint& n, std::uint64_t budget = kCylinderBudget) {
  s.validate();
  if (n.dim() != s.dim) throw domain_error("box dimension does not match the shift");
  const std::uint64_t lambda = n.box_cardinality();
  std::uint64_t count = 1;
  for (std::uint64_t i = 0; i < lambda && s.symbols > 1; ++i) {
    if (__builtin_mul_overflow(count, static_cast<std::uint64_t>(s.symbols), &count) || count > budget)
      throw resource_error("cylinder_sum: " + std::to_string(s.symbols) + "^" + std::to_string(lambda) +
                           " configurations exceed the budget " + std::to_string(budget));
  }
  if (s.symbols == 1) return static_cast<double>(lambda) * s.phi[0];  // one configuration
  const double top = *std::max_element(s.phi.begin(), s.phi.end());
  std::vector<double> rel(s.phi.size());
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = s.phi[i] - top;
  // odometer over configurations, keeping the running (shifted) energy
  std::vector<std::size_t> w(lambda, 0);
  double energy = static_cast<double>(lambda) * rel[0];
  double total = 0.0;
  for (std::uint64_t c = 0; c < count; ++c) {
    total += std::exp(energy);
    for (std::size_t i = 0; i < lambda; ++i) {
      energy -= rel[w[i]];
      if (++w[i] < s.symbols) {
        energy += rel[w[i]];
        break;
      }
      w[i] = 0;
      energy += rel[0];
    }
  }
  return static_cast<double>(lambda) * top + std::log(total);
}

inline double cylinder_sum(const FullShiftSpec& s, const LatticePoint& n, std::uint64_t budget = kCylinderBudget) {
  return std::exp(log_cylinder_sum(s, n, budget));
}

inline bool cylinder_feasible(const FullShiftSpec& s, const LatticePoint& n, std::uint64_t budget = kCylinderBudget) {
  const std::uint64_t lambda = n.box_cardinality();
  std::uint64_t count = 1;
  for (std::uint64_t i = 0; i < lambda && s.symbols > 1; ++i)
    if (__builtin_mul_overflow(count, static_cast<std::uint64_t>(s.symbols), &count) || count > budget) return false;
  return true;
}

inline double bernoulli_pressure(const FullShiftSpec& s, const std::vector<double>& p) {
  s.validate();
  if (p.size() != s.symbols) throw domain_error("probability vector has the wrong length");
  double total = 0.0, value = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) throw domain_error("probability entries must be non-negative");
    total += p[i];
    if (p[i] > 0.0) value += -p[i] * std::log(p[i]) + p[i] * s.phi[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw domain_error("probability vector sums to " + std::to_string(total));
  return value;
}

struct GibbsOptimum {
  std::vector<double> p;
  double value = 0.0;
};

inline GibbsOptimum gibbs_optimizer(const FullShiftSpec& s) {
  const double z = exact_pressure(s);
  GibbsOptimum g;
  for (double v : s.phi) g.p.push_back(std::exp(v - z));
  g.value = bernoulli_pressure(s, g.p);
  return g;
}

}  // namespace thermo
