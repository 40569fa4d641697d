#pragma once

// Finite (and discretized) dynamical systems carrying a Z_+^N action by
// commuting generator maps, Birkhoff sums of potentials, and the circle
// doubling / open-disk examples.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thermo/error.hpp"
#include "thermo/lattice.hpp"

namespace thermo {

using State = std::uint32_t;
using StateMap = std::vector<State>;
using StateList = std::vector<State>;  // sorted, no duplicates

/// Cell center in the plane, used only by constructors and reports.
struct CellCenter {
  double x = 0.0;
  double y = 0.0;
};

class FiniteSystem {
public:
  FiniteSystem(std::size_t state_count, std::vector<StateMap> generators, StateList marked = {},
               std::vector<CellCenter> geometry = {})
      : state_count_(state_count),
        generators_(std::move(generators)),
        marked_(std::move(marked)),
        geometry_(std::move(geometry)) {
    if (state_count_ == 0) throw domain_error("system needs at least one state");
    if (state_count_ > std::numeric_limits<State>::max()) throw overflow_error("state count exceeds 32-bit index range");
    if (generators_.empty()) throw domain_error("system needs at least one generator");
    for (std::size_t j = 0; j < generators_.size(); ++j) {
      const auto& g = generators_[j];
      if (g.size() != state_count_)
        throw domain_error("generator " + std::to_string(j) + " has " + std::to_string(g.size()) + " entries, expected " +
                           std::to_string(state_count_));
      for (State y : g)
        if (y >= state_count_) throw domain_error("generator " + std::to_string(j) + " leaves the state space");
    }
    for (std::size_t i = 0; i < generators_.size(); ++i)
      for (std::size_t j = i + 1; j < generators_.size(); ++j)
        for (State x = 0; x < state_count_; ++x)
          if (generators_[i][generators_[j][x]] != generators_[j][generators_[i][x]])
            throw domain_error("generators " + std::to_string(i) + " and " + std::to_string(j) +
                               " do not commute at state " + std::to_string(x));
    std::sort(marked_.begin(), marked_.end());
    marked_.erase(std::unique(marked_.begin(), marked_.end()), marked_.end());
    if (!marked_.empty() && marked_.back() >= state_count_) throw domain_error("marked state out of range");
    if (!geometry_.empty() && geometry_.size() != state_count_) throw domain_error("geometry size mismatch");
  }

  std::size_t state_count() const noexcept { return state_count_; }
  std::size_t dim() const noexcept { return generators_.size(); }
  const StateMap& generator(std::size_t j) const { return generators_.at(j); }
  const std::vector<StateMap>& generators() const noexcept { return generators_; }
  const StateList& marked() const noexcept { return marked_; }
  bool is_marked(State x) const { return std::binary_search(marked_.begin(), marked_.end(), x); }
  const std::vector<CellCenter>& geometry() const noexcept { return geometry_; }

  void require_state(State x) const {
    if (x >= state_count_) throw domain_error("state " + std::to_string(x) + " out of range");
  }
  void require_dim(const LatticePoint& k) const {
    if (k.dim() != dim())
      throw domain_error("lattice point has dimension " + std::to_string(k.dim()) + ", system has " +
                         std::to_string(dim()));
  }

private:
  std::size_t state_count_;
  std::vector<StateMap> generators_;
  StateList marked_;
  std::vector<CellCenter> geometry_;
};

/// Per-state real potential f.
class Potential {
public:
  explicit Potential(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (!std::isfinite(v)) throw domain_error("potential values must be finite");
      sup_norm_ = std::max(sup_norm_, std::abs(v));
    }
  }
  static Potential constant(std::size_t state_count, double c) { return Potential(std::vector<double>(state_count, c)); }

  std::size_t size() const noexcept { return values_.size(); }
  double operator()(State x) const { return values_[x]; }
  const std::vector<double>& values() const noexcept { return values_; }
  double sup_norm() const noexcept { return sup_norm_; }

  Potential plus(double c) const {
    auto v = values_;
    for (auto& x : v) x += c;
    return Potential(std::move(v));
  }

private:
  std::vector<double> values_;
  double sup_norm_ = 0.0;
};

// ---------------------------------------------------------------------------
// Maps

inline StateMap identity_map(std::size_t n) {
  StateMap id(n);
  std::iota(id.begin(), id.end(), State{0});
  return id;
}

/// (a o b)(x) = a(b(x)).
inline StateMap compose(const StateMap& a, const StateMap& b) {
  StateMap out(b.size());
  for (std::size_t x = 0; x < b.size(); ++x) out[x] = a[b[x]];
  return out;
}

/// map^e by repeated squaring.
inline StateMap iterate_map(const StateMap& map, std::uint64_t e) {
  StateMap result = identity_map(map.size());
  StateMap base = map;
  while (e) {
    if (e & 1) result = compose(base, result);
    e >>= 1;
    if (e) base = compose(base, base);
  }
  return result;
}

/// The whole map T^k as a table.
inline StateMap power_map(const FiniteSystem& sys, const LatticePoint& k) {
  sys.require_dim(k);
  StateMap out = identity_map(sys.state_count());
  for (std::size_t j = 0; j < sys.dim(); ++j)
    if (k[j]) out = compose(iterate_map(sys.generator(j), k[j]), out);
  return out;
}

/// T^k(x) by composing generators; T^0 is the identity.
inline State apply_power(const FiniteSystem& sys, const LatticePoint& k, State x) {
  sys.require_dim(k);
  sys.require_state(x);
  for (std::size_t j = 0; j < sys.dim(); ++j) {
    const auto& g = sys.generator(j);
    for (std::uint64_t t = 0; t < k[j]; ++t) x = g[x];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Birkhoff sums

/// f_Lambda(x) = sum over k in Lambda of f(T^k x), for an arbitrary finite set.
inline double birkhoff_sum_over(const FiniteSystem& sys, const Potential& f, const std::vector<LatticePoint>& points,
                                State x) {
  sys.require_state(x);
  double s = 0.0;
  for (const auto& k : points) s += f(apply_power(sys, k, x));
  return s;
}

/// f_n(x) = sum over k in Lambda(n) of f(T^k x).
inline double birkhoff_sum(const FiniteSystem& sys, const Potential& f, const LatticePoint& n, State x) {
  sys.require_dim(n);
  sys.require_state(x);
  Box box(n);
  double s = 0.0;
  box.for_each([&](const LatticePoint& k) { s += f(apply_power(sys, k, x)); });
  return s;
}

namespace detail {
// out(x) = sum_{t < len} g(map^t x), by binary lifting on (map^a, S_a).
inline std::vector<double> sum_along(const StateMap& map, const std::vector<double>& g, std::uint64_t len) {
  const std::size_t m = map.size();
  std::vector<double> acc(m, 0.0);
  StateMap acc_map = identity_map(m);
  std::vector<double> block = g;
  StateMap block_map = map;
  while (len) {
    if (len & 1) {
      for (std::size_t x = 0; x < m; ++x) acc[x] += block[acc_map[x]];
      acc_map = compose(block_map, acc_map);
    }
    len >>= 1;
    if (len) {
      std::vector<double> next(m);
      for (std::size_t x = 0; x < m; ++x) next[x] = block[x] + block[block_map[x]];
      block = std::move(next);
      block_map = compose(block_map, block_map);
    }
  }
  return acc;
}
}  // namespace detail

/// f_n for every state at once; O(M N log max(n)).
inline std::vector<double> birkhoff_table(const FiniteSystem& sys, const Potential& f, const LatticePoint& n) {
  sys.require_dim(n);
  Box box(n);
  if (f.size() != sys.state_count()) throw domain_error("potential size does not match the system");
  std::vector<double> g = f.values();
  for (std::size_t j = 0; j < sys.dim(); ++j) g = detail::sum_along(sys.generator(j), g, n[j]);
  return g;
}

// ---------------------------------------------------------------------------
// Constructors

/// x -> 2x mod m on {0..m-1}, the angles 2 pi x / m.
inline FiniteSystem make_circle_doubling(std::uint64_t m) {
  if (m < 3 || m % 2 == 0)
    throw domain_error("circle doubling needs an odd m >= 3 (x -> 2x mod m is a bijection only for odd m), got " +
                       std::to_string(m));
  if (m > std::numeric_limits<State>::max()) throw overflow_error("circle size exceeds 32-bit index range");
  StateMap g(m);
  std::vector<CellCenter> geo(m);
  for (std::uint64_t x = 0; x < m; ++x) {
    g[x] = static_cast<State>((2 * x) % m);
    const double th = 2.0 * M_PI * static_cast<double>(x) / static_cast<double>(m);
    geo[x] = {std::cos(th), std::sin(th)};
  }
  return FiniteSystem(m, {std::move(g)}, {}, std::move(geo));
}

/// Layout of the disk grid: state 0 is the center cell {0}; (ring, sector)
/// lives at 1 + ring * sectors + sector.
struct DiskGrid {
  std::uint64_t rings = 0;
  std::uint64_t sectors = 0;

  std::uint64_t state_count() const { return checked_add(checked_mul(rings, sectors, "disk grid"), 1, "disk grid"); }
  State cell(std::uint64_t ring, std::uint64_t sector) const { return static_cast<State>(1 + ring * sectors + sector); }
  bool is_center(State s) const { return s == 0; }
  std::uint64_t ring_of(State s) const { return (s - 1) / sectors; }
  std::uint64_t sector_of(State s) const { return (s - 1) % sectors; }
  double center_radius(State s) const {
    return s == 0 ? 0.0 : (static_cast<double>(ring_of(s)) + 0.5) / static_cast<double>(rings);
  }
  double center_angle(State s) const {
    return s == 0 ? 0.0 : 2.0 * M_PI * (static_cast<double>(sector_of(s)) + 0.5) / static_cast<double>(sectors);
  }
};

/// The radial/angular part of z -> r (r+1)/2 e^{2 i theta} on cell centers,
/// re-binned into the same grid. Exact rational arithmetic: a center has
/// r = (2i+1)/(2R) and theta/(2 pi) = (2j+1)/(2A).
inline State disk_cell_image(const DiskGrid& grid, State s) {
  if (grid.is_center(s)) return 0;
  using u128 = unsigned __int128;
  const u128 R = grid.rings, A = grid.sectors;
  const u128 i = grid.ring_of(s), j = grid.sector_of(s);
  // r' = r (r+1) / 2 = (2i+1)(2i+1+2R) / (8 R^2); radial bins (i/R, (i+1)/R]
  // give ring' = ceil(r' R) - 1 = ceil((2i+1)(2i+1+2R) / (8R)) - 1.
  const u128 num = (2 * i + 1) * (2 * i + 1 + 2 * R);
  const u128 den = 8 * R;
  const u128 ceil_q = (num + den - 1) / den;
  const std::uint64_t ring = static_cast<std::uint64_t>(ceil_q == 0 ? 0 : ceil_q - 1);
  // theta'/(2 pi) = (2j+1)/A mod 1; bin = floor(theta' A / 2 pi) with ties
  // at bin edges resolved to the lower bin.
  const u128 anum = (2 * j + 1) % A;  // theta' A / (2 pi), an integer: always an edge
  const std::uint64_t sector = static_cast<std::uint64_t>((anum + A - 1) % A);
  return grid.cell(std::min<std::uint64_t>(ring, grid.rings - 1), sector);
}

/// Discretized open-disk system: R rings by A sectors plus a center cell;
/// the outermost ring is marked (closures meet the unit circle).
inline FiniteSystem make_disk_system(std::uint64_t rings, std::uint64_t sectors) {
  if (rings < 2 || sectors < 2) throw domain_error("disk grid needs rings >= 2 and sectors >= 2");
  DiskGrid grid{rings, sectors};
  const std::uint64_t m = grid.state_count();
  if (m > std::numeric_limits<State>::max()) throw overflow_error("disk grid exceeds 32-bit index range");
  StateMap g(m);
  std::vector<CellCenter> geo(m);
  for (State s = 0; s < m; ++s) {
    g[s] = disk_cell_image(grid, s);
    const double r = grid.center_radius(s), th = grid.center_angle(s);
    geo[s] = {r * std::cos(th), r * std::sin(th)};
  }
  StateList marked;
  for (std::uint64_t j = 0; j < sectors; ++j) marked.push_back(grid.cell(rings - 1, j));
  return FiniteSystem(m, {std::move(g)}, std::move(marked), std::move(geo));
}

/// The action (k, x) -> T^{mk}(x): generator j becomes T^{m^j e_j}.
inline FiniteSystem power_system(const FiniteSystem& sys, const LatticePoint& m) {
  sys.require_dim(m);
  if (m.min_coord() < 1) throw domain_error("power_system needs m componentwise >= 1");
  std::vector<StateMap> gens;
  for (std::size_t j = 0; j < sys.dim(); ++j) gens.push_back(iterate_map(sys.generator(j), m[j]));
  return FiniteSystem(sys.state_count(), std::move(gens), sys.marked(), sys.geometry());
}

// ---------------------------------------------------------------------------
// Cycles of a single map

struct Cycle {
  std::vector<State> states;  // in orbit order, starting from the smallest state
  double mean = 0.0;
};

/// All cycles of the functional graph of a one-generator system, with the
/// average of f along each. Cycles are ordered by their smallest state.
inline std::vector<Cycle> cycle_structure(const FiniteSystem& sys, const Potential& f) {
  if (sys.dim() != 1) throw domain_error("cycle_structure needs a single generator");
  const auto& g = sys.generator(0);
  const std::size_t m = sys.state_count();
  // 0 = unvisited, 1 = on the current path, 2 = finished
  std::vector<std::uint8_t> color(m, 0);
  std::vector<Cycle> cycles;
  for (State start = 0; start < m; ++start) {
    if (color[start]) continue;
    std::vector<State> path;
    State x = start;
    while (color[x] == 0) {
      color[x] = 1;
      path.push_back(x);
      x = g[x];
    }
    if (color[x] == 1) {
      auto it = std::find(path.begin(), path.end(), x);
      std::vector<State> cyc(it, path.end());
      std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
      double s = 0.0;
      for (State c : cyc) s += f(c);
      cycles.push_back({cyc, s / static_cast<double>(cyc.size())});
    }
    for (State p : path) color[p] = 2;
  }
  std::sort(cycles.begin(), cycles.end(), [](const Cycle& a, const Cycle& b) { return a.states[0] < b.states[0]; });
  return cycles;
}

}  // namespace thermo
