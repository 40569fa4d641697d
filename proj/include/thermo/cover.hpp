#pragma once

// Covers and partitions of a finite state space: preimages, joins, orbit
// joins over boxes, refinement, admissibility, the cover built from an
// admissible partition, the potential cover B_{f,eps}, and closeness graphs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "thermo/dynsys.hpp"
#include "thermo/error.hpp"
#include "thermo/lattice.hpp"

namespace thermo {

enum class FamilyKind { cover, partition };

/// Budgets for orbit joins.
struct JoinLimits {
  std::uint64_t max_lambda = 1'000'000;
  std::size_t max_members = 4096;
};

namespace detail {
struct StateListHash {
  std::size_t operator()(const StateList& s) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (State x : s) {
      h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};
}  // namespace detail

/// A cover or partition of {0..M-1} as an ordered list of sorted member
/// lists. Members are deduplicated (first occurrence kept) and empty members
/// dropped on construction.
class SetFamily {
public:
  SetFamily(std::size_t state_count, FamilyKind kind, std::vector<StateList> members)
      : state_count_(state_count), kind_(kind) {
    std::unordered_map<StateList, std::size_t, detail::StateListHash> seen;
    for (auto& m : members) {
      std::sort(m.begin(), m.end());
      m.erase(std::unique(m.begin(), m.end()), m.end());
      if (!m.empty() && m.back() >= state_count_) throw domain_error("family member refers to a state out of range");
      if (m.empty()) {
        ++dropped_empty_;
        continue;
      }
      if (seen.emplace(m, members_.size()).second) members_.push_back(std::move(m));
    }
    validate();
  }

  static SetFamily cover(std::size_t state_count, std::vector<StateList> members) {
    return SetFamily(state_count, FamilyKind::cover, std::move(members));
  }
  static SetFamily partition(std::size_t state_count, std::vector<StateList> members) {
    return SetFamily(state_count, FamilyKind::partition, std::move(members));
  }
  /// Partition from a label per state; classes ordered by their smallest state.
  static SetFamily from_labels(const std::vector<std::uint64_t>& labels) {
    std::unordered_map<std::uint64_t, std::size_t> index;
    std::vector<StateList> members;
    for (State x = 0; x < labels.size(); ++x) {
      auto [it, fresh] = index.emplace(labels[x], members.size());
      if (fresh) members.emplace_back();
      members[it->second].push_back(x);
    }
    return partition(labels.size(), std::move(members));
  }
  static SetFamily trivial(std::size_t state_count) { return partition(state_count, {identity_map(state_count)}); }
  static SetFamily singletons(std::size_t state_count) {
    std::vector<StateList> members;
    for (State x = 0; x < state_count; ++x) members.push_back({x});
    return partition(state_count, std::move(members));
  }

  std::size_t state_count() const noexcept { return state_count_; }
  FamilyKind kind() const noexcept { return kind_; }
  bool is_partition() const noexcept { return kind_ == FamilyKind::partition; }
  std::size_t size() const noexcept { return members_.size(); }
  const StateList& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<StateList>& members() const noexcept { return members_; }
  /// Empty members removed at construction (preimages of partitions, joins).
  std::size_t dropped_empty() const noexcept { return dropped_empty_; }

  /// For a partition: the index of the member holding each state.
  std::vector<std::uint32_t> labels() const {
    if (!is_partition()) throw domain_error("labels() needs a partition");
    std::vector<std::uint32_t> out(state_count_);
    for (std::uint32_t i = 0; i < members_.size(); ++i)
      for (State x : members_[i]) out[x] = i;
    return out;
  }

  /// For each state, the indices of the members containing it.
  std::vector<std::vector<std::uint32_t>> membership() const {
    std::vector<std::vector<std::uint32_t>> out(state_count_);
    for (std::uint32_t i = 0; i < members_.size(); ++i)
      for (State x : members_[i]) out[x].push_back(i);
    return out;
  }

  /// Members sorted lexicographically; equal families compare equal here.
  std::vector<StateList> canonical_members() const {
    auto out = members_;
    std::sort(out.begin(), out.end());
    return out;
  }
  bool same_members(const SetFamily& other) const { return canonical_members() == other.canonical_members(); }

  void require_on(const FiniteSystem& sys) const {
    if (sys.state_count() != state_count_)
      throw domain_error("family lives on " + std::to_string(state_count_) + " states, system has " +
                         std::to_string(sys.state_count()));
  }

private:
  void validate() const {
    std::vector<std::uint32_t> hits(state_count_, 0);
    for (const auto& m : members_)
      for (State x : m) ++hits[x];
    for (State x = 0; x < state_count_; ++x) {
      if (hits[x] == 0) throw domain_error("family does not cover state " + std::to_string(x));
      if (kind_ == FamilyKind::partition && hits[x] > 1)
        throw domain_error("partition members overlap at state " + std::to_string(x));
    }
  }

  std::size_t state_count_;
  FamilyKind kind_;
  std::vector<StateList> members_;
  std::size_t dropped_empty_ = 0;
};

// ---------------------------------------------------------------------------
// Text format: a header line "cover M" or "partition M", then one member per
// line as space-separated sorted state indices.

inline void write_family(std::ostream& os, const SetFamily& f) {
  os << (f.is_partition() ? "partition " : "cover ") << f.state_count() << '\n';
  for (const auto& m : f.members()) {
    for (std::size_t i = 0; i < m.size(); ++i) os << (i ? " " : "") << m[i];
    os << '\n';
  }
}

inline SetFamily read_family(std::istream& is) {
  std::string kind;
  std::size_t m = 0;
  if (!(is >> kind >> m) || (kind != "cover" && kind != "partition"))
    throw domain_error("family text must start with 'cover M' or 'partition M'");
  std::string line;
  std::getline(is, line);
  std::vector<StateList> members;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    StateList mem;
    State x;
    while (ls >> x) mem.push_back(x);
    members.push_back(std::move(mem));
  }
  return SetFamily(m, kind == "partition" ? FamilyKind::partition : FamilyKind::cover, std::move(members));
}

inline std::string to_text(const SetFamily& f) {
  std::ostringstream os;
  write_family(os, f);
  return os.str();
}

// ---------------------------------------------------------------------------
// Preimages and joins

/// Members T^{-1}(B) for a state map T. Empty preimages are dropped; for
/// partitions the count is kept in dropped_empty().
inline SetFamily preimage_under(const StateMap& map, const SetFamily& fam) {
  const auto who = fam.membership();
  std::vector<StateList> members(fam.size());
  for (State x = 0; x < map.size(); ++x)
    for (auto i : who[map[x]]) members[i].push_back(x);
  return SetFamily(fam.state_count(), fam.kind(), std::move(members));
}

inline SetFamily preimage_family(const FiniteSystem& sys, const SetFamily& fam, const LatticePoint& k) {
  fam.require_on(sys);
  return preimage_under(power_map(sys, k), fam);
}

/// All nonempty pairwise intersections, ordered by (index in a, index in b).
inline SetFamily join(const SetFamily& a, const SetFamily& b) {
  if (a.state_count() != b.state_count()) throw domain_error("join of families on different state spaces");
  const auto wa = a.membership();
  const auto wb = b.membership();
  std::map<std::pair<std::uint32_t, std::uint32_t>, StateList> cells;
  for (State x = 0; x < a.state_count(); ++x)
    for (auto i : wa[x])
      for (auto j : wb[x]) cells[{i, j}].push_back(x);
  std::vector<StateList> members;
  members.reserve(cells.size());
  for (auto& [key, m] : cells) members.push_back(std::move(m));
  const bool part = a.is_partition() && b.is_partition();
  return SetFamily(a.state_count(), part ? FamilyKind::partition : FamilyKind::cover, std::move(members));
}

namespace detail {

inline void check_members(const SetFamily& f, const JoinLimits& limits) {
  if (f.size() > limits.max_members)
    throw resource_error("orbit join exceeds the member budget: " + std::to_string(f.size()) + " > " +
                         std::to_string(limits.max_members));
}

// Itinerary labels of a partition along one generator: states get equal
// labels iff their label sequences over t < len agree.
inline std::vector<std::uint64_t> itinerary_along(const StateMap& map, const std::vector<std::uint64_t>& base,
                                                  std::uint64_t len) {
  const std::size_t m = map.size();
  auto relabel = [m](const std::vector<std::uint64_t>& l1, const std::vector<std::uint64_t>& l2) {
    std::unordered_map<std::uint64_t, std::uint64_t> ids;
    std::vector<std::uint64_t> out(m);
    for (std::size_t x = 0; x < m; ++x) {
      const std::uint64_t key = (l1[x] << 32) | l2[x];
      out[x] = ids.emplace(key, ids.size()).first->second;
    }
    return out;
  };
  std::vector<std::uint64_t> acc(m, 0);
  StateMap acc_map = identity_map(m);
  std::vector<std::uint64_t> block = base;
  StateMap block_map = map;
  bool first = true;
  while (len) {
    if (len & 1) {
      std::vector<std::uint64_t> shifted(m);
      for (std::size_t x = 0; x < m; ++x) shifted[x] = block[acc_map[x]];
      acc = first ? relabel(shifted, std::vector<std::uint64_t>(m, 0)) : relabel(acc, shifted);
      first = false;
      acc_map = compose(block_map, acc_map);
    }
    len >>= 1;
    if (len) {
      std::vector<std::uint64_t> shifted(m);
      for (std::size_t x = 0; x < m; ++x) shifted[x] = block[block_map[x]];
      block = relabel(block, shifted);
      block_map = compose(block_map, block_map);
    }
  }
  return acc;
}

// Cover join along one generator: F^{a+b} = F^a v T^{-a} F^b.
inline SetFamily cover_join_along(const StateMap& map, const SetFamily& base, std::uint64_t len,
                                  const JoinLimits& limits) {
  std::optional<SetFamily> acc;
  StateMap acc_map = identity_map(map.size());
  SetFamily block = base;
  StateMap block_map = map;
  while (len) {
    if (len & 1) {
      auto shifted = preimage_under(acc_map, block);
      acc = acc ? join(*acc, shifted) : std::move(shifted);
      check_members(*acc, limits);
      acc_map = compose(block_map, acc_map);
    }
    len >>= 1;
    if (len) {
      block = join(block, preimage_under(block_map, block));
      check_members(block, limits);
      block_map = compose(block_map, block_map);
    }
  }
  return std::move(*acc);
}
}  // namespace detail

/// F^n = join over k in Lambda(n) of T^{-k} F. Partitions go through
/// itinerary labels; covers through binary splitting of the box.
inline SetFamily orbit_join(const FiniteSystem& sys, const SetFamily& fam, const LatticePoint& n,
                            const JoinLimits& limits = {}) {
  fam.require_on(sys);
  sys.require_dim(n);
  Box box(n);
  if (box.cardinality() > limits.max_lambda)
    throw resource_error("orbit join box too large: lambda(n) = " + std::to_string(box.cardinality()) + " > " +
                         std::to_string(limits.max_lambda));
  if (fam.is_partition()) {
    const auto lab32 = fam.labels();
    std::vector<std::uint64_t> labels(lab32.begin(), lab32.end());
    for (std::size_t j = 0; j < sys.dim(); ++j) labels = detail::itinerary_along(sys.generator(j), labels, n[j]);
    auto out = SetFamily::from_labels(labels);
    detail::check_members(out, limits);
    return out;
  }
  SetFamily acc = fam;
  for (std::size_t j = 0; j < sys.dim(); ++j) acc = detail::cover_join_along(sys.generator(j), acc, n[j], limits);
  return acc;
}

/// True iff every member of `finer` lies inside some member of `coarser`.
inline bool refines(const SetFamily& finer, const SetFamily& coarser) {
  if (finer.state_count() != coarser.state_count()) throw domain_error("refines: families on different state spaces");
  const auto who = coarser.membership();
  for (const auto& g : finer.members()) {
    bool inside = false;
    for (auto i : who[g.front()]) {
      const auto& c = coarser[i];
      if (std::includes(c.begin(), c.end(), g.begin(), g.end())) {
        inside = true;
        break;
      }
    }
    if (!inside) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Admissibility: a member is "compact" iff it avoids every marked state, so a
// member has compact complement iff it contains every marked state.

struct AdmissibilityReport {
  bool is_admissible = false;
  bool is_strongly_admissible = false;
  std::optional<std::size_t> witness;
};

struct PartitionAdmissibilityReport {
  bool is_admissible_partition = false;
  std::optional<std::size_t> noncompact_index;
};

inline AdmissibilityReport classify_admissible(const FiniteSystem& sys, const SetFamily& fam) {
  fam.require_on(sys);
  const auto& marked = sys.marked();
  AdmissibilityReport r;
  r.is_strongly_admissible = true;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto& m = fam[i];
    const bool holds_all = std::includes(m.begin(), m.end(), marked.begin(), marked.end());
    if (holds_all && !r.witness) r.witness = i;
    if (!holds_all) r.is_strongly_admissible = false;
  }
  r.is_admissible = r.witness.has_value();
  return r;
}

inline bool intersects(const StateList& a, const StateList& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j)
      ++i;
    else
      ++j;
  }
  return false;
}

inline PartitionAdmissibilityReport classify_admissible_partition(const FiniteSystem& sys, const SetFamily& k) {
  k.require_on(sys);
  if (!k.is_partition()) throw domain_error("classify_admissible_partition needs a partition");
  PartitionAdmissibilityReport r;
  std::size_t touching = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (intersects(k[i], sys.marked())) {
      ++touching;
      if (!r.noncompact_index) r.noncompact_index = i;
    }
  }
  r.is_admissible_partition = touching <= 1;
  if (!r.is_admissible_partition) r.noncompact_index.reset();
  return r;
}

/// {K_0 u K_1, ..., K_0 u K_l} for an admissible partition with non-compact
/// member K_0 (member 0 when nothing is marked). A one-member partition maps
/// to the one-member cover.
inline SetFamily cover_from_partition(const FiniteSystem& sys, const SetFamily& k) {
  const auto rep = classify_admissible_partition(sys, k);
  if (!rep.is_admissible_partition)
    throw domain_error("cover_from_partition: partition is not admissible (several members meet the marked cells)");
  const std::size_t k0 = rep.noncompact_index.value_or(0);
  std::vector<StateList> members;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i == k0) continue;
    StateList m;
    std::merge(k[k0].begin(), k[k0].end(), k[i].begin(), k[i].end(), std::back_inserter(m));
    members.push_back(std::move(m));
  }
  if (members.empty()) members.push_back(k[k0]);
  return SetFamily::cover(k.state_count(), std::move(members));
}

/// B_{f,eps}: the nonempty sets {x : |f(x) - a| < eps/2} for centers a on the
/// grid (eps/2) Z. Requires f constant on the marked cells.
inline SetFamily potential_cover(const FiniteSystem& sys, const Potential& f, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw domain_error("potential_cover needs eps > 0");
  if (f.size() != sys.state_count()) throw domain_error("potential size does not match the system");
  const auto& marked = sys.marked();
  for (State x : marked)
    if (f(x) != f(marked.front()))
      throw precondition_error("potential_cover: f must be constant on the marked cells");
  const auto [lo_it, hi_it] = std::minmax_element(f.values().begin(), f.values().end());
  const double half = eps / 2.0;
  const auto t_lo = static_cast<std::int64_t>(std::floor(*lo_it / half)) - 1;
  const auto t_hi = static_cast<std::int64_t>(std::ceil(*hi_it / half)) + 1;
  std::vector<StateList> members;
  for (std::int64_t t = t_lo; t <= t_hi; ++t) {
    const double a = static_cast<double>(t) * half;
    StateList m;
    for (State x = 0; x < sys.state_count(); ++x)
      if (std::abs(f(x) - a) < half) m.push_back(x);
    if (!m.empty()) members.push_back(std::move(m));
  }
  return SetFamily::cover(sys.state_count(), std::move(members));
}

// ---------------------------------------------------------------------------
// Closeness

/// x ~ y iff some member of F^n contains both: the union of the members as
/// cliques.
struct ClosenessGraph {
  std::size_t state_count = 0;
  std::vector<StateList> cliques;

  /// Neighbors of x (excluding x), sorted.
  StateList neighbors(State x) const {
    StateList out;
    for (const auto& c : cliques)
      if (std::binary_search(c.begin(), c.end(), x))
        for (State y : c)
          if (y != x) out.push_back(y);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  bool adjacent(State x, State y) const {
    if (x == y) return true;
    for (const auto& c : cliques)
      if (std::binary_search(c.begin(), c.end(), x) && std::binary_search(c.begin(), c.end(), y)) return true;
    return false;
  }
};

inline ClosenessGraph closeness_graph(const SetFamily& joined) {
  return {joined.state_count(), joined.members()};
}

inline ClosenessGraph closeness_graph(const FiniteSystem& sys, const SetFamily& fam, const LatticePoint& n,
                                      const JoinLimits& limits = {}) {
  return closeness_graph(orbit_join(sys, fam, n, limits));
}

}  // namespace thermo
