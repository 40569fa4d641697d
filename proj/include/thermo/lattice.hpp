#pragma once

// Combinatorics of the index semigroup Z_+^N: boxes, tilings by translated
// sub-boxes, residues and symmetric differences of translated boxes.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include "thermo/error.hpp"

namespace thermo {

/// An element of Z_+^N. The dimension is fixed at construction.
class LatticePoint {
public:
  LatticePoint() = default;
  explicit LatticePoint(std::vector<std::uint64_t> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw domain_error("lattice point must have dimension >= 1");
  }
  LatticePoint(std::initializer_list<std::uint64_t> coords)
      : LatticePoint(std::vector<std::uint64_t>(coords)) {}

  static LatticePoint zero(std::size_t dim) { return LatticePoint(std::vector<std::uint64_t>(dim, 0)); }
  static LatticePoint diagonal(std::size_t dim, std::uint64_t t) {
    return LatticePoint(std::vector<std::uint64_t>(dim, t));
  }
  static LatticePoint unit(std::size_t dim, std::size_t axis) {
    auto p = zero(dim);
    p.coords_.at(axis) = 1;
    return p;
  }

  std::size_t dim() const noexcept { return coords_.size(); }
  std::uint64_t operator[](std::size_t j) const { return coords_[j]; }
  const std::vector<std::uint64_t>& coords() const noexcept { return coords_; }

  std::uint64_t min_coord() const { return *std::min_element(coords_.begin(), coords_.end()); }
  std::uint64_t max_coord() const { return *std::max_element(coords_.begin(), coords_.end()); }
  bool is_zero() const {
    return std::all_of(coords_.begin(), coords_.end(), [](auto c) { return c == 0; });
  }

  /// Cardinality of the box {k : k^j < n^j}, checked against overflow.
  std::uint64_t box_cardinality() const {
    std::uint64_t out = 1;
    for (auto c : coords_) out = checked_mul(out, c, "box cardinality");
    return out;
  }

  /// True iff componentwise *this < n, i.e. the point lies in the box of n.
  bool in_box_of(const LatticePoint& n) const {
    require_same_dim(n);
    for (std::size_t j = 0; j < dim(); ++j)
      if (coords_[j] >= n.coords_[j]) return false;
    return true;
  }

  friend LatticePoint operator+(const LatticePoint& a, const LatticePoint& b) {
    a.require_same_dim(b);
    std::vector<std::uint64_t> out(a.dim());
    for (std::size_t j = 0; j < a.dim(); ++j) out[j] = checked_add(a[j], b[j], "lattice sum");
    return LatticePoint(std::move(out));
  }
  /// Componentwise product (the semiring product of Z_+^N).
  friend LatticePoint operator*(const LatticePoint& a, const LatticePoint& b) {
    a.require_same_dim(b);
    std::vector<std::uint64_t> out(a.dim());
    for (std::size_t j = 0; j < a.dim(); ++j) out[j] = checked_mul(a[j], b[j], "lattice product");
    return LatticePoint(std::move(out));
  }
  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;

  /// Dash-joined coordinates, e.g. "4-4".
  std::string to_string() const {
    std::string s;
    for (std::size_t j = 0; j < dim(); ++j) {
      if (j) s += '-';
      s += std::to_string(coords_[j]);
    }
    return s;
  }
  friend std::ostream& operator<<(std::ostream& os, const LatticePoint& p) { return os << '(' << p.to_string() << ')'; }

  void require_same_dim(const LatticePoint& other) const {
    if (other.dim() != dim())
      throw domain_error("lattice dimension mismatch: " + std::to_string(dim()) + " vs " +
                         std::to_string(other.dim()));
  }

private:
  std::vector<std::uint64_t> coords_;
};

/// The box Lambda(n) with its cached cardinality lambda(n).
class Box {
public:
  explicit Box(LatticePoint upper) : upper_(std::move(upper)), cardinality_(upper_.box_cardinality()) {
    if (cardinality_ == 0) throw domain_error("empty box: every coordinate of n must be >= 1, got " + upper_.to_string());
  }
  const LatticePoint& upper() const noexcept { return upper_; }
  std::uint64_t cardinality() const noexcept { return cardinality_; }
  std::size_t dim() const noexcept { return upper_.dim(); }

  /// Calls fn(point) for every point of the box in lexicographic order.
  template <class Fn>
  void for_each(Fn&& fn) const {
    std::vector<std::uint64_t> cur(dim(), 0);
    for (std::uint64_t i = 0; i < cardinality_; ++i) {
      fn(LatticePoint(cur));
      for (std::size_t j = dim(); j-- > 0;) {
        if (++cur[j] < upper_[j]) break;
        cur[j] = 0;
      }
    }
  }

private:
  LatticePoint upper_;
  std::uint64_t cardinality_;
};

/// All k with k^j < n^j, lexicographically ordered.
inline std::vector<LatticePoint> enumerate_box(const LatticePoint& n) {
  Box box(n);
  std::vector<LatticePoint> out;
  out.reserve(box.cardinality());
  box.for_each([&](const LatticePoint& p) { out.push_back(p); });
  return out;
}

/// Tiling of Lambda(n) by the translates p + Lambda(q), p in k + qG, that fit
/// entirely inside the box, and the residue they leave uncovered.
struct TileDecomposition {
  LatticePoint n;
  LatticePoint q;
  LatticePoint k;
  std::vector<LatticePoint> corners;
  std::vector<LatticePoint> residue;

  std::uint64_t tile_size() const { return q.box_cardinality(); }
};

namespace detail {
// Per-axis tile starts k^j + t q^j with k^j + (t+1) q^j <= n^j.
inline std::vector<std::uint64_t> tile_starts(std::uint64_t n, std::uint64_t q, std::uint64_t k) {
  std::vector<std::uint64_t> starts;
  for (std::uint64_t s = k; s + q <= n; s += q) starts.push_back(s);
  return starts;
}
}  // namespace detail

inline TileDecomposition decompose(const LatticePoint& n, const LatticePoint& q, const LatticePoint& k) {
  n.require_same_dim(q);
  n.require_same_dim(k);
  if (q.min_coord() < 1) throw domain_error("tile shape q must be componentwise >= 1, got " + q.to_string());
  Box box(n);
  if (!k.in_box_of(q)) throw domain_error("anchor k=" + k.to_string() + " is not in the box of q=" + q.to_string());

  const std::size_t dim = n.dim();
  std::vector<std::vector<std::uint64_t>> starts(dim);
  for (std::size_t j = 0; j < dim; ++j) starts[j] = detail::tile_starts(n[j], q[j], k[j]);

  TileDecomposition out{n, q, k, {}, {}};

  // Corners: cartesian product of the per-axis starts.
  bool any_empty = std::any_of(starts.begin(), starts.end(), [](const auto& s) { return s.empty(); });
  if (!any_empty) {
    std::vector<std::size_t> idx(dim, 0);
    while (true) {
      std::vector<std::uint64_t> c(dim);
      for (std::size_t j = 0; j < dim; ++j) c[j] = starts[j][idx[j]];
      out.corners.emplace_back(std::move(c));
      std::size_t j = dim;
      while (j-- > 0) {
        if (++idx[j] < starts[j].size()) break;
        idx[j] = 0;
      }
      if (j == static_cast<std::size_t>(-1)) break;
    }
  }

  // A point is tiled iff on every axis it falls in [k^j, last_start^j + q^j).
  box.for_each([&](const LatticePoint& p) {
    bool tiled = !any_empty;
    for (std::size_t j = 0; tiled && j < dim; ++j) {
      tiled = p[j] >= k[j] && p[j] < starts[j].back() + q[j];
    }
    if (!tiled) out.residue.push_back(p);
  });
  return out;
}

/// |Lambda(n) symmetric-difference (m + Lambda(n))|, exact.
inline std::uint64_t sym_diff_cardinality(const LatticePoint& n, const LatticePoint& m) {
  n.require_same_dim(m);
  Box box(n);
  std::uint64_t overlap = 1;
  for (std::size_t j = 0; j < n.dim(); ++j) overlap *= (m[j] >= n[j]) ? 0 : n[j] - m[j];
  return 2 * (box.cardinality() - overlap);
}

/// Checks |count| / lambda(n) <= 2 N max(scale) / min(n) with denominators
/// cleared, in 128-bit integer arithmetic.
inline bool within_face_bound(std::uint64_t count, const LatticePoint& n, std::uint64_t max_scale) {
  using u128 = unsigned __int128;
  const u128 lhs = static_cast<u128>(count) * n.min_coord();
  const u128 rhs = static_cast<u128>(2) * n.dim() * max_scale * n.box_cardinality();
  return lhs <= rhs;
}

}  // namespace thermo
