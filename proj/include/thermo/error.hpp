#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace thermo {

// Argument outside the mathematical domain of an operation (k not in the box,
// dimension mismatch, non-admissible family where one is required).
class domain_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// A stated precondition on the inputs does not hold (measure not normalized,
// potential not constant on the marked cells, ...).
class precondition_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Configured budget exceeded: box too large, too many family members,
// enumeration too big. Never silently truncated.
class resource_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Checked 64-bit arithmetic overflowed.
class overflow_error : public std::overflow_error {
public:
  using std::overflow_error::overflow_error;
};

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what = "product") {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw overflow_error(std::string(what) + " overflows 64 bits");
  }
  return out;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b, const char* what = "sum") {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw overflow_error(std::string(what) + " overflows 64 bits");
  }
  return out;
}

}  // namespace thermo
