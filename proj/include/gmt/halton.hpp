#pragma once

#include <cstdint>

namespace gmt {

/// Radical inverse of `index` in the given prime base, in [0, 1).
inline double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

/// i-th prime for the first few dimensions of a Halton sequence.
inline unsigned halton_base(int axis) {
  static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  return primes[axis];
}

}  // namespace gmt
