#pragma once

#include <doctest.h>

#include <random>

#include "tdl/real.hpp"

namespace tt {

using tdl::real;

inline real Q(const char* s) { return real(s); }

inline real rel(const real& a, const real& b) {
  using std::abs;
  return abs(a - b) / std::max(abs(b), real(1e-300));
}

inline double D(const real& v) { return tdl::to_double(v); }

// fixed seed: tests are reproducible
inline std::mt19937_64& rng() {
  static std::mt19937_64 g(20240611);
  return g;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

}  // namespace tt
