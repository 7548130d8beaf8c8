#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "silva/vec2.hpp"
#include "silva/voronoi_mesh.hpp"

namespace testing {

using silva::DomainBox;
using silva::Vec2;

inline DomainBox unit_square() { return {0.0, 1.0, 0.0, 1.0}; }

/// Uniform random seeds with a minimum pairwise separation (dart throwing).
inline std::vector<Vec2> random_seeds(std::size_t n, const DomainBox& d, std::uint64_t seed,
                                      double min_sep_fraction = 0.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(d.xmin, d.xmax), uy(d.ymin, d.ymax);
  const double h = std::sqrt(d.area() / static_cast<double>(n));
  const double sep = min_sep_fraction * h;
  std::vector<Vec2> out;
  out.reserve(n);
  while (out.size() < n) {
    const Vec2 p{ux(rng), uy(rng)};
    if (!d.strictly_contains(p)) continue;
    bool ok = true;
    for (const auto& q : out)
      if (silva::distance(p, q) < sep) {
        ok = false;
        break;
      }
    if (ok) out.push_back(p);
  }
  return out;
}

/// Cell-centered n x n lattice.
inline std::vector<Vec2> lattice(int n, const DomainBox& d) {
  std::vector<Vec2> out;
  const double hx = d.width() / n, hy = d.height() / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) out.push_back({d.xmin + (i + 0.5) * hx, d.ymin + (j + 0.5) * hy});
  return out;
}

inline double spacing(const DomainBox& d, std::size_t n) {
  return std::sqrt(d.area() / static_cast<double>(n));
}

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

inline std::vector<Vec2> random_vectors(std::size_t n, std::uint64_t seed) {
  const auto a = random_values(2 * n, seed);
  std::vector<Vec2> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {a[2 * i], a[2 * i + 1]};
  return out;
}

inline bool interior(const silva::VoronoiCell& c) { return !c.touches_boundary(); }

}  // namespace testing
