#include "silva/operators.hpp"

#include <algorithm>

namespace silva {

namespace {

const VoronoiCell& cell_at(const VoronoiMesh& mesh, int i) {
  return mesh.cells[static_cast<std::size_t>(i)];
}

template <typename T>
const T& at(std::span<const T> f, int i) {
  return f[static_cast<std::size_t>(i)];
}

}  // namespace

Vec2 strong_gradient(const VoronoiMesh& mesh, std::span<const double> f, int i) {
  const auto& cell = cell_at(mesh, i);
  const Vec2 xi = mesh.seeds[static_cast<std::size_t>(i)];
  const double fi = at(f, i);
  Vec2 g;
  for (const auto& fa : cell.facets) {
    if (fa.is_wall()) continue;
    g += ((fa.length / fa.distance) * (fi - at(f, fa.neighbor))) * (fa.midpoint - xi);
  }
  return g * (-1.0 / cell.volume);
}

Vec2 weak_gradient(const VoronoiMesh& mesh, std::span<const double> f, int i) {
  const auto& cell = cell_at(mesh, i);
  const double fi = at(f, i);
  Vec2 g;
  for (const auto& fa : cell.facets) {
    if (fa.is_wall()) continue;
    const Vec2 xj = mesh.seeds[static_cast<std::size_t>(fa.neighbor)];
    g += ((fa.length / fa.distance) * (fi - at(f, fa.neighbor))) * (fa.midpoint - xj);
  }
  return g / cell.volume;
}

double weak_divergence(const VoronoiMesh& mesh, std::span<const Vec2> v, int i) {
  const auto& cell = cell_at(mesh, i);
  const Vec2 vi = at(v, i);
  double d = 0.0;
  for (const auto& fa : cell.facets) {
    if (fa.is_wall()) continue;
    const Vec2 xj = mesh.seeds[static_cast<std::size_t>(fa.neighbor)];
    d += (fa.length / fa.distance) * dot(vi - at(v, fa.neighbor), fa.midpoint - xj);
  }
  return d / cell.volume;
}

double volume_rate(const VoronoiMesh& mesh, std::span<const Vec2> v, int i) {
  const auto& cell = cell_at(mesh, i);
  return cell.volume * weak_divergence(mesh, v, i) - dot(cell.surface, at(v, i));
}

double laplacian(const VoronoiMesh& mesh, std::span<const double> f, int i) {
  const auto& cell = cell_at(mesh, i);
  const double fi = at(f, i);
  double s = 0.0;
  for (const auto& fa : cell.facets) {
    if (fa.is_wall()) continue;
    s += (fa.length / fa.distance) * (fi - at(f, fa.neighbor));
  }
  return -s / cell.volume;
}

Vec2 laplacian(const VoronoiMesh& mesh, std::span<const Vec2> v, int i, const MirrorFn& mirror) {
  const auto& cell = cell_at(mesh, i);
  const Vec2 vi = at(v, i);
  Vec2 s;
  for (const auto& fa : cell.facets) {
    Vec2 vj;
    if (fa.is_wall()) {
      if (!mirror || !mirror(i, fa.wall(), vj)) continue;
    } else {
      vj = at(v, fa.neighbor);
    }
    s += (fa.length / fa.distance) * (vi - vj);
  }
  return s * (-1.0 / cell.volume);
}

Vec2 stabilized_gradient(const VoronoiMesh& mesh, std::span<const double> p, int i) {
  const Vec2 g = strong_gradient(mesh, p, i);
  const double lap = laplacian(mesh, p, i);
  if (!(lap > 0.0)) return g;
  const auto& cell = cell_at(mesh, i);
  return g - (kStabilizerCoefficient * lap) * (cell.centroid - mesh.seeds[static_cast<std::size_t>(i)]);
}

namespace {

template <typename Out, typename Fn>
std::vector<Out> per_cell(const VoronoiMesh& mesh, Fn fn) {
  std::vector<Out> out(mesh.size());
  const auto n = static_cast<std::ptrdiff_t>(mesh.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(static_cast<int>(i));
  return out;
}

}  // namespace

std::vector<Vec2> strong_gradient_field(const VoronoiMesh& mesh, std::span<const double> f) {
  return per_cell<Vec2>(mesh, [&](int i) { return strong_gradient(mesh, f, i); });
}

std::vector<Vec2> stabilized_gradient_field(const VoronoiMesh& mesh, std::span<const double> p) {
  return per_cell<Vec2>(mesh, [&](int i) { return stabilized_gradient(mesh, p, i); });
}

std::vector<double> weak_divergence_field(const VoronoiMesh& mesh, std::span<const Vec2> v) {
  return per_cell<double>(mesh, [&](int i) { return weak_divergence(mesh, v, i); });
}

std::vector<double> volume_rate_field(const VoronoiMesh& mesh, std::span<const Vec2> v) {
  return per_cell<double>(mesh, [&](int i) { return volume_rate(mesh, v, i); });
}

std::vector<double> laplacian_field(const VoronoiMesh& mesh, std::span<const double> f) {
  return per_cell<double>(mesh, [&](int i) { return laplacian(mesh, f, i); });
}

}  // namespace silva
