#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "silva/vec2.hpp"

namespace silva {

enum class Wall : std::int8_t { Left = 0, Right = 1, Bottom = 2, Top = 3 };

inline constexpr std::array<Wall, 4> kWalls = {Wall::Left, Wall::Right, Wall::Bottom, Wall::Top};

/// Axis-aligned rectangular domain.
struct DomainBox {
  double xmin = 0.0;
  double xmax = 1.0;
  double ymin = 0.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool strictly_contains(const Vec2& p) const {
    return p.x > xmin && p.x < xmax && p.y > ymin && p.y < ymax;
  }
  /// Throws InvalidInput unless xmax > xmin and ymax > ymin.
  void validate() const;

  Vec2 outward_normal(Wall w) const;
  /// Distance from p to the wall line.
  double distance_to(Wall w, const Vec2& p) const;
};

/// Cell list with square buckets of side 2*dr. Buckets are stored CSR-style:
/// seeds of bucket b are indices[start[b] .. start[b+1]).
struct BucketGrid {
  DomainBox domain;
  double side = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<int> start;
  std::vector<int> indices;

  int bucket_count() const { return nx * ny; }
  std::span<const int> bucket(int bx, int by) const {
    const int b = by * nx + bx;
    return {indices.data() + start[b], indices.data() + start[b + 1]};
  }
  /// Bucket coordinates containing p, using half-open intervals [low, high).
  std::array<int, 2> locate(const Vec2& p) const;
};

/// One edge of a Voronoi cell. Seed facets carry the neighbor index; wall
/// facets carry a negative code (see wall()). For wall facets `distance` is the
/// distance to the mirrored seed, 2*dist(x_i, wall).
struct Facet {
  int neighbor = -1;
  double length = 0.0;
  Vec2 midpoint;
  double distance = 0.0;
  Vec2 normal;

  bool is_wall() const { return neighbor < 0; }
  Wall wall() const { return static_cast<Wall>(-neighbor - 1); }
  static constexpr int wall_code(Wall w) { return -static_cast<int>(w) - 1; }
};

struct VoronoiCell {
  int generator = -1;
  std::vector<Vec2> vertices;  // counter-clockwise
  std::vector<Facet> facets;
  double volume = 0.0;
  Vec2 centroid;
  /// Wall part of the boundary normal integral; zero for interior cells.
  Vec2 surface;
  double radius = 0.0;

  bool touches_boundary() const {
    for (const auto& f : facets)
      if (f.is_wall()) return true;
    return false;
  }
};

struct VoronoiMesh {
  DomainBox domain;
  double dr = 0.0;
  std::vector<Vec2> seeds;
  std::vector<VoronoiCell> cells;
  BucketGrid grid;
  /// Sorted seed neighbors of each cell (degenerate facets excluded).
  std::vector<std::vector<int>> neighbors;

  std::size_t size() const { return cells.size(); }
  const Facet* find_facet(int i, int j) const;
};

/// Cell-list construction; rejects seeds outside the domain or coincident seeds.
BucketGrid build_bucket_grid(std::span<const Vec2> positions, const DomainBox& domain, double dr);

/// Exact Voronoi cell of seed i by iterative half-plane clipping over buckets in
/// ascending distance, optionally pre-clipped by a warm-start neighbor set.
VoronoiCell build_cell(int i, std::span<const Vec2> positions, const BucketGrid& grid,
                       double dr, std::span<const int> warm_neighbors = {});

VoronoiMesh build_mesh(std::span<const Vec2> positions, const DomainBox& domain, double dr,
                       const VoronoiMesh* previous = nullptr);

/// d|w_i|/dx_j from the closed-form facet formulas.
Vec2 cell_volume_gradient(const VoronoiMesh& mesh, int i, int j);

/// Nominal spacing for n seeds spread evenly over the domain.
double nominal_spacing(const DomainBox& domain, std::size_t n);

/// Facets shorter than this multiple of dr are treated as degenerate.
inline constexpr double kDegenerateFacetRatio = 1e-12;

}  // namespace silva
