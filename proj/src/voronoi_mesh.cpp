#include "silva/voronoi_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "silva/error.hpp"

namespace silva {

void DomainBox::validate() const {
  if (!(xmax > xmin) || !(ymax > ymin))
    throw InvalidInput("domain box must satisfy xmax > xmin and ymax > ymin");
}

Vec2 DomainBox::outward_normal(Wall w) const {
  switch (w) {
    case Wall::Left: return {-1.0, 0.0};
    case Wall::Right: return {1.0, 0.0};
    case Wall::Bottom: return {0.0, -1.0};
    case Wall::Top: return {0.0, 1.0};
  }
  return {};
}

double DomainBox::distance_to(Wall w, const Vec2& p) const {
  switch (w) {
    case Wall::Left: return p.x - xmin;
    case Wall::Right: return xmax - p.x;
    case Wall::Bottom: return p.y - ymin;
    case Wall::Top: return ymax - p.y;
  }
  return 0.0;
}

std::array<int, 2> BucketGrid::locate(const Vec2& p) const {
  const int bx = std::clamp(static_cast<int>(std::floor((p.x - domain.xmin) / side)), 0, nx - 1);
  const int by = std::clamp(static_cast<int>(std::floor((p.y - domain.ymin) / side)), 0, ny - 1);
  return {bx, by};
}

const Facet* VoronoiMesh::find_facet(int i, int j) const {
  for (const auto& f : cells[static_cast<std::size_t>(i)].facets)
    if (f.neighbor == j) return &f;
  return nullptr;
}

double nominal_spacing(const DomainBox& domain, std::size_t n) {
  if (n == 0) throw InvalidInput("nominal spacing needs at least one seed");
  return std::sqrt(domain.area() / static_cast<double>(n));
}

BucketGrid build_bucket_grid(std::span<const Vec2> positions, const DomainBox& domain,
                             double dr) {
  domain.validate();
  if (!(dr > 0.0) || !std::isfinite(dr)) throw InvalidInput("resolution dr must be positive");

  BucketGrid grid;
  grid.domain = domain;
  grid.side = 2.0 * dr;
  // A bucket count that is an integer up to rounding must not grow a sliver column.
  auto count = [&](double extent) {
    const double ratio = extent / grid.side;
    return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
  };
  grid.nx = count(domain.width());
  grid.ny = count(domain.height());

  const auto n = positions.size();
  std::vector<int> owner(n);
  grid.start.assign(static_cast<std::size_t>(grid.bucket_count()) + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = positions[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !domain.strictly_contains(p))
      throw InvalidInput("seed " + std::to_string(i) + " lies outside the domain");
    const auto [bx, by] = grid.locate(p);
    owner[i] = by * grid.nx + bx;
    ++grid.start[static_cast<std::size_t>(owner[i]) + 1];
  }
  for (std::size_t b = 1; b < grid.start.size(); ++b) grid.start[b] += grid.start[b - 1];
  grid.indices.resize(n);
  std::vector<int> fill(grid.start.begin(), grid.start.end() - 1);
  for (std::size_t i = 0; i < n; ++i)
    grid.indices[static_cast<std::size_t>(fill[static_cast<std::size_t>(owner[i])]++)] =
        static_cast<int>(i);

  const double min_sep2 = (1e-12 * dr) * (1e-12 * dr);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [bx, by] = grid.locate(positions[i]);
    for (int y = std::max(0, by - 1); y <= std::min(grid.ny - 1, by + 1); ++y) {
      for (int x = std::max(0, bx - 1); x <= std::min(grid.nx - 1, bx + 1); ++x) {
        for (int j : grid.bucket(x, y)) {
          if (static_cast<std::size_t>(j) <= i) continue;
          if (norm2(positions[i] - positions[static_cast<std::size_t>(j)]) < min_sep2)
            throw InvalidInput("seeds " + std::to_string(i) + " and " + std::to_string(j) +
                               " coincide");
        }
      }
    }
  }
  return grid;
}

namespace {

struct BucketOffset {
  int dx;
  int dy;
  double distance;  // minimal distance between the two bucket rectangles
};

/// All bucket offsets of a grid sorted by rectangle-to-rectangle distance,
/// ties broken by Chebyshev ring and then row-major order.
std::vector<BucketOffset> sorted_offsets(const BucketGrid& grid) {
  std::vector<BucketOffset> out;
  out.reserve(static_cast<std::size_t>((2 * grid.nx - 1) * (2 * grid.ny - 1)));
  for (int dy = -(grid.ny - 1); dy <= grid.ny - 1; ++dy) {
    for (int dx = -(grid.nx - 1); dx <= grid.nx - 1; ++dx) {
      const double gx = std::max(std::abs(dx) - 1, 0);
      const double gy = std::max(std::abs(dy) - 1, 0);
      out.push_back({dx, dy, grid.side * std::sqrt(gx * gx + gy * gy)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const BucketOffset& a, const BucketOffset& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    const int ra = std::max(std::abs(a.dx), std::abs(a.dy));
    const int rb = std::max(std::abs(b.dx), std::abs(b.dy));
    if (ra != rb) return ra < rb;
    if (a.dy != b.dy) return a.dy < b.dy;
    return a.dx < b.dx;
  });
  return out;
}

/// Convex polygon whose edge k runs from vertex k to vertex k+1 and is labelled
/// with the seed (>= 0) or wall code (< 0) that generated it.
struct LabelledPolygon {
  std::vector<Vec2> v;
  std::vector<int> label;

  void clear() {
    v.clear();
    label.clear();
  }
  void push(const Vec2& p, int l) {
    v.push_back(p);
    label.push_back(l);
  }
};

LabelledPolygon domain_polygon(const DomainBox& d) {
  LabelledPolygon poly;
  poly.push({d.xmin, d.ymin}, Facet::wall_code(Wall::Bottom));
  poly.push({d.xmax, d.ymin}, Facet::wall_code(Wall::Right));
  poly.push({d.xmax, d.ymax}, Facet::wall_code(Wall::Top));
  poly.push({d.xmin, d.ymax}, Facet::wall_code(Wall::Left));
  return poly;
}

class CellBuilder {
 public:
  CellBuilder(std::span<const Vec2> positions, const BucketGrid& grid, double dr)
      : positions_(positions), grid_(grid), dr_(dr), offsets_(sorted_offsets(grid)) {}

  VoronoiCell build(int i, std::span<const int> warm) {
    const Vec2 xi = positions_[static_cast<std::size_t>(i)];
    poly_ = domain_polygon(grid_.domain);
    double radius = polygon_radius(xi);

    for (int j : warm) {
      if (j == i) continue;
      if (clip(xi, j)) radius = polygon_radius(xi);
    }

    const auto [bx0, by0] = grid_.locate(xi);
    for (const auto& off : offsets_) {
      if (radius < 0.5 * off.distance) break;
      const int bx = bx0 + off.dx;
      const int by = by0 + off.dy;
      if (bx < 0 || by < 0 || bx >= grid_.nx || by >= grid_.ny) continue;
      for (int j : grid_.bucket(bx, by)) {
        if (j == i) continue;
        if (!warm.empty() && std::binary_search(warm.begin(), warm.end(), j)) continue;
        const Vec2 d = positions_[static_cast<std::size_t>(j)] - xi;
        if (norm2(d) >= 4.0 * radius * radius) continue;
        if (clip(xi, j)) radius = polygon_radius(xi);
      }
    }
    return finish(i, xi, radius);
  }

 private:
  double polygon_radius(const Vec2& xi) const {
    double r2 = 0.0;
    for (const auto& p : poly_.v) r2 = std::max(r2, norm2(p - xi));
    return std::sqrt(r2);
  }

  /// Keeps the part of the polygon closer to xi than to seed j. Returns true if
  /// the polygon changed.
  bool clip(const Vec2& xi, int j) {
    const Vec2 a = positions_[static_cast<std::size_t>(j)] - xi;
    const double a2 = norm2(a);
    const double tol = 1e-13 * dr_ * std::sqrt(a2);
    const std::size_t n = poly_.v.size();
    side_.resize(n);
    bool any_out = false;
    for (std::size_t k = 0; k < n; ++k) {
      side_[k] = dot(a, poly_.v[k] - xi) - 0.5 * a2;
      any_out = any_out || side_[k] > tol;
    }
    if (!any_out) return false;

    next_.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t k1 = (k + 1) % n;
      const bool in0 = side_[k] <= tol;
      const bool in1 = side_[k1] <= tol;
      if (in0) next_.push(poly_.v[k], poly_.label[k]);
      if (in0 != in1) {
        const double t = std::clamp(side_[k] / (side_[k] - side_[k1]), 0.0, 1.0);
        const Vec2 p = poly_.v[k] + t * (poly_.v[k1] - poly_.v[k]);
        next_.push(p, in0 ? j : poly_.label[k]);
      }
    }
    std::swap(poly_, next_);
    return true;
  }

  VoronoiCell finish(int i, const Vec2& xi, double radius) const {
    VoronoiCell cell;
    cell.generator = i;
    cell.vertices = poly_.v;
    cell.radius = radius;

    const std::size_t n = poly_.v.size();
    double area2 = 0.0;
    Vec2 moment;
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 p = poly_.v[k] - xi;
      const Vec2 q = poly_.v[(k + 1) % n] - xi;
      const double c = cross(p, q);
      area2 += c;
      moment += (p + q) * c;
    }
    cell.volume = 0.5 * area2;
    cell.centroid = xi + moment / (3.0 * area2);

    const double min_length = kDegenerateFacetRatio * dr_;
    cell.facets.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2& p = poly_.v[k];
      const Vec2& q = poly_.v[(k + 1) % n];
      Facet f;
      f.neighbor = poly_.label[k];
      f.length = distance(p, q);
      if (f.length < min_length) continue;
      f.midpoint = 0.5 * (p + q);
      if (f.is_wall()) {
        f.normal = grid_.domain.outward_normal(f.wall());
        f.distance = 2.0 * grid_.domain.distance_to(f.wall(), xi);
      } else {
        const Vec2 d = positions_[static_cast<std::size_t>(f.neighbor)] - xi;
        f.distance = norm(d);
        f.normal = d / f.distance;
        cell.surface -= f.length * f.normal;
      }
      cell.facets.push_back(f);
    }
    return cell;
  }

  std::span<const Vec2> positions_;
  const BucketGrid& grid_;
  double dr_;
  std::vector<BucketOffset> offsets_;
  LabelledPolygon poly_;
  LabelledPolygon next_;
  std::vector<double> side_;
};

std::vector<int> seed_neighbors(const VoronoiCell& cell) {
  std::vector<int> out;
  out.reserve(cell.facets.size());
  for (const auto& f : cell.facets)
    if (!f.is_wall()) out.push_back(f.neighbor);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

VoronoiCell build_cell(int i, std::span<const Vec2> positions, const BucketGrid& grid, double dr,
                       std::span<const int> warm_neighbors) {
  if (i < 0 || static_cast<std::size_t>(i) >= positions.size())
    throw InvalidInput("cell index out of range");
  std::vector<int> warm(warm_neighbors.begin(), warm_neighbors.end());
  std::sort(warm.begin(), warm.end());
  warm.erase(std::unique(warm.begin(), warm.end()), warm.end());
  warm.erase(std::remove_if(warm.begin(), warm.end(),
                            [&](int j) {
                              return j < 0 || static_cast<std::size_t>(j) >= positions.size();
                            }),
             warm.end());
  CellBuilder builder(positions, grid, dr);
  return builder.build(i, warm);
}

VoronoiMesh build_mesh(std::span<const Vec2> positions, const DomainBox& domain, double dr,
                       const VoronoiMesh* previous) {
  VoronoiMesh mesh;
  mesh.domain = domain;
  mesh.dr = dr;
  mesh.seeds.assign(positions.begin(), positions.end());
  mesh.grid = build_bucket_grid(positions, domain, dr);

  const auto n = static_cast<std::ptrdiff_t>(positions.size());
  const bool warm = previous != nullptr && previous->neighbors.size() == positions.size();
  mesh.cells.resize(positions.size());
  mesh.neighbors.resize(positions.size());

#pragma omp parallel
  {
    CellBuilder builder(positions, mesh.grid, dr);
#pragma omp for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      std::span<const int> hint;
      if (warm) hint = previous->neighbors[iu];
      mesh.cells[iu] = builder.build(static_cast<int>(i), hint);
      mesh.neighbors[iu] = seed_neighbors(mesh.cells[iu]);
    }
  }
  return mesh;
}

Vec2 cell_volume_gradient(const VoronoiMesh& mesh, int i, int j) {
  if (i != j) {
    const Facet* f = mesh.find_facet(i, j);
    if (f == nullptr) return {};
    return -(f->length / f->distance) * (f->midpoint - mesh.seeds[static_cast<std::size_t>(j)]);
  }
  const auto& cell = mesh.cells[static_cast<std::size_t>(i)];
  Vec2 g = -cell.surface;
  for (const auto& f : cell.facets) {
    if (f.is_wall()) continue;
    g += (f.length / f.distance) * (f.midpoint - mesh.seeds[static_cast<std::size_t>(f.neighbor)]);
  }
  return g;
}

}  // namespace silva
