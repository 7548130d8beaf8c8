#pragma once

// All-pairs Voronoi oracle: clip the domain rectangle by the bisector of every
// other seed, no cell list, no stopping rule.

#include <cmath>
#include <span>
#include <vector>

#include "silva/vec2.hpp"
#include "silva/voronoi_mesh.hpp"

namespace oracle {

using silva::Vec2;

struct Polygon {
  std::vector<Vec2> vertices;  // counter-clockwise
  std::vector<int> edge_label;  // edge k runs vertices[k] -> vertices[k+1]; seed index or wall code

  double area() const {
    double a = 0.0;
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      const auto& p = vertices[k];
      const auto& q = vertices[(k + 1) % vertices.size()];
      a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
  }
};

inline Polygon domain_polygon(const silva::DomainBox& d) {
  using silva::Facet;
  using silva::Wall;
  Polygon p;
  p.vertices = {{d.xmin, d.ymin}, {d.xmax, d.ymin}, {d.xmax, d.ymax}, {d.xmin, d.ymax}};
  p.edge_label = {Facet::wall_code(Wall::Bottom), Facet::wall_code(Wall::Right),
                  Facet::wall_code(Wall::Top), Facet::wall_code(Wall::Left)};
  return p;
}

/// Keeps the side of the bisector of (xi, xj) that contains xi.
inline Polygon clip(const Polygon& in, const Vec2& xi, const Vec2& xj, int label) {
  const Vec2 d = xj - xi;
  const Vec2 mid = 0.5 * (xi + xj);
  auto side = [&](const Vec2& p) { return silva::dot(p - mid, d); };
  Polygon out;
  const std::size_t n = in.vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& p = in.vertices[k];
    const Vec2& q = in.vertices[(k + 1) % n];
    const double sp = side(p), sq = side(q);
    const bool pin = sp <= 0.0, qin = sq <= 0.0;
    auto cut = [&] { return p + (sp / (sp - sq)) * (q - p); };
    if (pin) {
      out.vertices.push_back(p);
      out.edge_label.push_back(in.edge_label[k]);
      if (!qin) {
        out.vertices.push_back(cut());
        out.edge_label.push_back(label);
      }
    } else if (qin) {
      out.vertices.push_back(cut());
      out.edge_label.push_back(in.edge_label[k]);
    }
  }
  return out;
}

inline Polygon cell(std::span<const Vec2> seeds, const silva::DomainBox& domain, int i) {
  Polygon p = domain_polygon(domain);
  for (int j = 0; j < static_cast<int>(seeds.size()); ++j)
    if (j != i) p = clip(p, seeds[static_cast<std::size_t>(i)], seeds[static_cast<std::size_t>(j)], j);
  // drop repeated vertices left by cuts through existing corners
  Polygon clean;
  const std::size_t n = p.vertices.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& a = p.vertices[k];
    const Vec2& b = p.vertices[(k + 1) % n];
    if (silva::distance(a, b) > 1e-14) {
      clean.vertices.push_back(a);
      clean.edge_label.push_back(p.edge_label[k]);
    }
  }
  return clean;
}

inline double area(std::span<const Vec2> seeds, const silva::DomainBox& domain, int i) {
  return cell(seeds, domain, i).area();
}

}  // namespace oracle
