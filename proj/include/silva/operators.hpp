#pragma once

#include <functional>
#include <span>
#include <vector>

#include "silva/vec2.hpp"
#include "silva/voronoi_mesh.hpp"

namespace silva {

// Point-wise discrete differential operators on a Voronoi mesh. Fields are
// plain spans indexed like mesh.seeds. Wall facets are skipped by the gradient
// and Laplacian operators, which is the homogeneous Neumann closure.

/// Strong gradient: -(1/|w_i|) sum_j |G_ij|/r_ij (f_i - f_j)(m_ij - x_i).
/// Exact for affine fields on interior cells.
Vec2 strong_gradient(const VoronoiMesh& mesh, std::span<const double> f, int i);

/// Weak gradient: (1/|w_i|) sum_j |G_ij|/r_ij (f_i - f_j)(m_ij - x_j).
/// Not point-wise consistent; use only in duality-based expressions.
Vec2 weak_gradient(const VoronoiMesh& mesh, std::span<const double> f, int i);

/// Trace of the weak gradient applied to a vector field.
double weak_divergence(const VoronoiMesh& mesh, std::span<const Vec2> v, int i);

/// Rate of change of |w_i| when seeds move with velocity v:
/// sum_j d|w_i|/dx_j . v_j = |w_i| weak_divergence - S_i . v_i.
double volume_rate(const VoronoiMesh& mesh, std::span<const Vec2> v, int i);

/// Finite-volume Laplacian -(1/|w_i|) sum_j |G_ij|/r_ij (f_i - f_j), walls skipped.
double laplacian(const VoronoiMesh& mesh, std::span<const double> f, int i);

/// Supplies the mirror value across a wall facet of cell i, or nothing when the
/// wall exerts no flux.
using MirrorFn = std::function<bool(int cell, Wall wall, Vec2& mirror_value)>;

/// Vector Laplacian; wall facets use the caller's mirror value at distance
/// 2*dist(x_i, wall).
Vec2 laplacian(const VoronoiMesh& mesh, std::span<const Vec2> v, int i,
               const MirrorFn& mirror = {});

/// Fraction of the positive Laplacian that the stabilizer removes along c_i - x_i.
inline constexpr double kStabilizerCoefficient = 3.0 / 4.0;  // (d+1)/(2d), d = 2

/// Strong gradient minus (d+1)/(2d) * max(<lap p>_i, 0) * (c_i - x_i).
Vec2 stabilized_gradient(const VoronoiMesh& mesh, std::span<const double> p, int i);

// Whole-field versions, evaluated in parallel over cells.
std::vector<Vec2> strong_gradient_field(const VoronoiMesh& mesh, std::span<const double> f);
std::vector<Vec2> stabilized_gradient_field(const VoronoiMesh& mesh, std::span<const double> p);
std::vector<double> weak_divergence_field(const VoronoiMesh& mesh, std::span<const Vec2> v);
std::vector<double> volume_rate_field(const VoronoiMesh& mesh, std::span<const Vec2> v);
std::vector<double> laplacian_field(const VoronoiMesh& mesh, std::span<const double> f);

}  // namespace silva
