#pragma once

#include <array>
#include <optional>
#include <vector>

#include "airobject/common.hpp"

namespace airobject::geom {

/// Triangles as ascending index triples into the input point list, sorted
/// lexicographically.
struct Triangulation {
  std::vector<std::array<int, 3>> triangles;
};

/// Incremental Bowyer-Watson Delaunay triangulation.
///
/// The exterior is represented by a single symbolic vertex at infinity, so
/// the result always covers the convex hull exactly. Points are inserted in
/// index order using exact orientation/in-circle predicates; a point lying on
/// a circumcircle does not conflict, which keeps the configuration built
/// from lower-index points when four or more are cocircular. Exact duplicate
/// points are left out of the triangulation.
///
/// Returns std::nullopt when fewer than three points are given or every point
/// is collinear.
std::optional<Triangulation> delaunay(const PointMatrix& points);

}  // namespace airobject::geom
