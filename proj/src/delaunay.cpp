#include "airobject/geom/delaunay.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <utility>

#include "airobject/geom/predicates.hpp"

namespace airobject::geom {

namespace {

constexpr int kInfinite = -1;

// Triangles are stored counter-clockwise. A ghost (u, v, kInfinite) sits on
// the outer side of hull edge v -> u of a real triangle.
using Tri = std::array<int, 3>;

bool strictly_between(const Point& p, const Point& u, const Point& v) {
  // Only called for p collinear with u and v.
  if (u.x() != v.x()) return std::min(u.x(), v.x()) < p.x() && p.x() < std::max(u.x(), v.x());
  return std::min(u.y(), v.y()) < p.y() && p.y() < std::max(u.y(), v.y());
}

bool in_conflict(const Tri& t, const Point& p, const std::vector<Point>& pts) {
  if (t[2] == kInfinite) {
    const Point& u = pts[static_cast<std::size_t>(t[0])];
    const Point& v = pts[static_cast<std::size_t>(t[1])];
    const int o = orient2d(u, v, p);
    return o > 0 || (o == 0 && strictly_between(p, u, v));
  }
  return incircle(pts[static_cast<std::size_t>(t[0])], pts[static_cast<std::size_t>(t[1])],
                  pts[static_cast<std::size_t>(t[2])], p) > 0;
}

Tri with_infinite_last(int a, int b, int c) {
  if (a == kInfinite) return {b, c, a};
  if (b == kInfinite) return {c, a, b};
  return {a, b, c};
}

}  // namespace

std::optional<Triangulation> delaunay(const PointMatrix& points) {
  const auto n = static_cast<int>(points.rows());
  if (n < 3) return std::nullopt;
  std::vector<Point> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = points.row(i).transpose();

  int second = -1;
  for (int i = 1; i < n && second < 0; ++i) {
    if (pts[static_cast<std::size_t>(i)] != pts[0]) second = i;
  }
  if (second < 0) return std::nullopt;
  int third = -1;
  for (int i = second + 1; i < n && third < 0; ++i) {
    if (orient2d(pts[0], pts[static_cast<std::size_t>(second)], pts[static_cast<std::size_t>(i)]) != 0) {
      third = i;
    }
  }
  if (third < 0) return std::nullopt;

  std::vector<Tri> tris;
  std::vector<char> alive;
  auto push = [&](const Tri& t) {
    tris.push_back(t);
    alive.push_back(1);
  };
  Tri first = orient2d(pts[0], pts[static_cast<std::size_t>(second)], pts[static_cast<std::size_t>(third)]) > 0
                  ? Tri{0, second, third}
                  : Tri{0, third, second};
  push(first);
  for (int e = 0; e < 3; ++e) push({first[static_cast<std::size_t>((e + 1) % 3)], first[static_cast<std::size_t>(e)], kInfinite});

  std::vector<std::size_t> bad;
  std::map<std::pair<int, int>, int> edges;
  for (int idx = 1; idx < n; ++idx) {
    if (idx == second || idx == third) continue;
    const Point& p = pts[static_cast<std::size_t>(idx)];
    bad.clear();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (alive[t] && in_conflict(tris[t], p, pts)) bad.push_back(t);
    }
    if (bad.empty()) continue;  // exact duplicate of an inserted point

    edges.clear();
    for (std::size_t t : bad) {
      for (int e = 0; e < 3; ++e) {
        edges[{tris[t][static_cast<std::size_t>(e)], tris[t][static_cast<std::size_t>((e + 1) % 3)]}] += 1;
      }
      alive[t] = 0;
    }
    for (const auto& [edge, count] : edges) {
      if (edges.count({edge.second, edge.first})) continue;  // interior to the cavity
      Tri t = with_infinite_last(edge.first, edge.second, idx);
      if (t[2] != kInfinite &&
          orient2d(pts[static_cast<std::size_t>(t[0])], pts[static_cast<std::size_t>(t[1])],
                   pts[static_cast<std::size_t>(t[2])]) <= 0) {
        throw std::logic_error("delaunay: cavity is not star-shaped");
      }
      push(t);
    }
  }

  Triangulation out;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    if (!alive[t] || tris[t][2] == kInfinite) continue;
    Tri sorted = tris[t];
    std::sort(sorted.begin(), sorted.end());
    out.triangles.push_back(sorted);
  }
  std::sort(out.triangles.begin(), out.triangles.end());
  return out;
}

}  // namespace airobject::geom
