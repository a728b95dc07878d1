#include "airobject/topo_graph.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace airobject {

PointMatrix normalize_positions(const PointMatrix& points, const BoundingBox& bbox) {
  const double half_w = 0.5 * (bbox[2] - bbox[0]);
  const double half_h = 0.5 * (bbox[3] - bbox[1]);
  if (!(half_w > 0.0) || !(half_h > 0.0)) throw DataError("degenerate bounding box (zero width or height)");
  const double cx = 0.5 * (bbox[0] + bbox[2]);
  const double cy = 0.5 * (bbox[1] + bbox[3]);
  PointMatrix out(points.rows(), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out(i, 0) = std::clamp((points(i, 0) - cx) / half_w, -1.0, 1.0);
    out(i, 1) = std::clamp((points(i, 1) - cy) / half_h, -1.0, 1.0);
  }
  return out;
}

Matrix adjacency_from_triangles(Eigen::Index n, const geom::Triangulation& tri) {
  Matrix a = Matrix::Identity(n, n);
  for (const auto& t : tri.triangles) {
    for (int v : t) {
      if (v < 0 || v >= n) {
        throw DataError("triangle index " + std::to_string(v) + " out of range for " + std::to_string(n) +
                        " points");
      }
    }
    for (int e = 0; e < 3; ++e) {
      const int i = t[static_cast<std::size_t>(e)];
      const int j = t[static_cast<std::size_t>((e + 1) % 3)];
      a(i, j) = 1.0;
      a(j, i) = 1.0;
    }
  }
  return a;
}

PointMatrix separate_duplicates(const PointMatrix& points) {
  constexpr double kGoldenAngle = 2.39996322972865332;
  PointMatrix out = points;
  for (Eigen::Index i = 1; i < out.rows(); ++i) {
    for (int attempt = 1;; ++attempt) {
      bool repeated = false;
      for (Eigen::Index j = 0; j < i && !repeated; ++j) repeated = out.row(j) == out.row(i);
      if (!repeated) break;
      const double angle = kGoldenAngle * static_cast<double>(i) * attempt;
      out(i, 0) = points(i, 0) + attempt * kDuplicateOffset * std::cos(angle);
      out(i, 1) = points(i, 1) + attempt * kDuplicateOffset * std::sin(angle);
    }
  }
  return out;
}

FrameGraph build_frame_graph(const FrameObservation& obs, const ModelConfig& config, FrameSource source) {
  FrameGraph g;
  g.positions_norm = normalize_positions(obs.positions, obs.bbox);
  g.descriptors = obs.descriptors;
  g.source = std::move(source);
  g.source.frame_index = obs.frame_index;
  const Eigen::Index n = g.size();
  std::optional<geom::Triangulation> tri;
  if (!config.fully_connected && n >= 3) tri = geom::delaunay(separate_duplicates(g.positions_norm));
  g.adjacency = tri ? adjacency_from_triangles(n, *tri) : Matrix::Ones(n, n);
  return g;
}

}  // namespace airobject
