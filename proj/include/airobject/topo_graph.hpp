#pragma once

#include <cstdint>
#include <string>

#include "airobject/common.hpp"
#include "airobject/features.hpp"
#include "airobject/geom/delaunay.hpp"
#include "airobject/model_config.hpp"

namespace airobject {

struct FrameSource {
  std::string video_id;
  std::string object_id;
  std::int64_t frame_index = 0;
};

/// One object in one frame as a graph. Adjacency is a dense 0/1 matrix with
/// ones on the diagonal.
struct FrameGraph {
  PointMatrix positions_norm;  // N x 2 in [-1, 1]
  Matrix descriptors;          // N x D_p
  Matrix adjacency;            // N x N
  FrameSource source;

  Eigen::Index size() const { return positions_norm.rows(); }
};

inline constexpr double kDuplicateOffset = 1e-7;

/// (p - center) / half_extent per axis, clamped to [-1, 1].
PointMatrix normalize_positions(const PointMatrix& points, const BoundingBox& bbox);

/// Symmetric 0/1 matrix with unit diagonal and a 1 for every triangle edge.
Matrix adjacency_from_triangles(Eigen::Index n, const geom::Triangulation& tri);

/// Copy of `points` where every exact repeat of an earlier point is moved by
/// kDuplicateOffset in a direction derived from its index.
PointMatrix separate_duplicates(const PointMatrix& points);

/// Normalizes positions and builds the Delaunay adjacency on the normalized
/// coordinates. Fewer than three points, all-collinear points, or
/// config.fully_connected give a fully connected adjacency.
FrameGraph build_frame_graph(const FrameObservation& obs, const ModelConfig& config,
                             FrameSource source = {});

}  // namespace airobject
