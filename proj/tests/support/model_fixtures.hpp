#pragma once

#include "airobject/graph_encoder.hpp"
#include "airobject/temporal_encoder.hpp"
#include "test_util.hpp"

namespace testutil {

inline airobject::ModelConfig tiny_model() {
  airobject::ModelConfig m;
  m.D_p = 8;
  m.D_m = 4;
  m.D_o = 24;
  m.mlp_hidden = 6;
  return m;
}

/// Random graph with Delaunay adjacency over n random positions.
inline airobject::FrameGraph random_graph(airobject::Rng& rng, int n, int dp) {
  airobject::FrameObservation obs;
  obs.positions.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    obs.positions(i, 0) = rng.uniform(0.0, 100.0);
    obs.positions(i, 1) = rng.uniform(0.0, 50.0);
  }
  obs.descriptors = random_matrix(rng, n, dp);
  for (int i = 0; i < n; ++i) obs.descriptors.row(i).normalize();
  obs.bbox << -1.0, -1.0, 101.0, 51.0;
  return airobject::build_frame_graph(obs, airobject::ModelConfig{});
}

inline airobject::TemporalParams random_temporal(airobject::Rng& rng, int d) {
  auto t = airobject::TemporalParams::init(d);
  t.kernel.value = random_matrix(rng, d, d, 1.0 / std::sqrt(static_cast<double>(d)));
  t.bias.value = random_matrix(rng, 1, d, 0.1);
  return t;
}

inline airobject::Matrix permute_rows(const airobject::Matrix& m, const std::vector<int>& perm) {
  airobject::Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(perm[i]);
  return out;
}

/// Graph with nodes reordered: new node i is old node perm[i].
inline airobject::FrameGraph permute_graph(const airobject::FrameGraph& g, const std::vector<int>& perm) {
  airobject::FrameGraph out = g;
  const auto n = static_cast<Eigen::Index>(perm.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.positions_norm.row(i) = g.positions_norm.row(perm[static_cast<std::size_t>(i)]);
    out.descriptors.row(i) = g.descriptors.row(perm[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j)
      out.adjacency(i, j) = g.adjacency(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return out;
}

inline std::vector<int> random_permutation(airobject::Rng& rng, int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  rng.shuffle(p);
  return p;
}

}  // namespace testutil
