#pragma once

#include <vector>

#include "airobject/common.hpp"
#include "airobject/diff/checkpoint.hpp"
#include "airobject/diff/ops.hpp"
#include "airobject/model_config.hpp"
#include "airobject/rng.hpp"
#include "airobject/topo_graph.hpp"

namespace airobject {

using Param = diff::Parameter<Real>;
using Var = diff::Var<Real>;
using Tape = diff::Tape<Real>;

/// 2 -> hidden -> D_m with ReLU in between and biases on both layers.
struct NodeMlpParams {
  Param w1, b1, w2, b2;
};

/// One GAT layer. Per head k: weight[k] is out x in, attention[k] is 2 x out
/// with row 0 applied to the receiving node and row 1 to the neighbour.
struct GatParams {
  std::vector<Param> weight;
  std::vector<Param> attention;
};

/// relu(W2 relu(W1 h)), no biases. w1: D_o x D_g, w2: D_o x D_o.
struct SparsityHeadParams {
  Param w1, w2;
};

/// Affine D_o -> D_o used by the single-frame descriptor.
struct SlpParams {
  Param w, b;
};

struct EncoderParams {
  ModelConfig config;
  NodeMlpParams node_mlp;
  GatParams gat1, gat2;
  SparsityHeadParams loc_head, content_head;
  SlpParams slp;

  /// Glorot-uniform weights, zero biases.
  static EncoderParams init(const ModelConfig& config, Rng& rng);

  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;
  /// "node_mlp", "gat1", "gat2", "loc_head", "content_head", "slp".
  std::vector<diff::CheckpointSection> sections();
};

/// Plain-matrix encoder outputs for one frame.
struct FrameEncoding {
  Matrix x_loc;      // N x D_o
  Matrix x_content;  // N x D_o
  Matrix x_struct;   // N x D_o, x_loc .* x_content
};

/// Tape handles for the same quantities, for training.
struct FrameEncodingVars {
  Var x_loc, x_content, x_struct;
};

enum class GatActivation { Relu, Identity };

/// Row i = [d_i, MLP(p_i)].
Var encode_nodes(Tape& tape, const FrameGraph& graph, const EncoderParams& params);

/// Head outputs are averaged before the activation. When `attention` is not
/// null it receives each head's N x N attention matrix.
Var gat_layer(Tape& tape, const Var& h, const Matrix& adjacency, const GatParams& layer, double leaky_slope,
              GatActivation activation, std::vector<Matrix>* attention = nullptr);

Var sparsity_head(const Var& h, const SparsityHeadParams& head, Tape& tape);

FrameEncodingVars encode_frame(Tape& tape, const FrameGraph& graph, const EncoderParams& params);

/// l2_normalize(slp(sum_i x_struct_i)) as a 1 x D_o.
Var single_frame_descriptor(Tape& tape, const Var& x_struct, const EncoderParams& params);

/// Inference-mode conveniences.
FrameEncoding encode_frame(const FrameGraph& graph, const EncoderParams& params);
Vector single_frame_descriptor(const FrameEncoding& enc, const EncoderParams& params);

}  // namespace airobject
