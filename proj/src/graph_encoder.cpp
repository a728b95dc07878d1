#include "airobject/graph_encoder.hpp"

#include <cmath>
#include <string>

namespace airobject {

namespace {

Param glorot(const std::string& name, Eigen::Index out, Eigen::Index in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Matrix w(out, in);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
  return Param(name, std::move(w));
}

Param zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return Param(name, Matrix::Zero(rows, cols));
}

GatParams init_gat(const std::string& name, int heads, int in, int out, Rng& rng) {
  GatParams g;
  for (int k = 0; k < heads; ++k) {
    g.weight.push_back(glorot(name + ".weight" + std::to_string(k), out, in, rng));
    g.attention.push_back(glorot(name + ".attention" + std::to_string(k), 2, out, rng));
  }
  return g;
}

template <typename Self, typename Ptr>
std::vector<Ptr> collect(Self& p) {
  std::vector<Ptr> out{&p.node_mlp.w1, &p.node_mlp.b1, &p.node_mlp.w2, &p.node_mlp.b2};
  for (auto* gat : {&p.gat1, &p.gat2}) {
    for (std::size_t k = 0; k < gat->weight.size(); ++k) {
      out.push_back(&gat->weight[k]);
      out.push_back(&gat->attention[k]);
    }
  }
  for (auto* head : {&p.loc_head, &p.content_head}) {
    out.push_back(&head->w1);
    out.push_back(&head->w2);
  }
  out.push_back(&p.slp.w);
  out.push_back(&p.slp.b);
  return out;
}

}  // namespace

EncoderParams EncoderParams::init(const ModelConfig& config, Rng& rng) {
  validate(config);
  EncoderParams p;
  p.config = config;
  const int dn = config.D_n();
  const int dg = config.gat_width();
  const int dout = config.D_o;
  p.node_mlp = {glorot("node_mlp.w1", config.mlp_hidden, 2, rng), zeros("node_mlp.b1", 1, config.mlp_hidden),
                glorot("node_mlp.w2", config.D_m, config.mlp_hidden, rng), zeros("node_mlp.b2", 1, config.D_m)};
  p.gat1 = init_gat("gat1", config.gat_heads, dn, dg, rng);
  p.gat2 = init_gat("gat2", config.gat_heads, dg, dg, rng);
  p.loc_head = {glorot("loc_head.w1", dout, dg, rng), glorot("loc_head.w2", dout, dout, rng)};
  p.content_head = {glorot("content_head.w1", dout, dg, rng), glorot("content_head.w2", dout, dout, rng)};
  p.slp = {glorot("slp.w", dout, dout, rng), zeros("slp.b", 1, dout)};
  return p;
}

std::vector<Param*> EncoderParams::parameters() { return collect<EncoderParams, Param*>(*this); }

std::vector<const Param*> EncoderParams::parameters() const {
  return collect<const EncoderParams, const Param*>(*this);
}

std::vector<diff::CheckpointSection> EncoderParams::sections() {
  std::vector<diff::CheckpointSection> s;
  s.push_back({"node_mlp", {&node_mlp.w1, &node_mlp.b1, &node_mlp.w2, &node_mlp.b2}});
  for (auto [name, gat] : {std::pair{"gat1", &gat1}, std::pair{"gat2", &gat2}}) {
    diff::CheckpointSection sec{name, {}};
    for (std::size_t k = 0; k < gat->weight.size(); ++k) {
      sec.tensors.push_back(&gat->weight[k]);
      sec.tensors.push_back(&gat->attention[k]);
    }
    s.push_back(std::move(sec));
  }
  s.push_back({"loc_head", {&loc_head.w1, &loc_head.w2}});
  s.push_back({"content_head", {&content_head.w1, &content_head.w2}});
  s.push_back({"slp", {&slp.w, &slp.b}});
  return s;
}

Var encode_nodes(Tape& tape, const FrameGraph& graph, const EncoderParams& params) {
  const auto& cfg = params.config;
  if (graph.descriptors.cols() != cfg.D_p) {
    throw DimensionError("encode_nodes: descriptor width " + std::to_string(graph.descriptors.cols()) +
                         " but D_p = " + std::to_string(cfg.D_p));
  }
  if (graph.positions_norm.rows() != graph.descriptors.rows()) {
    throw DimensionError("encode_nodes: position and descriptor counts differ");
  }
  const auto& m = params.node_mlp;
  Var p = tape.constant(graph.positions_norm.cast<Real>());
  Var hidden = diff::relu(diff::affine(p, tape.parameter(m.w1), tape.parameter(m.b1)));
  Var embed = diff::affine(hidden, tape.parameter(m.w2), tape.parameter(m.b2));
  return diff::concat_columns(tape.constant(graph.descriptors), embed);
}

Var gat_layer(Tape& tape, const Var& h, const Matrix& adjacency, const GatParams& layer, double leaky_slope,
              GatActivation activation, std::vector<Matrix>* attention) {
  if (layer.weight.empty() || layer.weight.size() != layer.attention.size()) {
    throw DimensionError("gat_layer: malformed layer parameters");
  }
  if (adjacency.rows() != h.rows() || adjacency.cols() != h.rows()) {
    throw DimensionError("gat_layer: adjacency must be N x N");
  }
  std::vector<Var> heads;
  for (std::size_t k = 0; k < layer.weight.size(); ++k) {
    Var wh = diff::linear(h, tape.parameter(layer.weight[k]));
    Var scores = diff::linear(wh, tape.parameter(layer.attention[k]));  // N x 2
    Var e = diff::leaky_relu(diff::outer_sum(diff::column(scores, 0), diff::column(scores, 1)), leaky_slope);
    Var alpha = diff::masked_softmax(e, adjacency);
    if (attention) attention->push_back(alpha.value());
    heads.push_back(diff::matmul(alpha, wh));
  }
  Var out = heads[0];
  for (std::size_t k = 1; k < heads.size(); ++k) out = out + heads[k];
  if (heads.size() > 1) out = diff::scale(out, 1.0 / static_cast<Real>(heads.size()));
  return activation == GatActivation::Relu ? diff::relu(out) : out;
}

Var sparsity_head(const Var& h, const SparsityHeadParams& head, Tape& tape) {
  Var hidden = diff::relu(diff::linear(h, tape.parameter(head.w1)));
  return diff::relu(diff::linear(hidden, tape.parameter(head.w2)));
}

FrameEncodingVars encode_frame(Tape& tape, const FrameGraph& graph, const EncoderParams& params) {
  const auto& cfg = params.config;
  Var h = encode_nodes(tape, graph, params);
  h = gat_layer(tape, h, graph.adjacency, params.gat1, cfg.leaky_slope, GatActivation::Relu);
  h = gat_layer(tape, h, graph.adjacency, params.gat2, cfg.leaky_slope, GatActivation::Identity);
  Var loc = sparsity_head(h, params.loc_head, tape);
  Var content = sparsity_head(h, params.content_head, tape);
  return {loc, content, diff::elementwise_mul(loc, content)};
}

Var single_frame_descriptor(Tape& tape, const Var& x_struct, const EncoderParams& params) {
  Var pooled = diff::reduce_sum(x_struct);
  return diff::l2_normalize_rows(diff::affine(pooled, tape.parameter(params.slp.w), tape.parameter(params.slp.b)));
}

FrameEncoding encode_frame(const FrameGraph& graph, const EncoderParams& params) {
  Tape tape(false);
  FrameEncodingVars v = encode_frame(tape, graph, params);
  return {v.x_loc.value(), v.x_content.value(), v.x_struct.value()};
}

Vector single_frame_descriptor(const FrameEncoding& enc, const EncoderParams& params) {
  Tape tape(false);
  return single_frame_descriptor(tape, tape.constant(enc.x_struct), params).value().row(0).transpose();
}

}  // namespace airobject
