#pragma once

#include <vector>

#include "airobject/graph_encoder.hpp"

namespace airobject {

/// Length-1, stride-1 convolution over the stacked node axis: kernel is
/// D_o x D_o (output x input channels), bias 1 x D_o.
struct TemporalParams {
  Param kernel, bias;

  /// Identity kernel, zero bias.
  static TemporalParams init(int D_o);
  std::vector<Param*> parameters() { return {&kernel, &bias}; }
  /// Single section "temporal".
  std::vector<diff::CheckpointSection> sections() { return {{"temporal", {&kernel, &bias}}}; }
};

/// x_struct rows of every frame, frame by frame. frame_of_row[r] is the
/// position in the input sequence of the frame row r came from.
struct StackedFeatures {
  Matrix matrix;
  std::vector<int> frame_of_row;
};

StackedFeatures stack_sequence(const std::vector<FrameEncoding>& encodings);

/// y_r = kernel * x_r + bias for every row.
Var temporal_conv(const Var& stacked, const TemporalParams& params, Tape& tape);
Matrix temporal_conv(const Matrix& stacked, const TemporalParams& params);

/// Column-wise mean.
Var sequence_average_pool(const Var& y);
Vector sequence_average_pool(const Matrix& y);

/// l2_normalize(SAP(temporal_conv(stack(frames)))) as a 1 x D_o.
Var temporal_descriptor(Tape& tape, const std::vector<Var>& x_struct_frames, const TemporalParams& params);

/// Descriptor of already-stacked structural features.
Vector temporal_descriptor(const StackedFeatures& stacked, const TemporalParams& params);

/// Encodes every graph with the frozen encoder, then temporal_descriptor().
Vector airobject_descriptor(const std::vector<FrameGraph>& graphs, const EncoderParams& encoder,
                            const TemporalParams& temporal);

/// l2_normalize(mean of descs).
Vector average_descriptor_baseline(const std::vector<Vector>& descs);

enum class UniqueSelector { Location, Content };

/// Greedy scan in row order: a row is kept iff the cosine similarity of its
/// selector feature (x_loc or x_content row) to every kept row's selector is
/// below `threshold`. An all-zero selector row counts as similar only to
/// other all-zero rows.
StackedFeatures select_unique_features(const StackedFeatures& stacked, const std::vector<FrameEncoding>& encodings,
                                       double threshold, UniqueSelector selector = UniqueSelector::Location);

}  // namespace airobject
