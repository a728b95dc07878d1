#include "airobject/temporal_encoder.hpp"

#include <string>

namespace airobject {

TemporalParams TemporalParams::init(int D_o) {
  if (D_o < 1) throw ConfigError("temporal: D_o must be >= 1");
  return {Param("temporal.kernel", Matrix::Identity(D_o, D_o)), Param("temporal.bias", Matrix::Zero(1, D_o))};
}

StackedFeatures stack_sequence(const std::vector<FrameEncoding>& encodings) {
  if (encodings.empty()) throw DataError("stack_sequence: empty sequence");
  Eigen::Index rows = 0;
  const Eigen::Index cols = encodings[0].x_struct.cols();
  for (const auto& e : encodings) {
    if (e.x_struct.rows() < 1) throw DataError("stack_sequence: frame without nodes");
    if (e.x_struct.cols() != cols) throw DimensionError("stack_sequence: frames disagree on D_o");
    rows += e.x_struct.rows();
  }
  StackedFeatures out;
  out.matrix.resize(rows, cols);
  Eigen::Index r = 0;
  for (std::size_t f = 0; f < encodings.size(); ++f) {
    const auto& x = encodings[f].x_struct;
    out.matrix.middleRows(r, x.rows()) = x;
    out.frame_of_row.insert(out.frame_of_row.end(), static_cast<std::size_t>(x.rows()), static_cast<int>(f));
    r += x.rows();
  }
  return out;
}

Var temporal_conv(const Var& stacked, const TemporalParams& params, Tape& tape) {
  if (stacked.cols() != params.kernel.value.cols()) throw DimensionError("temporal_conv: width disagrees with kernel");
  return diff::affine(stacked, tape.parameter(params.kernel), tape.parameter(params.bias));
}

Matrix temporal_conv(const Matrix& stacked, const TemporalParams& params) {
  Tape tape(false);
  return temporal_conv(tape.constant(stacked), params, tape).value();
}

Var sequence_average_pool(const Var& y) {
  if (y.rows() < 1) throw DataError("sequence_average_pool: empty input");
  return diff::reduce_mean(y);
}

Vector sequence_average_pool(const Matrix& y) {
  if (y.rows() < 1) throw DataError("sequence_average_pool: empty input");
  return y.colwise().mean().transpose();
}

Var temporal_descriptor(Tape& tape, const std::vector<Var>& x_struct_frames, const TemporalParams& params) {
  if (x_struct_frames.empty()) throw DataError("temporal_descriptor: empty sequence");
  Var stacked = x_struct_frames.size() == 1 ? x_struct_frames[0] : diff::concat_rows(x_struct_frames);
  return diff::l2_normalize_rows(sequence_average_pool(temporal_conv(stacked, params, tape)));
}

Vector temporal_descriptor(const StackedFeatures& stacked, const TemporalParams& params) {
  Tape tape(false);
  return temporal_descriptor(tape, {tape.constant(stacked.matrix)}, params).value().row(0).transpose();
}

Vector airobject_descriptor(const std::vector<FrameGraph>& graphs, const EncoderParams& encoder,
                            const TemporalParams& temporal) {
  std::vector<FrameEncoding> encodings;
  encodings.reserve(graphs.size());
  for (const auto& g : graphs) encodings.push_back(encode_frame(g, encoder));
  return temporal_descriptor(stack_sequence(encodings), temporal);
}

Vector average_descriptor_baseline(const std::vector<Vector>& descs) {
  if (descs.empty()) throw DataError("average_descriptor_baseline: no descriptors");
  Vector mean = Vector::Zero(descs[0].size());
  for (const auto& d : descs) {
    if (d.size() != mean.size()) throw DimensionError("average_descriptor_baseline: widths differ");
    mean += d;
  }
  mean /= static_cast<Real>(descs.size());
  const Real norm = mean.norm();
  if (!(norm > kNormEpsilon)) throw NumericalError("average_descriptor_baseline: mean of descriptors is zero");
  return mean / norm;
}

StackedFeatures select_unique_features(const StackedFeatures& stacked, const std::vector<FrameEncoding>& encodings,
                                       double threshold, UniqueSelector selector) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("unique-feature threshold must be in (0, 1]");
  // Selector rows in stacked order, unit-normalized; zero rows stay zero.
  Matrix sel(stacked.matrix.rows(), stacked.matrix.cols());
  Eigen::Index r = 0;
  for (const auto& e : encodings) {
    const Matrix& m = selector == UniqueSelector::Location ? e.x_loc : e.x_content;
    if (r + m.rows() > sel.rows()) throw DimensionError("select_unique_features: encodings exceed stacked rows");
    sel.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  if (r != sel.rows()) throw DimensionError("select_unique_features: encodings do not cover stacked rows");
  std::vector<char> zero(static_cast<std::size_t>(sel.rows()), 0);
  for (Eigen::Index i = 0; i < sel.rows(); ++i) {
    const Real n = sel.row(i).norm();
    if (n > kNormEpsilon) {
      sel.row(i) /= n;
    } else {
      zero[static_cast<std::size_t>(i)] = 1;
    }
  }

  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < sel.rows(); ++i) {
    bool unique = true;
    for (Eigen::Index k : kept) {
      const bool zi = zero[static_cast<std::size_t>(i)];
      const bool zk = zero[static_cast<std::size_t>(k)];
      const bool similar = (zi || zk) ? (zi && zk) : sel.row(i).dot(sel.row(k)) >= threshold;
      if (similar) {
        unique = false;
        break;
      }
    }
    if (unique) kept.push_back(i);
  }

  StackedFeatures out;
  out.matrix.resize(static_cast<Eigen::Index>(kept.size()), stacked.matrix.cols());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    out.matrix.row(static_cast<Eigen::Index>(k)) = stacked.matrix.row(kept[k]);
    out.frame_of_row.push_back(stacked.frame_of_row[static_cast<std::size_t>(kept[k])]);
  }
  return out;
}

}  // namespace airobject
