#include <gtest/gtest.h>

#include "model_fixtures.hpp"

using namespace airobject;
using namespace testutil;

namespace {

// Literal 1-D convolution over the node axis: input channels D, output
// channels D, kernel length 1, stride 1, no padding.
Matrix conv1d_reference(const Matrix& x, const Matrix& kernel, const Matrix& bias) {
  const Eigen::Index len = x.rows();
  const Eigen::Index cin = x.cols();
  const Eigen::Index cout = kernel.rows();
  const Eigen::Index klen = 1;
  const Eigen::Index out_len = (len - klen) / 1 + 1;
  Matrix y(out_len, cout);
  for (Eigen::Index pos = 0; pos < out_len; ++pos) {
    for (Eigen::Index o = 0; o < cout; ++o) {
      double acc = bias(0, o);
      for (Eigen::Index k = 0; k < klen; ++k)
        for (Eigen::Index c = 0; c < cin; ++c) acc += kernel(o, c) * x(pos + k, c);
      y(pos, o) = acc;
    }
  }
  return y;
}

FrameEncoding encoding_with_rows(const Matrix& x_struct) {
  return {x_struct, x_struct, x_struct};
}

}  // namespace

TEST(StackSequence, CountsAndOrder) {
  Rng rng(1);
  const Matrix a = random_matrix(rng, 3, 4);
  const Matrix b = random_matrix(rng, 5, 4);
  const StackedFeatures s = stack_sequence({encoding_with_rows(a), encoding_with_rows(b)});
  ASSERT_EQ(s.matrix.rows(), 8);
  EXPECT_EQ(s.matrix.topRows(3), a);
  EXPECT_EQ(s.matrix.bottomRows(5), b);
  EXPECT_EQ(s.frame_of_row, (std::vector<int>{0, 0, 0, 1, 1, 1, 1, 1}));
}

TEST(StackSequence, SingleFrameIsIdentity) {
  Rng rng(2);
  const Matrix a = random_matrix(rng, 4, 3);
  EXPECT_EQ(stack_sequence({encoding_with_rows(a)}).matrix, a);
}

TEST(StackSequence, EmptyThrows) { EXPECT_THROW(stack_sequence({}), DataError); }

TEST(TemporalConv, IdentityKernelIsIdentity) {
  Rng rng(3);
  const TemporalParams t = TemporalParams::init(6);
  const Matrix x = random_matrix(rng, 5, 6);
  EXPECT_EQ(temporal_conv(x, t), x);
}

TEST(TemporalConv, SingleRowAffine) {
  Rng rng(4);
  const TemporalParams t = random_temporal(rng, 5);
  const Matrix x = random_matrix(rng, 1, 5);
  const Matrix expected = (t.kernel.value * x.transpose()).transpose() + t.bias.value;
  EXPECT_LE((temporal_conv(x, t) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TemporalConv, MatchesLiteralConvolution) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng.index(20));
    const TemporalParams t = random_temporal(rng, d);
    const Matrix x = random_matrix(rng, 1 + static_cast<Eigen::Index>(rng.index(30)), d);
    EXPECT_LT((temporal_conv(x, t) - conv1d_reference(x, t.kernel.value, t.bias.value)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SequenceAveragePool, Basics) {
  Rng rng(6);
  const Matrix v = random_matrix(rng, 1, 4);
  EXPECT_EQ(sequence_average_pool(v), Vector(v.transpose()));
  Matrix pm(2, 4);
  pm << v, -v;
  EXPECT_LE(sequence_average_pool(pm).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((sequence_average_pool(v.replicate(7, 1)) - Vector(v.transpose())).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(sequence_average_pool(Matrix(0, 4)), DataError);
}

TEST(AirObjectDescriptor, UnitNormAndFrameOrderInvariant) {
  Rng rng(7);
  const ModelConfig m = tiny_model();
  const EncoderParams enc = EncoderParams::init(m, rng);
  const TemporalParams tmp = random_temporal(rng, m.D_o);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<FrameGraph> graphs;
    for (int f = 0; f < 4; ++f) graphs.push_back(random_graph(rng, 4 + static_cast<int>(rng.index(8)), m.D_p));
    const Vector a = airobject_descriptor(graphs, enc, tmp);
    EXPECT_NEAR(a.norm(), 1.0, 1e-6);
    std::vector<FrameGraph> shuffled = graphs;
    rng.shuffle(shuffled);
    EXPECT_LE((airobject_descriptor(shuffled, enc, tmp) - a).cwiseAbs().maxCoeff(), 1e-9);
    std::vector<FrameGraph> doubled = graphs;
    doubled.insert(doubled.end(), graphs.begin(), graphs.end());
    EXPECT_LE((airobject_descriptor(doubled, enc, tmp) - a).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(AirObjectDescriptor, SingleFrameEqualsDirectConstruction) {
  Rng rng(8);
  const ModelConfig m = tiny_model();
  const EncoderParams enc = EncoderParams::init(m, rng);
  const TemporalParams tmp = random_temporal(rng, m.D_o);
  const FrameGraph g = random_graph(rng, 6, m.D_p);
  const Matrix xs = encode_frame(g, enc).x_struct;
  Vector direct = ((xs * tmp.kernel.value.transpose()).rowwise() + tmp.bias.value.row(0)).colwise().mean().transpose();
  direct.normalize();
  EXPECT_LE((airobject_descriptor({g}, enc, tmp) - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AirObjectDescriptor, SingleNodeSingleFrameIsNormalizedAffine) {
  Rng rng(9);
  const TemporalParams tmp = random_temporal(rng, 6);
  StackedFeatures s;
  s.matrix = random_matrix(rng, 1, 6).cwiseAbs();
  s.frame_of_row = {0};
  Vector expected = tmp.kernel.value * s.matrix.row(0).transpose() + tmp.bias.value.row(0).transpose();
  expected.normalize();
  EXPECT_LE((temporal_descriptor(s, tmp) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AverageBaseline, Cases) {
  Vector e1 = Vector::Zero(3), e2 = Vector::Zero(3);
  e1[0] = 1.0;
  e2[1] = 1.0;
  EXPECT_EQ(average_descriptor_baseline({e1, e1, e1}), e1);
  const Vector m = average_descriptor_baseline({e1, e2});
  EXPECT_NEAR(m[0], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(m[1], 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(m[2], 0.0);
  EXPECT_THROW(average_descriptor_baseline({e1, Vector(-e1)}), NumericalError);
}

TEST(UniqueFeatures, IdenticalRowsKeepOne) {
  Rng rng(10);
  const Matrix row = random_matrix(rng, 1, 5).cwiseAbs();
  const FrameEncoding e = encoding_with_rows(row.replicate(6, 1));
  const StackedFeatures s = stack_sequence({e});
  EXPECT_EQ(select_unique_features(s, {e}, 0.9).matrix.rows(), 1);
}

TEST(UniqueFeatures, ThresholdOneKeepsDistinctRows) {
  Rng rng(11);
  const FrameEncoding e = encoding_with_rows(random_matrix(rng, 8, 5));
  const StackedFeatures s = stack_sequence({e});
  EXPECT_EQ(select_unique_features(s, {e}, 1.0).matrix.rows(), 8);
}

TEST(UniqueFeatures, NearDuplicateMatchesBruteForce) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x = random_matrix(rng, 3, 6).cwiseAbs();
    x.row(2) = x.row(0) + 1e-3 * random_matrix(rng, 1, 6);
    FrameEncoding e{x, random_matrix(rng, 3, 6), x};
    const StackedFeatures s = stack_sequence({e});
    // Brute force: keep i iff cos(i, k) < t against all kept k (greedy order).
    std::vector<int> kept;
    for (int i = 0; i < 3; ++i) {
      bool ok = true;
      for (int k : kept) {
        const double c = x.row(i).dot(x.row(k)) / (x.row(i).norm() * x.row(k).norm());
        if (c >= 0.9) ok = false;
      }
      if (ok) kept.push_back(i);
    }
    const StackedFeatures u = select_unique_features(s, {e}, 0.9, UniqueSelector::Location);
    ASSERT_EQ(u.matrix.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) EXPECT_EQ(u.matrix.row(static_cast<Eigen::Index>(k)), x.row(kept[k]));
    EXPECT_NE(std::find(kept.begin(), kept.end(), 0), kept.end());
    EXPECT_EQ(std::find(kept.begin(), kept.end(), 2), kept.end());
  }
}

TEST(UniqueFeatures, SelectorChoosesTensor) {
  // Location rows identical, content rows distinct: only the selector differs.
  Rng rng(13);
  const Matrix content = random_matrix(rng, 4, 5);
  const Matrix loc = random_matrix(rng, 1, 5).cwiseAbs().replicate(4, 1);
  FrameEncoding e{loc, content, loc.cwiseProduct(content)};
  const StackedFeatures s = stack_sequence({e});
  EXPECT_EQ(select_unique_features(s, {e}, 0.9, UniqueSelector::Location).matrix.rows(), 1);
  EXPECT_EQ(select_unique_features(s, {e}, 0.999, UniqueSelector::Content).matrix.rows(), 4);
}
