#include "airobject/training.hpp"

#include <cmath>
#include <set>
#include <string>

#include "airobject/diff/adam.hpp"

namespace airobject {

namespace {

std::vector<std::vector<FrameGraph>> build_graphs(const TrackSet& tracks, const ModelConfig& model) {
  std::vector<std::vector<FrameGraph>> graphs;
  graphs.reserve(tracks.tracks.size());
  for (const auto& t : tracks.tracks) {
    std::vector<FrameGraph> g;
    for (const auto& obs : t.observations) g.push_back(build_frame_graph(obs, model, {t.video_id, t.object_id}));
    graphs.push_back(std::move(g));
  }
  return graphs;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count, int batch_size, Rng& rng) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < count; i += static_cast<std::size_t>(batch_size)) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(count, i + static_cast<std::size_t>(batch_size))));
  }
  return batches;
}

int distinct(const std::vector<std::string>& ids) { return static_cast<int>(std::set<std::string>(ids.begin(), ids.end()).size()); }

double mean_positive_cosine(const Var& descriptors, const PairBatch& pairs) {
  if (pairs.positives.empty()) return 0.0;
  const Matrix& d = descriptors.value();
  double s = 0.0;
  for (const auto& [i, j] : pairs.positives) s += d.row(i).dot(d.row(j));
  return s / static_cast<double>(pairs.positives.size());
}

// Rows of x_loc with non-zero norm; dead nodes carry no gradient through the
// ReLU and cannot be normalized.
std::vector<Eigen::Index> live_rows(const Matrix& x) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (x.row(i).norm() > kNormEpsilon) rows.push_back(i);
  return rows;
}

Var mean_of(Tape& tape, const std::vector<Var>& terms) {
  if (terms.empty()) return tape.constant(Matrix::Zero(1, 1));
  Var s = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) s = s + terms[i];
  return diff::scale(s, 1.0 / static_cast<Real>(terms.size()));
}

struct FrameLosses {
  std::vector<Var> sparse, dense;
};

void add_frame_losses(const FrameEncodingVars& enc, double delta, FrameLosses& out) {
  const std::vector<Eigen::Index> rows = live_rows(enc.x_loc.value());
  if (rows.empty()) return;
  Var live = rows.size() == static_cast<std::size_t>(enc.x_loc.rows()) ? enc.x_loc : diff::select_rows(enc.x_loc, rows);
  out.sparse.push_back(sparse_location_loss(live));
  out.dense.push_back(dense_feature_loss(live, delta));
}

void finish_epoch(EpochStats& s) {
  if (s.batches == 0) return;
  const double n = s.batches;
  s.L_s /= n;
  s.L_d /= n;
  s.L_m /= n;
  s.total /= n;
  s.positive_cosine /= n;
}

std::string where(int stage, int epoch, int batch) {
  return "stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) + " batch " + std::to_string(batch) +
         ": ";
}

}  // namespace

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("train config: " + what); };
  if (c.batch_size < 2) fail("batch_size must be >= 2");
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) fail("lr must be finite and >= 0");
  if (c.s_l_max < 1) fail("s_l_max must be >= 1");
  if (!(c.delta > 0.0)) fail("delta must be > 0");
  if (!(c.lambda_margin > 0.0 && c.lambda_margin < 1.0)) fail("lambda_margin must be in (0, 1)");
  if (c.w_s < 0.0 || c.w_d < 0.0 || c.w_m < 0.0) fail("loss weights must be >= 0");
  if (c.epochs < 0 || c.stage2_epochs < 0) fail("epochs must be >= 0");
}

std::vector<EpochStats> train_stage1(const TrackSet& tracks, EncoderParams& params, const TrainConfig& config,
                                     const EpochCallback& on_epoch) {
  validate(config);
  {
    std::set<std::string> ids;
    for (const auto& t : tracks.tracks) ids.insert(t.object_id);
    if (ids.size() < 2) throw DataError("train_stage1: dataset needs at least two identities");
  }
  const auto graphs = build_graphs(tracks, params.config);
  const std::vector<Param*> trainable = params.parameters();
  diff::AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  diff::Adam<Real> adam(adam_cfg);
  Rng rng = Rng(config.seed).fork(1);

  std::vector<EpochStats> history;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    const auto batches = make_batches(tracks.tracks.size(), config.batch_size, rng);
    int batch_no = 0;
    for (const auto& batch : batches) {
      ++batch_no;
      std::vector<std::pair<std::size_t, std::size_t>> frames;  // (track, frame)
      std::vector<std::string> ids;
      for (std::size_t ti : batch) {
        const std::size_t len = graphs[ti].size();
        const std::size_t f = rng.index(len);
        frames.emplace_back(ti, f);
        ids.push_back(tracks.tracks[ti].object_id);
        if (len >= 2) {
          frames.emplace_back(ti, f + 1 < len ? f + 1 : f - 1);
          ids.push_back(tracks.tracks[ti].object_id);
        }
      }
      if (distinct(ids) < 2) continue;

      try {
        for (auto* p : trainable) p->zero_grad();
        Tape tape;
        FrameLosses fl;
        std::vector<Var> descs;
        for (const auto& [ti, f] : frames) {
          FrameEncodingVars enc = encode_frame(tape, graphs[ti][f], params);
          add_frame_losses(enc, config.delta, fl);
          descs.push_back(single_frame_descriptor(tape, enc.x_struct, params));
        }
        const PairBatch pairs = sample_pairs(ids);
        Var d = diff::concat_rows(descs);
        Var ls = mean_of(tape, fl.sparse);
        Var ld = mean_of(tape, fl.dense);
        Var lm = matching_loss(d, pairs, config.lambda_margin);
        Var total = config.w_s * ls + config.w_d * ld + config.w_m * lm;
        tape.backward(total);
        adam.step(trainable);

        stats.L_s += ls.scalar();
        stats.L_d += ld.scalar();
        stats.L_m += lm.scalar();
        stats.total += total.scalar();
        stats.positive_cosine += mean_positive_cosine(d, pairs);
        ++stats.batches;
      } catch (const NumericalError& e) {
        throw NumericalError(where(1, epoch, batch_no) + e.what());
      }
    }
    if (stats.batches == 0) throw DataError("train_stage1: no batch has two identities; dataset too small");
    finish_epoch(stats);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

std::vector<EpochStats> train_stage2(const TrackSet& tracks, const EncoderParams& encoder, TemporalParams& temporal,
                                     const TrainConfig& config, const EpochCallback& on_epoch) {
  validate(config);
  for (const auto& t : tracks.tracks) {
    if (t.observations.size() < 2) {
      throw DataError("train_stage2: track (" + t.video_id + ", " + t.object_id + ") has fewer than 2 frames");
    }
  }
  {
    std::set<std::string> ids;
    for (const auto& t : tracks.tracks) ids.insert(t.object_id);
    if (ids.size() < 2) throw DataError("train_stage2: dataset needs at least two identities");
  }
  if (temporal.kernel.value.rows() != encoder.config.D_o) throw DimensionError("train_stage2: temporal width != D_o");

  // Frozen encoder: structural features once, as constants.
  const auto graphs = build_graphs(tracks, encoder.config);
  std::vector<std::vector<Matrix>> x_struct(graphs.size());
  for (std::size_t t = 0; t < graphs.size(); ++t)
    for (const auto& g : graphs[t]) x_struct[t].push_back(encode_frame(g, encoder).x_struct);

  const std::vector<Param*> trainable = temporal.parameters();
  diff::AdamConfig adam_cfg;
  adam_cfg.lr = config.lr;
  diff::Adam<Real> adam(adam_cfg);
  Rng rng = Rng(config.seed).fork(2);
  const int epochs = config.stage2_epochs > 0 ? config.stage2_epochs : config.epochs;

  std::vector<EpochStats> history;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    const auto batches = make_batches(tracks.tracks.size(), config.batch_size, rng);
    int batch_no = 0;
    for (const auto& batch : batches) {
      ++batch_no;
      std::vector<std::string> ids;
      for (std::size_t ti : batch) {
        ids.push_back(tracks.tracks[ti].object_id);
        ids.push_back(tracks.tracks[ti].object_id);
      }
      if (distinct(ids) < 2) continue;
      try {
        for (auto* p : trainable) p->zero_grad();
        Tape tape;
        std::vector<Var> descs;
        for (std::size_t ti : batch) {
          const std::size_t len = x_struct[ti].size();
          const std::size_t q = static_cast<std::size_t>(std::ceil(0.5 * static_cast<double>(len)));
          for (auto [begin, end] : {std::pair{std::size_t{0}, q}, std::pair{q, len}}) {
            const std::size_t half = end - begin;
            const std::size_t cap = std::min(half, static_cast<std::size_t>(config.s_l_max));
            const std::size_t sl = 1 + rng.index(cap);
            const std::size_t start = begin + rng.index(half - sl + 1);
            std::vector<Var> seq;
            for (std::size_t f = start; f < start + sl; ++f) seq.push_back(tape.constant(x_struct[ti][f]));
            descs.push_back(temporal_descriptor(tape, seq, temporal));
          }
        }
        const PairBatch pairs = sample_pairs(ids);
        Var d = diff::concat_rows(descs);
        Var lm = matching_loss(d, pairs, config.lambda_margin);
        tape.backward(lm);
        adam.step(trainable);
        stats.L_m += lm.scalar();
        stats.total += lm.scalar();
        stats.positive_cosine += mean_positive_cosine(d, pairs);
        ++stats.batches;
      } catch (const NumericalError& e) {
        throw NumericalError(where(2, epoch, batch_no) + e.what());
      }
    }
    if (stats.batches == 0) throw DataError("train_stage2: no batch has two identities; dataset too small");
    finish_epoch(stats);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

CompositeCheckResult check_composite_gradient(std::uint64_t seed, bool corrupt_adjoints, double eps,
                                              double min_kink_margin) {
  ModelConfig model;
  model.D_p = 6;
  model.D_m = 3;
  model.D_o = 10;
  model.mlp_hidden = 4;

  SynthConfig synth;
  synth.num_objects = 2;
  synth.videos = 1;
  synth.objects_per_video = 2;
  synth.frames_per_track = 2;
  synth.keypoints_min = 5;
  synth.keypoints_max = 5;
  synth.descriptor_dim = model.D_p;
  synth.dropout_rate = 0.0;
  synth.spurious_rate = 0.0;

  const int kMaxAttempts = 200;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    synth.seed = s;
    const TrackSet tracks = generate_synthetic(synth);
    Rng rng(Rng::splitmix64(s));
    EncoderParams enc = EncoderParams::init(model, rng);
    TemporalParams tmp = TemporalParams::init(model.D_o);
    // Perturb away from the identity so the kernel is a generic matrix.
    for (Eigen::Index i = 0; i < tmp.kernel.value.size(); ++i) tmp.kernel.value.data()[i] += rng.normal(0.0, 0.3);
    for (Eigen::Index i = 0; i < tmp.bias.value.size(); ++i) tmp.bias.value.data()[i] = rng.normal(0.0, 0.1);
    for (auto* p : {&enc.node_mlp.b1, &enc.node_mlp.b2, &enc.slp.b})
      for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = rng.normal(0.0, 0.1);

    std::vector<std::vector<FrameGraph>> graphs;
    std::vector<std::string> ids;
    for (const auto& t : tracks.tracks) {
      std::vector<FrameGraph> g;
      for (const auto& obs : t.observations) g.push_back(build_frame_graph(obs, model, {t.video_id, t.object_id}));
      graphs.push_back(std::move(g));
      ids.push_back(t.object_id);
    }

    const double delta = 10.0;
    const double lambda = 0.2;
    auto loss = [&](Tape& tape) {
      tape.set_corrupt_adjoints(corrupt_adjoints);
      FrameLosses fl;
      std::vector<Var> frame_descs, temporal_descs;
      std::vector<std::string> frame_ids, temporal_ids;
      for (std::size_t t = 0; t < graphs.size(); ++t) {
        std::vector<Var> seq;
        for (const auto& g : graphs[t]) {
          FrameEncodingVars e = encode_frame(tape, g, enc);
          fl.sparse.push_back(sparse_location_loss(e.x_loc));
          fl.dense.push_back(dense_feature_loss(e.x_loc, delta));
          frame_descs.push_back(single_frame_descriptor(tape, e.x_struct, enc));
          frame_ids.push_back(ids[t]);
          seq.push_back(e.x_struct);
        }
        temporal_descs.push_back(temporal_descriptor(tape, {seq[0]}, tmp));
        temporal_descs.push_back(temporal_descriptor(tape, seq, tmp));
        temporal_ids.push_back(ids[t]);
        temporal_ids.push_back(ids[t]);
      }
      Var l2d = matching_loss(diff::concat_rows(frame_descs), sample_pairs(frame_ids), lambda);
      Var l3d = matching_loss(diff::concat_rows(temporal_descs), sample_pairs(temporal_ids), lambda);
      return mean_of(tape, fl.sparse) + mean_of(tape, fl.dense) + l2d + l3d;
    };

    std::vector<Param*> params = enc.parameters();
    for (auto* p : tmp.parameters()) params.push_back(p);

    // Screen the evaluation point before paying for the full check.
    double margin = 0.0;
    try {
      Tape probe;
      loss(probe);
      margin = probe.kink_margin();
    } catch (const NumericalError&) {
      continue;  // a dead row at this sample
    }
    if (margin < min_kink_margin) continue;

    CompositeCheckResult out;
    out.check = diff::finite_diff_check<Real>(loss, params, eps);
    out.seed_used = s;
    out.parameter_tensors = static_cast<int>(params.size());
    return out;
  }
  throw NumericalError("check_composite_gradient: no kink-free sample found");
}

}  // namespace airobject
