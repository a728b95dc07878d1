#include "airobject/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <tuple>

#include "airobject/rng.hpp"
#include "json.hpp"

namespace airobject {

namespace {

constexpr double kBboxSlack = 1e-6;

std::string frame_key(const std::string& video, const std::string& object, std::int64_t frame) {
  return "(" + video + ", " + object + ", " + std::to_string(frame) + ")";
}

void append_number(std::string& out, double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  out += buf;
}

void append_json_string(std::string& out, const std::string& s) {
  out += nlohmann::json(s).dump();
}

}  // namespace

FrameObservation FrameObservation::from_keypoints(std::int64_t frame_index,
                                                  const std::vector<Keypoint>& keypoints,
                                                  const BoundingBox& bbox) {
  FrameObservation obs;
  obs.frame_index = frame_index;
  obs.bbox = bbox;
  const auto n = static_cast<Eigen::Index>(keypoints.size());
  const Eigen::Index dim = keypoints.empty() ? 0 : keypoints.front().descriptor.size();
  obs.positions.resize(n, 2);
  obs.descriptors.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& kp = keypoints[static_cast<std::size_t>(i)];
    if (kp.descriptor.size() != dim) throw DimensionError("from_keypoints: descriptor sizes differ");
    obs.positions.row(i) = kp.position.transpose();
    obs.descriptors.row(i) = kp.descriptor.transpose();
  }
  return obs;
}

void validate(const FrameObservation& obs, int descriptor_dim) {
  if (obs.frame_index < 0) throw DataError("negative frame_index");
  if (obs.size() < 1) throw DataError("observation has no keypoints");
  if (obs.descriptors.rows() != obs.positions.rows()) {
    throw DimensionError("keypoint and descriptor counts differ");
  }
  if (obs.descriptors.cols() != descriptor_dim) {
    throw DimensionError("descriptor length " + std::to_string(obs.descriptors.cols()) +
                         " != descriptor_dim " + std::to_string(descriptor_dim));
  }
  const auto& b = obs.bbox;
  if (!b.allFinite() || !(b(0) < b(2)) || !(b(1) < b(3))) throw DataError("degenerate bbox");
  if (!obs.positions.allFinite()) throw DataError("non-finite keypoint position");
  if (!obs.descriptors.allFinite()) throw DataError("non-finite descriptor");
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    const double x = obs.positions(i, 0);
    const double y = obs.positions(i, 1);
    if (x < b(0) - kBboxSlack || x > b(2) + kBboxSlack || y < b(1) - kBboxSlack ||
        y > b(3) + kBboxSlack) {
      throw DataError("keypoint " + std::to_string(i) + " lies outside bbox");
    }
  }
}

void validate(const ObjectTrack& track, int descriptor_dim) {
  if (track.observations.empty()) {
    throw DataError("track (" + track.video_id + ", " + track.object_id + ") has no observations");
  }
  for (std::size_t i = 0; i < track.observations.size(); ++i) {
    validate(track.observations[i], descriptor_dim);
    if (i > 0 && track.observations[i].frame_index <= track.observations[i - 1].frame_index) {
      throw DataError("frame indices not strictly increasing in track (" + track.video_id + ", " +
                      track.object_id + ")");
    }
  }
}

void validate(const TrackSet& set) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : set.tracks) {
    if (!seen.emplace(t.video_id, t.object_id).second) {
      throw DataError("duplicate track (" + t.video_id + ", " + t.object_id + ")");
    }
    validate(t, set.descriptor_dim);
  }
}

TrackSet load_tracks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file " + path.string());

  std::map<std::pair<std::string, std::string>, std::map<std::int64_t, FrameObservation>> grouped;
  int dim = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + "malformed record: " + e.what());
    }
    FrameObservation obs;
    std::string video;
    std::string object;
    try {
      video = rec.at("video_id").get<std::string>();
      object = rec.at("object_id").get<std::string>();
      obs.frame_index = rec.at("frame_index").get<std::int64_t>();
      const auto& bbox = rec.at("bbox");
      if (!bbox.is_array() || bbox.size() != 4) throw ParseError(where + "bbox must have 4 numbers");
      for (int k = 0; k < 4; ++k) obs.bbox(k) = bbox.at(k).get<double>();
      const auto& kps = rec.at("keypoints");
      const auto& descs = rec.at("descriptors");
      if (!kps.is_array() || !descs.is_array()) throw ParseError(where + "keypoints/descriptors must be arrays");
      if (kps.size() != descs.size()) {
        throw DimensionError(where + std::to_string(kps.size()) + " keypoints but " +
                             std::to_string(descs.size()) + " descriptors");
      }
      if (kps.empty()) throw DataError(where + "record has no keypoints");
      const auto n = static_cast<Eigen::Index>(kps.size());
      const auto row_dim = static_cast<int>(descs.at(0).size());
      if (dim < 0) dim = row_dim;
      obs.positions.resize(n, 2);
      obs.descriptors.resize(n, dim);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = kps.at(static_cast<std::size_t>(i));
        if (!p.is_array() || p.size() != 2) throw ParseError(where + "keypoint must be [x, y]");
        obs.positions(i, 0) = p.at(0).get<double>();
        obs.positions(i, 1) = p.at(1).get<double>();
        const auto& d = descs.at(static_cast<std::size_t>(i));
        if (!d.is_array() || static_cast<int>(d.size()) != dim) {
          throw DimensionError(where + "descriptor length " + std::to_string(d.size()) +
                               " differs from descriptor_dim " + std::to_string(dim));
        }
        for (int k = 0; k < dim; ++k) obs.descriptors(i, k) = d.at(static_cast<std::size_t>(k)).get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what());
    }
    try {
      validate(obs, dim);
    } catch (const Error& e) {
      throw_error(e.kind(), where + e.what());
    }
    auto& frames = grouped[{video, object}];
    const std::int64_t frame = obs.frame_index;
    if (!frames.emplace(frame, std::move(obs)).second) {
      throw ParseError(where + "duplicate record " + frame_key(video, object, frame));
    }
  }
  if (grouped.empty()) throw DataError("feature file " + path.string() + " is empty");

  TrackSet set;
  set.descriptor_dim = dim;
  for (auto& [key, frames] : grouped) {
    ObjectTrack track;
    track.video_id = key.first;
    track.object_id = key.second;
    for (auto& [frame, obs] : frames) track.observations.push_back(std::move(obs));
    set.tracks.push_back(std::move(track));
  }
  return set;
}

void save_tracks(const TrackSet& tracks, const std::filesystem::path& path) {
  validate(tracks);
  std::vector<const ObjectTrack*> order;
  for (const auto& t : tracks.tracks) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const ObjectTrack* a, const ObjectTrack* b) {
    return std::tie(a->video_id, a->object_id) < std::tie(b->video_id, b->object_id);
  });

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write feature file " + path.string());
  std::string line;
  for (const ObjectTrack* t : order) {
    for (const auto& obs : t->observations) {
      line.clear();
      line += "{\"video_id\": ";
      append_json_string(line, t->video_id);
      line += ", \"object_id\": ";
      append_json_string(line, t->object_id);
      line += ", \"frame_index\": " + std::to_string(obs.frame_index);
      line += ", \"bbox\": [";
      for (int k = 0; k < 4; ++k) {
        if (k) line += ", ";
        append_number(line, obs.bbox(k), 17);
      }
      line += "], \"keypoints\": [";
      for (Eigen::Index i = 0; i < obs.size(); ++i) {
        if (i) line += ", ";
        line += "[";
        append_number(line, obs.positions(i, 0), 17);
        line += ", ";
        append_number(line, obs.positions(i, 1), 17);
        line += "]";
      }
      line += "], \"descriptors\": [";
      for (Eigen::Index i = 0; i < obs.size(); ++i) {
        if (i) line += ", ";
        line += "[";
        for (Eigen::Index k = 0; k < obs.descriptors.cols(); ++k) {
          if (k) line += ", ";
          append_number(line, obs.descriptors(i, k), 9);
        }
        line += "]";
      }
      line += "]}\n";
      out << line;
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void validate(const SynthConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("synth config: " + what); };
  if (c.num_objects < 1) fail("num_objects must be >= 1");
  if (c.videos < 1) fail("videos must be >= 1");
  if (c.objects_per_video < 1 || c.objects_per_video > c.num_objects) {
    fail("objects_per_video must be in [1, num_objects]");
  }
  if (c.frames_per_track < 1) fail("frames_per_track must be >= 1");
  if (c.keypoints_min < 1 || c.keypoints_max < c.keypoints_min) fail("invalid keypoint range");
  if (c.descriptor_dim < 1) fail("descriptor_dim must be >= 1");
  if (!(c.object_radius > 0)) fail("object_radius must be > 0");
  if (!(c.position_jitter_sigma >= 0) || !(c.descriptor_noise_sigma >= 0)) fail("sigmas must be >= 0");
  if (!(c.dropout_rate >= 0 && c.dropout_rate < 1)) fail("dropout_rate must be in [0, 1)");
  if (!(c.spurious_rate >= 0)) fail("spurious_rate must be >= 0");
  if (!(c.rotation_max_deg >= 0)) fail("rotation_max_deg must be >= 0");
  if (!(c.scale_min > 0 && c.scale_max >= c.scale_min)) fail("invalid scale range");
  if (!(c.translation_max_x >= c.translation_min_x && c.translation_max_y >= c.translation_min_y)) {
    fail("invalid translation range");
  }
}

namespace {

Vector random_unit(Rng& rng, int dim) {
  Vector v(dim);
  for (int k = 0; k < dim; ++k) v(k) = rng.normal();
  const double n = v.norm();
  return n > kNormEpsilon ? Vector(v / n) : Vector(Vector::Unit(dim, 0));
}

Eigen::Vector2d random_in_disk(Rng& rng, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double a = 2.0 * std::numbers::pi * rng.uniform();
  return {r * std::cos(a), r * std::sin(a)};
}

struct LatentObject {
  PointMatrix positions;
  Matrix descriptors;
};

}  // namespace

TrackSet generate_synthetic(const SynthConfig& config) {
  validate(config);
  Rng rng(config.seed);

  std::vector<LatentObject> objects(static_cast<std::size_t>(config.num_objects));
  for (auto& obj : objects) {
    const int k = config.keypoints_min +
                  static_cast<int>(rng.index(static_cast<std::size_t>(config.keypoints_max - config.keypoints_min + 1)));
    obj.positions.resize(k, 2);
    obj.descriptors.resize(k, config.descriptor_dim);
    for (int i = 0; i < k; ++i) {
      obj.positions.row(i) = random_in_disk(rng, config.object_radius).transpose();
      obj.descriptors.row(i) = random_unit(rng, config.descriptor_dim).transpose();
    }
  }

  char name[32];
  TrackSet set;
  set.descriptor_dim = config.descriptor_dim;
  for (int v = 0; v < config.videos; ++v) {
    std::vector<int> pool(static_cast<std::size_t>(config.num_objects));
    for (int i = 0; i < config.num_objects; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < config.objects_per_video; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) + rng.index(pool.size() - static_cast<std::size_t>(i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    std::vector<int> chosen(pool.begin(), pool.begin() + config.objects_per_video);
    std::sort(chosen.begin(), chosen.end());

    std::snprintf(name, sizeof(name), "vid%03d", v);
    const std::string video_id = name;
    for (int obj_index : chosen) {
      const LatentObject& latent = objects[static_cast<std::size_t>(obj_index)];
      ObjectTrack track;
      track.video_id = video_id;
      std::snprintf(name, sizeof(name), "obj%03d", obj_index);
      track.object_id = name;
      const Eigen::Index k = latent.positions.rows();
      for (int f = 0; f < config.frames_per_track; ++f) {
        const double theta = rng.uniform(-config.rotation_max_deg, config.rotation_max_deg) *
                             std::numbers::pi / 180.0;
        const double s = rng.uniform(config.scale_min, config.scale_max);
        const Eigen::Vector2d t(rng.uniform(config.translation_min_x, config.translation_max_x),
                                rng.uniform(config.translation_min_y, config.translation_max_y));
        const Eigen::Matrix2d sr = s * Eigen::Rotation2Dd(theta).toRotationMatrix();

        std::vector<Keypoint> kps;
        for (Eigen::Index i = 0; i < k; ++i) {
          const bool dropped = rng.bernoulli(config.dropout_rate);
          Eigen::Vector2d jitter(rng.normal(), rng.normal());
          Vector noise(config.descriptor_dim);
          for (int d = 0; d < config.descriptor_dim; ++d) noise(d) = rng.normal();
          if (dropped) continue;
          Keypoint kp;
          kp.position = sr * latent.positions.row(i).transpose() + t + config.position_jitter_sigma * jitter;
          Vector d = latent.descriptors.row(i).transpose() + config.descriptor_noise_sigma * noise;
          const double n = d.norm();
          kp.descriptor = n > kNormEpsilon ? Vector(d / n) : Vector(latent.descriptors.row(i).transpose());
          kps.push_back(std::move(kp));
        }
        const int spurious = rng.poisson(config.spurious_rate * static_cast<double>(k));
        for (int i = 0; i < spurious; ++i) {
          Keypoint kp;
          kp.position = sr * random_in_disk(rng, config.object_radius) + t;
          kp.descriptor = random_unit(rng, config.descriptor_dim);
          kps.push_back(std::move(kp));
        }
        if (kps.empty()) {
          kps.push_back({sr * latent.positions.row(0).transpose() + t,
                         latent.descriptors.row(0).transpose()});
        }
        BoundingBox bbox;
        bbox << kps[0].position, kps[0].position;
        for (const auto& kp : kps) {
          bbox(0) = std::min(bbox(0), kp.position.x());
          bbox(1) = std::min(bbox(1), kp.position.y());
          bbox(2) = std::max(bbox(2), kp.position.x());
          bbox(3) = std::max(bbox(3), kp.position.y());
        }
        bbox.head<2>().array() -= 2.0;
        bbox.tail<2>().array() += 2.0;
        track.observations.push_back(FrameObservation::from_keypoints(f, kps, bbox));
      }
      set.tracks.push_back(std::move(track));
    }
  }
  return set;
}

std::pair<ObjectTrack, ObjectTrack> split_track(const ObjectTrack& track, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must be in (0, 1)");
  const std::size_t total = track.observations.size();
  if (total < 2) {
    throw DataError("track (" + track.video_id + ", " + track.object_id +
                    ") has too few frames to split (" + std::to_string(total) + ")");
  }
  auto q = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total)));
  q = std::clamp<std::size_t>(q, 1, total - 1);
  ObjectTrack query{track.video_id, track.object_id, {}};
  ObjectTrack reference{track.video_id, track.object_id, {}};
  query.observations.assign(track.observations.begin(), track.observations.begin() + static_cast<std::ptrdiff_t>(q));
  reference.observations.assign(track.observations.begin() + static_cast<std::ptrdiff_t>(q), track.observations.end());
  return {std::move(query), std::move(reference)};
}

}  // namespace airobject
