#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "airobject/common.hpp"

namespace airobject {

struct Keypoint {
  Eigen::Vector2d position;
  Vector descriptor;
};

/// One object seen in one frame. Row i of `positions` and `descriptors`
/// together form keypoint i.
struct FrameObservation {
  std::int64_t frame_index = 0;
  PointMatrix positions;  // N x 2, pixels
  Matrix descriptors;     // N x D_p
  BoundingBox bbox = BoundingBox::Zero();

  Eigen::Index size() const { return positions.rows(); }
  Keypoint keypoint(Eigen::Index i) const {
    return {positions.row(i).transpose(), descriptors.row(i).transpose()};
  }

  static FrameObservation from_keypoints(std::int64_t frame_index, const std::vector<Keypoint>& keypoints,
                                         const BoundingBox& bbox);
};

struct ObjectTrack {
  std::string video_id;
  std::string object_id;
  std::vector<FrameObservation> observations;
};

struct TrackSet {
  std::vector<ObjectTrack> tracks;
  int descriptor_dim = 0;
};

/// Throws DataError/DimensionError describing the first invariant violated.
void validate(const FrameObservation& obs, int descriptor_dim);
void validate(const ObjectTrack& track, int descriptor_dim);
void validate(const TrackSet& set);

/// Reads the line-delimited feature format:
///   {"video_id": str, "object_id": str, "frame_index": int,
///    "bbox": [x_min,y_min,x_max,y_max], "keypoints": [[x,y],...],
///    "descriptors": [[f,...],...]}
/// Tracks come back sorted by (video_id, object_id), observations by frame.
TrackSet load_tracks(const std::filesystem::path& path);

/// Writes one record per object-frame in (video_id, object_id, frame_index)
/// order. Positions are printed with 17 significant digits, descriptors
/// with 9, so save -> load -> save reproduces the file byte for byte.
void save_tracks(const TrackSet& tracks, const std::filesystem::path& path);

struct SynthConfig {
  int num_objects = 50;
  int videos = 20;
  int objects_per_video = 5;
  int frames_per_track = 8;
  int keypoints_min = 12;
  int keypoints_max = 32;
  int descriptor_dim = 256;
  double object_radius = 60.0;        // latent keypoints lie in a disk of this radius (px)
  double position_jitter_sigma = 2.0;  // px
  double descriptor_noise_sigma = 0.05;
  double dropout_rate = 0.2;
  double spurious_rate = 0.05;  // expected spurious keypoints per latent keypoint
  double rotation_max_deg = 30.0;
  double scale_min = 0.7;
  double scale_max = 1.3;
  double translation_min_x = 120.0;
  double translation_max_x = 520.0;
  double translation_min_y = 120.0;
  double translation_max_y = 360.0;
  std::uint64_t seed = 7;
};

void validate(const SynthConfig& config);

/// Deterministic synthetic tracks: each base object owns a latent keypoint
/// set; every observation applies a fresh random similarity transform,
/// position jitter, descriptor noise (then re-normalization), keypoint
/// dropout and spurious keypoints. object_id is the base object identity.
TrackSet generate_synthetic(const SynthConfig& config);

/// Query gets the first ceil(fraction * T) observations, reference the rest.
std::pair<ObjectTrack, ObjectTrack> split_track(const ObjectTrack& track, double fraction = 0.5);

}  // namespace airobject
