#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "airobject/common.hpp"
#include "airobject/diff/parameter.hpp"

namespace airobject::diff {

/// A named group of parameters ("node_mlp", "gat1", ...).
struct CheckpointSection {
  std::string name;
  std::vector<Parameter<Real>*> tensors;
};

struct CheckpointInfo {
  std::vector<std::string> sections;
  std::string metadata_json;  // free-form JSON object stored alongside the tensors
};

// Checkpoint file layout:
//
//   line 1   "AIROBJECT-CHECKPOINT 1"
//   line 2   one-line JSON manifest:
//            {"byte_order":"little","dtype":"float64","layout":"row-major",
//             "metadata":{...},
//             "sections":[{"name":s,"tensors":[{"name":n,"shape":[r,c],"offset":k}]}]}
//   rest     float64 values, little-endian, each tensor row-major, starting at
//            element offset k from the first byte after line 2.
//
// Writes go to a temporary file that is renamed over the target, so a reader
// never observes a partially written checkpoint.

void save_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointSection>& sections,
                     const std::string& metadata_json = "{}");

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

/// Fills every tensor of every requested section. Missing sections or
/// tensors and shape mismatches are errors; extra content in the file is ignored.
void load_checkpoint(const std::filesystem::path& path, const std::vector<CheckpointSection>& sections);

}  // namespace airobject::diff
